#ifndef CONFOUND_RNG_HPP
#define CONFOUND_RNG_HPP

#include <cstdint>
#include <random>

namespace confound {

/// Independent sub-streams of one replicate seed.
enum class Stream : std::uint32_t {
  field = 1,
  noise_x = 2,
  noise_y = 3,
  scale_x = 4,
  scale_w = 5,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

}  // namespace confound

#endif
