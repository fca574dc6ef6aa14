#ifndef CONFOUND_ERROR_HPP
#define CONFOUND_ERROR_HPP

#include <stdexcept>
#include <string>

namespace confound {

/// Invalid user input: bad parameters, malformed configs, unknown presets.
/// The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation that could not be completed: factorization failure, zero
/// denominators, non-converging searches. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be read or written. Treated like a configuration error.
class IoError : public ConfigError {
 public:
  IoError(const std::string& path, const std::string& what) : ConfigError(path + ": " + what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace detail
}  // namespace confound

#endif
