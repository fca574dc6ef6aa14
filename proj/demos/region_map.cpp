// Character map of the estimable region for Matern pairs with
// nu_XW = nu_X + 0.25. Digits give the minimal order, '.' not estimable,
// '|' boundary.

#include <cstdio>

#include "confound/estimability.hpp"

using namespace confound;

int main() {
  for (int d : {1, 2}) {
    std::printf("d = %d   (rows: nu_X from 3.0 down to 0.1, columns: nu_W from 0.1 to 3.0)\n", d);
    const auto nw = linspace(0.1, 3.0, 59);
    for (int k = 30; k >= 1; --k) {
      const double nx = k / 10.0;
      std::printf("%4.1f ", nx);
      for (const auto& c : region_map(d, {nx}, nw)) {
        char ch = '.';
        if (c.verdict.status == RegionStatus::estimable) ch = static_cast<char>('0' + c.verdict.min_order);
        else if (c.verdict.status == RegionStatus::boundary) ch = '|';
        std::putchar(ch);
      }
      std::putchar('\n');
    }
    std::putchar('\n');
  }
}
