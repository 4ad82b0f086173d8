#include "imti/rng.hpp"

#include <limits>

#include "imti/common.hpp"

namespace imti {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("Rng::below: n must be positive");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x;
  do {
    x = bits();
  } while (x >= limit);
  return x % n;
}

}  // namespace imti
