#include "hsi/rng.hpp"

#include <cmath>
#include <numbers>

namespace hsi {

double StreamKey::normal(std::uint64_t counter) const {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform(2 * counter);
  const double u2 = uniform(2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t StreamKey::uniform_int(std::uint64_t counter, std::int64_t lo, std::int64_t hi) const {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Modulo bias is below 2^-40 for the small ranges used here.
  return lo + static_cast<std::int64_t>(bits(counter) % span);
}

}  // namespace hsi
