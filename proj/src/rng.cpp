#include "tailsgd/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tailsgd {

std::uint64_t derive_stream(std::uint64_t master_seed, std::string_view purpose,
                            std::uint64_t index) {
  std::uint64_t h = fnv1a64(purpose);
  h = splitmix64(h ^ splitmix64(master_seed));
  h = splitmix64(h ^ splitmix64(index));
  return h;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::domain_error("Rng::uniform_index: n must be > 0");
  return static_cast<std::size_t>(eng_() % n);
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite; u2 in [0, 1).
  const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

}  // namespace tailsgd
