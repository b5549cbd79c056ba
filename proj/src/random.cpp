#include "posesynth/random.hpp"

#include <cmath>
#include <numbers>

namespace posesynth {

double Rng::normal() {
  const double u1 = 1.0 - unit();  // (0, 1]
  const double u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace posesynth
