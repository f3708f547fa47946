#pragma once

#include <random>

#include "oracles.hpp"
#include "pampc/dynamics.hpp"

namespace testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline pampc::UnitQuaternion random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return pampc::UnitQuaternion(pampc::Vec4(n(rng), n(rng), n(rng), n(rng)));
}

inline pampc::QuadState random_state(std::mt19937_64& rng) {
  pampc::QuadState x;
  x.p = {uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, 0, 3)};
  x.v = {uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -1, 1)};
  x.q = random_quat(rng);
  return x;
}

inline pampc::QuadInput random_input(std::mt19937_64& rng) {
  return {uniform(rng, 3, 16), {uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)}};
}

inline oracle::Vec10 to_oracle(const pampc::QuadState& x) { return x.to_vector(); }

}  // namespace testing
