#pragma once

// Frozen benchmark setups used by the CLI when no --config is given and by
// the acceptance checks. Changing any value here changes reference results.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "docp/harness/config.hpp"

namespace docp::harness {

/// 20-D quadratic with curvatures log-spaced over [0.01, 1], start 10 * ones,
/// additive gradient noise 0.05, Diag-OCP at default hyperparameters.
inline RunConfig rate_benchmark() {
  std::vector<double> h(20);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = 0.01 * std::pow(100.0, static_cast<double>(i) / 19.0);
  RunConfig cfg;
  cfg.problem.kind = Quadratic{h};
  cfg.problem.noise_std_grad = 0.05;
  cfg.problem.x0 = std::vector<double>(h.size(), 10.0);
  cfg.optimizer = make_optimizer("diag_ocp", 0.005);
  cfg.max_steps = 400;
  cfg.n_seeds = 20;
  return cfg;
}

/// ReLU MLP regression [8, 16, 2] (178 parameters), 256 samples, gradient
/// noise 0.01, 150 steps, 5 replicates.
inline RunConfig mlp_benchmark(const std::string& key = "diag_ocp", double lr = 0.005) {
  RunConfig cfg;
  cfg.problem.kind = MlpRegression{};
  cfg.problem.noise_std_grad = 0.01;
  cfg.optimizer = make_optimizer(key, lr);
  cfg.max_steps = 150;
  cfg.n_seeds = 5;
  cfg.record_every = 10;
  return cfg;
}

}  // namespace docp::harness
