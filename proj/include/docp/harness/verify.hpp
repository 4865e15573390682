#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "docp/diag_ocp.hpp"
#include "docp/harness/config.hpp"
#include "docp/harness/run.hpp"
#include "docp/hessian_probe.hpp"
#include "docp/seed.hpp"

namespace docp::harness {

// Closed form vs literal recursion ------------------------------------------

struct Lemma1Options {
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  std::size_t max_dim = 32;
  std::size_t max_t = 64;
  /// alpha * D_hat is drawn uniformly from (lo, hi).
  double scaled_curvature_lo = 0.01;
  double scaled_curvature_hi = 1.99;
  double tolerance = 1e-9;
};

struct Lemma1Report {
  std::size_t trials = 0;
  std::size_t compared = 0;
  /// Trials where the safeguard clamped a base; outside the equivalence hypothesis.
  std::size_t excluded = 0;
  double max_deviation = 0.0;
  double max_deviation_first_step = 0.0;
  bool pass = false;
};

inline Lemma1Report verify_lemma1(const Lemma1Options& opt) {
  detail::require(opt.trials >= 1, "verify lemma1: trials must be >= 1");
  auto engine = make_engine(derive_seed(opt.seed, 0x1e33a1));
  std::uniform_int_distribution<std::size_t> pick_dim(1, opt.max_dim);
  std::uniform_int_distribution<std::size_t> pick_t(1, opt.max_t);
  std::uniform_real_distribution<double> log_alpha(std::log(1e-3), std::log(1.0));
  std::uniform_real_distribution<double> scaled(opt.scaled_curvature_lo, opt.scaled_curvature_hi);
  std::uniform_real_distribution<double> decay(0.0, 0.01);
  std::normal_distribution<double> normal(0.0, 1.0);

  Lemma1Report rep;
  rep.trials = opt.trials;
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    const std::size_t dim = pick_dim(engine);
    OptimizerConfig cfg;
    cfg.alpha = std::exp(log_alpha(engine));
    cfg.lambda = decay(engine);
    cfg.mu = 1e-12;
    cfg.g_d = 1e12;
    OptimizerState state = init_state(dim, cfg);
    state.t = pick_t(engine);
    std::vector<double> x(dim), m_hat(dim), d_hat(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] = normal(engine);
      m_hat[i] = normal(engine);
      d_hat[i] = scaled(engine) / cfg.alpha;
    }
    const ParamVector xv(x);
    const auto closed = step_closed_form(state, xv, m_hat, d_hat, cfg);
    if (closed.diag.safeguard_triggered) {
      ++rep.excluded;
      continue;
    }
    const auto reference = step_recursive_reference(state, xv, m_hat, d_hat, cfg);
    double dev = 0.0;
    for (std::size_t i = 0; i < dim; ++i) dev = std::max(dev, std::abs(closed.x_next[i] - reference[i]));
    ++rep.compared;
    rep.max_deviation = std::max(rep.max_deviation, dev);
    if (state.t == 1) rep.max_deviation_first_step = std::max(rep.max_deviation_first_step, dev);
  }
  rep.pass = rep.compared > 0 && rep.max_deviation <= opt.tolerance;
  return rep;
}

// Convergence-rate trend ------------------------------------------------------

struct RateReport {
  std::vector<std::size_t> T;
  /// min over k in [1, T] of the replicate-averaged noise-free ||grad f(x_k)||^2.
  std::vector<double> min_avg_grad_sq;
  /// T * min_avg_grad_sq; bounded when the decay is at least 1/T.
  std::vector<double> scaled;
  /// Least-squares slope of log(min_avg_grad_sq) against log(T).
  double loglog_slope = 0.0;
  /// min_avg_grad_sq at the last T divided by the value at the first T.
  double ratio_last_first = 0.0;
  std::size_t n_seeds = 0;
  std::size_t n_diverged = 0;
};

inline RateReport verify_rate(const RunConfig& base, const std::vector<std::size_t>& T_list, std::size_t n_seeds,
                              std::size_t threads = 1) {
  detail::require(T_list.size() >= 2, "verify rate: need at least 2 horizons");
  for (std::size_t i = 0; i < T_list.size(); ++i) {
    detail::require(T_list[i] >= 1, "verify rate: horizons must be >= 1");
    if (i > 0) detail::require(T_list[i] > T_list[i - 1], "verify rate: horizons must be ascending");
  }
  RunConfig cfg = base;
  cfg.max_steps = T_list.back();
  cfg.n_seeds = n_seeds;
  cfg.record_every = 1;
  const auto records = run_experiment(cfg, threads);

  RateReport rep;
  rep.T = T_list;
  rep.n_seeds = n_seeds;
  std::vector<double> avg(cfg.max_steps + 1, 0.0);
  std::size_t used = 0;
  for (const auto& r : records) {
    if (r.diverged) {
      ++rep.n_diverged;
      continue;
    }
    for (const auto& row : r.rows) avg[row.step] += row.grad_norm_sq;
    ++used;
  }
  detail::require(used > 0, "verify rate: every replicate diverged");
  for (double& a : avg) a /= static_cast<double>(used);

  double running = std::numeric_limits<double>::infinity();
  std::size_t next_T = 0;
  for (std::size_t k = 1; k <= cfg.max_steps; ++k) {
    running = std::min(running, avg[k]);
    while (next_T < T_list.size() && T_list[next_T] == k) {
      rep.min_avg_grad_sq.push_back(running);
      rep.scaled.push_back(static_cast<double>(k) * running);
      ++next_T;
    }
  }

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < T_list.size(); ++i) {
    if (rep.min_avg_grad_sq[i] > 0.0) {
      lx.push_back(std::log(static_cast<double>(T_list[i])));
      ly.push_back(std::log(rep.min_avg_grad_sq[i]));
    }
  }
  detail::require(lx.size() >= 2, "verify rate: fewer than 2 valid horizons");
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  rep.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  rep.ratio_last_first = rep.min_avg_grad_sq.back() / rep.min_avg_grad_sq.front();
  return rep;
}

// Hutchinson estimator --------------------------------------------------------

/// Fixed seeded symmetric test matrix: off-diagonal U(-1, 1), diagonal U(1, 3).
inline std::vector<double> hutchinson_test_matrix(std::size_t n, std::uint64_t seed) {
  auto engine = make_engine(seed);
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  std::uniform_real_distribution<double> diag(1.0, 3.0);
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i * n + i] = diag(engine);
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = a[j * n + i] = off(engine);
  }
  return a;
}

inline auto dense_hvp(const std::vector<double>& a, std::size_t n) {
  return [&a, n](std::span<const double> v) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) out[i] += a[i * n + j] * v[j];
    }
    return out;
  };
}

struct HutchinsonReport {
  std::size_t n_probes = 0;
  std::vector<double> true_diag;
  std::vector<double> estimate;
  double max_rel_error = 0.0;
  /// Rademacher on a diagonal matrix with one probe; 0 when exact.
  double diagonal_exact_error = 0.0;
  /// N * var(N probes) / var(1 probe) averaged over coordinates, for N = 4 and 16.
  double variance_ratio_4 = 0.0;
  double variance_ratio_16 = 0.0;
  bool pass = false;
};

inline HutchinsonReport verify_hutchinson(std::size_t n_probes, std::uint64_t seed) {
  constexpr std::size_t n = 8;
  const auto a = hutchinson_test_matrix(n, 0xA11CE);
  const auto hvp = dense_hvp(a, n);

  HutchinsonReport rep;
  rep.n_probes = n_probes;
  for (std::size_t i = 0; i < n; ++i) rep.true_diag.push_back(a[i * n + i]);
  const ProbeConfig cfg{n_probes, ProbeDistribution::Rademacher, 1e-4, 1e4};
  rep.estimate = hutchinson_diag(hvp, n, cfg, BatchSeed{seed, 0, Channel::Probe}).values;
  for (std::size_t i = 0; i < n; ++i) {
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(rep.estimate[i] - rep.true_diag[i]) / std::abs(rep.true_diag[i]));
  }

  const std::vector<double> d{3.0, 5.0, 0.5, 2.0};
  auto diag_hvp = [&d](std::span<const double> v) {
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] * v[i];
    return out;
  };
  const auto exact = hutchinson_diag(diag_hvp, d.size(), ProbeConfig{1, ProbeDistribution::Rademacher, 1e-4, 1e4},
                                     BatchSeed{seed, 1, Channel::Probe});
  for (std::size_t i = 0; i < d.size(); ++i) {
    rep.diagonal_exact_error = std::max(rep.diagonal_exact_error, std::abs(exact.values[i] - d[i]));
  }

  // empirical estimator variance from independent repetitions
  constexpr std::size_t reps = 4000;
  auto variance = [&](std::size_t probes) {
    std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
    const ProbeConfig c{probes, ProbeDistribution::Rademacher, 1e-4, 1e4};
    for (std::size_t r = 0; r < reps; ++r) {
      const auto e = hutchinson_diag(hvp, n, c, BatchSeed{seed, static_cast<std::int64_t>(1000 + r), Channel::Probe});
      for (std::size_t i = 0; i < n; ++i) {
        sum[i] += e.values[i];
        sum_sq[i] += e.values[i] * e.values[i];
      }
    }
    std::vector<double> var(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double mean = sum[i] / reps;
      var[i] = (sum_sq[i] - reps * mean * mean) / (reps - 1);
    }
    return var;
  };
  const auto v1 = variance(1);
  const auto v4 = variance(4);
  const auto v16 = variance(16);
  for (std::size_t i = 0; i < n; ++i) {
    rep.variance_ratio_4 += 4.0 * v4[i] / v1[i] / n;
    rep.variance_ratio_16 += 16.0 * v16[i] / v1[i] / n;
  }
  auto within = [](double r) { return r >= 1.0 / 1.5 && r <= 1.5; };
  rep.pass = rep.max_rel_error <= 0.05 && rep.diagonal_exact_error == 0.0 && within(rep.variance_ratio_4) &&
             within(rep.variance_ratio_16);
  return rep;
}

}  // namespace docp::harness
