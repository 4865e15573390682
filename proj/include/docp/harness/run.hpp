#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "docp/baselines.hpp"
#include "docp/diag_ocp.hpp"
#include "docp/harness/config.hpp"
#include "docp/hessian_probe.hpp"
#include "docp/problems.hpp"
#include "docp/seed.hpp"

namespace docp::harness {

/// One recorded row; losses describe x after `step` updates.
struct RecordRow {
  std::size_t step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  /// Noise-free squared gradient norm of the training objective at x_step.
  double grad_norm_sq = 0.0;
  /// ||x_step - x_{step-1}||; 0 for the initial row.
  double step_norm = 0.0;
  /// Post-safeguard stability margin of the step that produced x_step (Diag-OCP only).
  double rho = 0.0;
  std::size_t safeguard_count = 0;
};

struct RunRecord {
  std::string run_id;
  std::string optimizer;
  double lr = 0.0;
  double mu = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::vector<RecordRow> rows;
  /// Unthinned loss curves, index = step (0 .. steps completed).
  std::vector<double> train_curve;
  std::vector<double> val_curve;
  double final_train = std::numeric_limits<double>::quiet_NaN();
  double final_val = std::numeric_limits<double>::quiet_NaN();
  double min_val = std::numeric_limits<double>::quiet_NaN();
  std::size_t min_val_step = 0;
  bool diverged = false;
  double wall_ms = 0.0;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; results must be written to per-index slots.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Thread count from an explicit value, else DOCP_THREADS, else 1.
inline std::size_t resolve_threads(std::optional<std::size_t> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("DOCP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

inline std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t replicate) {
  return derive_seed(base_seed, 0x5eed0000ULL + replicate);
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Rounds to 12 significant digits so lr grids built by multiplication
/// (1e-3 * 0.1) land on the same value as literal grid entries (1e-4).
inline double canonical_lr(double lr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", lr);
  return std::strtod(buf, nullptr);
}

/// One seeded replicate of the probe -> clip -> moments -> step loop
/// (gradient-only for first-order baselines).
inline RunRecord run_replicate(const ProblemOracle& problem, const RunConfig& cfg, std::size_t replicate) {
  const auto started = std::chrono::steady_clock::now();
  const auto& opt = cfg.optimizer;
  RunRecord rec;
  rec.optimizer = opt.key;
  rec.lr = opt.lr();
  rec.mu = opt.needs_curvature() ? opt.mu() : 0.0;
  rec.replicate = replicate;
  rec.seed = replicate_seed(cfg.base_seed, replicate);
  rec.run_id = opt.key + "/lr=" + format_number(rec.lr) + "/mu=" + format_number(rec.mu) + "/rep=" +
               std::to_string(replicate);

  const std::size_t dim = problem.dim();
  const ProbeConfig probe = opt.probe_config();
  ParamVector x = problem.initial_point(rec.seed);

  std::variant<OptimizerState, BaselineState> state;
  if (opt.key == "diag_ocp") {
    state = init_state(dim, opt.ocp);
  } else {
    state = init_baseline_state(dim, opt.baseline);
  }

  auto record_row = [&](std::size_t step, double step_norm, double rho, std::size_t clamps) {
    RecordRow row;
    row.step = step;
    row.train_loss = rec.train_curve.back();
    row.val_loss = rec.val_curve.back();
    row.grad_norm_sq = norm_sq(problem.true_grad(x.span()));
    row.step_norm = step_norm;
    row.rho = rho;
    row.safeguard_count = clamps;
    rec.rows.push_back(row);
  };

  auto losses_finite = [&] { return std::isfinite(rec.train_curve.back()) && std::isfinite(rec.val_curve.back()); };

  rec.train_curve.push_back(problem.train_loss(x.span()));
  rec.val_curve.push_back(problem.val_loss(x.span()));
  if (!losses_finite()) {
    rec.diverged = true;
  } else {
    record_row(0, 0.0, 0.0, 0);
  }

  for (std::size_t k = 0; k < cfg.max_steps && !rec.diverged; ++k) {
    const auto step_index = static_cast<std::int64_t>(k);
    const BatchSeed grad_seed{rec.seed, step_index, Channel::Gradient};
    double rho = 0.0;
    std::size_t clamps = 0;
    try {
      const auto g = problem.eval_grad(x, grad_seed);
      std::optional<DiagEstimate> H;
      if (opt.needs_curvature()) {
        auto hvp = [&](std::span<const double> v) { return problem.hvp_raw(x.span(), v, grad_seed); };
        H = clip_diag(hutchinson_diag(hvp, dim, probe, BatchSeed{rec.seed, step_index, Channel::Probe}), probe);
      }
      ParamVector x_next;
      if (auto* s = std::get_if<OptimizerState>(&state)) {
        auto out = diag_ocp_step(*s, x, g.span(), *H, opt.ocp);
        *s = std::move(out.state);
        x_next = std::move(out.x_next);
        rho = out.diag.rho;
        clamps = out.diag.safeguard_count;
      } else {
        auto& bs = std::get<BaselineState>(state);
        auto out = baseline_step(bs, x, g.span(), H, opt.baseline);
        bs = std::move(out.state);
        x_next = std::move(out.x_next);
      }
      double dx = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dx += (x_next[i] - x[i]) * (x_next[i] - x[i]);
      x = std::move(x_next);
      rec.train_curve.push_back(problem.train_loss(x.span()));
      rec.val_curve.push_back(problem.val_loss(x.span()));
      if (!losses_finite()) {
        rec.diverged = true;
        break;
      }
      const std::size_t step = k + 1;
      if (step % cfg.record_every == 0 || step == cfg.max_steps) record_row(step, std::sqrt(dx), rho, clamps);
    } catch (const NumericError&) {
      rec.diverged = true;
    }
  }

  if (!rec.diverged) {
    rec.final_train = rec.train_curve.back();
    rec.final_val = rec.val_curve.back();
    const auto it = std::min_element(rec.val_curve.begin(), rec.val_curve.end());
    rec.min_val = *it;
    rec.min_val_step = static_cast<std::size_t>(it - rec.val_curve.begin());
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

/// All replicates of one configuration; record i uses replicate i's derived seed.
inline std::vector<RunRecord> run_experiment(const RunConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  const ProblemOracle problem = make_problem(cfg.problem);
  std::vector<RunRecord> records(cfg.n_seeds);
  parallel_for(cfg.n_seeds, threads, [&](std::size_t r) { records[r] = run_replicate(problem, cfg, r); });
  return records;
}

}  // namespace docp::harness
