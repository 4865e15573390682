#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "docp/harness/config.hpp"
#include "docp/harness/run.hpp"

namespace docp::harness {

/// Per-lr aggregate over replicates. Diverged replicates are counted, never averaged.
struct SweepRow {
  int stage = 1;
  double lr = 0.0;
  double final_val = std::numeric_limits<double>::quiet_NaN();
  double min_val = std::numeric_limits<double>::quiet_NaN();
  double min_val_step = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_diverged = 0;
  std::vector<RunRecord> records;

  bool eligible() const { return n_diverged == 0 && !records.empty(); }
  double metric(SweepMetric m) const { return m == SweepMetric::FinalValLoss ? final_val : min_val; }
};

struct SweepTable {
  std::string optimizer;
  SweepMetric metric = SweepMetric::MinValLoss;
  std::vector<SweepRow> rows;
  double selected_lr = std::numeric_limits<double>::quiet_NaN();

  /// False only when every coarse lr had a diverged replicate.
  bool has_selection() const { return !std::isnan(selected_lr); }

  const SweepRow& selected() const {
    for (const auto& r : rows) {
      if (r.lr == selected_lr) return r;
    }
    throw ContractError("sweep: selected lr missing from table");
  }
};

inline SweepRow summarize(int stage, double lr, std::vector<RunRecord> records) {
  SweepRow row;
  row.stage = stage;
  row.lr = lr;
  double fv = 0.0, mv = 0.0, ms = 0.0;
  std::size_t ok = 0;
  for (const auto& r : records) {
    if (r.diverged) {
      ++row.n_diverged;
      continue;
    }
    fv += r.final_val;
    mv += r.min_val;
    ms += static_cast<double>(r.min_val_step);
    ++ok;
  }
  if (ok > 0) {
    row.final_val = fv / static_cast<double>(ok);
    row.min_val = mv / static_cast<double>(ok);
    row.min_val_step = ms / static_cast<double>(ok);
  }
  row.records = std::move(records);
  return row;
}

/// True when `a` beats `b` on the metric; ties go to the larger lr.
inline bool better(const SweepRow& a, const SweepRow& b, SweepMetric metric) {
  const double ma = a.metric(metric);
  const double mb = b.metric(metric);
  if (ma != mb) return ma < mb;
  return a.lr > b.lr;
}

namespace detail {

/// Sweep body. Leaves selected_lr NaN (and skips stage 2) when no coarse lr is eligible.
inline SweepTable sweep_table(const SweepSpec& spec, const RunConfig& base, std::size_t threads) {
  spec.validate();
  base.validate();
  const ProblemOracle problem = make_problem(base.problem);

  SweepTable table;
  table.optimizer = base.optimizer.key;
  table.metric = spec.metric;
  std::map<double, std::size_t> seen;

  auto run_stage = [&](int stage, const std::vector<double>& lrs) {
    std::vector<double> fresh;
    for (double lr : lrs) {
      const double c = canonical_lr(lr);
      if (!seen.count(c) && std::find(fresh.begin(), fresh.end(), c) == fresh.end()) fresh.push_back(c);
    }
    const std::size_t n_jobs = fresh.size() * base.n_seeds;
    std::vector<RunRecord> results(n_jobs);
    parallel_for(n_jobs, threads, [&](std::size_t job) {
      RunConfig cfg = base;
      cfg.optimizer.set_lr(fresh[job / base.n_seeds]);
      cfg.optimizer.validate();
      results[job] = run_replicate(problem, cfg, job % base.n_seeds);
    });
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      std::vector<RunRecord> recs(results.begin() + static_cast<std::ptrdiff_t>(i * base.n_seeds),
                                  results.begin() + static_cast<std::ptrdiff_t>((i + 1) * base.n_seeds));
      seen[fresh[i]] = table.rows.size();
      table.rows.push_back(summarize(stage, fresh[i], std::move(recs)));
    }
  };

  auto best_of = [&](auto first, auto last) -> const SweepRow* {
    const SweepRow* best = nullptr;
    for (auto it = first; it != last; ++it) {
      if (!it->eligible()) continue;
      if (!best || better(*it, *best, spec.metric)) best = &*it;
    }
    return best;
  };

  run_stage(1, spec.coarse_grid);
  const SweepRow* coarse_best = best_of(table.rows.begin(), table.rows.end());
  if (!coarse_best) return table;
  const double winner = coarse_best->lr;
  std::vector<double> refine;
  for (double m : spec.refine_multipliers) refine.push_back(winner * m);
  run_stage(2, refine);

  table.selected_lr = best_of(table.rows.begin(), table.rows.end())->lr;
  return table;
}

}  // namespace detail

/// Two-stage learning-rate search: every coarse value, then the winner times
/// each refine multiplier. Values already run are reused, not rerun.
inline SweepTable lr_sweep(const SweepSpec& spec, const RunConfig& base, std::size_t threads = 1) {
  SweepTable table = detail::sweep_table(spec, base, threads);
  if (!table.has_selection()) {
    std::string grid;
    for (double lr : spec.coarse_grid) grid += (grid.empty() ? "" : ", ") + format_number(lr);
    throw NumericError("sweep: every run diverged on grid {" + grid + "} for optimizer " + base.optimizer.key);
  }
  return table;
}

inline std::vector<double> refine_candidates(const SweepSpec& spec, double winner) {
  std::vector<double> out;
  for (double m : spec.refine_multipliers) out.push_back(canonical_lr(winner * m));
  return out;
}

/// Clip floor used by the unclamped control arm; tiny but positive so D_hat stays invertible.
inline constexpr double kUnclampedMu = 1e-12;

struct AblationArm {
  double mu = 0.0;
  bool control = false;
  std::vector<RunRecord> records;
};

/// One run set per clip floor plus the unclamped control, all at the same lr.
inline std::vector<AblationArm> ablate_mu(const std::vector<double>& values, const RunConfig& base, double lr,
                                          std::size_t threads = 1) {
  detail::require(!values.empty(), "ablate-mu: need at least one threshold");
  for (double mu : values) {
    detail::require(mu > 0.0 && std::isfinite(mu), "ablate-mu: thresholds must be > 0 (got " + format_number(mu) + ")");
  }
  detail::require(base.optimizer.needs_curvature(), "ablate-mu: optimizer must use curvature (diag_ocp|adahessian)");
  std::vector<AblationArm> arms;
  for (double mu : values) arms.push_back(AblationArm{mu, false, {}});
  arms.push_back(AblationArm{kUnclampedMu, true, {}});

  const ProblemOracle problem = make_problem(base.problem);
  const std::size_t n_jobs = arms.size() * base.n_seeds;
  std::vector<RunRecord> results(n_jobs);
  parallel_for(n_jobs, threads, [&](std::size_t job) {
    RunConfig cfg = base;
    cfg.optimizer.set_lr(lr);
    cfg.optimizer.set_mu(arms[job / base.n_seeds].mu);
    cfg.optimizer.validate();
    results[job] = run_replicate(problem, cfg, job % base.n_seeds);
  });
  for (std::size_t i = 0; i < arms.size(); ++i) {
    for (std::size_t r = 0; r < base.n_seeds; ++r) arms[i].records.push_back(std::move(results[i * base.n_seeds + r]));
  }
  return arms;
}

inline OptimizerSpec with_key(OptimizerSpec spec, const std::string& key) {
  spec.key = key;
  if (key != "diag_ocp") spec.baseline.kind = baseline_kind_from_key(key);
  spec.validate();
  return spec;
}

struct ComparisonResult {
  std::vector<SweepTable> sweeps;
  /// Records at each optimizer's selected lr, same order as `sweeps`. Empty for
  /// an optimizer whose whole coarse grid diverged.
  std::vector<std::vector<RunRecord>> tuned;
};

/// Same problem, same budget, lr tuned per optimizer by the two-stage sweep.
/// An optimizer that diverges everywhere stays in the result with no selection
/// instead of aborting the comparison.
inline ComparisonResult compare(const CompareSpec& spec, const SweepSpec& sweep, const RunConfig& base,
                                std::size_t threads = 1) {
  detail::require(!spec.optimizers.empty(), "compare: optimizer list is empty");
  ComparisonResult out;
  for (const auto& key : spec.optimizers) {
    RunConfig cfg = base;
    cfg.optimizer = with_key(base.optimizer, key);
    out.sweeps.push_back(detail::sweep_table(sweep, cfg, threads));
    const auto& t = out.sweeps.back();
    out.tuned.push_back(t.has_selection() ? t.selected().records : std::vector<RunRecord>{});
  }
  return out;
}

}  // namespace docp::harness
