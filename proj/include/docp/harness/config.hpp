#pragma once

// JSON experiment configuration. Every key is optional; absent keys keep the
// defaults below. See README.md for the full key list.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "docp/baselines.hpp"
#include "docp/diag_ocp.hpp"
#include "docp/error.hpp"
#include "docp/problems.hpp"

namespace docp::harness {

using nlohmann::json;

inline const std::vector<std::string>& optimizer_keys() {
  static const std::vector<std::string> keys{"diag_ocp", "sgd", "adam", "radam", "adahessian"};
  return keys;
}

/// Optimizer selected by key plus the settings of every kind; only the
/// fields relevant to `key` are used.
struct OptimizerSpec {
  std::string key = "diag_ocp";
  OptimizerConfig ocp;
  BaselineConfig baseline;
  /// Probe distribution when not set explicitly: StandardNormal for diag_ocp,
  /// Rademacher for adahessian.
  std::optional<ProbeDistribution> probe_distribution;

  bool needs_curvature() const { return key == "diag_ocp" || key == "adahessian"; }

  double lr() const { return key == "diag_ocp" ? ocp.alpha : baseline.lr; }
  void set_lr(double lr) {
    ocp.alpha = lr;
    baseline.lr = lr;
  }
  double mu() const { return ocp.mu; }
  void set_mu(double mu) { ocp.mu = mu; }

  ProbeConfig probe_config() const {
    ProbeConfig p = ocp.probe_config();
    p.distribution = probe_distribution.value_or(key == "adahessian" ? ProbeDistribution::Rademacher
                                                                     : ProbeDistribution::StandardNormal);
    return p;
  }

  void validate() const {
    bool known = false;
    for (const auto& k : optimizer_keys()) known = known || k == key;
    detail::require(known, "unknown optimizer key '" + key + "' (expected sgd|adam|radam|adahessian|diag_ocp)");
    if (key == "diag_ocp") {
      ocp.validate();
    } else {
      baseline.validate();
      if (key == "adahessian") probe_config().validate();
    }
  }
};

inline BaselineKind baseline_kind_from_key(const std::string& key) {
  if (key == "sgd") return BaselineKind::Sgd;
  if (key == "adam") return BaselineKind::Adam;
  if (key == "radam") return BaselineKind::RAdam;
  if (key == "adahessian") return BaselineKind::AdaHessianDiag;
  throw ContractError("not a baseline optimizer key: '" + key + "'");
}

inline OptimizerSpec make_optimizer(const std::string& key, double lr) {
  OptimizerSpec spec;
  spec.key = key;
  if (key != "diag_ocp") spec.baseline.kind = baseline_kind_from_key(key);
  spec.ocp.lambda = 0.008;
  spec.baseline.weight_decay = 0.008;
  spec.set_lr(lr);
  spec.validate();
  return spec;
}

struct RunConfig {
  ProblemSpec problem;
  OptimizerSpec optimizer;
  std::size_t max_steps = 150;
  std::uint64_t base_seed = 0;
  std::size_t n_seeds = 1;
  std::size_t record_every = 1;

  void validate() const {
    detail::require(max_steps >= 1, "max_steps must be >= 1");
    detail::require(n_seeds >= 1, "n_seeds must be >= 1");
    detail::require(record_every >= 1, "record_every must be >= 1");
    optimizer.validate();
  }
};

enum class SweepMetric { FinalValLoss, MinValLoss };

struct SweepSpec {
  std::vector<double> coarse_grid{1e-1, 1e-2, 1e-3, 1e-4};
  /// Stage-two candidates are winner * multiplier; {1, 0.5, 0.1} turns 1e-3
  /// into {1e-3, 5e-4, 1e-4}.
  std::vector<double> refine_multipliers{1.0, 0.5, 0.1};
  SweepMetric metric = SweepMetric::MinValLoss;

  void validate() const {
    detail::require(!coarse_grid.empty(), "sweep: coarse grid must be nonempty");
    for (std::size_t i = 0; i < coarse_grid.size(); ++i) {
      detail::require(coarse_grid[i] > 0.0, "sweep: coarse grid values must be > 0");
      if (i > 0) detail::require(coarse_grid[i] < coarse_grid[i - 1], "sweep: coarse grid must be sorted descending");
    }
    for (double m : refine_multipliers) detail::require(m > 0.0, "sweep: refine multipliers must be > 0");
  }
};

struct AblationSpec {
  std::vector<double> mu_values{1e-3, 1e-4, 1e-5};
  /// Fixed step size used for every threshold.
  double lr = 0.05;
};

struct CompareSpec {
  std::vector<std::string> optimizers{"diag_ocp", "adam", "adahessian", "radam", "sgd"};
  /// Step at which the lr-sensitivity heatmap reads validation loss.
  std::size_t heatmap_step = 50;
};

struct VerifySpec {
  std::size_t lemma1_trials = 200;
  std::vector<std::size_t> rate_T{100, 200, 400};
  std::size_t rate_seeds = 20;
  std::size_t hutchinson_probes = 100000;
};

/// Everything a config file can carry.
struct ExperimentConfig {
  RunConfig run;
  SweepSpec sweep;
  AblationSpec ablation;
  CompareSpec compare;
  VerifySpec verify;
  std::optional<std::size_t> threads;
};

namespace detail {

using docp::detail::require;

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

/// Typos should fail loudly instead of silently keeping a default.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), "config: " + where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    require(ok, "config: unknown key '" + item.key() + "' in " + where);
  }
}

inline ProbeDistribution parse_distribution(const std::string& s) {
  if (s == "rademacher") return ProbeDistribution::Rademacher;
  if (s == "standard_normal" || s == "normal") return ProbeDistribution::StandardNormal;
  throw ContractError("unknown probe_distribution '" + s + "' (expected rademacher|standard_normal)");
}

inline ProblemSpec parse_problem(const json& j) {
  check_keys(j,
             {"kind", "h", "dim", "h_value", "design_seed", "n_samples", "noise_std", "layer_sizes", "teacher_seed",
              "label_noise_std", "noise_std_grad", "hvp_step_scale", "batch_size", "val_fraction", "x0", "hvp_mode"},
             "problem");
  ProblemSpec spec;
  const std::string kind = j.value("kind", std::string("quadratic"));
  if (kind == "quadratic") {
    Quadratic q;
    if (j.contains("h")) {
      q.h = j.at("h").get<std::vector<double>>();
    } else {
      const auto dim = j.value("dim", std::size_t{1});
      q.h.assign(dim, j.value("h_value", 1.0));
    }
    spec.kind = q;
  } else if (kind == "rosenbrock2d") {
    spec.kind = Rosenbrock2D{};
  } else if (kind == "noisy_least_squares") {
    NoisyLeastSquares ls;
    read(j, "design_seed", ls.design_seed);
    read(j, "n_samples", ls.n_samples);
    read(j, "noise_std", ls.noise_std);
    spec.kind = ls;
  } else if (kind == "mlp_regression") {
    MlpRegression mlp;
    read(j, "layer_sizes", mlp.layer_sizes);
    read(j, "teacher_seed", mlp.teacher_seed);
    read(j, "n_samples", mlp.n_samples);
    read(j, "label_noise_std", mlp.label_noise_std);
    spec.kind = mlp;
  } else {
    throw ContractError("unknown problem kind '" + kind +
                        "' (expected quadratic|rosenbrock2d|noisy_least_squares|mlp_regression)");
  }
  if (j.contains("dim")) spec.dim = j.at("dim").get<std::size_t>();
  read(j, "noise_std_grad", spec.noise_std_grad);
  read(j, "hvp_step_scale", spec.hvp_step_scale);
  read(j, "batch_size", spec.batch_size);
  read(j, "val_fraction", spec.val_fraction);
  if (j.contains("x0")) spec.x0 = j.at("x0").get<std::vector<double>>();
  if (j.contains("hvp_mode")) {
    const auto mode = j.at("hvp_mode").get<std::string>();
    if (mode == "exact") {
      spec.hvp_mode = HvpMode::Exact;
    } else if (mode == "central_difference") {
      spec.hvp_mode = HvpMode::CentralDifference;
    } else {
      throw ContractError("unknown hvp_mode '" + mode + "' (expected exact|central_difference)");
    }
  }
  return spec;
}

inline OptimizerSpec parse_optimizer(const json& j, OptimizerSpec spec) {
  check_keys(j,
             {"key", "lr", "alpha", "beta1", "beta2", "mu", "g_d", "lambda", "weight_decay", "n_probes",
              "safeguard_rho_max", "eps", "momentum", "probe_distribution"},
             "optimizer");
  read(j, "key", spec.key);
  if (spec.key != "diag_ocp") {
    bool known = false;
    for (const auto& k : optimizer_keys()) known = known || k == spec.key;
    require(known, "unknown optimizer key '" + spec.key + "' (expected sgd|adam|radam|adahessian|diag_ocp)");
    spec.baseline.kind = baseline_kind_from_key(spec.key);
  }
  if (j.contains("lr")) spec.set_lr(j.at("lr").get<double>());
  if (j.contains("alpha")) spec.set_lr(j.at("alpha").get<double>());
  for (const char* key : {"beta1", "beta2"}) {
    if (j.contains(key)) {
      const double v = j.at(key).get<double>();
      (std::string(key) == "beta1" ? spec.ocp.beta1 : spec.ocp.beta2) = v;
      (std::string(key) == "beta1" ? spec.baseline.beta1 : spec.baseline.beta2) = v;
    }
  }
  read(j, "mu", spec.ocp.mu);
  read(j, "g_d", spec.ocp.g_d);
  for (const char* key : {"lambda", "weight_decay"}) {
    if (j.contains(key)) {
      spec.ocp.lambda = j.at(key).get<double>();
      spec.baseline.weight_decay = spec.ocp.lambda;
    }
  }
  read(j, "n_probes", spec.ocp.n_probes);
  read(j, "safeguard_rho_max", spec.ocp.safeguard_rho_max);
  read(j, "eps", spec.baseline.eps);
  read(j, "momentum", spec.baseline.momentum);
  if (j.contains("probe_distribution")) {
    spec.probe_distribution = parse_distribution(j.at("probe_distribution").get<std::string>());
    spec.ocp.probe_distribution = *spec.probe_distribution;
  }
  return spec;
}

}  // namespace detail

inline OptimizerSpec default_optimizer() { return make_optimizer("diag_ocp", 0.005); }

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.run.optimizer = default_optimizer();
  try {
    detail::check_keys(j,
                       {"problem", "optimizer", "max_steps", "base_seed", "n_seeds", "record_every", "threads", "sweep",
                        "ablation", "compare", "verify"},
                       "top level");
    if (j.contains("problem")) cfg.run.problem = detail::parse_problem(j.at("problem"));
    if (j.contains("optimizer")) cfg.run.optimizer = detail::parse_optimizer(j.at("optimizer"), cfg.run.optimizer);
    detail::read(j, "max_steps", cfg.run.max_steps);
    detail::read(j, "base_seed", cfg.run.base_seed);
    detail::read(j, "n_seeds", cfg.run.n_seeds);
    detail::read(j, "record_every", cfg.run.record_every);
    if (j.contains("threads")) cfg.threads = j.at("threads").get<std::size_t>();

    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      detail::check_keys(s, {"coarse_grid", "refine_multipliers", "metric"}, "sweep");
      detail::read(s, "coarse_grid", cfg.sweep.coarse_grid);
      detail::read(s, "refine_multipliers", cfg.sweep.refine_multipliers);
      if (s.contains("metric")) {
        const auto m = s.at("metric").get<std::string>();
        if (m == "final_val_loss") {
          cfg.sweep.metric = SweepMetric::FinalValLoss;
        } else if (m == "min_val_loss") {
          cfg.sweep.metric = SweepMetric::MinValLoss;
        } else {
          throw ContractError("unknown sweep metric '" + m + "' (expected final_val_loss|min_val_loss)");
        }
      }
    }
    if (j.contains("ablation")) {
      detail::check_keys(j.at("ablation"), {"mu_values", "lr"}, "ablation");
      detail::read(j.at("ablation"), "mu_values", cfg.ablation.mu_values);
      detail::read(j.at("ablation"), "lr", cfg.ablation.lr);
    }
    if (j.contains("compare")) {
      const auto& c = j.at("compare");
      detail::check_keys(c, {"optimizers", "heatmap_step"}, "compare");
      detail::read(c, "optimizers", cfg.compare.optimizers);
      detail::read(c, "heatmap_step", cfg.compare.heatmap_step);
    }
    if (j.contains("verify")) {
      const auto& v = j.at("verify");
      detail::check_keys(v, {"lemma1_trials", "rate_T", "rate_seeds", "hutchinson_probes"}, "verify");
      detail::read(v, "lemma1_trials", cfg.verify.lemma1_trials);
      detail::read(v, "rate_T", cfg.verify.rate_T);
      detail::read(v, "rate_seeds", cfg.verify.rate_seeds);
      detail::read(v, "hutchinson_probes", cfg.verify.hutchinson_probes);
    }
  } catch (const json::exception& e) {
    throw ContractError(std::string("config: ") + e.what());
  }
  cfg.run.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ContractError("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace docp::harness
