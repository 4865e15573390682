#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "docp/error.hpp"
#include "docp/mlp.hpp"
#include "docp/param_vector.hpp"
#include "docp/seed.hpp"

namespace docp {

// Problem kinds ------------------------------------------------------------

/// f(x) = 1/2 sum_i h_i x_i^2
struct Quadratic {
  std::vector<double> h;
};

/// f(x, y) = (1 - x)^2 + 100 (y - x^2)^2
struct Rosenbrock2D {};

/// f(x) = 1/n sum_i (a_i . x - b_i)^2 with a seeded Gaussian design and planted solution.
struct NoisyLeastSquares {
  std::uint64_t design_seed = 1;
  std::size_t n_samples = 256;
  double noise_std = 0.1;
};

/// Mean squared coordinate-regression error of a ReLU network against a
/// seeded teacher network of the same shape.
struct MlpRegression {
  std::vector<std::size_t> layer_sizes{8, 16, 2};
  std::uint64_t teacher_seed = 7;
  std::size_t n_samples = 256;
  double label_noise_std = 0.05;
};

using ProblemKind = std::variant<Quadratic, Rosenbrock2D, NoisyLeastSquares, MlpRegression>;

enum class HvpMode { Exact, CentralDifference };

/// Construction parameters for a ProblemOracle.
struct ProblemSpec {
  ProblemKind kind = Quadratic{{1.0}};
  /// Required for NoisyLeastSquares; otherwise checked against the kind when set.
  std::optional<std::size_t> dim;
  double noise_std_grad = 0.0;
  /// Defaults to Exact where an analytic Hessian exists, CentralDifference for MlpRegression.
  std::optional<HvpMode> hvp_mode;
  double hvp_step_scale = 1e-5;
  /// Mini-batch size for sample-based kinds; 0 means full batch.
  std::size_t batch_size = 0;
  double val_fraction = 0.2;
  /// Starting point override; the kind's default is used when absent.
  std::optional<std::vector<double>> x0;
};

inline std::string kind_name(const ProblemKind& kind) {
  struct Visitor {
    std::string operator()(const Quadratic&) const { return "quadratic"; }
    std::string operator()(const Rosenbrock2D&) const { return "rosenbrock2d"; }
    std::string operator()(const NoisyLeastSquares&) const { return "noisy_least_squares"; }
    std::string operator()(const MlpRegression&) const { return "mlp_regression"; }
  };
  return std::visit(Visitor{}, kind);
}

namespace detail {

/// Fixed regression dataset with a seed-shuffled train/validation split.
struct Dataset {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> inputs;   // n x in_dim, row-major
  std::vector<double> targets;  // n x out_dim, row-major
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
};

inline void split_rows(Dataset& data, std::size_t n, double val_fraction, std::mt19937_64& engine) {
  require(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction must lie in [0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), engine);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  require(n_val < n, "dataset too small for the validation split");
  data.val_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  data.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(data.val_rows.begin(), data.val_rows.end());
  std::sort(data.train_rows.begin(), data.train_rows.end());
}

}  // namespace detail

/// Loss / gradient / Hessian-vector-product oracle. Immutable after
/// construction; all randomness comes from the caller's BatchSeed.
class ProblemOracle {
 public:
  std::size_t dim() const noexcept { return dim_; }
  const ProblemKind& kind() const noexcept { return kind_; }
  std::string name() const { return kind_name(kind_); }
  HvpMode hvp_mode() const noexcept { return hvp_mode_; }
  double noise_std_grad() const noexcept { return noise_std_grad_; }
  bool is_sample_based() const noexcept { return data_ != nullptr; }
  std::size_t batch_size() const noexcept { return batch_size_; }

  /// Mini-batch loss for sample-based kinds, exact loss otherwise.
  double eval_loss(const ParamVector& x, const BatchSeed& seed) const {
    check_dim(x.dim(), "eval_loss");
    if (!is_sample_based()) return deterministic_loss(x.span());
    auto engine = make_engine(seed);
    const auto rows = draw_batch(engine);
    return sample_loss(x.span(), rows, {});
  }

  /// Stochastic gradient: mini-batch gradient plus i.i.d. N(0, noise_std_grad^2) per coordinate.
  ParamVector eval_grad(const ParamVector& x, const BatchSeed& seed) const {
    check_dim(x.dim(), "eval_grad");
    return ParamVector(stochastic_grad(x.span(), seed));
  }

  /// Hessian-vector product. CentralDifference reuses `seed` for both gradient
  /// calls so batch selection and additive noise cancel.
  ParamVector hvp(const ParamVector& x, const ParamVector& v, const BatchSeed& seed) const {
    check_dim(x.dim(), "hvp");
    check_dim(v.dim(), "hvp");
    return ParamVector(hvp_raw(x.span(), v.span(), seed));
  }

  /// Span-based HVP used by the probe loop; avoids re-validating the probe.
  std::vector<double> hvp_raw(std::span<const double> x, std::span<const double> v,
                              const BatchSeed& seed) const {
    check_dim(x.size(), "hvp");
    check_dim(v.size(), "hvp");
    if (hvp_mode_ == HvpMode::Exact) return exact_hvp(x, v, seed);

    const double v_norm = norm(v);
    if (v_norm == 0.0) return std::vector<double>(dim_, 0.0);
    const double h = hvp_step_scale_ * (1.0 + norm(x)) / (v_norm + 1e-300);
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (std::size_t i = 0; i < dim_; ++i) {
      xp[i] += h * v[i];
      xm[i] -= h * v[i];
    }
    const auto gp = stochastic_grad(xp, seed);
    const auto gm = stochastic_grad(xm, seed);
    std::vector<double> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = (gp[i] - gm[i]) / (2.0 * h);
    return out;
  }

  /// Noise-free gradient of the full training objective.
  std::vector<double> true_grad(std::span<const double> x) const {
    check_dim(x.size(), "true_grad");
    std::vector<double> g(dim_);
    if (is_sample_based()) {
      sample_loss(x, data_->train_rows, g);
    } else {
      deterministic_grad(x, g);
    }
    return g;
  }

  /// Full training-set loss, noise-free.
  double train_loss(std::span<const double> x) const {
    check_dim(x.size(), "train_loss");
    return is_sample_based() ? sample_loss(x, data_->train_rows, {}) : deterministic_loss(x);
  }

  /// Held-out loss; equals train_loss for deterministic kinds.
  double val_loss(std::span<const double> x) const {
    check_dim(x.size(), "val_loss");
    return is_sample_based() ? sample_loss(x, data_->val_rows, {}) : deterministic_loss(x);
  }

  ParamVector initial_point(std::uint64_t seed) const {
    if (x0_) return ParamVector(*x0_);
    struct Visitor {
      const ProblemOracle& self;
      std::uint64_t seed;
      std::vector<double> operator()(const Quadratic&) const { return std::vector<double>(self.dim_, 1.0); }
      std::vector<double> operator()(const Rosenbrock2D&) const { return {-1.2, 1.0}; }
      std::vector<double> operator()(const NoisyLeastSquares&) const {
        return std::vector<double>(self.dim_, 0.0);
      }
      std::vector<double> operator()(const MlpRegression&) const {
        auto engine = make_engine(derive_seed(seed, 0x1417));
        return self.layout_.kaiming_uniform(engine);
      }
    };
    return ParamVector(std::visit(Visitor{*this, seed}, kind_));
  }

  std::size_t n_train() const { return is_sample_based() ? data_->train_rows.size() : 0; }
  std::size_t n_val() const { return is_sample_based() ? data_->val_rows.size() : 0; }

 private:
  friend ProblemOracle make_problem(const ProblemSpec& spec);

  void check_dim(std::size_t n, const char* op) const {
    detail::require(n == dim_, std::string(op) + ": dimension mismatch (got " + std::to_string(n) +
                                   ", problem has " + std::to_string(dim_) + ")");
  }

  std::vector<std::size_t> draw_batch(std::mt19937_64& engine) const {
    const auto& rows = data_->train_rows;
    if (batch_size_ == 0 || batch_size_ >= rows.size()) return rows;
    // partial Fisher-Yates over the training rows
    std::vector<std::size_t> pool = rows;
    for (std::size_t i = 0; i < batch_size_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(engine)]);
    }
    pool.resize(batch_size_);
    return pool;
  }

  std::vector<double> stochastic_grad(std::span<const double> x, const BatchSeed& seed) const {
    detail::require(all_finite(x), "eval_grad: non-finite x");
    std::vector<double> g(dim_);
    auto engine = make_engine(seed);
    if (is_sample_based()) {
      const auto rows = draw_batch(engine);
      sample_loss(x, rows, g);
    } else {
      deterministic_grad(x, g);
    }
    if (noise_std_grad_ > 0.0) {
      std::normal_distribution<double> noise(0.0, noise_std_grad_);
      for (double& gi : g) gi += noise(engine);
    }
    return g;
  }

  double deterministic_loss(std::span<const double> x) const {
    if (const auto* q = std::get_if<Quadratic>(&kind_)) {
      double f = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) f += 0.5 * q->h[i] * x[i] * x[i];
      return f;
    }
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  }

  void deterministic_grad(std::span<const double> x, std::span<double> g) const {
    if (const auto* q = std::get_if<Quadratic>(&kind_)) {
      for (std::size_t i = 0; i < dim_; ++i) g[i] = q->h[i] * x[i];
      return;
    }
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
  }

  double sample_loss(std::span<const double> x, std::span<const std::size_t> rows,
                     std::span<double> grad) const {
    if (std::holds_alternative<MlpRegression>(kind_)) {
      return detail::mlp_loss(layout_, x, data_->inputs, data_->targets, rows, grad);
    }
    // least squares: one target per row
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    double loss = 0.0;
    for (std::size_t r : rows) {
      const std::span<const double> a(data_->inputs.data() + r * dim_, dim_);
      const double e = dot(a, x) - data_->targets[r];
      loss += e * e;
      if (!grad.empty()) {
        for (std::size_t i = 0; i < dim_; ++i) grad[i] += 2.0 * e * inv_n * a[i];
      }
    }
    return loss * inv_n;
  }

  std::vector<double> exact_hvp(std::span<const double> x, std::span<const double> v,
                                const BatchSeed& seed) const {
    std::vector<double> out(dim_, 0.0);
    if (const auto* q = std::get_if<Quadratic>(&kind_)) {
      for (std::size_t i = 0; i < dim_; ++i) out[i] = q->h[i] * v[i];
    } else if (std::holds_alternative<Rosenbrock2D>(kind_)) {
      const double h00 = 2.0 - 400.0 * (x[1] - x[0] * x[0]) + 800.0 * x[0] * x[0];
      const double h01 = -400.0 * x[0];
      out[0] = h00 * v[0] + h01 * v[1];
      out[1] = h01 * v[0] + 200.0 * v[1];
    } else {
      // least squares: (2/|B|) sum_r a_r (a_r . v) over the same batch as eval_grad
      auto engine = make_engine(seed);
      const auto rows = draw_batch(engine);
      const double scale = 2.0 / static_cast<double>(rows.size());
      for (std::size_t r : rows) {
        const std::span<const double> a(data_->inputs.data() + r * dim_, dim_);
        const double av = dot(a, v);
        for (std::size_t i = 0; i < dim_; ++i) out[i] += scale * a[i] * av;
      }
    }
    return out;
  }

  ProblemKind kind_;
  std::size_t dim_ = 0;
  double noise_std_grad_ = 0.0;
  HvpMode hvp_mode_ = HvpMode::Exact;
  double hvp_step_scale_ = 1e-5;
  std::size_t batch_size_ = 0;
  std::optional<std::vector<double>> x0_;
  MlpLayout layout_;
  std::shared_ptr<const detail::Dataset> data_;
};

/// Validates a spec and builds its oracle. Sample-based kinds generate their
/// dataset once here.
inline ProblemOracle make_problem(const ProblemSpec& spec) {
  using detail::require;
  require(spec.noise_std_grad >= 0.0 && std::isfinite(spec.noise_std_grad), "noise_std_grad must be >= 0");
  require(spec.hvp_step_scale > 0.0, "hvp_step_scale must be > 0");

  ProblemOracle p;
  p.kind_ = spec.kind;
  p.noise_std_grad_ = spec.noise_std_grad;
  p.hvp_step_scale_ = spec.hvp_step_scale;
  p.batch_size_ = spec.batch_size;
  p.hvp_mode_ = spec.hvp_mode.value_or(std::holds_alternative<MlpRegression>(spec.kind) ? HvpMode::CentralDifference
                                                                                         : HvpMode::Exact);

  if (const auto* q = std::get_if<Quadratic>(&spec.kind)) {
    require(!q->h.empty(), "Quadratic: dim must be >= 1");
    for (double h : q->h) require(h > 0.0 && std::isfinite(h), "Quadratic: every h_i must be > 0");
    p.dim_ = q->h.size();
  } else if (std::holds_alternative<Rosenbrock2D>(spec.kind)) {
    p.dim_ = 2;
  } else if (const auto* ls = std::get_if<NoisyLeastSquares>(&spec.kind)) {
    require(spec.dim.has_value() && *spec.dim >= 1, "NoisyLeastSquares: dim must be given and >= 1");
    require(ls->n_samples >= 2, "NoisyLeastSquares: need at least 2 samples");
    require(ls->noise_std >= 0.0, "NoisyLeastSquares: noise_std must be >= 0");
    p.dim_ = *spec.dim;
    auto engine = make_engine(ls->design_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto data = std::make_shared<detail::Dataset>();
    data->in_dim = p.dim_;
    data->out_dim = 1;
    std::vector<double> planted(p.dim_);
    for (double& w : planted) w = normal(engine);
    data->inputs.resize(ls->n_samples * p.dim_);
    for (double& a : data->inputs) a = normal(engine);
    data->targets.resize(ls->n_samples);
    for (std::size_t r = 0; r < ls->n_samples; ++r) {
      const std::span<const double> a(data->inputs.data() + r * p.dim_, p.dim_);
      data->targets[r] = dot(a, planted) + ls->noise_std * normal(engine);
    }
    detail::split_rows(*data, ls->n_samples, spec.val_fraction, engine);
    p.data_ = std::move(data);
  } else {
    const auto& mlp = std::get<MlpRegression>(spec.kind);
    p.layout_ = MlpLayout(mlp.layer_sizes);
    require(mlp.n_samples >= 2, "MlpRegression: need at least 2 samples");
    require(mlp.label_noise_std >= 0.0, "MlpRegression: label_noise_std must be >= 0");
    p.dim_ = p.layout_.n_params();

    auto engine = make_engine(mlp.teacher_seed);
    const auto teacher = p.layout_.kaiming_uniform(engine);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto data = std::make_shared<detail::Dataset>();
    data->in_dim = p.layout_.input_dim();
    data->out_dim = p.layout_.output_dim();
    data->inputs.resize(mlp.n_samples * data->in_dim);
    for (double& a : data->inputs) a = normal(engine);
    data->targets.resize(mlp.n_samples * data->out_dim);
    std::vector<std::vector<double>> acts;
    for (std::size_t r = 0; r < mlp.n_samples; ++r) {
      detail::mlp_forward(p.layout_, teacher,
                          std::span<const double>(data->inputs).subspan(r * data->in_dim, data->in_dim), acts);
      for (std::size_t j = 0; j < data->out_dim; ++j) {
        data->targets[r * data->out_dim + j] = acts.back()[j] + mlp.label_noise_std * normal(engine);
      }
    }
    detail::split_rows(*data, mlp.n_samples, spec.val_fraction, engine);
    p.data_ = std::move(data);
    require(p.hvp_mode_ == HvpMode::CentralDifference, "MlpRegression: only CentralDifference HVP is available");
  }

  if (spec.dim) {
    require(*spec.dim == p.dim_, p.name() + ": dim " + std::to_string(*spec.dim) + " inconsistent with kind (expects " +
                                     std::to_string(p.dim_) + ")");
  }
  require(p.dim_ >= 1, "problem dim must be >= 1");
  if (spec.x0) {
    require(spec.x0->size() == p.dim_, "x0 has wrong dimension");
    p.x0_ = spec.x0;
  }
  return p;
}

}  // namespace docp
