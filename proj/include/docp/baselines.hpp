#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docp/error.hpp"
#include "docp/hessian_probe.hpp"
#include "docp/param_vector.hpp"

namespace docp {

enum class BaselineKind { Sgd, Adam, RAdam, AdaHessianDiag };

inline std::string baseline_key(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Sgd: return "sgd";
    case BaselineKind::Adam: return "adam";
    case BaselineKind::RAdam: return "radam";
    case BaselineKind::AdaHessianDiag: return "adahessian";
  }
  return "?";
}

struct BaselineConfig {
  BaselineKind kind = BaselineKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double momentum = 0.0;  // Sgd only

  void validate() const {
    using detail::require;
    require(lr > 0.0 && std::isfinite(lr), baseline_key(kind) + ": lr must be > 0");
    require(eps > 0.0, baseline_key(kind) + ": eps must be > 0");
    require(beta1 >= 0.0 && beta1 < 1.0, baseline_key(kind) + ": beta1 must lie in [0, 1)");
    require(beta2 >= 0.0 && beta2 < 1.0, baseline_key(kind) + ": beta2 must lie in [0, 1)");
    require(weight_decay >= 0.0, baseline_key(kind) + ": weight_decay must be >= 0");
    require(momentum >= 0.0 && momentum < 1.0, "sgd: momentum must lie in [0, 1)");
  }
};

/// t counts completed steps. `first` is the momentum buffer (SGD) or first
/// moment; `second` is the squared-gradient EMA (Adam, RAdam) or the EMA of
/// squared Hessian-diagonal entries (AdaHessian). Unused buffers stay empty.
struct BaselineState {
  std::size_t t = 0;
  std::vector<double> first;
  std::vector<double> second;

  friend bool operator==(const BaselineState&, const BaselineState&) = default;
};

inline BaselineState init_baseline_state(std::size_t dim, const BaselineConfig& cfg) {
  cfg.validate();
  detail::require(dim >= 1, "baseline: dim must be >= 1");
  BaselineState s;
  s.first.assign(dim, 0.0);
  if (cfg.kind != BaselineKind::Sgd) s.second.assign(dim, 0.0);
  return s;
}

struct BaselineOutcome {
  ParamVector x_next;
  BaselineState state;
};

namespace detail {

/// RAdam variance rectification. Empty optional during the warmup phase,
/// where the maximum-length SMA is too short (rho_t <= 4).
inline std::optional<double> radam_rectifier(double beta2, std::size_t t) {
  const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  const double bt = std::pow(beta2, static_cast<double>(t));
  const double rho_t = rho_inf - 2.0 * static_cast<double>(t) * bt / (1.0 - bt);
  if (!(rho_t > 4.0)) return std::nullopt;
  return std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
}

}  // namespace detail

/// One update of a reference optimizer. Weight decay is decoupled:
/// x is scaled by (1 - lr * weight_decay) before the step is subtracted.
inline BaselineOutcome baseline_step(const BaselineState& state, const ParamVector& x, std::span<const double> g,
                                     const std::optional<DiagEstimate>& H, const BaselineConfig& cfg) {
  using detail::require;
  cfg.validate();
  const std::size_t dim = x.dim();
  require(g.size() == dim && state.first.size() == dim, "baseline_step: dimension mismatch");
  if (cfg.kind != BaselineKind::Sgd) require(state.second.size() == dim, "baseline_step: malformed state");
  if (cfg.kind == BaselineKind::AdaHessianDiag) {
    require(H.has_value(), "adahessian: requires a Hessian-diagonal estimate");
    require(H->values.size() == dim, "adahessian: curvature dimension mismatch");
  }
  if (!all_finite(g)) throw NumericError("baseline_step: non-finite gradient");

  BaselineOutcome out{x, state};
  out.state.t = state.t + 1;
  const double t = static_cast<double>(out.state.t);
  const double decay = 1.0 - cfg.lr * cfg.weight_decay;
  std::vector<double> next(dim);
  auto& m = out.state.first;
  auto& v = out.state.second;

  switch (cfg.kind) {
    case BaselineKind::Sgd:
      for (std::size_t i = 0; i < dim; ++i) {
        m[i] = cfg.momentum * m[i] + g[i];
        next[i] = x[i] * decay - cfg.lr * m[i];
      }
      break;
    case BaselineKind::Adam: {
      const double c1 = 1.0 - std::pow(cfg.beta1, t);
      const double c2 = 1.0 - std::pow(cfg.beta2, t);
      for (std::size_t i = 0; i < dim; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        next[i] = x[i] * decay - cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
      }
      break;
    }
    case BaselineKind::RAdam: {
      const double c1 = 1.0 - std::pow(cfg.beta1, t);
      const double c2 = 1.0 - std::pow(cfg.beta2, t);
      const auto r = detail::radam_rectifier(cfg.beta2, out.state.t);
      for (std::size_t i = 0; i < dim; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = m[i] / c1;
        const double step = r ? *r * m_hat / (std::sqrt(v[i] / c2) + cfg.eps) : m_hat;
        next[i] = x[i] * decay - cfg.lr * step;
      }
      break;
    }
    case BaselineKind::AdaHessianDiag: {
      const double c1 = 1.0 - std::pow(cfg.beta1, t);
      const double c2 = 1.0 - std::pow(cfg.beta2, t);
      for (std::size_t i = 0; i < dim; ++i) {
        const double h = H->values[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * h * h;
        next[i] = x[i] * decay - cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
      }
      break;
    }
  }
  out.x_next = ParamVector(std::move(next));
  return out;
}

}  // namespace docp
