#pragma once

// Diag-OCP: the optimal-control inner recursion
//
//   phi_0 = a m_hat,   phi_l = a m_hat + (I - a D_hat) phi_{l-1},   l = 1 .. t-1
//   x'    = x (1 - a lambda) - phi_{t-1}
//
// with EMA/bias-corrected moments m_hat, D_hat and a clipped Hutchinson
// estimate feeding D. Because D_hat is diagonal, the recursion collapses to a
// per-coordinate geometric sum: phi_i = (1 - s_i^t) / D_hat_i * m_hat_i with
// s_i = 1 - a D_hat_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "docp/error.hpp"
#include "docp/hessian_probe.hpp"
#include "docp/param_vector.hpp"

namespace docp {

struct OptimizerConfig {
  double alpha = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double mu = 1e-4;
  double g_d = 1e4;
  double lambda = 0.008;
  std::size_t n_probes = 1;
  ProbeDistribution probe_distribution = ProbeDistribution::StandardNormal;
  double safeguard_rho_max = 0.999;

  void validate() const {
    using detail::require;
    require(alpha > 0.0 && std::isfinite(alpha), "diag_ocp: alpha must be > 0");
    require(beta1 >= 0.0 && beta1 < 1.0, "diag_ocp: beta1 must lie in [0, 1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "diag_ocp: beta2 must lie in [0, 1)");
    require(mu > 0.0, "diag_ocp: mu must be > 0");
    require(g_d >= mu, "diag_ocp: g_d must be >= mu");
    require(lambda >= 0.0, "diag_ocp: lambda must be >= 0");
    require(n_probes >= 1, "diag_ocp: n_probes must be >= 1");
    require(safeguard_rho_max > 0.0 && safeguard_rho_max < 1.0, "diag_ocp: safeguard_rho_max must lie in (0, 1)");
  }

  ProbeConfig probe_config() const { return ProbeConfig{n_probes, probe_distribution, mu, g_d}; }
};

/// t counts completed steps; m and D are the raw (uncorrected) moments.
struct OptimizerState {
  std::size_t t = 0;
  std::vector<double> m;
  std::vector<double> D;

  std::size_t dim() const noexcept { return m.size(); }
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

struct MomentUpdate {
  OptimizerState state;
  std::vector<double> m_hat;
  std::vector<double> d_hat;
};

struct StepDiagnostics {
  /// max_i |s_i| after the safeguard; never exceeds safeguard_rho_max.
  double rho = 0.0;
  /// max_i |1 - alpha D_hat_i| before the safeguard.
  double rho_raw = 0.0;
  bool safeguard_triggered = false;
  std::size_t safeguard_count = 0;
  double step_norm = 0.0;
  double corrected_m_norm = 0.0;
  /// min_i of the per-coordinate step coefficient; the descent guarantee says
  /// it is at least (1 - rho^t) / g_d.
  double descent_coefficient = 0.0;
  double descent_bound = 0.0;
};

struct StepResult {
  ParamVector x_next;
  StepDiagnostics diag;
};

inline OptimizerState init_state(std::size_t dim, const OptimizerConfig& cfg) {
  cfg.validate();
  detail::require(dim >= 1, "init_state: dim must be >= 1");
  return OptimizerState{0, std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
}

/// Advances t and both EMAs, returning the bias-corrected views. H must
/// already be clipped into [mu, g_d].
inline MomentUpdate update_moments(const OptimizerState& state, std::span<const double> g, const DiagEstimate& H,
                                   const OptimizerConfig& cfg) {
  using detail::require;
  const std::size_t dim = state.dim();
  require(dim >= 1 && state.D.size() == dim, "update_moments: malformed state");
  require(g.size() == dim, "update_moments: gradient dimension mismatch");
  require(H.values.size() == dim, "update_moments: curvature dimension mismatch");
  if (!all_finite(g)) throw NumericError("update_moments: non-finite gradient");
  for (std::size_t i = 0; i < dim; ++i) {
    const double h = H.values[i];
    require(h >= cfg.mu && h <= cfg.g_d,
            "update_moments: curvature entry " + std::to_string(i) + " is outside [mu, g_d]; clip before updating");
  }

  MomentUpdate out{state, std::vector<double>(dim), std::vector<double>(dim)};
  out.state.t = state.t + 1;
  const double t = static_cast<double>(out.state.t);
  const double m_corr = 1.0 - std::pow(cfg.beta1, t);
  const double d_corr = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < dim; ++i) {
    out.state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    out.state.D[i] = cfg.beta2 * state.D[i] + (1.0 - cfg.beta2) * H.values[i];
    out.m_hat[i] = out.state.m[i] / m_corr;
    // A convex combination of values in [mu, g_d] stays there; rounding in the
    // division can leave it one ulp outside.
    out.d_hat[i] = std::clamp(out.state.D[i] / d_corr, cfg.mu, cfg.g_d);
  }
  return out;
}

/// max_i |1 - alpha D_hat_i|, before any safeguard.
inline double stability_margin(std::span<const double> d_hat, const OptimizerConfig& cfg) {
  double rho = 0.0;
  for (double d : d_hat) rho = std::max(rho, std::abs(1.0 - cfg.alpha * d));
  return rho;
}

namespace detail {

/// 1 - (1 - a)^t, accurate for small a.
inline double one_minus_power(double a, std::size_t t) {
  const double tt = static_cast<double>(t);
  if (a <= 1.0) return -std::expm1(tt * std::log1p(-a));
  return 1.0 - std::pow(1.0 - a, tt);
}

inline void check_step_inputs(const OptimizerState& state, const ParamVector& x, std::span<const double> m_hat,
                              std::span<const double> d_hat, const OptimizerConfig& cfg) {
  cfg.validate();
  require(state.t >= 1, "step: no moments yet (t = 0)");
  require(x.dim() == m_hat.size() && x.dim() == d_hat.size(), "step: dimension mismatch");
  if (!all_finite(m_hat) || !all_finite(d_hat)) throw NumericError("step: non-finite moments");
  for (double d : d_hat) require(d > 0.0, "step: D_hat must be positive");
}

}  // namespace detail

/// Production update: closed-form sum of the inner recursion, exponent t = state.t.
///
/// The safeguard clamps each base s_i = 1 - alpha D_hat_i into
/// [-rho_max, rho_max]. A clamped coordinate uses the curvature consistent with
/// the clamped base, (1 - s_i) / alpha, so its step is still alpha times a
/// finite geometric sum and the first step stays exactly -alpha m_hat.
inline StepResult step_closed_form(const OptimizerState& state, const ParamVector& x, std::span<const double> m_hat,
                                   std::span<const double> d_hat, const OptimizerConfig& cfg) {
  detail::check_step_inputs(state, x, m_hat, d_hat, cfg);
  const std::size_t dim = x.dim();
  const double rho_max = cfg.safeguard_rho_max;
  const double decay = 1.0 - cfg.alpha * cfg.lambda;

  StepDiagnostics diag;
  diag.descent_coefficient = std::numeric_limits<double>::infinity();
  std::vector<double> next(dim);
  double step_sq = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    double a = cfg.alpha * d_hat[i];
    double s = 1.0 - a;
    diag.rho_raw = std::max(diag.rho_raw, std::abs(s));
    double curvature = d_hat[i];
    if (std::abs(s) > rho_max) {
      // clamp the base itself so the reported rho never exceeds rho_max
      s = std::clamp(s, -rho_max, rho_max);
      a = 1.0 - s;
      curvature = a / cfg.alpha;
      ++diag.safeguard_count;
    }
    diag.rho = std::max(diag.rho, std::abs(s));
    const double coeff = detail::one_minus_power(a, state.t) / curvature;
    diag.descent_coefficient = std::min(diag.descent_coefficient, coeff);
    const double phi = coeff * m_hat[i];
    step_sq += phi * phi;
    next[i] = x[i] * decay - phi;
  }
  diag.safeguard_triggered = diag.safeguard_count > 0;
  diag.step_norm = std::sqrt(step_sq);
  diag.corrected_m_norm = norm(m_hat);
  diag.descent_bound = (1.0 - std::pow(diag.rho, static_cast<double>(state.t))) / cfg.g_d;
  return StepResult{ParamVector(std::move(next)), diag};
}

/// Literal inner loop, t - 1 applications starting from phi_0 = alpha m_hat.
/// O(t d); kept as a test oracle for the closed form. No safeguard.
inline ParamVector step_recursive_reference(const OptimizerState& state, const ParamVector& x,
                                            std::span<const double> m_hat, std::span<const double> d_hat,
                                            const OptimizerConfig& cfg) {
  detail::check_step_inputs(state, x, m_hat, d_hat, cfg);
  const std::size_t dim = x.dim();
  std::vector<double> phi(dim);
  for (std::size_t i = 0; i < dim; ++i) phi[i] = cfg.alpha * m_hat[i];
  for (std::size_t l = 1; l < state.t; ++l) {
    for (std::size_t i = 0; i < dim; ++i) {
      phi[i] = cfg.alpha * m_hat[i] + (1.0 - cfg.alpha * d_hat[i]) * phi[i];
    }
  }
  std::vector<double> next(dim);
  const double decay = 1.0 - cfg.alpha * cfg.lambda;
  for (std::size_t i = 0; i < dim; ++i) next[i] = x[i] * decay - phi[i];
  return ParamVector(std::move(next));
}

struct DiagOcpOutcome {
  OptimizerState state;
  ParamVector x_next;
  StepDiagnostics diag;
};

/// One full iteration given a stochastic gradient and an already clipped
/// curvature estimate: moments, bias correction, closed-form step, weight decay.
inline DiagOcpOutcome diag_ocp_step(const OptimizerState& state, const ParamVector& x, std::span<const double> g,
                                    const DiagEstimate& H_clipped, const OptimizerConfig& cfg) {
  auto moments = update_moments(state, g, H_clipped, cfg);
  auto step = step_closed_form(moments.state, x, moments.m_hat, moments.d_hat, cfg);
  return DiagOcpOutcome{std::move(moments.state), std::move(step.x_next), step.diag};
}

}  // namespace docp
