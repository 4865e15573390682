#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "docp/error.hpp"
#include "docp/param_vector.hpp"
#include "docp/seed.hpp"

namespace docp {

enum class ProbeDistribution { Rademacher, StandardNormal };

struct ProbeConfig {
  std::size_t n_probes = 1;
  ProbeDistribution distribution = ProbeDistribution::StandardNormal;
  double clip_lo = 1e-4;  // floor mu
  double clip_hi = 1e4;   // ceiling G_d

  void validate() const {
    detail::require(n_probes >= 1, "ProbeConfig: n_probes must be >= 1");
    detail::require(clip_lo > 0.0, "ProbeConfig: clip_lo (mu) must be > 0");
    detail::require(clip_hi >= clip_lo, "ProbeConfig: clip_hi (G_d) must be >= clip_lo");
  }
};

/// Hessian-diagonal estimate. Within [clip_lo, clip_hi] once it has passed clip_diag.
struct DiagEstimate {
  std::vector<double> values;
};

namespace detail {

template <class Engine>
void fill_probe(ProbeDistribution distribution, std::span<double> out, Engine& engine) {
  if (distribution == ProbeDistribution::Rademacher) {
    std::bernoulli_distribution coin(0.5);
    for (double& v : out) v = coin(engine) ? 1.0 : -1.0;
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out) v = normal(engine);
  }
}

}  // namespace detail

inline ParamVector sample_probe(ProbeDistribution distribution, std::size_t dim, const BatchSeed& seed) {
  detail::require(dim >= 1, "sample_probe: dim must be >= 1");
  auto engine = make_engine(seed);
  std::vector<double> v(dim);
  detail::fill_probe(distribution, v, engine);
  return ParamVector(std::move(v));
}

/// Any callable mapping a probe direction to a Hessian-vector product.
template <class F>
concept HvpFunction = requires(const F& f, std::span<const double> v) {
  { f(v) } -> std::convertible_to<std::vector<double>>;
};

/// Hutchinson diagonal estimate: (1/N) sum_m v_m .* (H v_m). Probes are drawn
/// sequentially from one stream keyed by `seed`. Output is not clipped.
template <HvpFunction F>
DiagEstimate hutchinson_diag(const F& hvp_fn, std::size_t dim, const ProbeConfig& cfg, const BatchSeed& seed) {
  detail::require(dim >= 1, "hutchinson_diag: dim must be >= 1");
  detail::require(cfg.n_probes >= 1, "hutchinson_diag: n_probes must be >= 1");
  auto engine = make_engine(seed);
  std::vector<double> v(dim);
  std::vector<double> acc(dim, 0.0);
  for (std::size_t m = 0; m < cfg.n_probes; ++m) {
    detail::fill_probe(cfg.distribution, v, engine);
    const std::vector<double> hv = hvp_fn(std::span<const double>(v));
    detail::require(hv.size() == dim, "hutchinson_diag: hvp returned " + std::to_string(hv.size()) +
                                          " entries, expected " + std::to_string(dim));
    for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i] * hv[i];
  }
  const double inv = 1.0 / static_cast<double>(cfg.n_probes);
  for (double& a : acc) a *= inv;
  return DiagEstimate{std::move(acc)};
}

/// Clamps every entry into [clip_lo, clip_hi]. NaN means the oracle is broken.
inline DiagEstimate clip_diag(const DiagEstimate& h, const ProbeConfig& cfg) {
  cfg.validate();
  DiagEstimate out{h.values};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (std::isnan(out.values[i])) {
      throw NumericError("clip_diag: NaN curvature estimate at index " + std::to_string(i));
    }
    out.values[i] = std::clamp(out.values[i], cfg.clip_lo, cfg.clip_hi);
  }
  return out;
}

}  // namespace docp
