#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "docp/error.hpp"

namespace docp {

/// Parameter layout of a fully connected ReLU network. Each layer stores its
/// weight matrix row-major (out x in) followed by its bias vector.
class MlpLayout {
 public:
  MlpLayout() = default;

  explicit MlpLayout(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    detail::require(sizes_.size() >= 2 && sizes_.size() <= 4,
                    "MlpRegression: layer sizes need input, output and at most 2 hidden layers");
    for (std::size_t s : sizes_) detail::require(s >= 1, "MlpRegression: layer sizes must be positive");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weight_offsets_.push_back(offset);
      offset += sizes_[l] * sizes_[l + 1];
      bias_offsets_.push_back(offset);
      offset += sizes_[l + 1];
    }
    n_params_ = offset;
  }

  std::size_t n_params() const noexcept { return n_params_; }
  std::size_t n_layers() const noexcept { return sizes_.size() - 1; }
  std::size_t in_size(std::size_t layer) const { return sizes_[layer]; }
  std::size_t out_size(std::size_t layer) const { return sizes_[layer + 1]; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t weight_offset(std::size_t layer) const { return weight_offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return bias_offsets_[layer]; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

  /// Kaiming-uniform weights (bound sqrt(6 / fan_in)), biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  template <class Engine>
  std::vector<double> kaiming_uniform(Engine& engine) const {
    std::vector<double> params(n_params_);
    for (std::size_t l = 0; l < n_layers(); ++l) {
      const double fan_in = static_cast<double>(in_size(l));
      std::uniform_real_distribution<double> w(-std::sqrt(6.0 / fan_in), std::sqrt(6.0 / fan_in));
      std::uniform_real_distribution<double> b(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
      for (std::size_t i = 0; i < in_size(l) * out_size(l); ++i) params[weight_offset(l) + i] = w(engine);
      for (std::size_t i = 0; i < out_size(l); ++i) params[bias_offset(l) + i] = b(engine);
    }
    return params;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
  std::size_t n_params_ = 0;
};

namespace detail {

/// Forward pass for one sample. `acts[l]` holds the post-activation input of
/// layer l; `acts.back()` is the network output. ReLU on hidden layers only.
inline void mlp_forward(const MlpLayout& layout, std::span<const double> params,
                        std::span<const double> input, std::vector<std::vector<double>>& acts) {
  acts.resize(layout.n_layers() + 1);
  acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layout.n_layers(); ++l) {
    const std::size_t n_in = layout.in_size(l);
    const std::size_t n_out = layout.out_size(l);
    const double* w = params.data() + layout.weight_offset(l);
    const double* b = params.data() + layout.bias_offset(l);
    auto& out = acts[l + 1];
    out.assign(n_out, 0.0);
    const bool hidden = l + 1 < layout.n_layers();
    for (std::size_t o = 0; o < n_out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < n_in; ++i) z += w[o * n_in + i] * acts[l][i];
      out[o] = hidden ? std::max(z, 0.0) : z;
    }
  }
}

/// Mean-over-samples, sum-over-outputs squared error on the selected rows.
/// Accumulates its gradient into `grad` when non-empty. The ReLU derivative at
/// exactly zero is taken as 0.
inline double mlp_loss(const MlpLayout& layout, std::span<const double> params,
                       std::span<const double> inputs, std::span<const double> targets,
                       std::span<const std::size_t> rows, std::span<double> grad) {
  const std::size_t n_in = layout.input_dim();
  const std::size_t n_out = layout.output_dim();
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(rows.size());

  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  double loss = 0.0;
  for (std::size_t r : rows) {
    mlp_forward(layout, params, inputs.subspan(r * n_in, n_in), acts);
    const auto& y_hat = acts.back();
    delta.assign(n_out, 0.0);
    for (std::size_t j = 0; j < n_out; ++j) {
      const double e = y_hat[j] - targets[r * n_out + j];
      loss += e * e;
      delta[j] = 2.0 * e * inv_n;
    }
    if (!want_grad) continue;
    for (std::size_t l = layout.n_layers(); l-- > 0;) {
      const std::size_t li = layout.in_size(l);
      const std::size_t lo = layout.out_size(l);
      const double* w = params.data() + layout.weight_offset(l);
      double* gw = grad.data() + layout.weight_offset(l);
      double* gb = grad.data() + layout.bias_offset(l);
      const auto& a_in = acts[l];
      for (std::size_t o = 0; o < lo; ++o) {
        gb[o] += delta[o];
        for (std::size_t i = 0; i < li; ++i) gw[o * li + i] += delta[o] * a_in[i];
      }
      if (l == 0) break;
      prev_delta.assign(li, 0.0);
      for (std::size_t i = 0; i < li; ++i) {
        if (a_in[i] <= 0.0) continue;  // ReLU gate
        double s = 0.0;
        for (std::size_t o = 0; o < lo; ++o) s += w[o * li + i] * delta[o];
        prev_delta[i] = s;
      }
      delta.swap(prev_delta);
    }
  }
  return loss * inv_n;
}

}  // namespace detail
}  // namespace docp
