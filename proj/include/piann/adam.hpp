// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <piann/layers.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace piann {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moments mirror the registry entry by entry.
class AdamState {
public:
  AdamState() = default;
  AdamState(const ParamRegistry &params, AdamConfig config);

  /// Throws std::invalid_argument if a gradient is missing or misshaped.
  void step(ParamRegistry &params, std::span<const Tensor> grads);

  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t steps = 0;
};

} // namespace piann
