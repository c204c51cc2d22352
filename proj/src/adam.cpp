// SPDX-License-Identifier: Apache-2.0
#include <piann/adam.hpp>

#include <cmath>
#include <stdexcept>

namespace piann {

AdamState::AdamState(const ParamRegistry &params, AdamConfig cfg) : config(cfg) {
  for (const auto &e : params.entries()) {
    m.emplace_back(e.value.shape());
    v.emplace_back(e.value.shape());
  }
}

void AdamState::step(ParamRegistry &params, std::span<const Tensor> grads) {
  if (grads.size() != params.size() || m.size() != params.size())
    throw std::invalid_argument("adam: expected " + std::to_string(params.size()) +
                                " gradients, got " + std::to_string(grads.size()));
  for (std::size_t e = 0; e < grads.size(); ++e)
    if (grads[e].shape() != params.at(e).shape())
      throw std::invalid_argument("adam: gradient for '" + params.entries()[e].name +
                                  "' has shape " + to_string(grads[e].shape()));
  ++steps;
  const double k = static_cast<double>(steps);
  const double c1 = 1.0 - std::pow(config.beta1, k);
  const double c2 = 1.0 - std::pow(config.beta2, k);
  for (std::size_t e = 0; e < grads.size(); ++e) {
    auto &theta = params.at(e).storage();
    auto &m1 = m[e].storage();
    auto &m2 = v[e].storage();
    const auto &g = grads[e].storage();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * g[i];
      m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m1[i] / c1;
      const double v_hat = m2[i] / c2;
      theta[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

} // namespace piann
