#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cagan/errors.hpp"
#include "cagan/nn/layers.hpp"

namespace cagan {

/// Adam with bias correction. A learning rate of zero leaves parameters untouched.
class Adam {
 public:
  Adam() = default;
  Adam(std::span<nn::Parameter<float>* const> params, double learning_rate, double beta1, double beta2,
       double epsilon)
      : learning_rate(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.size(), 0.0f);
      v_.emplace_back(p->value.size(), 0.0f);
    }
  }

  void step(std::span<nn::Parameter<float>* const> params) {
    if (params.size() != m_.size()) throw ValidationError("optimizer/parameter count mismatch");
    ++steps_;
    const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    const float step_size = static_cast<float>(learning_rate / correction1);
    const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(correction2));
    const float b1 = static_cast<float>(beta1_);
    const float b2 = static_cast<float>(beta2_);
    const float eps = static_cast<float>(epsilon_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& p = *params[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const float g = p.grad[i];
        m[i] = b1 * m[i] + (1.0f - b1) * g;
        v[i] = b2 * v[i] + (1.0f - b2) * g * g;
        p.value[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_c2 + eps);
      }
    }
  }

  std::int64_t steps() const { return steps_; }
  const std::vector<std::vector<float>>& first_moments() const { return m_; }
  const std::vector<std::vector<float>>& second_moments() const { return v_; }

  void restore(std::int64_t steps, std::vector<std::vector<float>> m, std::vector<std::vector<float>> v) {
    if (m.size() != m_.size() || v.size() != v_.size()) throw IntegrityError("optimizer state shape mismatch");
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k].size() != m_[k].size() || v[k].size() != v_[k].size()) {
        throw IntegrityError("optimizer state shape mismatch");
      }
    }
    steps_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
  }

  double learning_rate = 0.0;

 private:
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double epsilon_ = 1e-8;
  std::int64_t steps_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace cagan
