#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "cagan/errors.hpp"
#include "cagan/nn/feature_map.hpp"

namespace cagan {

// Scores are clamped to [eps, 1 - eps] before any logarithm.
inline constexpr double kScoreEpsilon = 1e-7;

struct LossWeights {
  double gamma_i = 0.1;  // identity (alpha magnitude)
  double gamma_c = 1.0;  // cycle

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

/// A scalar loss and its gradient with respect to the tensor it was computed from.
template <typename T>
struct ScalarLoss {
  double value = 0.0;
  nn::FeatureMap<T> grad;
};

template <typename T>
struct DiscriminatorLoss {
  double total = 0.0;
  ScalarLoss<T> real;      // -mean log D(x_i, y_i)
  ScalarLoss<T> fake;      // -mean log(1 - D(G(x_i, y_i, y_j), y_j))
  ScalarLoss<T> mismatch;  // -mean log(1 - D(x_i, y_j))
};

struct LossReport {
  double d_real = 0.0;
  double d_fake = 0.0;
  double d_mismatch = 0.0;
  double g_adv = 0.0;
  double l_id = 0.0;
  double l_cyc = 0.0;
  double g_total = 0.0;
  double d_total = 0.0;

  bool operator==(const LossReport&) const = default;
};

void to_json(nlohmann::json& j, const LossReport& r);
void from_json(const nlohmann::json& j, LossReport& r);

namespace detail {

template <typename T>
void check_scores(const nn::FeatureMap<T>& s, const char* what) {
  if (s.size() == 0) throw ValidationError(std::string(what) + ": empty score field");
  for (T v : s.data) {
    if (!std::isfinite(static_cast<double>(v)) || v < T(0) || v > T(1)) {
      throw NumericalError(std::string(what) + ": score " + std::to_string(static_cast<double>(v)) +
                           " is not a probability");
    }
  }
}

// -mean log(p) with p = s (target real) or p = 1 - s (target fake).
template <typename T>
ScalarLoss<T> score_log_loss(const nn::FeatureMap<T>& scores, bool target_real, const char* what) {
  check_scores(scores, what);
  ScalarLoss<T> out;
  out.grad = nn::zeros_like(scores);
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double raw = static_cast<double>(scores.data[k]);
    const double s = std::clamp(raw, kScoreEpsilon, 1.0 - kScoreEpsilon);
    const bool clamped = s != raw;
    if (target_real) {
      sum -= std::log(s);
      out.grad.data[k] = clamped ? T(0) : static_cast<T>(-inv_n / s);
    } else {
      sum -= std::log1p(-s);
      out.grad.data[k] = clamped ? T(0) : static_cast<T>(inv_n / (1.0 - s));
    }
  }
  out.value = sum * inv_n;
  return out;
}

template <typename T>
void require_same_shape(const nn::FeatureMap<T>& a, const nn::FeatureMap<T>& b, const char* what) {
  if (!a.same_shape(b)) throw ValidationError(std::string(what) + ": shape mismatch");
}

}  // namespace detail

/// Three-term discriminator objective (to be minimized by D):
/// -[mean log D_real + mean log(1 - D_fake) + mean log(1 - D_mismatch)].
template <typename T>
DiscriminatorLoss<T> adversarial_loss_d(const nn::FeatureMap<T>& real, const nn::FeatureMap<T>& fake,
                                        const nn::FeatureMap<T>& mismatch) {
  detail::require_same_shape(real, fake, "adversarial_loss_d");
  detail::require_same_shape(real, mismatch, "adversarial_loss_d");
  DiscriminatorLoss<T> out;
  out.real = detail::score_log_loss(real, true, "D_real");
  out.fake = detail::score_log_loss(fake, false, "D_fake");
  out.mismatch = detail::score_log_loss(mismatch, false, "D_mismatch");
  out.total = out.real.value + out.fake.value + out.mismatch.value;
  return out;
}

/// Non-saturating generator objective -mean log D_fake.
template <typename T>
ScalarLoss<T> adversarial_loss_g(const nn::FeatureMap<T>& fake) {
  return detail::score_log_loss(fake, true, "D_fake");
}

/// Mean |alpha| over pixels and batch.
template <typename T>
ScalarLoss<T> identity_loss(const nn::FeatureMap<T>& alpha) {
  if (alpha.size() == 0) throw ValidationError("identity_loss: empty alpha");
  ScalarLoss<T> out;
  out.grad = nn::zeros_like(alpha);
  const double inv_n = 1.0 / static_cast<double>(alpha.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const double a = alpha.data[k];
    sum += std::abs(a);
    out.grad.data[k] = static_cast<T>(a > 0 ? inv_n : (a < 0 ? -inv_n : 0.0));
  }
  out.value = sum * inv_n;
  return out;
}

/// Mean |x - x_double_swapped|; the gradient is w.r.t. x_double_swapped.
template <typename T>
ScalarLoss<T> cycle_loss(const nn::FeatureMap<T>& x, const nn::FeatureMap<T>& x_double_swapped) {
  detail::require_same_shape(x, x_double_swapped, "cycle_loss");
  if (x.size() == 0) throw ValidationError("cycle_loss: empty input");
  ScalarLoss<T> out;
  out.grad = nn::zeros_like(x);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = static_cast<double>(x_double_swapped.data[k]) - static_cast<double>(x.data[k]);
    sum += std::abs(diff);
    out.grad.data[k] = static_cast<T>(diff > 0 ? inv_n : (diff < 0 ? -inv_n : 0.0));
  }
  out.value = sum * inv_n;
  return out;
}

struct LossComponents {
  double d_real = 0.0;
  double d_fake = 0.0;
  double d_mismatch = 0.0;
  double g_adv = 0.0;
  double l_id = 0.0;
  double l_cyc = 0.0;
};

/// g_total = g_adv + gamma_i * l_id + gamma_c * l_cyc; d_total is the sum of the
/// three discriminator terms. Throws NumericalError naming any non-finite term.
LossReport total_losses(const LossComponents& components, const LossWeights& weights);

}  // namespace cagan
