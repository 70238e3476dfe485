#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "cagan/config.hpp"
#include "cagan/errors.hpp"
#include "cagan/objectives.hpp"

namespace cagan {
namespace {

using nn::FeatureMap;

FeatureMap<double> constant(int h, int w, double v, int batch = 1, int c = 1) { return {c, batch, h, w, v}; }

FeatureMap<double> random_map(int c, int h, int w, std::mt19937_64& rng, double lo, double hi) {
  FeatureMap<double> m(c, 1, h, w);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : m.data) v = u(rng);
  return m;
}

// ---- adversarial ----

TEST(AdversarialLossD, ConstantHalfIsThreeLn2) {
  const auto half = constant(2, 2, 0.5);
  EXPECT_NEAR(adversarial_loss_d(half, half, half).total, 3.0 * std::log(2.0), 1e-6);
}

TEST(AdversarialLossD, PerfectDiscriminatorLimit) {
  const auto d = adversarial_loss_d(constant(2, 2, 1.0), constant(2, 2, 0.0), constant(2, 2, 0.0));
  EXPECT_GE(d.total, 0.0);
  EXPECT_LT(d.total, 1e-6);
  // Clamped cells contribute no gradient.
  for (double g : d.real.grad.data) EXPECT_EQ(g, 0.0);
}

TEST(AdversarialLossD, MeanIsFieldResolutionInvariant) {
  const auto big = constant(3, 4, 0.5, 2);
  const auto one = constant(1, 1, 0.5);
  EXPECT_DOUBLE_EQ(adversarial_loss_d(big, big, big).total, adversarial_loss_d(one, one, one).total);
  const auto g_big = constant(3, 4, 0.3, 2);
  const auto g_one = constant(1, 1, 0.3);
  EXPECT_DOUBLE_EQ(adversarial_loss_g(g_big).value, adversarial_loss_g(g_one).value);
}

TEST(AdversarialLossD, MonotoneInEachArgument) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = random_map(1, 2, 2, rng, 0.01, 0.98);
    const auto f = random_map(1, 2, 2, rng, 0.01, 0.98);
    const auto m = random_map(1, 2, 2, rng, 0.01, 0.98);
    const double base = adversarial_loss_d(r, f, m).total;
    auto r_up = r;
    auto f_up = f;
    auto m_up = m;
    for (auto& v : r_up.data) v += 0.01;
    for (auto& v : f_up.data) v += 0.01;
    for (auto& v : m_up.data) v += 0.01;
    EXPECT_LT(adversarial_loss_d(r_up, f, m).total, base);
    EXPECT_GT(adversarial_loss_d(r, f_up, m).total, base);
    EXPECT_GT(adversarial_loss_d(r, f, m_up).total, base);
  }
}

TEST(AdversarialLossD, RejectsNonProbabilitiesAndShapeMismatch) {
  const auto half = constant(2, 2, 0.5);
  auto nan = half;
  nan.data[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(adversarial_loss_d(half, nan, half), NumericalError);
  auto above = half;
  above.data[0] = 1.5;
  EXPECT_THROW(adversarial_loss_d(above, half, half), NumericalError);
  EXPECT_THROW(adversarial_loss_d(half, constant(1, 1, 0.5), half), ValidationError);
}

TEST(AdversarialLossG, Examples) {
  EXPECT_NEAR(adversarial_loss_g(constant(2, 2, 0.5)).value, std::log(2.0), 1e-12);
  EXPECT_NEAR(adversarial_loss_g(constant(2, 2, 0.25)).value, std::log(4.0), 1e-12);
  EXPECT_LT(adversarial_loss_g(constant(2, 2, 1.0)).value, 1e-6);
}

// ---- identity ----

TEST(IdentityLoss, Examples) {
  EXPECT_EQ(identity_loss(constant(2, 2, 0.0)).value, 0.0);
  EXPECT_NEAR(identity_loss(constant(2, 2, 0.7)).value, 0.7, 1e-12);
  FeatureMap<double> a(1, 1, 2, 2);
  a.data = {0.1, 0.2, 0.3, 0.4};
  EXPECT_NEAR(identity_loss(a).value, 0.25, 1e-9);
}

TEST(IdentityLoss, LipschitzInL1) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_map(1, 3, 3, rng, 0.0, 1.0);
    const auto b = random_map(1, 3, 3, rng, 0.0, 1.0);
    double l1 = 0;
    for (std::size_t k = 0; k < a.size(); ++k) l1 += std::abs(a.data[k] - b.data[k]);
    EXPECT_LE(std::abs(identity_loss(a).value - identity_loss(b).value), l1 / a.size() + 1e-15);
  }
}

// ---- cycle ----

TEST(CycleLoss, Examples) {
  std::mt19937_64 rng(3);
  const auto x = random_map(3, 4, 4, rng, -1, 1);
  EXPECT_EQ(cycle_loss(x, x).value, 0.0);
  EXPECT_NEAR(cycle_loss(constant(2, 2, -1.0, 1, 3), constant(2, 2, 1.0, 1, 3)).value, 2.0, 1e-12);
  EXPECT_THROW(cycle_loss(x, constant(4, 4, 0.0)), ValidationError);
}

TEST(CycleLoss, SymmetricWithTriangleInequality) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_map(3, 2, 2, rng, -1, 1);
    const auto b = random_map(3, 2, 2, rng, -1, 1);
    const auto c = random_map(3, 2, 2, rng, -1, 1);
    EXPECT_DOUBLE_EQ(cycle_loss(a, b).value, cycle_loss(b, a).value);
    EXPECT_LE(cycle_loss(a, c).value, cycle_loss(a, b).value + cycle_loss(b, c).value + 1e-15);
  }
}

// ---- totals ----

TEST(TotalLosses, WorkedExample) {
  LossComponents c;
  c.g_adv = 0.7;
  c.l_id = 0.5;
  c.l_cyc = 0.1;
  const auto r = total_losses(c, {0.1, 1.0});
  EXPECT_NEAR(r.g_total, 0.85, 1e-9);
  EXPECT_EQ(total_losses(c, {0.0, 0.0}).g_total, 0.7);
}

TEST(TotalLosses, AffineInRegularizers) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    LossComponents c{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const LossWeights w{u(rng), u(rng)};
    const auto r = total_losses(c, w);
    auto c2 = c;
    c2.l_id += 1.0;
    EXPECT_NEAR(total_losses(c2, w).g_total - r.g_total, w.gamma_i, 1e-12);
    c2 = c;
    c2.l_cyc += 1.0;
    EXPECT_NEAR(total_losses(c2, w).g_total - r.g_total, w.gamma_c, 1e-12);
    EXPECT_NEAR(r.d_total, c.d_real + c.d_fake + c.d_mismatch, 1e-12);
  }
}

TEST(TotalLosses, NonFiniteTermIsNamed) {
  LossComponents c;
  c.l_cyc = std::numeric_limits<double>::infinity();
  try {
    total_losses(c, {});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("l_cyc"), std::string::npos);
  }
}

TEST(LossWeights, RecipeDefaultsRoundTripThroughConfig) {
  const TrainConfig config;
  EXPECT_EQ(config.weights.gamma_i, 0.1);
  EXPECT_EQ(config.weights.gamma_c, 1.0);
  nlohmann::json j = config;
  EXPECT_EQ(j.get<TrainConfig>().weights, config.weights);
  EXPECT_THROW((LossWeights{-0.1, 1.0}.validate()), ValidationError);
  EXPECT_THROW((LossWeights{0.1, std::nan("")}.validate()), ValidationError);
}

TEST(LossReport, JsonRoundTrip) {
  const LossReport r{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  nlohmann::json j = r;
  EXPECT_EQ(j.get<LossReport>(), r);
  EXPECT_EQ(j.at("g_total").get<double>(), 0.7);
}

}  // namespace
}  // namespace cagan
