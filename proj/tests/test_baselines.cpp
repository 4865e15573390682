#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "docp/baselines.hpp"
#include "docp/harness/sweep.hpp"

using namespace docp;

namespace {

BaselineConfig config(BaselineKind kind, double lr) {
  BaselineConfig cfg;
  cfg.kind = kind;
  cfg.lr = lr;
  return cfg;
}

const std::vector<BaselineKind> kAll{BaselineKind::Sgd, BaselineKind::Adam, BaselineKind::RAdam,
                                     BaselineKind::AdaHessianDiag};

}  // namespace

TEST(Baselines, SgdStep) {
  const auto cfg = config(BaselineKind::Sgd, 0.1);
  const auto out = baseline_step(init_baseline_state(2, cfg), ParamVector{1.0, 1.0}, std::vector<double>{2.0, 4.0},
                                 std::nullopt, cfg);
  EXPECT_NEAR(out.x_next[0], 0.8, 1e-15);
  EXPECT_NEAR(out.x_next[1], 0.6, 1e-15);
}

TEST(Baselines, SgdMomentumAccumulates) {
  auto cfg = config(BaselineKind::Sgd, 0.1);
  cfg.momentum = 0.5;
  auto s = init_baseline_state(1, cfg);
  const auto a = baseline_step(s, ParamVector{0.0}, std::vector<double>{1.0}, std::nullopt, cfg);
  const auto b = baseline_step(a.state, a.x_next, std::vector<double>{1.0}, std::nullopt, cfg);
  EXPECT_NEAR(b.x_next[0], -0.1 - 0.15, 1e-15);
}

TEST(Baselines, AdamFirstStepIsSignTimesLr) {
  auto cfg = config(BaselineKind::Adam, 0.01);
  cfg.eps = 1e-300;
  const auto out = baseline_step(init_baseline_state(3, cfg), ParamVector{0.0, 0.0, 0.0},
                                 std::vector<double>{3.0, -0.2, 1e-6}, std::nullopt, cfg);
  EXPECT_NEAR(out.x_next[0], -0.01, 1e-15);
  EXPECT_NEAR(out.x_next[1], 0.01, 1e-15);
  EXPECT_NEAR(out.x_next[2], -0.01, 1e-12);
}

TEST(Baselines, AdaHessianFirstStepUsesCurvatureScale) {
  auto cfg = config(BaselineKind::AdaHessianDiag, 0.1);
  cfg.eps = 1e-300;
  const auto out = baseline_step(init_baseline_state(1, cfg), ParamVector{1.0}, std::vector<double>{4.0},
                                 DiagEstimate{{4.0}}, cfg);
  EXPECT_NEAR(out.state.second[0] / (1.0 - cfg.beta2), 16.0, 1e-12);
  EXPECT_NEAR(out.x_next[0], 1.0 - 0.1 * 4.0 / 4.0, 1e-15);
}

TEST(Baselines, AdaHessianRequiresCurvature) {
  const auto cfg = config(BaselineKind::AdaHessianDiag, 0.1);
  const auto s = init_baseline_state(1, cfg);
  EXPECT_THROW(baseline_step(s, ParamVector{1.0}, std::vector<double>{1.0}, std::nullopt, cfg), ContractError);
  EXPECT_THROW(baseline_step(s, ParamVector{1.0}, std::vector<double>{1.0}, DiagEstimate{{1.0, 2.0}}, cfg),
               ContractError);
}

TEST(Baselines, DimensionMismatchAndInvalidConfig) {
  const auto cfg = config(BaselineKind::Adam, 0.1);
  EXPECT_THROW(baseline_step(init_baseline_state(2, cfg), ParamVector{1.0, 2.0}, std::vector<double>{1.0},
                             std::nullopt, cfg),
               ContractError);
  EXPECT_THROW(init_baseline_state(2, config(BaselineKind::Adam, 0.0)), ContractError);
  auto neg_eps = cfg;
  neg_eps.eps = 0.0;
  EXPECT_THROW(init_baseline_state(2, neg_eps), ContractError);
}

TEST(Baselines, ZeroGradientLeavesParametersUnchanged) {
  for (auto kind : kAll) {
    const auto cfg = config(kind, 0.1);
    auto s = init_baseline_state(2, cfg);
    ParamVector x{0.4, -1.3};
    for (int k = 0; k < 10; ++k) {
      auto out = baseline_step(s, x, std::vector<double>{0.0, 0.0}, DiagEstimate{{1.0, 2.0}}, cfg);
      s = out.state;
      EXPECT_EQ(out.x_next, x) << baseline_key(kind);
      x = out.x_next;
    }
  }
}

TEST(Baselines, DecoupledWeightDecay) {
  for (auto kind : kAll) {
    auto cfg = config(kind, 0.1);
    cfg.weight_decay = 0.5;
    const auto out = baseline_step(init_baseline_state(1, cfg), ParamVector{2.0}, std::vector<double>{0.0},
                                   DiagEstimate{{1.0}}, cfg);
    EXPECT_NEAR(out.x_next[0], 2.0 * 0.95, 1e-15) << baseline_key(kind);
  }
}

TEST(Baselines, RAdamWarmupFallsBackToMomentum) {
  const auto cfg = config(BaselineKind::RAdam, 0.1);
  EXPECT_FALSE(detail::radam_rectifier(cfg.beta2, 1).has_value());
  EXPECT_TRUE(detail::radam_rectifier(cfg.beta2, 10).has_value());
  const auto out = baseline_step(init_baseline_state(1, cfg), ParamVector{0.0}, std::vector<double>{3.0},
                                 std::nullopt, cfg);
  EXPECT_NEAR(out.x_next[0], -0.3, 1e-15);
}

TEST(Baselines, RectifierTendsToOne) {
  const double r500 = *detail::radam_rectifier(0.9, 500);
  EXPECT_NEAR(r500, 1.0, 1e-12);
  EXPECT_LT(*detail::radam_rectifier(0.999, 500), 0.5);
  EXPECT_NEAR(*detail::radam_rectifier(0.999, 100000), 1.0, 1e-3);
}

// Matched gradient history: both optimizers see Adam's iterates, so any
// difference comes from the rectifier alone.
TEST(Baselines, AdamAndRAdamAgreeOnceRectified) {
  auto adam = config(BaselineKind::Adam, 0.01);
  adam.beta2 = 0.9;
  auto radam = adam;
  radam.kind = BaselineKind::RAdam;
  const std::vector<double> h{1.0, 3.0, 0.2};
  auto sa = init_baseline_state(3, adam);
  auto sr = init_baseline_state(3, radam);
  ParamVector x{1.0, -2.0, 4.0};
  double worst = 0.0;
  for (int t = 1; t <= 800; ++t) {
    std::vector<double> g(3);
    for (std::size_t i = 0; i < 3; ++i) g[i] = h[i] * x[i];
    auto a = baseline_step(sa, x, g, std::nullopt, adam);
    auto r = baseline_step(sr, x, g, std::nullopt, radam);
    if (t > 500) {
      for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(a.x_next[i] - r.x_next[i]));
    }
    sa = a.state;
    sr = r.state;
    x = a.x_next;
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Baselines, EachDecreasesQuadraticLossAtTunedLr) {
  harness::RunConfig base;
  base.problem.kind = Quadratic{{0.5, 2.0, 8.0}};
  base.max_steps = 200;
  for (const std::string key : {"sgd", "adam", "radam", "adahessian"}) {
    base.optimizer = harness::make_optimizer(key, 0.01);
    const auto table = harness::lr_sweep(harness::SweepSpec{}, base);
    const auto& rec = table.selected().records.front();
    EXPECT_LT(rec.final_train, rec.train_curve.front()) << key;
  }
}
