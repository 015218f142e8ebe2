#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ramify/diagnostics.hpp"
#include "ramify/objective.hpp"

using namespace ramify;

namespace {

BranchPlan two_interval_branch(double m0, double m1) { return BranchPlan{{Branch{{0, 0, 0}, {0, 1, 2}, {m0, m1}}}}; }

ObjectiveConfig gaussian(double beta = 1.0) {
  ObjectiveConfig c;
  c.penalty.kind = PenaltyKind::Gaussian;
  c.penalty.beta = beta;
  return c;
}

BranchPlan scaled(BranchPlan plan, double c) {
  for (auto& b : plan.branches)
    for (auto& m : b.m) m *= c;
  return plan;
}

}  // namespace

TEST(Payoff, Examples) {
  EXPECT_EQ(payoff_H(two_interval_branch(0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(payoff_H(two_interval_branch(2, 3)), 5.0);
  const auto plan = build_fan_branches(5, 1.3, 1.2, 7, 0.37);
  EXPECT_EQ(payoff_H(scaled(plan, 2.0)), 2.0 * payoff_H(plan));
}

TEST(Penalty, Examples) {
  const auto cfg = gaussian();
  EXPECT_EQ(penalty_P(two_interval_branch(0, 0), cfg), 0.0);
  BranchPlan one{{Branch{{0, 0}, {0, 0.5}, {3.0}}}};
  EXPECT_DOUBLE_EQ(penalty_P(one, cfg), 1.5 * 1.5);
  // Midpoints (0, 0.5) and (0, 1.5), w = 2 and 3.
  EXPECT_NEAR(penalty_P(two_interval_branch(2, 3), cfg), 4 + 9 + 2 * 6 * std::exp(-1.0), 1e-14);
  EXPECT_NEAR(penalty_P(two_interval_branch(2, 3), gaussian(2.0)), 4 + 9 + 2 * 6 * std::exp(-2.0), 1e-14);
}

TEST(Penalty, PowerLawDropsDiagonal) {
  ObjectiveConfig cfg;
  cfg.penalty.kind = PenaltyKind::PowerLaw;
  cfg.penalty.gamma = 0.5;
  BranchPlan one{{Branch{{0, 0}, {0, 0.5}, {3.0}}}};
  EXPECT_EQ(penalty_P(one, cfg), 0.0);
  // Midpoint distance 1: kernel 1.
  EXPECT_NEAR(penalty_P(two_interval_branch(2, 3), cfg), 12.0, 1e-14);
  BranchPlan twin{{Branch{{0, 0}, {0, 1}, {1.0}}, Branch{{0, 0}, {0, 1}, {2.0}}}};
  EXPECT_THROW(penalty_P(twin, cfg), DegenerateConfiguration);
}

TEST(Penalty, LengthFreeWeights) {
  auto cfg = gaussian();
  cfg.penalty.arc_length = false;
  // Weights m / K = 1 and 1.5.
  EXPECT_NEAR(penalty_P(two_interval_branch(2, 3), cfg), 1 + 2.25 + 2 * 1.5 * std::exp(-1.0), 1e-14);
}

TEST(Penalty, PermutationInvariant) {
  std::mt19937_64 rng(3);
  GradcheckOptions opt;
  for (int i = 0; i < 10; ++i) {
    auto s = random_gradcheck_sample(rng, opt);
    auto rev = s.plan;
    std::reverse(rev.branches.begin(), rev.branches.end());
    EXPECT_NEAR(penalty_P(rev, s.config), penalty_P(s.plan, s.config), 1e-13 * penalty_P(s.plan, s.config));
  }
}

TEST(Homogeneity, ComponentsScale) {
  std::mt19937_64 rng(5);
  GradcheckOptions opt;
  for (int i = 0; i < 10; ++i) {
    auto s = random_gradcheck_sample(rng, opt);
    const auto v = objective_J(s.plan, s.config);
    const auto v2 = objective_J(scaled(s.plan, 2.0), s.config);
    EXPECT_NEAR(v2.H, 2.0 * v.H, 1e-12 * v.H);
    EXPECT_NEAR(penalty_P(scaled(s.plan, 2.0), s.config), 4.0 * penalty_P(s.plan, s.config),
                1e-12 * penalty_P(s.plan, s.config));
    EXPECT_NEAR(v2.I, std::pow(2.0, s.config.alpha) * v.I, 1e-12 * v.I);
  }
}

TEST(Objective, ZeroDensity) {
  auto cfg = gaussian();
  cfg.c1 = 0.4;
  cfg.c2 = 1.4;
  const auto v = objective_J(build_fan_branches(3, 1.0, 1.0, 4, 0.0), cfg);
  EXPECT_EQ(v.I, 0.0);
  EXPECT_EQ(v.P, 0.0);
  EXPECT_EQ(v.H, 0.0);
  EXPECT_EQ(v.J, 0.0);
}

TEST(Objective, WeightsOff) {
  const auto plan = build_fan_branches(4, 1.0, 1.0, 5, 0.3);
  ObjectiveConfig cfg;
  cfg.alpha = 0.4;
  cfg.eps = 0.2;
  EXPECT_EQ(objective_J(plan, cfg).J, irrigation_cost_branches(plan, 0.4, 0.2).value);
}

TEST(Objective, FigureFourFan) {
  ObjectiveConfig cfg;
  cfg.alpha = 0.4;
  cfg.eps = 0.5;
  cfg.c1 = 0.4;
  cfg.c2 = 1.4;
  const auto v = objective_J(build_fan_branches(11, std::numbers::pi / 2, 1.0, 10, 0.1), cfg);
  EXPECT_TRUE(std::isfinite(v.J));
  EXPECT_GT(v.H, 0.0);
  EXPECT_NEAR(v.J, v.I + 0.4 * v.P - 1.4 * v.H, 1e-14);
}

TEST(Gradient, ZeroDensityPayoffSlope) {
  ObjectiveConfig cfg;
  cfg.alpha = 0.5;
  cfg.eps = 0.1;
  cfg.c1 = 0.7;
  cfg.c2 = 1.3;
  auto plan = build_fan_branches(3, 1.5, 1.0, 4, 0.0);
  plan.branches[2].x[3] += 0.05;
  const auto g = grad_objective(plan, cfg).data;
  std::size_t base = 0;
  for (const auto& b : plan.branches) {
    const std::size_t K = b.segments();
    for (std::size_t p = 0; p < K; ++p)
      EXPECT_NEAR(g[base + 2 * (K + 1) + p], -1.3 * distance(b.vertex(p), b.vertex(p + 1)), 1e-15);
    base += 3 * K + 2;
  }
}

TEST(Gradient, PinnedEntriesZero) {
  std::mt19937_64 rng(9);
  GradcheckOptions opt;
  for (int i = 0; i < 5; ++i) {
    const auto s = random_gradcheck_sample(rng, opt);
    const auto g = grad_objective(s.plan, s.config).data;
    const auto fd = fd_gradient(s.plan, s.config, 1e-6).data;
    ASSERT_EQ(g.size(), coordinate_count(s.plan));
    for (std::size_t idx : pinned_coordinates(s.plan)) {
      EXPECT_EQ(g[idx], 0.0);
      EXPECT_EQ(fd[idx], 0.0);
    }
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(0);
  GradcheckOptions opt;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto s = random_gradcheck_sample(rng, opt);
    const auto g = grad_objective(s.plan, s.config).data;
    const auto fd = fd_gradient(s.plan, s.config, 1e-6).data;
    worst = std::max(worst, gradient_relative_error(g, fd, 1e-8));
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(Gradient, LinearCase) {
  // alpha = 1, c1 = 0: J is linear in the densities, so a wide stencil is
  // exact there and only rounding remains.
  std::mt19937_64 rng(13);
  GradcheckOptions opt;
  for (int i = 0; i < 10; ++i) {
    auto s = random_gradcheck_sample(rng, opt);
    s.config.alpha = 1.0;
    s.config.c1 = 0.0;
    const auto g = grad_objective(s.plan, s.config).data;
    const auto fd = fd_gradient(s.plan, s.config, 1e-2).data;
    std::vector<double> gm, fm;
    std::size_t base = 0;
    for (const auto& b : s.plan.branches) {
      const std::size_t K = b.segments();
      for (std::size_t p = 0; p < K; ++p) {
        EXPECT_NEAR(g[base + 2 * (K + 1) + p], fd[base + 2 * (K + 1) + p], 1e-10);
        gm.push_back(g[base + 2 * (K + 1) + p]);
        fm.push_back(fd[base + 2 * (K + 1) + p]);
      }
      base += 3 * K + 2;
    }
    EXPECT_LE(gradient_relative_error(gm, fm, 1e-8), 1e-9);
  }
}

TEST(Gradient, SecondOrderInStep) {
  std::mt19937_64 rng(21);
  const auto s = random_gradcheck_sample(rng, GradcheckOptions{});
  const auto g = grad_objective(s.plan, s.config).data;
  std::vector<double> err;
  for (double h : {1e-3, 1e-4, 1e-5}) {
    const auto fd = fd_gradient(s.plan, s.config, h).data;
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(g[i] - fd[i]));
    err.push_back(e);
  }
  EXPECT_GT(err[0] / err[1], 30.0);
  EXPECT_LT(err[2], err[1]);
}

TEST(Gradient, RejectsZeroLengthWithFlux) {
  BranchPlan plan{{Branch{{0, 0, 0}, {0, 1, 1}, {1.0, 1.0}}}};
  EXPECT_FALSE(differentiable_intervals(plan));
  EXPECT_THROW(grad_objective(plan, ObjectiveConfig{}), NonDifferentiable);
  BranchPlan idle{{Branch{{0, 0, 0}, {0, 1, 1}, {1.0, 0.0}}}};
  EXPECT_TRUE(differentiable_intervals(idle));
  EXPECT_NO_THROW(grad_objective(idle, ObjectiveConfig{}));
}

TEST(Gradient, RejectsSupportBoundary) {
  // Midpoint (0, 1.5) sits exactly eps from the root vertex of interval 0.
  ObjectiveConfig cfg;
  cfg.eps = 1.5;
  EXPECT_THROW(grad_objective(two_interval_branch(1, 1), cfg), NonDifferentiable);
  cfg.eps = 1.4;
  EXPECT_NO_THROW(grad_objective(two_interval_branch(1, 1), cfg));
}

TEST(Layout, FlattenRoundTrip) {
  const auto plan = build_fan_branches(3, 1.0, 1.0, 4, 0.2);
  const auto w = flatten(plan);
  EXPECT_EQ(w.size(), 3u * (2 * 5 + 4));
  EXPECT_EQ(unflatten(plan, w), plan);
  EXPECT_EQ(pinned_coordinates(plan), (std::vector<std::size_t>{0, 5, 14, 19, 28, 33}));
}

TEST(Config, Validation) {
  ObjectiveConfig c;
  c.alpha = 0.0;
  EXPECT_THROW(validate(c), InvalidArgument);
  c = {};
  c.penalty.kind = PenaltyKind::PowerLaw;
  c.penalty.gamma = 1.0;
  EXPECT_THROW(validate(c), InvalidArgument);
  c = {};
  c.c2 = -1;
  EXPECT_THROW(validate(c), InvalidArgument);
}
