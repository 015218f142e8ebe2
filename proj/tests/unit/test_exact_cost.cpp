#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ramify/exact_cost.hpp"
#include "ramify/topology.hpp"

using namespace ramify;

namespace {

Path make_path(std::vector<Point> v, double mass) {
  Path p;
  p.vertices = std::move(v);
  p.mass = mass;
  p.target = p.vertices.back();
  return p;
}

TargetMeasure two_atoms(Point p1, Point p2, double m1 = 0.5, double m2 = 0.5) {
  return make_target_measure({{p1, m1}, {p2, m2}});
}

const double s45 = std::sin(std::numbers::pi / 4);

}  // namespace

TEST(Gilbert, SingleEdge) {
  TreeTopology t;
  t.nodes = {{0, 0}, {1, 0}};
  t.edges = {{0, 1, 1.0, 0.3}};
  EXPECT_DOUBLE_EQ(gilbert_energy(t, 0.4), std::pow(0.3, 0.4));
}

TEST(Gilbert, StarOverHalfCircle) {
  const auto plan = build_star_plan(half_circle_targets(25, 1.0, 1.0), 16);
  const double e = gilbert_energy(extract_topology(plan, 0.0), 0.4);
  double sum = 0.0;
  for (int i = 0; i < 25; ++i) sum += std::pow(0.04, 0.4);
  EXPECT_NEAR(e, std::pow(25.0, 0.6), 1e-12);
  EXPECT_NEAR(e, sum, 1e-12);
  EXPECT_NEAR(e, 6.89865, 1e-5);
}

TEST(Gilbert, YTree) {
  TreeTopology t;
  t.nodes = {{0, 0}, {0, 0.5}, {-0.3, 0.9}, {0.3, 0.9}};
  t.edges = {{0, 1, 0.5, 1.0}, {1, 2, 0.5, 0.5}, {1, 3, 0.5, 0.5}};
  EXPECT_NEAR(gilbert_energy(t, 0.5), 0.5 + std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(gilbert_energy(t, 0.5), 1.2071067811865475, 1e-15);
}

TEST(Gilbert, ZeroFluxConvention) {
  EXPECT_EQ(flux_power(0.0, 0.5), 0.0);
  EXPECT_EQ(flux_power(0.0, 0.0), 0.0);
  EXPECT_EQ(flux_power(0.25, 0.0), 1.0);
  TreeTopology t;
  t.nodes = {{0, 0}, {1, 0}};
  t.edges = {{0, 1, 1.0, -0.1}};
  EXPECT_THROW(gilbert_energy(t, 0.5), InvalidArgument);
}

TEST(Gilbert, TermsMonotoneInAlpha) {
  for (double f : {0.01, 0.2, 0.5, 0.99, 1.0})
    for (double a = 0.0; a < 1.0; a += 0.05) EXPECT_GE(flux_power(f, a), flux_power(f, a + 0.05));
}

TEST(ExactPlanCost, StarIsSumOfOwnCosts) {
  const auto mu = make_target_measure({{{1, 2}, 0.2}, {{-3, 1}, 0.5}, {{0.5, 0.1}, 0.3}});
  const auto plan = build_star_plan(mu, 5);
  double want = 0.0;
  for (const auto& a : mu.atoms) want += std::pow(a.mass, 0.3) * norm(a.position);
  EXPECT_NEAR(exact_plan_cost(plan, 0.3, default_merge_tol(plan)), want, 1e-12);
}

TEST(ExactPlanCost, AlphaOneIsFirstMoment) {
  const auto mu = half_circle_targets(7, 2.0, 3.0);
  const auto plan = build_star_plan(mu, 4);
  double moment = 0.0;
  for (const auto& a : mu.atoms) moment += a.mass * norm(a.position);
  EXPECT_NEAR(exact_plan_cost(plan, 1.0, 0.0), moment, 1e-12);
}

TEST(ExactPlanCost, OverlappingPaths) {
  PathPlan plan{{make_path({{0, 0}, {1, 0}}, 0.3), make_path({{0, 0}, {1, 0}}, 0.7)}};
  EXPECT_NEAR(exact_plan_cost(plan, 0.5, 0.0), 1.0, 1e-15);
}

TEST(ExactPlanCost, CollinearInsertion) {
  PathPlan a{{make_path({{0, 0}, {0, 1}, {-1, 2}}, 0.25), make_path({{0, 0}, {0, 1}, {1, 2}}, 0.75)}};
  PathPlan b{{make_path({{0, 0}, {0, 0.3}, {0, 1}, {-0.5, 1.5}, {-1, 2}}, 0.25),
              make_path({{0, 0}, {0, 0.3}, {0, 1}, {1, 2}}, 0.75)}};
  EXPECT_NEAR(exact_plan_cost(a, 0.5, 1e-9), exact_plan_cost(b, 0.5, 1e-9), 1e-12);
}

TEST(ExactPlanCost, PropagatesTopologyError) {
  PathPlan plan{{make_path({{0, 0}, {0, 1}, {0, 2}}, 0.5), make_path({{0, 0}, {1, 0}, {0, 1}, {0, 2}}, 0.5)}};
  EXPECT_THROW(exact_plan_cost(plan, 0.5, 1e-9), TopologyError);
}

TEST(BruteForce, AlphaOneIsStraight) {
  const auto mu = two_atoms({-1, 1}, {1, 1});
  const auto r = brute_force_bifurcation(mu, 1.0);
  EXPECT_NEAR(r.cost, 0.5 * std::sqrt(2.0) * 2, 1e-12);
  EXPECT_NEAR(r.cost, r.v_shape_cost, 1e-12);
}

TEST(BruteForce, SteinerLimit) {
  // Unit masses at (+-1, 1): the Steiner point sits at (0, 1 - 1/sqrt(3)),
  // total length 1 + sqrt(3).
  const auto mu = two_atoms({-1, 1}, {1, 1}, 1.0, 1.0);
  const auto r = brute_force_bifurcation(mu, 1e-6);
  const double steiner = 1.0 + std::sqrt(3.0);
  EXPECT_NEAR(r.cost, steiner, 2e-5 * steiner);
  EXPECT_NEAR(r.branch_point.x, 0.0, 1e-3);
  EXPECT_NEAR(r.branch_point.y, 1.0 - 1.0 / std::sqrt(3.0), 1e-3);
}

TEST(BruteForce, FortyFiveDegreeFixtureIsTheVShape) {
  // At a right opening angle the Y-shape cannot beat the V: the branching
  // angle for equal masses at alpha = 0.5 is exactly 90 degrees.
  const auto mu = two_atoms({s45, s45}, {-s45, s45});
  const auto r = brute_force_bifurcation(mu, 0.5);
  EXPECT_NEAR(r.v_shape_cost, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(r.cost, std::sqrt(2.0), 1e-12);
  EXPECT_LE(r.cost, r.v_shape_cost);
}

TEST(BruteForce, NarrowOpeningBranches) {
  const double th = std::numbers::pi / 8;
  const auto mu = two_atoms({std::sin(th), std::cos(th)}, {-std::sin(th), std::cos(th)});
  const auto r = brute_force_bifurcation(mu, 0.5);
  EXPECT_LT(r.cost, r.v_shape_cost - 1e-3);
  EXPECT_GT(r.branch_point.y, 0.0);
  EXPECT_NEAR(r.branch_point.x, 0.0, 1e-3);
}

// Strict only while the opening is narrower than the optimal branching
// angle, arccos(2^(2 alpha - 1) - 1), which is 59 degrees at alpha = 0.8.
TEST(BruteForce, SubadditivityIncentive) {
  const double th = std::numbers::pi / 8;
  const auto mu = two_atoms({std::sin(th), std::cos(th)}, {-std::sin(th), std::cos(th)});
  for (double a : {0.0, 0.2, 0.5, 0.8}) {
    const auto r = brute_force_bifurcation(mu, a);
    EXPECT_LT(r.cost, r.v_shape_cost) << "alpha " << a;
  }
  const auto r1 = brute_force_bifurcation(mu, 1.0);
  EXPECT_NEAR(r1.cost, r1.v_shape_cost, 1e-12);
}

TEST(BruteForce, RequiresTwoAtoms) {
  EXPECT_THROW(brute_force_bifurcation(half_circle_targets(3, 1, 1), 0.5), InvalidArgument);
}
