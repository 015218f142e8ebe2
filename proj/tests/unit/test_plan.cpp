#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ramify/json_io.hpp"
#include "ramify/plan.hpp"
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

}  // namespace

TEST(HalfCircle, SingleAtom) {
  const auto mu = half_circle_targets(1, 1.0, 1.0);
  ASSERT_EQ(mu.atoms.size(), 1u);
  EXPECT_EQ(mu.atoms[0].position, (Point{1.0, 0.0}));
  EXPECT_DOUBLE_EQ(mu.atoms[0].mass, 1.0);
}

TEST(HalfCircle, TwentyFiveAtoms) {
  const auto mu = half_circle_targets(25, 1.0, 1.0);
  ASSERT_EQ(mu.atoms.size(), 25u);
  for (const auto& a : mu.atoms) {
    EXPECT_NEAR(a.mass, 0.04, 1e-15);
    EXPECT_NEAR(norm(a.position), 1.0, 1e-15);
  }
  EXPECT_NEAR(mu.atoms.front().position.x, 1.0, 1e-15);
  EXPECT_NEAR(mu.atoms.front().position.y, 0.0, 1e-15);
  EXPECT_NEAR(mu.atoms.back().position.x, -1.0, 1e-15);
  EXPECT_NEAR(mu.atoms.back().position.y, 0.0, 1e-15);
  EXPECT_NEAR(mu.total_mass, 1.0, 1e-12);
}

TEST(HalfCircle, ThreeAtomsRadiusTwo) {
  const auto mu = half_circle_targets(3, 2.0, 3.0);
  const Point want[] = {{2, 0}, {0, 2}, {-2, 0}};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(mu.atoms[i].position.x, want[i].x, 1e-15);
    EXPECT_NEAR(mu.atoms[i].position.y, want[i].y, 1e-15);
    EXPECT_DOUBLE_EQ(mu.atoms[i].mass, 1.0);
  }
}

TEST(HalfCircle, RejectsZero) { EXPECT_THROW(half_circle_targets(0, 1.0, 1.0), InvalidArgument); }

TEST(TargetMeasure, RejectsCoincidentAtoms) {
  EXPECT_THROW(make_target_measure({{{1, 1}, 0.5}, {{1, 1}, 0.5}}), InvalidArgument);
  EXPECT_THROW(make_target_measure({{{1, 1}, 0.0}}), InvalidArgument);
}

TEST(StarPlan, LinearInterpolation) {
  const auto plan = build_star_plan(make_target_measure({{{1, 0}, 1.0}}), 2);
  const std::vector<Point> want{{0, 0}, {0.5, 0}, {1, 0}};
  EXPECT_EQ(plan.paths[0].vertices, want);
  EXPECT_TRUE(plan.paths[0].terminal_fixed);
}

TEST(StarPlan, VerticalSteps) {
  const auto plan = build_star_plan(make_target_measure({{{0, 2}, 0.5}}), 4);
  const auto& v = plan.paths[0].vertices;
  ASSERT_EQ(v.size(), 5u);
  for (std::size_t p = 0; p < 5; ++p) {
    EXPECT_EQ(v[p].x, 0.0);
    EXPECT_DOUBLE_EQ(v[p].y, 0.5 * static_cast<double>(p));
  }
  EXPECT_DOUBLE_EQ(plan.paths[0].mass, 0.5);
}

TEST(StarPlan, HalfCircleEndsAtAtoms) {
  const auto mu = half_circle_targets(25, 1.0, 1.0);
  const auto plan = build_star_plan(mu, 8);
  ASSERT_EQ(plan.paths.size(), 25u);
  for (std::size_t i = 0; i < 25; ++i) {
    EXPECT_EQ(plan.paths[i].vertices.back(), mu.atoms[i].position);
    EXPECT_EQ(plan.paths[i].vertices.front(), (Point{}));
    EXPECT_EQ(plan.paths[i].mass, mu.atoms[i].mass);
  }
  EXPECT_NO_THROW(validate(plan));
  EXPECT_NEAR(plan.total_mass(), mu.total_mass, 1e-12);
}

TEST(StarPlan, RejectsEmpty) {
  EXPECT_THROW(build_star_plan(TargetMeasure{}, 4), InvalidArgument);
  EXPECT_THROW(build_star_plan(half_circle_targets(2, 1, 1), 0), InvalidArgument);
}

TEST(Fan, SingleVertical) {
  const auto plan = build_fan_branches(1, 1.0, 1.0, 4, 0.1);
  const Branch& b = plan.branches[0];
  EXPECT_EQ(b.x.back(), 0.0);
  EXPECT_DOUBLE_EQ(b.y.back(), 1.0);
}

TEST(Fan, ElevenBranches) {
  const auto plan = build_fan_branches(11, std::numbers::pi / 2, 1.0, 10, 0.1);
  ASSERT_EQ(plan.branches.size(), 11u);
  for (const auto& b : plan.branches) {
    EXPECT_EQ(b.m.size(), 10u);
    for (double m : b.m) EXPECT_EQ(m, 0.1);
    EXPECT_EQ(b.x[0], 0.0);
    EXPECT_EQ(b.y[0], 0.0);
    for (std::size_t p = 1; p <= 10; ++p) EXPECT_GT(b.y[p], 0.0);
  }
  EXPECT_NO_THROW(validate(plan));
}

TEST(Fan, TwoBranchAngles) {
  const auto plan = build_fan_branches(2, std::numbers::pi / 2, 1.0, 1, 0.0);
  EXPECT_NEAR(std::atan2(plan.branches[0].y[1], plan.branches[0].x[1]), std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(std::atan2(plan.branches[1].y[1], plan.branches[1].x[1]), 3 * std::numbers::pi / 4, 1e-15);
}

TEST(SegmentTable, SingleBranch) {
  BranchPlan plan{{Branch{{0, 0}, {0, 1}, {2}}}};
  const auto t = segment_table(plan);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(t.rows[0].length, 1.0);
  EXPECT_EQ(t.rows[0].mid, (Point{0, 0.5}));
  EXPECT_DOUBLE_EQ(t.rows[0].flux, 1.0);
}

TEST(SegmentTable, PathFluxIsMass) {
  PathPlan plan{{make_path({{0, 0}, {0.3, 0.1}, {0.2, 0.7}, {1, 1}}, 0.04)}};
  for (const auto& r : segment_table(plan).rows) EXPECT_EQ(r.flux, 0.04);
}

TEST(SegmentTable, TwoIntervals) {
  BranchPlan plan{{Branch{{0, 0, 0}, {0, 1, 2}, {0, 3}}}};
  const auto t = segment_table(plan);
  EXPECT_DOUBLE_EQ(t.rows[0].flux, 3.0);
  EXPECT_DOUBLE_EQ(t.rows[1].flux, 1.5);
}

TEST(SegmentTable, ZeroLengthAllowed) {
  BranchPlan plan{{Branch{{0, 0, 0}, {0, 0, 1}, {1, 1}}}};
  const auto t = segment_table(plan);
  EXPECT_EQ(t.rows[0].length, 0.0);
  EXPECT_DOUBLE_EQ(t.rows[0].flux, 1.0);
}

TEST(SegmentTable, CollinearSplitKeepsMass) {
  Branch b{{0, 0.3, 1.1}, {0, 0.4, 1.2}, {0.7, 1.3}};
  Branch split{{0, 0.15, 0.3, 1.1}, {0, 0.2, 0.4, 1.2}, {0.7, 0.7, 1.3}};
  auto mass = [](const Branch& br) {
    double s = 0.0;
    for (const auto& r : segment_table(BranchPlan{{br}}).rows) s += r.density * r.length;
    return s;
  };
  EXPECT_NEAR(mass(b), mass(split), 1e-12);
}

TEST(Topology, StarIsDisjoint) {
  const auto plan = build_star_plan(half_circle_targets(5, 1.0, 1.0), 3);
  const auto topo = extract_topology(plan, 0.0);
  EXPECT_EQ(topo.edges.size(), 15u);
  for (const auto& e : topo.edges) {
    EXPECT_DOUBLE_EQ(e.flux, 0.2);
    EXPECT_DOUBLE_EQ(e.length, distance(topo.nodes[e.parent], topo.nodes[e.child]));
  }
}

TEST(Topology, IdenticalPathsShareChain) {
  PathPlan plan{{make_path({{0, 0}, {0, 0.5}, {0, 1}}, 0.5), make_path({{0, 0}, {0, 0.5}, {0, 1}}, 0.5)}};
  const auto topo = extract_topology(plan, 0.0);
  ASSERT_EQ(topo.edges.size(), 2u);
  for (const auto& e : topo.edges) EXPECT_DOUBLE_EQ(e.flux, 1.0);
  EXPECT_DOUBLE_EQ(topo.leaves.at(2), 1.0);
}

TEST(Topology, SharedTrunkThenSplit) {
  PathPlan plan{{make_path({{0, 0}, {0, 0.5}, {0, 1}, {-1, 2}}, 0.25),
                 make_path({{0, 0}, {0, 0.5}, {0, 1}, {1, 2}}, 0.75)}};
  const auto topo = extract_topology(plan, 1e-9);
  ASSERT_EQ(topo.edges.size(), 4u);
  EXPECT_DOUBLE_EQ(topo.edges[0].flux, 1.0);
  EXPECT_DOUBLE_EQ(topo.edges[1].flux, 1.0);
  EXPECT_DOUBLE_EQ(topo.edges[2].flux, 0.25);
  EXPECT_DOUBLE_EQ(topo.edges[3].flux, 0.75);
}

TEST(Topology, FluxConservation) {
  // Three paths: two share a trunk of two edges, one of them continues.
  PathPlan plan{{make_path({{0, 0}, {0, 1}, {0, 2}, {1, 3}}, 0.125),
                 make_path({{0, 0}, {0, 1}, {0, 2}, {-1, 3}}, 0.25),
                 make_path({{0, 0}, {0, 1}, {2, 1}}, 0.5)}};
  const auto topo = extract_topology(plan, 1e-9);
  std::vector<std::vector<std::size_t>> kids(topo.nodes.size());
  for (const auto& e : topo.edges) kids[e.parent].push_back(e.child);
  std::function<double(std::size_t)> below = [&](std::size_t n) {
    double s = topo.leaves.count(n) ? topo.leaves.at(n) : 0.0;
    for (auto c : kids[n]) s += below(c);
    return s;
  };
  for (const auto& e : topo.edges) EXPECT_EQ(e.flux, below(e.child));
  EXPECT_EQ(topo.edges[0].flux, 0.875);
}

TEST(Topology, RejectsCycle) {
  // The second path leaves the trunk and comes back along it.
  PathPlan plan{{make_path({{0, 0}, {0, 1}, {0, 2}}, 0.5),
                 make_path({{0, 0}, {1, 0}, {0, 1}, {0, 2}}, 0.5)}};
  EXPECT_THROW(extract_topology(plan, 1e-9), TopologyError);
}

TEST(Topology, ExactMultiplicity) {
  PathPlan plan{{make_path({{0, 0}, {0, 1}, {-1, 2}}, 0.25), make_path({{0, 0}, {0, 1}, {1, 2}}, 0.75)}};
  const auto topo = extract_topology(plan, 1e-9);
  EXPECT_DOUBLE_EQ(exact_multiplicity(topo, {0, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(exact_multiplicity(topo, {0.5, 1.5}), 0.75);
  EXPECT_DOUBLE_EQ(exact_multiplicity(topo, {3, 3}), 0.0);
}

TEST(Json, PathPlanRoundTrip) {
  const auto plan = build_star_plan(half_circle_targets(4, 1.5, 2.0), 3);
  EXPECT_EQ(path_plan_from_json(to_json(plan)), plan);
  EXPECT_EQ(path_plan_from_json(nlohmann::json::parse(to_json(plan).dump())), plan);
}

TEST(Json, BranchPlanRoundTrip) {
  const auto plan = build_fan_branches(3, 1.0, 1.0, 4, 0.3);
  EXPECT_EQ(branch_plan_from_json(nlohmann::json::parse(to_json(plan).dump())), plan);
}

TEST(Json, RejectsUnknownKeys) {
  auto j = to_json(build_fan_branches(1, 1.0, 1.0, 2, 0.3));
  j["branches"][0]["z"] = 1;
  EXPECT_THROW(branch_plan_from_json(j), ConfigError);
}
