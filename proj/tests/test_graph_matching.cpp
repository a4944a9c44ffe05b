#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "asmforge/errors.hpp"
#include "asmforge/generator.hpp"
#include "asmforge/graph.hpp"
#include "asmforge/hungarian.hpp"
#include "asmforge/losses.hpp"
#include "asmforge/matching.hpp"
#include "oracles.hpp"

using namespace asmforge;

TEST(Hungarian, MatchesEnumeration) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_int_distribution<int> small(0, 3);
  for (int t = 0; t < 60; ++t) {
    const int n = 1 + t % 7;
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) c(i, j) = t % 2 ? u(rng) : small(rng);
    }
    const auto ref = oracle::min_cost_permutation(
        n, [&](std::size_t i, std::size_t j) { return c(i, j); });
    const Assignment a = hungarian(c);
    EXPECT_NEAR(a.cost, ref.cost, 1e-12);
    double recomputed = 0.0;
    for (int i = 0; i < n; ++i) recomputed += c(i, a.col_of_row[i]);
    EXPECT_NEAR(recomputed, ref.cost, 1e-12);
    // Integer costs have many optima; the lexicographically smallest is kept.
    if (t % 2 == 0) {
      EXPECT_EQ(a.col_of_row, ref.perm);
    }
  }
}

TEST(Hungarian, RejectsBadInput) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  c(1, 0) = NAN;
  EXPECT_THROW(hungarian(c), InvalidInput);
  EXPECT_THROW(hungarian(Eigen::MatrixXd::Zero(2, 3)), InvalidInput);
  EXPECT_TRUE(hungarian(Eigen::MatrixXd(0, 0)).col_of_row.empty());
}

TEST(Hungarian, RectangularLeavesExcessUnmatched) {
  Eigen::MatrixXd c(3, 2);
  c << 5, 1,
       1, 5,
       0.5, 0.7;
  const PartialAssignment a = hungarian_rectangular(c);
  // Enumerate which row stays out.
  double best = INFINITY;
  for (int skip = 0; skip < 3; ++skip) {
    for (int first = 0; first < 2; ++first) {
      double s = 0.0;
      int col = first;
      for (int r = 0; r < 3; ++r) {
        if (r == skip) continue;
        s += c(r, col);
        col = 1 - col;
      }
      best = std::min(best, s);
    }
  }
  EXPECT_NEAR(a.cost, best, 1e-15);
  int matched = 0;
  for (const auto& col : a.col_of_row) matched += col.has_value();
  EXPECT_EQ(matched, 2);
}

TEST(SignAssignment, HandCases) {
  // Path 0-1-2: the middle part has the highest degree.
  {
    const PartConnectivityGraph g(3, {{0, 1}, {1, 2}}, {false, false, false});
    const SignAssignment a = assign_joint_signs(g);
    EXPECT_EQ(a.part_signs, (std::vector<Sign>{Sign::kHole, Sign::kPeg, Sign::kHole}));
    EXPECT_TRUE(a.removed_edges.empty());
    EXPECT_EQ(a.joint_sign(1, 0), Sign::kPeg);
    EXPECT_EQ(a.joint_sign(2, 1), Sign::kHole);
  }
  // Even cycle: bipartite, nothing removed.
  {
    const PartConnectivityGraph g(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}},
                                  std::vector<bool>(4, false));
    const SignAssignment a = assign_joint_signs(g);
    EXPECT_EQ(a.part_signs,
              (std::vector<Sign>{Sign::kPeg, Sign::kHole, Sign::kPeg, Sign::kHole}));
    EXPECT_EQ(a.edges.size(), 4u);
    EXPECT_TRUE(a.removed_edges.empty());
  }
  // Odd cycle of distinct parts: the hole-hole edge is dropped.
  {
    const PartConnectivityGraph g(3, {{0, 1}, {1, 2}, {0, 2}}, {false, false, false});
    const SignAssignment a = assign_joint_signs(g);
    EXPECT_EQ(a.removed_edges, (std::vector<PartEdge>{{1, 2}}));
    EXPECT_EQ(a.edges.size(), 2u);
    EXPECT_EQ(a.joint_sign(1, 2), Sign::kNone);
  }
  // Odd cycle where the conflicting ends are congruent: kept, lower id pegs.
  {
    const PartConnectivityGraph g(3, {{0, 1}, {1, 2}, {0, 2}}, {false, true, true});
    const SignAssignment a = assign_joint_signs(g);
    EXPECT_TRUE(a.removed_edges.empty());
    EXPECT_EQ(a.joint_sign(1, 2), Sign::kPeg);
    EXPECT_EQ(a.joint_sign(2, 1), Sign::kHole);
  }
  // Only one conflicting end congruent: that end becomes the peg.
  {
    const PartConnectivityGraph g(3, {{0, 1}, {1, 2}, {0, 2}}, {false, false, true});
    const SignAssignment a = assign_joint_signs(g);
    EXPECT_TRUE(a.removed_edges.empty());
    EXPECT_EQ(a.joint_sign(2, 1), Sign::kPeg);
    EXPECT_EQ(a.joint_sign(1, 2), Sign::kHole);
  }
  EXPECT_THROW(PartConnectivityGraph(2, {{1, 1}}, {false, false}), InvalidInput);
}

TEST(SignAssignment, RandomGraphsSatisfyRules) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + t % 12;
    const double density = u(rng);
    std::vector<PartEdge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (u(rng) < density) edges.emplace_back(i, j);
      }
    }
    std::vector<bool> congruent(n);
    for (std::size_t i = 0; i < n; ++i) congruent[i] = u(rng) < 0.3;
    const PartConnectivityGraph g(n, edges, congruent);
    const SignAssignment a = assign_joint_signs(g);
    EXPECT_EQ(oracle::sign_assignment_violation(n, edges, congruent, a), "");
  }
}

TEST(Reassign, PermutedPoseJointsStillCoincide) {
  ShapeSpec spec;
  spec.category = Category::kCabinet;
  spec.shelves = 3;
  spec.points_per_part = 400;
  const ShapeInstance s = generate_shape(spec, 12);
  for (const auto& perm : oracle::class_permutations(s.congruent_classes, s.num_parts())) {
    const auto poses = permuted_targets(s.gt_poses, perm);
    const JointPairing p = reassign_gt_pairing(s, perm);
    EXPECT_EQ(p.size(), s.gt_pairing.size());
    for (const auto& pr : p.pairs) {
      const Joint& a = s.joints[pr.peg];
      const Joint& b = s.joints[pr.hole];
      EXPECT_LT(oracle::chamfer(oracle::posed(poses[a.part], s.joint_points(a.id)),
                                oracle::posed(poses[b.part], s.joint_points(b.id))),
                1e-20);
    }
  }
  std::vector<std::size_t> bad(s.num_parts());
  for (std::size_t i = 0; i < bad.size(); ++i) bad[i] = i;
  std::swap(bad[0], bad[s.num_parts() - 1]);  // side board <-> back panel
  EXPECT_THROW(reassign_gt_pairing(s, bad), InvalidInput);
}

TEST(Connectivity, SoftmaxOfNegativeSquaredDistance) {
  const ShapeInstance s = make_peg_hole_pair(200);
  std::mt19937_64 rng(47);
  const std::vector<Pose> poses{oracle::random_pose(rng, 0.2),
                                oracle::random_pose(rng, 0.2)};
  const ConnectivityMatrix r = compute_connectivity(s.joints, poses, 0.5);
  ASSERT_EQ(r.weights.rows(), 1);
  ASSERT_EQ(r.weights.cols(), 1);
  EXPECT_DOUBLE_EQ(r.weights(0, 0), 1.0);

  // Hand-built: one peg, two holes at distances 1 and 2 (T = 1).
  std::vector<Joint> joints(3);
  for (std::size_t k = 0; k < 3; ++k) {
    joints[k].id = k;
    joints[k].part = k;
  }
  joints[0].sign = Sign::kPeg;
  joints[1].sign = Sign::kHole;
  joints[1].centroid = Vec3(1, 0, 0);
  joints[2].sign = Sign::kHole;
  joints[2].centroid = Vec3(0, 2, 0);
  const ConnectivityMatrix h = compute_connectivity(
      joints, std::vector<Pose>(3, Pose::identity()), 1.0);
  const double z = std::exp(-1.0) + std::exp(-4.0);
  EXPECT_NEAR(h.weights(0, 0), std::exp(-1.0) / z, 1e-15);
  EXPECT_NEAR(h.weights(0, 1), std::exp(-4.0) / z, 1e-15);
  EXPECT_THROW(compute_connectivity(joints, std::vector<Pose>(3), 0.0), InvalidInput);
}

TEST(ProposePairing, MatchesEnumeration) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.01, 1);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + t % 6;
    ConnectivityMatrix r;
    r.weights.resize(n, n);
    for (std::size_t p = 0; p < n; ++p) {
      r.pegs.push_back(10 + p);
      r.holes.push_back(20 + p);
      for (std::size_t h = 0; h < n; ++h) r.weights(p, h) = u(rng);
      r.weights.row(p) /= r.weights.row(p).sum();
    }
    const auto ref = oracle::min_cost_permutation(
        n, [&](std::size_t p, std::size_t h) { return -std::log(r.weights(p, h)); });
    const JointPairing got = propose_pairing(r);
    ASSERT_EQ(got.size(), n);
    double cost = 0.0;
    for (const auto& pr : got.pairs) cost -= std::log(r.weights(pr.peg - 10, pr.hole - 20));
    EXPECT_NEAR(cost, ref.cost, 1e-12);
  }
}

TEST(PartGraph, FeaturesAndMessagePassing) {
  const ShapeInstance s = make_peg_hole_pair(100);
  const PartGraph pg = build_part_graph(s, s.gt_poses);
  ASSERT_EQ(pg.graph.nodes.size(), 2u);
  ASSERT_EQ(pg.graph.edges.size(), 2u);
  const Vec3 c0 = apply_pose(s.gt_poses[0], s.parts[0]).centroid();
  EXPECT_LT((pg.graph.nodes[0].head<3>() - c0).norm(), 1e-12);
  EXPECT_EQ(pg.graph.nodes[0][6], 100.0);

  const FeatureGraph same = message_pass(pg.graph, identity_edge_update(),
                                         identity_node_update(), 3);
  EXPECT_EQ(same.nodes, pg.graph.nodes);
  EXPECT_EQ(same.edge_features, pg.graph.edge_features);

  // Node := mean of incident edges; both incident edges of a two-node graph
  // are opposite, so one round yields zero.
  const FeatureGraph mean = message_pass(
      pg.graph, identity_edge_update(),
      [](const Feature&, const Feature& m) { return m; }, 1);
  EXPECT_LT(mean.nodes[0].norm(), 1e-15);

  EXPECT_THROW(message_pass(pg.graph, identity_edge_update(),
                            [](const Feature& n, const Feature&) {
                              return Feature(n.array() / 0.0);
                            },
                            1),
               NumericError);
  EXPECT_THROW(message_pass(pg.graph, identity_edge_update(), identity_node_update(), 0),
               InvalidInput);
}

TEST(JointGraph, BipartitePegsFirst) {
  ShapeSpec spec;
  spec.points_per_part = 400;
  const ShapeInstance s = generate_shape(spec, 2);
  const JointGraph jg = build_joint_graph(s);
  EXPECT_EQ(jg.pegs.size() + jg.holes.size(), s.joints.size());
  EXPECT_EQ(jg.graph.edges.size(), jg.pegs.size() * jg.holes.size());
  for (const auto& e : jg.graph.edges) {
    EXPECT_LT(e.src, jg.pegs.size());
    EXPECT_GE(e.dst, jg.pegs.size());
  }
}

TEST(Aggregate, ElementWiseMaxPerPart) {
  const ShapeInstance s = make_peg_hole_pair(100);
  std::vector<Feature> signals(s.joints.size(), Feature(2));
  for (std::size_t k = 0; k < signals.size(); ++k) signals[k] << double(k), -double(k);
  const auto pooled = aggregate_joint_to_part(signals, s);
  for (std::size_t p = 0; p < s.num_parts(); ++p) {
    Feature expect = Feature::Constant(2, -INFINITY);
    for (std::size_t k : s.joints_of_part(p)) expect = expect.cwiseMax(signals[k]);
    EXPECT_EQ(pooled[p], expect);
  }
}
