#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "asmforge/errors.hpp"
#include "asmforge/geometry.hpp"
#include "asmforge/kdtree.hpp"
#include "oracles.hpp"

using namespace asmforge;

namespace {

void expect_points_near(const std::vector<oracle::P3>& expected,
                        const PointCloud& actual, double tol) {
  ASSERT_EQ(expected.size(), actual.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(expected[i][k], actual[i][k], tol);
  }
}

}  // namespace

TEST(Pose, FromNormalizesSign) {
  const Quat q(-0.5, 0.5, -0.5, 0.5);
  const Pose p = Pose::from(q, Vec3(1, 2, 3));
  EXPECT_GE(p.rotation.w(), 0.0);
  EXPECT_DOUBLE_EQ(p.rotation.x(), -0.5);
}

TEST(Pose, RejectsNonUnitAndNonFinite) {
  EXPECT_THROW(Pose::from(Quat(1.0, 0.1, 0.0, 0.0), Vec3::Zero()), InvalidPose);
  EXPECT_THROW(Pose::from(Quat(1, 0, 0, 0), Vec3(NAN, 0, 0)), InvalidPose);
  EXPECT_NO_THROW(Pose::from(Quat(1.0 + 1e-12, 0, 0, 0), Vec3::Zero()));
}

TEST(Pose, ApplyMatchesQuaternionFormula) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Pose pose = oracle::random_pose(rng);
    const PointCloud c = oracle::random_cloud(rng, 30);
    expect_points_near(oracle::posed(pose, c), apply_pose(pose, c), 1e-12);
  }
}

TEST(Pose, QuarterTurnAboutZ) {
  const Pose p = Pose::from(quat_from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2),
                            Vec3(0, 0, 1));
  const Vec3 y = p.apply(Vec3(1, 0, 0));
  EXPECT_NEAR(y.x(), 0.0, 1e-15);
  EXPECT_NEAR(y.y(), 1.0, 1e-15);
  EXPECT_NEAR(y.z(), 1.0, 1e-15);
}

TEST(Pose, InverseAndRigidCompose) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const Pose a = oracle::random_pose(rng);
    const Pose b = oracle::random_pose(rng);
    const Vec3 x(0.3, -0.2, 0.7);
    EXPECT_LT((rigid_compose(a, b).apply(x) - a.apply(b.apply(x))).norm(), 1e-12);
    EXPECT_LT((a.inverse().apply(a.apply(x)) - x).norm(), 1e-12);
    EXPECT_GE(rigid_compose(a, b).rotation.w(), 0.0);
  }
}

TEST(Pose, ComposePoseIsComponentWise) {
  std::mt19937_64 rng(9);
  const Pose prev = oracle::random_pose(rng);
  const Pose d = oracle::random_pose(rng);
  const Pose next = compose_pose({d.rotation, d.translation}, prev);
  EXPECT_LT((next.translation - (d.translation + prev.translation)).norm(), 1e-15);
  const Vec3 x(1, 2, 3);
  EXPECT_LT((next.rotation * x - d.rotation * (prev.rotation * x)).norm(), 1e-12);
  EXPECT_TRUE(is_unit(next.rotation));
  EXPECT_EQ(compose_pose(PoseDelta::identity(), prev), prev);
  EXPECT_THROW(compose_pose({Quat(2, 0, 0, 0), Vec3::Zero()}, prev), InvalidPose);
}

TEST(PointCloud, RejectsNonFinitePoints) {
  EXPECT_THROW(PointCloud({Vec3(0, 0, 0), Vec3(INFINITY, 0, 0)}), InvalidInput);
  EXPECT_THROW(PointCloud().centroid(), InvalidInput);
  const PointCloud c({Vec3(0, 0, 0), Vec3(2, 4, 6)});
  EXPECT_EQ(c.centroid(), Vec3(1, 2, 3));
  const std::vector<std::size_t> bad{5};
  EXPECT_THROW(c.subset(bad), InvalidInput);
}

TEST(NearestNeighbors, KdTreeMatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(1, 400);
  for (int t = 0; t < 50; ++t) {
    const PointCloud targets = oracle::random_cloud(rng, size(rng));
    const PointCloud queries = oracle::random_cloud(rng, 50, 1.5);
    const auto got = nearest_neighbors(queries.view(), targets.view());
    const auto ref = oracle::to_p3(targets);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto [idx, d] = oracle::nearest(oracle::to_p3(queries[i]), ref);
      EXPECT_EQ(got[i].index, idx);
      EXPECT_EQ(got[i].sq_dist, d);
    }
  }
}

TEST(NearestNeighbors, TiesGoToLowestIndex) {
  // Grid with many duplicates and equidistant targets.
  std::vector<Vec3> pts;
  for (int r = 0; r < 3; ++r) {
    for (int i = -2; i <= 2; ++i) {
      for (int j = -2; j <= 2; ++j) pts.emplace_back(i, j, 0);
    }
  }
  const KdTree tree(pts);
  for (const Vec3& q : {Vec3(0.5, 0.5, 0), Vec3(0, 0, 1), Vec3(-0.5, 2, 0)}) {
    const auto [idx, d] = oracle::nearest(oracle::to_p3(q), oracle::to_p3(PointCloud(pts)));
    const Neighbor n = tree.nearest(q);
    EXPECT_EQ(n.index, idx);
    EXPECT_EQ(n.sq_dist, d);
  }
}

TEST(Chamfer, MatchesOracleAndBruteForce) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const PointCloud a = oracle::random_cloud(rng, 10 + t * 7);
    const PointCloud b = oracle::random_cloud(rng, 200 - t * 3);
    const double ref = oracle::chamfer(a, b);
    EXPECT_NEAR(chamfer_distance(a, b), ref, 1e-12 * ref);
    EXPECT_EQ(chamfer_distance(a, b), chamfer_distance_brute(a.view(), b.view()));
    EXPECT_NEAR(chamfer_distance(a, b), chamfer_distance(b, a), 1e-12 * ref);
  }
}

TEST(Chamfer, HandValues) {
  const PointCloud a({Vec3(0, 0, 0)});
  const PointCloud b({Vec3(1, 0, 0), Vec3(0, 2, 0)});
  // a -> b: 1; b -> a: 1 + 4.
  EXPECT_DOUBLE_EQ(chamfer_distance(a, b), 6.0);
  EXPECT_EQ(chamfer_distance(b, b), 0.0);
  EXPECT_THROW(chamfer_distance(a, PointCloud()), InvalidInput);
}

TEST(FurthestPointSample, GreedyMaxMinProperty) {
  std::mt19937_64 rng(17);
  const PointCloud c = oracle::random_cloud(rng, 300);
  const auto idx = furthest_point_sample_from(c, 40, 7);
  ASSERT_EQ(idx.size(), 40u);
  EXPECT_EQ(idx[0], 7u);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 40u);
  const auto pts = oracle::to_p3(c);
  for (std::size_t s = 1; s < idx.size(); ++s) {
    std::vector<oracle::P3> chosen;
    for (std::size_t r = 0; r < s; ++r) chosen.push_back(pts[idx[r]]);
    const double picked = oracle::nearest(pts[idx[s]], chosen).second;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_LE(oracle::nearest(pts[i], chosen).second, picked);
    }
  }
  EXPECT_EQ(furthest_point_sample(c, 20, 4), furthest_point_sample(c, 20, 4));
  EXPECT_THROW(furthest_point_sample(c, 301, 0), InvalidInput);
}

TEST(Canonicalize, CentersAndDiagonalizes) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> box;
  for (int i = 0; i < 500; ++i) box.emplace_back(0.6 * u(rng), 0.3 * u(rng), 0.1 * u(rng));
  const Pose pose = oracle::random_pose(rng);
  const PointCloud input = apply_pose(pose, PointCloud(box));
  const Canonicalization c = canonicalize(input);
  EXPECT_FALSE(c.degenerate);
  EXPECT_LT(c.cloud.centroid().norm(), 1e-12);
  Mat3 cov = Mat3::Zero();
  for (const auto& p : c.cloud) cov += p * p.transpose();
  EXPECT_LT(std::abs(cov(0, 1)) + std::abs(cov(0, 2)) + std::abs(cov(1, 2)),
            1e-9 * cov.trace());
  EXPECT_GT(cov(0, 0), cov(1, 1));
  EXPECT_GT(cov(1, 1), cov(2, 2));
  expect_points_near(oracle::posed(c.pose, c.cloud), input, 1e-12);
  // Re-canonicalizing a canonical cloud is the identity.
  const Canonicalization again = canonicalize(c.cloud);
  EXPECT_LT(oracle::rotation_angle(again.pose.rotation, Quat::Identity()), 1e-6);
}

TEST(Canonicalize, FlagsSymmetricClouds) {
  std::vector<Vec3> cube;
  for (int i = 0; i < 8; ++i) cube.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  EXPECT_TRUE(canonicalize(PointCloud(cube)).degenerate);
  EXPECT_TRUE(canonicalize(PointCloud({Vec3(0, 0, 0), Vec3(1, 0, 0)})).degenerate);
}
