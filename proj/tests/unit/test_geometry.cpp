#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ilnet/errors.hpp"
#include "ilnet/geometry/geometry.hpp"
#include "ilnet/numerics/rng.hpp"

using namespace ilnet;
using namespace ilnet::geo;

constexpr double kPi = std::numbers::pi;

TEST_CASE("angle normalization") {
  CHECK(normalize_angle(kPi) == kPi);
  CHECK(normalize_angle(-kPi) == kPi);
  CHECK(std::abs(normalize_angle(3.0 * kPi / 2.0) + kPi / 2.0) < 1e-15);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = normalize_angle(rng.uniform(-50.0, 50.0));
    CHECK(a > -kPi);
    CHECK(a <= kPi);
    CHECK(normalize_angle(a) == a);
  }
}

TEST_CASE("to_local_polar examples") {
  auto c = to_local_polar({2.0, 3.0}, {{2.0, 3.0}, 1.0});
  CHECK(c.dist == 0.0);
  CHECK(c.angle == 0.0);
  auto a = to_local_polar({1.0, 0.0}, {{0.0, 0.0}, 0.0});
  CHECK(a.dist == 1.0);
  CHECK(a.angle == 0.0);
  auto b = to_local_polar({1.0, 0.0}, {{0.0, 0.0}, kPi / 2.0});
  CHECK(b.dist == 1.0);
  CHECK(std::abs(b.angle + kPi / 2.0) < 1e-15);
}

TEST_CASE("relative_edge examples") {
  const auto same = relative_edge({{1.0, 1.0}, 0.3}, {{1.0, 1.0}, 0.3}, 0, 4);
  CHECK(same.dist == 0.0);
  CHECK(same.edge_dir == 0.0);
  CHECK(same.rel_heading == 0.0);
  CHECK(same.time_gap == 0);
  CHECK(same.attr == 4);
  const auto e = relative_edge({{0.0, 1.0}, kPi}, {{0.0, 0.0}, 0.0}, 2, 1);
  CHECK(std::abs(e.dist - 1.0) < 1e-15);
  CHECK(std::abs(e.edge_dir - kPi / 2.0) < 1e-15);
  CHECK(std::abs(e.rel_heading - kPi) < 1e-15);
  CHECK(e.time_gap == 2);
}

TEST_CASE("SE(2) invariance of relative features") {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Pose src{{rng.uniform(-50, 50), rng.uniform(-50, 50)}, rng.uniform(-kPi, kPi)};
    const Pose dst{{rng.uniform(-50, 50), rng.uniform(-50, 50)}, rng.uniform(-kPi, kPi)};
    const Rigid2 tf{rng.uniform(-kPi, kPi), {rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)}};
    const auto a = relative_edge(src, dst, 1, 0);
    const auto b = relative_edge(tf.apply(src), tf.apply(dst), 1, 0);
    worst = std::max(worst, std::abs(a.dist - b.dist));
    worst = std::max(worst, std::abs(normalize_angle(a.edge_dir - b.edge_dir)));
    worst = std::max(worst, std::abs(normalize_angle(a.rel_heading - b.rel_heading)));
    const auto pa = to_local_polar(src.position, dst);
    const auto pb = to_local_polar(tf.apply(src.position), tf.apply(dst));
    worst = std::max(worst, std::abs(pa.dist - pb.dist));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("radius_neighbors") {
  const std::vector<Point> pts{{0.0, 0.0}, {10.0, 0.0}, {3.0, 4.0}};
  CHECK(radius_neighbors(pts, {0.0, 0.0}, 1e-9) == std::vector<std::size_t>{0});
  CHECK(radius_neighbors(pts, {100.0, 100.0}, 5.0).empty());
  CHECK(radius_neighbors(pts, {0.0, 0.0}, 5.0) == std::vector<std::size_t>{0, 2});
  CHECK_THROWS_AS(radius_neighbors(pts, {0.0, 0.0}, 0.0), ArgumentError);
  Rng rng(3);
  std::vector<Point> cloud;
  for (int i = 0; i < 100; ++i) cloud.push_back({rng.uniform(-10, 10), rng.uniform(-10, 10)});
  for (int trial = 0; trial < 20; ++trial) {
    const Point c{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    std::vector<std::size_t> ref;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double dx = cloud[i].x - c.x, dy = cloud[i].y - c.y;
      if (dx * dx + dy * dy <= 25.0) ref.push_back(i);
    }
    CHECK(radius_neighbors(cloud, c, 5.0) == ref);
  }
}

TEST_CASE("polyline reference pose") {
  const std::vector<Point> line{{0.0, 0.0}, {1.0, 0.0}, {1.0, 3.0}};
  const auto p = polyline_reference_pose(line);
  CHECK(std::abs(p.position.x - 1.0) < 1e-15);
  CHECK(std::abs(p.position.y - 1.0) < 1e-15);
  CHECK(std::abs(p.heading - kPi / 2.0) < 1e-15);
  CHECK(polyline_length(line) == 4.0);
  CHECK_THROWS_AS(polyline_reference_pose(std::vector<Point>{{0.0, 0.0}}), DataError);
}

TEST_CASE("reference pose on a vertex uses the chord bisector") {
  const std::vector<Point> bent{{0.0, 0.0}, {1.0, 0.0}, {1.0 + std::sqrt(0.5), std::sqrt(0.5)}};
  const auto p = polyline_reference_pose(bent);
  CHECK(std::abs(p.position.x - 1.0) < 1e-15);
  CHECK(std::abs(p.heading - kPi / 8.0) < 1e-15);
  // Rotated copies agree, whichever way rounding moves the half length.
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const Rigid2 tf{rng.uniform(-kPi, kPi), {rng.uniform(-300, 300), rng.uniform(-300, 300)}};
    std::vector<Point> moved;
    for (const auto& q : bent) moved.push_back(tf.apply(q));
    CHECK(std::abs(normalize_angle(polyline_reference_pose(moved).heading - tf.angle) - kPi / 8.0) < 1e-12);
  }
}

TEST_CASE("local and global frames invert each other") {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Pose f{{rng.uniform(-20, 20), rng.uniform(-20, 20)}, rng.uniform(-kPi, kPi)};
    const Point p{rng.uniform(-20, 20), rng.uniform(-20, 20)};
    const Point back = to_global(to_local(p, f), f);
    CHECK(std::abs(back.x - p.x) < 1e-12);
    CHECK(std::abs(back.y - p.y) < 1e-12);
  }
}
