#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "bsim/geometry.hpp"
#include "bsim/rng.hpp"

using namespace bsim;

namespace {

// Independent winding-number containment for cross-checking.
bool winding_contains(const Polygon& poly, const Point2& p) {
  int winding = 0;
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly.vertices[i];
    const Point2& b = poly.vertices[(i + 1) % n];
    const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y) {
      if (b.y > p.y && cross > 0) ++winding;
    } else {
      if (b.y <= p.y && cross < 0) --winding;
    }
  }
  return winding != 0;
}

Polygon random_convex_polygon(RngStream& rng) {
  // support points of a circle at sorted random angles
  const int n = 5 + static_cast<int>(rng.uniform(0, 6));
  std::vector<double> angles(n);
  for (double& a : angles) a = rng.uniform(0, 2 * M_PI);
  std::sort(angles.begin(), angles.end());
  const double cx = rng.uniform(-2, 2), cy = rng.uniform(-2, 2);
  const double r = rng.uniform(0.5, 3.0);
  Polygon poly;
  for (double a : angles)
    poly.vertices.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  return poly;
}

}  // namespace

TEST_CASE("euclidean distance") {
  CHECK(euclidean_distance({0, 0}, {0, 0}) == doctest::Approx(0.0));
  CHECK(euclidean_distance({0, 0}, {3, 4}) == doctest::Approx(5.0));
  CHECK(euclidean_distance({1, 1}, {1, 2}) == doctest::Approx(1.0));
  CHECK(euclidean_distance({3, 4}, {0, 0}) == euclidean_distance({0, 0}, {3, 4}));
}

TEST_CASE("triangle inequality on random triples") {
  RngStream rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Point2 a{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const Point2 b{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const Point2 c{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    CHECK(euclidean_distance(a, c) <=
          euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12);
  }
}

TEST_CASE("polygon containment basics") {
  const Polygon square = Polygon::rectangle(0, 0, 1, 1);
  CHECK(contains(square, {0.5, 0.5}));
  CHECK_FALSE(contains(square, {2, 2}));
  CHECK(contains(square, {0.5, 0.0}));  // on-edge counts as inside
  CHECK(contains(square, {0.0, 0.0}));  // vertex too
}

TEST_CASE("degenerate polygons are rejected") {
  Polygon line;
  line.vertices = {{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS_AS(contains(line, {0.5, 0.0}), std::invalid_argument);
  Polygon two;
  two.vertices = {{0, 0}, {1, 0}};
  CHECK_THROWS_AS(contains(two, {0.5, 0.0}), std::invalid_argument);
  Polygon repeated;
  repeated.vertices = {{0, 0}, {0, 0}, {1, 1}, {0, 1}};
  CHECK_THROWS_AS(repeated.validate(), std::invalid_argument);
}

TEST_CASE("containment agrees with a winding-number oracle") {
  RngStream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Polygon poly = random_convex_polygon(rng);
    for (int i = 0; i < 1000; ++i) {
      const Point2 p{rng.uniform(-6, 6), rng.uniform(-6, 6)};
      CHECK(contains(poly, p) == winding_contains(poly, p));
    }
  }
}

TEST_CASE("area fraction: full containment") {
  const Polygon big = Polygon::rectangle(-10, -10, 10, 10);
  const double frac = area_fraction({0, 0}, 1.0, big, 100000, 1);
  CHECK(frac > 0.999);
  CHECK(frac <= 1.0);
}

TEST_CASE("area fraction: half plane") {
  // center sits exactly on the left edge of a wide rectangle
  const Polygon half = Polygon::rectangle(0, -20, 20, 20);
  const double frac = area_fraction({0, 0}, 1.0, half, 100000, 2);
  CHECK(std::abs(frac - 0.5) < 0.02);
}

TEST_CASE("area fraction: disjoint region") {
  const Polygon far_box = Polygon::rectangle(10, 10, 12, 12);
  CHECK(area_fraction({0, 0}, 1.0, far_box, 10000, 3) == doctest::Approx(0.0));
}

TEST_CASE("area fraction: monotone under region inclusion") {
  const Polygon inner = Polygon::rectangle(-1, -1, 1, 1);
  const Polygon outer = Polygon::rectangle(-2, -2, 2, 2);
  const int n = 100000;
  const double fi = area_fraction({0.3, 0.2}, 1.0, inner, n, 4);
  const double fo = area_fraction({0.3, 0.2}, 1.0, outer, n, 4);
  const double stderr_bound = 2.0 * std::sqrt(0.25 / n);
  CHECK(fi <= fo + 2.0 * stderr_bound);
  CHECK(fi >= 0.0);
  CHECK(fo <= 1.0);
}

TEST_CASE("area fraction is deterministic given the seed") {
  const Polygon box = Polygon::rectangle(-1, -1, 1, 1);
  CHECK(area_fraction({0, 0}, 0.8, box, 20000, 9) ==
        area_fraction({0, 0}, 0.8, box, 20000, 9));
  CHECK(area_fraction({0, 0}, 0.8, box, 20000, 9) !=
        area_fraction({0, 0}, 0.8, box, 20000, 10));
}

TEST_CASE("area fraction input validation") {
  const Polygon box = Polygon::rectangle(-1, -1, 1, 1);
  CHECK_THROWS_AS(area_fraction({0, 0}, 0.0, box, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(area_fraction({0, 0}, 1.0, box, 0, 1), std::invalid_argument);
}
