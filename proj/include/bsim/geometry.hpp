#pragma once

#include <cstdint>
#include <vector>

namespace bsim {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Simple closed ring (last vertex connects back to the first), no holes.
struct Polygon {
  std::vector<Point2> vertices;

  // Throws std::invalid_argument when the ring has fewer than 3 vertices,
  // repeats consecutive vertices, contains non-finite coordinates, or has
  // zero area.
  void validate() const;

  double area() const;  // unsigned shoelace area

  static Polygon rectangle(double x0, double y0, double x1, double y1);
};

double euclidean_distance(const Point2& a, const Point2& b);

// Even-odd (ray crossing) containment; points exactly on an edge count as
// inside. Throws on a degenerate polygon.
bool contains(const Polygon& poly, const Point2& p);

// Fraction of n_samples draws from N(center, eta^2 I) that land inside
// region. Deterministic given seed.
double area_fraction(const Point2& center, double eta, const Polygon& region,
                     int n_samples, std::uint64_t seed);

}  // namespace bsim
