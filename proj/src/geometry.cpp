#include "bsim/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "bsim/rng.hpp"

namespace bsim {

void Polygon::validate() const {
  if (vertices.size() < 3)
    throw std::invalid_argument("Polygon: needs at least 3 vertices");
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = vertices[i];
    const Point2& b = vertices[(i + 1) % n];
    if (!std::isfinite(a.x) || !std::isfinite(a.y))
      throw std::invalid_argument("Polygon: non-finite vertex coordinate");
    if (a.x == b.x && a.y == b.y)
      throw std::invalid_argument("Polygon: repeated consecutive vertex");
  }
  if (area() == 0.0) throw std::invalid_argument("Polygon: zero area (degenerate)");
}

double Polygon::area() const {
  double twice = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = vertices[i];
    const Point2& b = vertices[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(twice);
}

Polygon Polygon::rectangle(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

double euclidean_distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

namespace {

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  if (cross != 0.0) return false;
  const double dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
  const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
  return dot >= 0.0 && dot <= len2;
}

// Even-odd rule with on-edge counting as inside; assumes a valid polygon.
bool contains_impl(const Polygon& poly, const Point2& p) {
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(poly.vertices[i], poly.vertices[(i + 1) % n], p)) return true;
  }
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly.vertices[i];
    const Point2& b = poly.vertices[(i + 1) % n];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_int = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_int) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

bool contains(const Polygon& poly, const Point2& p) {
  poly.validate();
  return contains_impl(poly, p);
}

double area_fraction(const Point2& center, double eta, const Polygon& region,
                     int n_samples, std::uint64_t seed) {
  if (!(eta > 0.0)) throw std::invalid_argument("area_fraction: eta must be positive");
  if (n_samples < 1)
    throw std::invalid_argument("area_fraction: n_samples must be >= 1");
  region.validate();
  RngStream rng(seed);
  int kept = 0;
  for (int i = 0; i < n_samples; ++i) {
    const Point2 draw{center.x + eta * rng.normal(), center.y + eta * rng.normal()};
    if (contains_impl(region, draw)) ++kept;
  }
  return static_cast<double>(kept) / static_cast<double>(n_samples);
}

}  // namespace bsim
