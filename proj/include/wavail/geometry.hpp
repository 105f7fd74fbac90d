#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wavail/error.hpp"
#include "wavail/rng.hpp"

namespace wavail {

using ApIndex = std::size_t;

struct Point2D {
  double x = 0.0;  // meters
  double y = 0.0;  // meters

  friend constexpr Point2D operator+(Point2D a, Point2D b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2D operator-(Point2D a, Point2D b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2D operator*(double s, Point2D p) noexcept { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point2D, Point2D) noexcept = default;
};

constexpr double dot(Point2D a, Point2D b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2D a, Point2D b) noexcept { return a.x * b.y - a.y * b.x; }
constexpr double squared_distance(Point2D a, Point2D b) noexcept { return dot(a - b, a - b); }
inline double distance(Point2D a, Point2D b) noexcept { return std::sqrt(squared_distance(a, b)); }
inline bool is_finite(Point2D p) noexcept { return std::isfinite(p.x) && std::isfinite(p.y); }

struct BoundingBox {
  double width = 10.0;   // meters
  double height = 10.0;  // meters
  Point2D origin{};

  double area() const noexcept { return width * height; }
  double diagonal() const noexcept { return std::hypot(width, height); }
  Point2D max_corner() const noexcept { return {origin.x + width, origin.y + height}; }

  bool contains(Point2D p) const noexcept {
    return p.x >= origin.x && p.x <= origin.x + width && p.y >= origin.y && p.y <= origin.y + height;
  }

  /// Corners in counter-clockwise order starting at the origin.
  std::vector<Point2D> corners() const {
    const Point2D hi = max_corner();
    return {origin, {hi.x, origin.y}, hi, {origin.x, hi.y}};
  }

  void validate() const {
    if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height))
      throw InvalidArgument(fmt::format("bounding box must have positive finite size, got {}x{}", width, height));
    if (!is_finite(origin)) throw InvalidArgument("bounding box origin must be finite");
  }
};

/// One spatial realization of the AP set together with its pathloss exponent.
struct Deployment {
  std::vector<Point2D> aps;
  BoundingBox box;
  double eta = 4.0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return aps.size(); }

  /// Throws InvalidArgument unless every invariant holds: N >= 1, eta > 2,
  /// all points finite, inside the box and pairwise distinct.
  void validate() const {
    box.validate();
    if (aps.empty()) throw InvalidArgument("deployment needs at least one AP");
    if (!(eta > 2.0) || !std::isfinite(eta))
      throw InvalidArgument(fmt::format("pathloss exponent must exceed 2, got {}", eta));
    for (std::size_t i = 0; i < aps.size(); ++i) {
      if (!is_finite(aps[i])) throw InvalidArgument(fmt::format("AP {} has non-finite coordinates", i));
      if (!box.contains(aps[i])) throw InvalidArgument(fmt::format("AP {} lies outside the bounding box", i));
    }
    for (std::size_t i = 0; i < aps.size(); ++i)
      for (std::size_t k = i + 1; k < aps.size(); ++k)
        if (aps[i] == aps[k]) throw InvalidArgument(fmt::format("APs {} and {} coincide", i, k));
  }
};

struct VoronoiCell {
  ApIndex ap_index = 0;
  std::vector<Point2D> vertices;  // counter-clockwise
  double area = 0.0;
};

/// Places `n` APs i.i.d. uniformly over `box` using the placement stream of `seed`.
inline Deployment generate_deployment(std::size_t n, const BoundingBox& box, double eta, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("generate_deployment: n must be at least 1");
  box.validate();
  RandomStream rng(seed, Stream::placement);
  Deployment dep{.aps = {}, .box = box, .eta = eta, .seed = seed};
  dep.aps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = box.origin.x + box.width * rng.uniform();
    const double y = box.origin.y + box.height * rng.uniform();
    dep.aps.push_back({x, y});
  }
  dep.validate();
  return dep;
}

/// Absolute polygon area via the shoelace sum; orientation independent.
inline double shoelace_area(std::span<const Point2D> vertices) {
  if (vertices.size() < 3) throw InvalidArgument("shoelace_area: need at least 3 vertices");
  // Shift to the first vertex to limit cancellation for polygons far from the origin.
  const Point2D ref = vertices.front();
  double twice = 0.0;
  for (std::size_t l = 0; l < vertices.size(); ++l) {
    const Point2D a = vertices[l] - ref;
    const Point2D b = vertices[(l + 1) % vertices.size()] - ref;
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(twice);
}

/// Index of the closest AP; ties go to the lowest index.
inline ApIndex nearest_ap(Point2D z, const Deployment& dep) {
  ApIndex best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (ApIndex k = 0; k < dep.aps.size(); ++k) {
    const double d2 = squared_distance(z, dep.aps[k]);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return best;
}

namespace detail {

/// Clips a convex polygon to the half-plane {z : dot(z - anchor, normal) <= 0}.
inline std::vector<Point2D> clip_half_plane(const std::vector<Point2D>& poly, Point2D anchor, Point2D normal) {
  std::vector<Point2D> out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 1);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2D a = poly[i];
    const Point2D b = poly[(i + 1) % poly.size()];
    const double sa = dot(a - anchor, normal);
    const double sb = dot(b - anchor, normal);
    if (sa <= 0.0) out.push_back(a);
    if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
      const double t = sa / (sa - sb);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

}  // namespace detail

/// Voronoi cell of AP `j`, clipped to the deployment box.
inline VoronoiCell voronoi_cell(const Deployment& dep, ApIndex j) {
  std::vector<Point2D> poly = dep.box.corners();
  const Point2D pj = dep.aps[j];
  for (ApIndex k = 0; k < dep.aps.size() && !poly.empty(); ++k) {
    if (k == j) continue;
    const Point2D pk = dep.aps[k];
    poly = detail::clip_half_plane(poly, 0.5 * (pj + pk), pk - pj);
  }
  VoronoiCell cell{.ap_index = j, .vertices = std::move(poly), .area = 0.0};
  cell.area = cell.vertices.size() >= 3 ? shoelace_area(cell.vertices) : 0.0;
  return cell;
}

/// Bounded Voronoi tessellation: one box-clipped cell per AP, in AP order.
inline std::vector<VoronoiCell> voronoi_tessellate(const Deployment& dep) {
  dep.validate();
  std::vector<VoronoiCell> cells;
  cells.reserve(dep.size());
  for (ApIndex j = 0; j < dep.size(); ++j) cells.push_back(voronoi_cell(dep, j));
  return cells;
}

/// Signed distance-like test for a counter-clockwise convex polygon:
/// true when `z` is inside by at least `margin` from every edge line.
inline bool strictly_inside_convex(std::span<const Point2D> ccw, Point2D z, double margin = 0.0) {
  if (ccw.size() < 3) return false;
  for (std::size_t i = 0; i < ccw.size(); ++i) {
    const Point2D a = ccw[i];
    const Point2D edge = ccw[(i + 1) % ccw.size()] - a;
    const double len = std::hypot(edge.x, edge.y);
    if (len == 0.0) continue;
    if (cross(edge, z - a) / len <= margin) return false;
  }
  return true;
}

/// Deployment CSV: header `ap_index,x,y`, 15 significant digits.
inline void write_deployment_csv(std::ostream& os, const Deployment& dep) {
  os << "ap_index,x,y\n";
  for (ApIndex i = 0; i < dep.aps.size(); ++i) os << fmt::format("{},{:.15g},{:.15g}\n", i, dep.aps[i].x, dep.aps[i].y);
}

inline Deployment read_deployment_csv(std::istream& is, const BoundingBox& box, double eta) {
  std::string line;
  if (!std::getline(is, line) || line != "ap_index,x,y")
    throw InvalidArgument("deployment CSV must start with header 'ap_index,x,y'");
  Deployment dep{.aps = {}, .box = box, .eta = eta, .seed = 0};
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string idx, xs, ys;
    if (!std::getline(row, idx, ',') || !std::getline(row, xs, ',') || !std::getline(row, ys))
      throw InvalidArgument("malformed deployment CSV row: " + line);
    std::size_t index = 0;
    Point2D p;
    try {
      index = std::stoul(idx);
      p = {std::stod(xs), std::stod(ys)};
    } catch (const std::logic_error&) {
      throw InvalidArgument("malformed deployment CSV row: " + line);
    }
    if (index != dep.aps.size()) throw InvalidArgument("deployment CSV rows must be numbered 0..N-1 in order");
    dep.aps.push_back(p);
  }
  dep.validate();
  return dep;
}

}  // namespace wavail
