#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "wavail/error.hpp"
#include "wavail/geometry.hpp"
#include "wavail/parallel.hpp"
#include "wavail/radio.hpp"
#include "wavail/rng.hpp"

namespace wavail {

/// Cell-centered raster over a bounding box. Row 0 is the bottom row.
struct RasterGrid {
  BoundingBox box;
  std::size_t nx = 0;
  std::size_t ny = 0;
  double cell_w = 0.0;
  double cell_h = 0.0;

  std::size_t size() const noexcept { return nx * ny; }
  double cell_area() const noexcept { return cell_w * cell_h; }
  Point2D center(std::size_t ix, std::size_t iy) const noexcept {
    return {box.origin.x + (static_cast<double>(ix) + 0.5) * cell_w,
            box.origin.y + (static_cast<double>(iy) + 0.5) * cell_h};
  }
};

/// Raster with cells of (nominally) `resolution` meters. The cell count per
/// axis is width/resolution rounded, so the raster tiles the box exactly.
inline RasterGrid make_raster_grid(const BoundingBox& box, double resolution) {
  box.validate();
  if (!(resolution > 0.0)) throw InvalidArgument("resolution must be positive");
  if (resolution > std::min(box.width, box.height) / 4.0)
    throw InvalidArgument(fmt::format("resolution {} m is coarser than a quarter of the box", resolution));
  RasterGrid g{.box = box};
  g.nx = static_cast<std::size_t>(std::llround(box.width / resolution));
  g.ny = static_cast<std::size_t>(std::llround(box.height / resolution));
  g.cell_w = box.width / static_cast<double>(g.nx);
  g.cell_h = box.height / static_cast<double>(g.ny);
  return g;
}

struct AvailabilityRegion {
  ApIndex ap_index = 0;
  double grid_resolution = 0.0;
  RasterGrid grid;
  std::vector<std::uint8_t> membership;  // row-major, iy * nx + ix
  std::size_t member_count = 0;
  double area = 0.0;
  std::vector<std::vector<Point2D>> boundary_polylines;

  bool member(std::size_t ix, std::size_t iy) const { return membership[iy * grid.nx + ix] != 0; }
};

struct SpatialAvailability {
  ApIndex ap_index = 0;
  double a_s = 0.0;
  double area_d = 0.0;
  double area_v = 0.0;
};

namespace detail {

/// Coverage evaluator for one serving AP, reused across raster cells.
///
/// Interferers are visited nearest-to-the-serving-AP first, and evaluation
/// stops once the running product falls below `floor`; every factor is at
/// most one, so the product can only shrink from there.
class CoverageEvaluator {
 public:
  CoverageEvaluator(const Deployment& dep, ApIndex serving) : serving_(dep.aps[serving]), half_eta_(0.5 * dep.eta) {
    for (ApIndex k = 0; k < dep.size(); ++k)
      if (k != serving) interferers_.push_back(dep.aps[k]);
    std::sort(interferers_.begin(), interferers_.end(), [&](Point2D a, Point2D b) {
      return squared_distance(a, serving_) < squared_distance(b, serving_);
    });
    ratios_.resize(interferers_.size());
  }

  /// Distance from the serving AP to its nearest interferer (inf if none).
  double nearest_interferer_distance() const {
    return interferers_.empty() ? std::numeric_limits<double>::infinity() : distance(interferers_.front(), serving_);
  }

  Point2D serving() const noexcept { return serving_; }

  /// Writes P[SIR >= theta] for each theta (ascending) into `out`. Entries
  /// that are certainly below `floor` are written as 0.
  void evaluate(Point2D z, std::span<const double> thetas_ascending, double floor, std::span<double> out) {
    const double d2_serv = squared_distance(z, serving_);
    computed_ = 0;
    bool dead = false;
    for (std::size_t t = 0; t < thetas_ascending.size(); ++t) {
      if (dead) {
        out[t] = 0.0;
        continue;
      }
      const double theta = thetas_ascending[t];
      double p = 1.0;
      for (std::size_t k = 0; k < interferers_.size(); ++k) {
        p /= 1.0 + theta * ratio(k, z, d2_serv);
        if (p < floor) break;
      }
      if (p < floor) {
        dead = true;
        p = 0.0;
      }
      out[t] = p;
    }
  }

 private:
  double ratio(std::size_t k, Point2D z, double d2_serv) {
    while (computed_ <= k) {
      const double d2 = squared_distance(z, interferers_[computed_]);
      ratios_[computed_] = d2 == 0.0 ? std::numeric_limits<double>::infinity()
                                     : distance_ratio_power(d2_serv, d2, half_eta_);
      ++computed_;
    }
    return ratios_[k];
  }

  Point2D serving_;
  double half_eta_;
  std::vector<Point2D> interferers_;
  std::vector<double> ratios_;
  std::size_t computed_ = 0;
};

/// Radius around the serving AP outside which coverage < alpha for every
/// theta >= theta_min. Uses only the interferer nearest to the AP:
/// its factor alone is >= alpha iff d_serv <= c * d_k with
/// c = ((1/alpha - 1)/theta)^(1/eta), and d_k <= d_serv + D.
inline double pruning_radius(double nearest_interferer, double theta_min, double alpha, double eta) {
  if (!std::isfinite(nearest_interferer)) return std::numeric_limits<double>::infinity();
  const double c = std::pow((1.0 / alpha - 1.0) / theta_min, 1.0 / eta);
  if (!(c < 1.0)) return std::numeric_limits<double>::infinity();
  return c * nearest_interferer / (1.0 - c) * (1.0 + 1e-9) + 1e-12;
}

/// Visits every raster cell whose center may be available and hands the
/// per-theta coverage values to `sink(cell_index, coverages)`. Cells not
/// visited are unavailable for all (theta, alpha) with alpha >= alpha_min.
template <typename Sink>
void scan_raster(const Deployment& dep, ApIndex serving, const RasterGrid& grid,
                 std::span<const double> thetas_ascending, double alpha_min, Sink&& sink) {
  CoverageEvaluator eval(dep, serving);
  const double r = pruning_radius(eval.nearest_interferer_distance(), thetas_ascending.front(), alpha_min, dep.eta);
  const Point2D ap = eval.serving();
  std::size_t iy_lo = 0, iy_hi = grid.ny, ix_lo = 0, ix_hi = grid.nx;
  if (std::isfinite(r)) {
    auto index_range = [](double lo, double hi, double origin, double cell, std::size_t n) {
      const double a = std::floor((lo - origin) / cell - 0.5);
      const double b = std::ceil((hi - origin) / cell - 0.5) + 1.0;
      const auto first = static_cast<std::size_t>(std::clamp(a, 0.0, static_cast<double>(n)));
      const auto last = static_cast<std::size_t>(std::clamp(b, 0.0, static_cast<double>(n)));
      return std::pair{first, last};
    };
    std::tie(ix_lo, ix_hi) = index_range(ap.x - r, ap.x + r, grid.box.origin.x, grid.cell_w, grid.nx);
    std::tie(iy_lo, iy_hi) = index_range(ap.y - r, ap.y + r, grid.box.origin.y, grid.cell_h, grid.ny);
  }
  const double r2 = r * r;
  std::vector<double> cov(thetas_ascending.size());
  for (std::size_t iy = iy_lo; iy < iy_hi; ++iy) {
    for (std::size_t ix = ix_lo; ix < ix_hi; ++ix) {
      const Point2D z = grid.center(ix, iy);
      if (squared_distance(z, ap) > r2) continue;
      eval.evaluate(z, thetas_ascending, alpha_min, cov);
      sink(iy * grid.nx + ix, std::span<const double>(cov));
    }
  }
}

}  // namespace detail

/// Rasterized (theta, alpha)-available region of AP `ap_index` over the whole
/// box, membership evaluated at cell centers.
inline AvailabilityRegion available_region(ApIndex ap_index, const Deployment& dep, const RadioParams& params,
                                           double resolution) {
  dep.validate();
  params.validate();
  if (ap_index >= dep.size()) throw InvalidArgument("available_region: AP index out of range");
  AvailabilityRegion region;
  region.ap_index = ap_index;
  region.grid_resolution = resolution;
  region.grid = make_raster_grid(dep.box, resolution);
  region.membership.assign(region.grid.size(), 0);
  const double theta[1] = {params.theta_linear()};
  detail::scan_raster(dep, ap_index, region.grid, theta, params.alpha,
                      [&](std::size_t cell, std::span<const double> cov) {
                        if (cov[0] >= params.alpha) {
                          region.membership[cell] = 1;
                          ++region.member_count;
                        }
                      });
  region.area = static_cast<double>(region.member_count) * region.grid.cell_area();
  return region;
}

inline SpatialAvailability spatial_availability(ApIndex ap_index, const Deployment& dep, const RadioParams& params,
                                                double resolution) {
  const AvailabilityRegion region = available_region(ap_index, dep, params, resolution);
  const VoronoiCell cell = voronoi_cell(dep, ap_index);
  return {.ap_index = ap_index, .a_s = std::min(1.0, region.area / cell.area), .area_d = region.area,
          .area_v = cell.area};
}

/// A_s of one AP for every (theta, alpha) pair in a single raster pass.
/// Result is indexed [theta][alpha] in the order given.
inline std::vector<std::vector<double>> spatial_availability_grid(ApIndex ap_index, const Deployment& dep,
                                                                  std::span<const double> thetas_db,
                                                                  std::span<const double> alphas,
                                                                  double resolution) {
  if (thetas_db.empty() || alphas.empty()) throw InvalidArgument("spatial_availability_grid: empty parameter list");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument(fmt::format("alpha must lie in (0,1), got {}", a));
  const RasterGrid grid = make_raster_grid(dep.box, resolution);

  std::vector<std::size_t> order(thetas_db.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return thetas_db[a] < thetas_db[b]; });
  std::vector<double> thetas_sorted;
  for (std::size_t i : order) thetas_sorted.push_back(db_to_linear(thetas_db[i]));
  const double alpha_min = *std::min_element(alphas.begin(), alphas.end());

  std::vector<std::vector<std::size_t>> counts(thetas_db.size(), std::vector<std::size_t>(alphas.size(), 0));
  detail::scan_raster(dep, ap_index, grid, thetas_sorted, alpha_min, [&](std::size_t, std::span<const double> cov) {
    for (std::size_t t = 0; t < cov.size(); ++t) {
      if (cov[t] < alpha_min) break;
      for (std::size_t a = 0; a < alphas.size(); ++a)
        if (cov[t] >= alphas[a]) ++counts[order[t]][a];
    }
  });

  const double area_v = voronoi_cell(dep, ap_index).area;
  std::vector<std::vector<double>> out(thetas_db.size(), std::vector<double>(alphas.size()));
  for (std::size_t t = 0; t < thetas_db.size(); ++t)
    for (std::size_t a = 0; a < alphas.size(); ++a)
      out[t][a] = std::min(1.0, static_cast<double>(counts[t][a]) * grid.cell_area() / area_v);
  return out;
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Seed of realization `index` of a sweep seeded with `seed`.
constexpr std::uint64_t realization_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(index + 0x5bd1e995ULL));
}

/// AP chosen uniformly for a realization, from a stream independent of placement.
inline ApIndex selected_ap(std::uint64_t seed, std::uint64_t index, std::size_t n_aps) {
  RandomStream rng(seed, Stream::selection, index);
  return static_cast<ApIndex>(rng.below(n_aps));
}

struct SweepRequest {
  std::size_t n_aps = 10;
  BoundingBox box{};
  double eta = 4.0;
  std::vector<double> thetas_db{0.0};
  std::vector<double> alphas{0.8};
  std::size_t n_realizations = 10000;
  double resolution = 0.05;
  std::uint64_t seed = 1;
  std::size_t workers = 0;  // 0 = worker_count()
};

/// Deployment-averaged A_s over a (theta, alpha) grid, indexed [theta][alpha].
/// Each realization draws a fresh deployment and evaluates one uniformly
/// chosen AP; all grid points share the same realizations.
inline std::vector<std::vector<MeanEstimate>> mean_spatial_availability_grid(const SweepRequest& req) {
  if (req.n_realizations == 0) throw InvalidArgument("n_realizations must be at least 1");
  if (!(req.eta > 2.0)) throw InvalidArgument("eta must exceed 2");
  make_raster_grid(req.box, req.resolution);

  auto per_realization = parallel_map(
      req.n_realizations,
      [&](std::size_t r) {
        const Deployment dep = generate_deployment(req.n_aps, req.box, req.eta, realization_seed(req.seed, r));
        const ApIndex ap = selected_ap(req.seed, r, req.n_aps);
        return spatial_availability_grid(ap, dep, req.thetas_db, req.alphas, req.resolution);
      },
      req.workers == 0 ? worker_count() : req.workers);

  const double n = static_cast<double>(req.n_realizations);
  std::vector<std::vector<MeanEstimate>> out(req.thetas_db.size(), std::vector<MeanEstimate>(req.alphas.size()));
  for (std::size_t t = 0; t < req.thetas_db.size(); ++t) {
    for (std::size_t a = 0; a < req.alphas.size(); ++a) {
      double sum = 0.0;
      for (const auto& g : per_realization) sum += g[t][a];
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& g : per_realization) ss += (g[t][a] - mean) * (g[t][a] - mean);
      const double se = req.n_realizations > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
      out[t][a] = {mean, se};
    }
  }
  return out;
}

/// Sample mean and standard error of A_s for a single (theta, alpha).
inline MeanEstimate mean_spatial_availability(std::size_t n_aps, const BoundingBox& box, const RadioParams& params,
                                              std::size_t n_realizations, double resolution, std::uint64_t seed,
                                              std::size_t workers = 0) {
  params.validate();
  SweepRequest req{.n_aps = n_aps, .box = box, .eta = params.eta, .thetas_db = {params.theta_db},
                   .alphas = {params.alpha}, .n_realizations = n_realizations, .resolution = resolution,
                   .seed = seed, .workers = workers};
  return mean_spatial_availability_grid(req)[0][0];
}

struct BoundaryPoint {
  double angle_rad = 0.0;
  Point2D point;
};

/// Distance from `p` (inside the box) to the box boundary along direction `u`.
inline double ray_exit_distance(const BoundingBox& box, Point2D p, Point2D u) {
  double t = std::numeric_limits<double>::infinity();
  const Point2D hi = box.max_corner();
  if (u.x > 0.0) t = std::min(t, (hi.x - p.x) / u.x);
  if (u.x < 0.0) t = std::min(t, (box.origin.x - p.x) / u.x);
  if (u.y > 0.0) t = std::min(t, (hi.y - p.y) / u.y);
  if (u.y < 0.0) t = std::min(t, (box.origin.y - p.y) / u.y);
  return std::max(0.0, t);
}

/// Boundary of the available region traced along `n_rays` equally spaced rays
/// from the AP, each located by bisection on coverage = alpha.
///
/// Only exact for star-shaped regions. Rays whose first `tol` meters already
/// fail the test contribute no point; rays that stay available up to the box
/// edge are capped there.
inline std::vector<BoundaryPoint> region_boundary_radial(ApIndex ap_index, const Deployment& dep,
                                                         const RadioParams& params, std::size_t n_rays, double tol) {
  dep.validate();
  params.validate();
  if (n_rays < 8) throw InvalidArgument("region_boundary_radial: need at least 8 rays");
  if (!(tol > 0.0)) throw InvalidArgument("region_boundary_radial: tolerance must be positive");
  if (ap_index >= dep.size()) throw InvalidArgument("region_boundary_radial: AP index out of range");

  const double theta = params.theta_linear();
  const Point2D ap = dep.aps[ap_index];
  std::vector<BoundaryPoint> out;
  out.reserve(n_rays);
  for (std::size_t i = 0; i < n_rays; ++i) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_rays);
    const Point2D u{std::cos(phi), std::sin(phi)};
    auto available_at = [&](double r) {
      return coverage_probability(ap + r * u, ap_index, dep, theta) >= params.alpha;
    };
    const double r_max = std::min(dep.box.diagonal(), ray_exit_distance(dep.box, ap, u));
    double r = 0.0;
    if (available_at(r_max)) {
      r = r_max;
    } else if (r_max <= tol || !available_at(tol)) {
      continue;
    } else {
      double lo = tol, hi = r_max;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (available_at(mid) ? lo : hi) = mid;
      }
      r = lo;
    }
    out.push_back({phi, ap + r * u});
  }
  return out;
}

/// Plain PBM (P1), top row first, wrapped to 70 characters per line.
inline void write_region_pbm(std::ostream& os, const AvailabilityRegion& region) {
  os << "P1\n" << region.grid.nx << ' ' << region.grid.ny << '\n';
  for (std::size_t row = 0; row < region.grid.ny; ++row) {
    const std::size_t iy = region.grid.ny - 1 - row;
    std::size_t col = 0;
    for (std::size_t ix = 0; ix < region.grid.nx; ++ix) {
      if (col + 2 > 70) {
        os << '\n';
        col = 0;
      } else if (col > 0) {
        os << ' ';
        ++col;
      }
      os << (region.member(ix, iy) ? '1' : '0');
      ++col;
    }
    os << '\n';
  }
}

/// CSV `x,y,member` over cell centers, bottom row first.
inline void write_region_csv(std::ostream& os, const AvailabilityRegion& region) {
  os << "x,y,member\n";
  for (std::size_t iy = 0; iy < region.grid.ny; ++iy)
    for (std::size_t ix = 0; ix < region.grid.nx; ++ix) {
      const Point2D c = region.grid.center(ix, iy);
      os << fmt::format("{:.12g},{:.12g},{}\n", c.x, c.y, region.member(ix, iy) ? 1 : 0);
    }
}

inline void write_boundary_csv(std::ostream& os, std::span<const BoundaryPoint> boundary) {
  os << "angle_rad,x,y\n";
  for (const auto& b : boundary) os << fmt::format("{:.12g},{:.12g},{:.12g}\n", b.angle_rad, b.point.x, b.point.y);
}

}  // namespace wavail
