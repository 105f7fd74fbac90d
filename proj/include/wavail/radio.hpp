#pragma once

#include <fmt/format.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "wavail/error.hpp"
#include "wavail/geometry.hpp"
#include "wavail/rng.hpp"

namespace wavail {

inline double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) noexcept { return 10.0 * std::log10(linear); }

/// SIR threshold and confidence used by the (theta, alpha) availability test.
struct RadioParams {
  double theta_db = 0.0;
  double alpha = 0.8;
  double eta = 4.0;
  double p_tx = 1.0;  // watts; cancels out of every SIR quantity

  double theta_linear() const noexcept { return db_to_linear(theta_db); }

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument(fmt::format("alpha must lie in (0,1), got {}", alpha));
    if (!(eta > 2.0) || !std::isfinite(eta)) throw InvalidArgument(fmt::format("eta must exceed 2, got {}", eta));
    if (!std::isfinite(theta_db)) throw InvalidArgument("theta_db must be finite");
    if (!(p_tx > 0.0)) throw InvalidArgument("p_tx must be positive");
  }
};

/// Per-link small-scale power gains, indexed by AP.
struct FadingSample {
  std::vector<double> gains;
};

/// Draws one unit-mean exponential (Rayleigh power) gain per AP link.
inline FadingSample draw_fading(std::size_t n_aps, RandomStream& rng) {
  FadingSample s;
  s.gains.resize(n_aps);
  for (double& g : s.gains) g = rng.exponential();
  return s;
}

namespace detail {

/// (d_serv / d_k)^eta from squared distances; exact squaring for eta = 4.
inline double distance_ratio_power(double d2_serv, double d2, double half_eta) noexcept {
  const double r = d2_serv / d2;
  return half_eta == 2.0 ? r * r : std::pow(r, half_eta);
}

}  // namespace detail

/// d(a, b)^(-eta).
inline double pathloss(Point2D a, Point2D b, double eta) {
  const double d = distance(a, b);
  if (d == 0.0) throw SingularityError("pathloss: zero distance");
  return std::pow(d, -eta);
}

/// Instantaneous SIR at `z` served by `serving` under the given fading draw.
inline double sample_sir(Point2D z, ApIndex serving, const Deployment& dep, const FadingSample& fading) {
  if (dep.size() < 2) throw NoInterferenceError("sample_sir: SIR is undefined without interferers");
  if (fading.gains.size() != dep.size()) throw InvalidArgument("sample_sir: one fading gain per AP required");
  if (serving >= dep.size()) throw InvalidArgument("sample_sir: serving index out of range");
  const double signal = fading.gains[serving] * pathloss(z, dep.aps[serving], dep.eta);
  double interference = 0.0;
  for (ApIndex k = 0; k < dep.size(); ++k)
    if (k != serving) interference += fading.gains[k] * pathloss(z, dep.aps[k], dep.eta);
  return signal / interference;
}

/// P[SIR >= theta] over Rayleigh fading, in closed form:
///   prod_k 1 / (1 + theta * L(z,k) / L(z,serving)).
/// At the serving AP the value is 1 and at an interferer it is 0 (limits).
inline double coverage_probability(Point2D z, ApIndex serving, const Deployment& dep, double theta_linear) {
  if (serving >= dep.size()) throw InvalidArgument("coverage_probability: serving index out of range");
  const double d2_serv = squared_distance(z, dep.aps[serving]);
  const double half_eta = 0.5 * dep.eta;
  double p = 1.0;
  for (ApIndex k = 0; k < dep.size(); ++k) {
    if (k == serving) continue;
    const double d2 = squared_distance(z, dep.aps[k]);
    if (d2 == 0.0) return 0.0;
    p /= 1.0 + theta_linear * detail::distance_ratio_power(d2_serv, d2, half_eta);
  }
  return p;
}

/// Binary (theta, alpha) availability indicator; the boundary counts as available.
inline bool omega(Point2D z, ApIndex serving, const Deployment& dep, const RadioParams& params) {
  return coverage_probability(z, serving, dep, params.theta_linear()) >= params.alpha;
}

}  // namespace wavail
