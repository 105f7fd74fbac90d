#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include "wavail/error.hpp"

namespace wavail {

/// Split of an AP's M channels between its available and non-available regions.
struct ChannelPartition {
  std::size_t m_total = 0;
  std::size_t m_a = 0;
  std::size_t m_n = 0;

  friend bool operator==(const ChannelPartition&, const ChannelPartition&) = default;
};

enum class Region { available, non_available };

/// M_a = A_s * M rounded to nearest (halves up), M_n = M - M_a.
inline ChannelPartition partition_channels(double a_s, std::size_t m) {
  if (!(a_s >= 0.0 && a_s <= 1.0)) throw InvalidArgument(fmt::format("a_s must lie in [0,1], got {}", a_s));
  if (m == 0) throw InvalidArgument("partition_channels: need at least one channel");
  // The nudge keeps decimal ties such as 0.35 * 10 = 3.4999999999999996 rounding up.
  const double scaled = a_s * static_cast<double>(m);
  auto m_a = static_cast<std::size_t>(std::floor(scaled + 0.5 + 1e-9));
  m_a = std::min(m_a, m);
  return {.m_total = m, .m_a = m_a, .m_n = m - m_a};
}

struct ChainState {
  std::size_t n_a = 0;
  std::size_t n_n = 0;

  friend bool operator==(const ChainState&, const ChainState&) = default;
};

/// Feasible states (n_a, n_n), 0 <= n_a <= M_a, 0 <= n_n <= M_n, in
/// lexicographic order.
class StateSpace {
 public:
  explicit StateSpace(ChannelPartition p) : p_(p) {}

  std::size_t size() const noexcept { return (p_.m_a + 1) * (p_.m_n + 1); }
  const ChannelPartition& partition() const noexcept { return p_; }

  std::size_t index(ChainState s) const {
    if (s.n_a > p_.m_a || s.n_n > p_.m_n)
      throw InvalidArgument(fmt::format("state ({}, {}) is infeasible", s.n_a, s.n_n));
    return s.n_a * (p_.m_n + 1) + s.n_n;
  }
  ChainState state(std::size_t i) const noexcept { return {i / (p_.m_n + 1), i % (p_.m_n + 1)}; }

  std::vector<ChainState> states() const {
    std::vector<ChainState> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(state(i));
    return out;
  }

  /// True when at least one channel of `region` is idle in state `s`.
  bool available(ChainState s, Region region) const noexcept {
    return region == Region::available ? s.n_a < p_.m_a : s.n_n < p_.m_n;
  }

 private:
  ChannelPartition p_;
};

inline std::vector<ChainState> build_state_space(ChannelPartition p) { return StateSpace(p).states(); }

struct ErlangChainSpec {
  ChannelPartition partition;
  double lambda = 8.0;
  double mu = 1.0;
  ChainState initial_state{};
  // When set, requests are split by location: region a sees lambda * A_s,
  // region n sees lambda * (1 - A_s). Off by default; both regions see lambda.
  bool split_arrivals = false;
  double available_fraction = 0.0;

  double lambda_a() const noexcept { return split_arrivals ? lambda * available_fraction : lambda; }
  double lambda_n() const noexcept { return split_arrivals ? lambda * (1.0 - available_fraction) : lambda; }

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("mu must be positive");
    if (partition.m_a + partition.m_n != partition.m_total) throw InvalidArgument("partition does not add up");
    if (initial_state.n_a > partition.m_a || initial_state.n_n > partition.m_n)
      throw InvalidArgument("initial state is infeasible");
    if (split_arrivals && !(available_fraction >= 0.0 && available_fraction <= 1.0))
      throw InvalidArgument("available_fraction must lie in [0,1]");
  }
};

struct RateEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double rate = 0.0;
};

/// Infinitesimal generator Q of a finite CTMC.
///
/// Stored densely up to `dense_limit` states and as compressed rows above.
/// Off-diagonal rates come from the constructor; each diagonal is set to
/// minus its row sum, so rows sum to zero by construction.
class GeneratorMatrix {
 public:
  static constexpr std::size_t default_dense_limit = 4096;

  GeneratorMatrix(std::size_t dimension, std::vector<RateEntry> off_diagonal,
                  std::size_t dense_limit = default_dense_limit)
      : dim_(dimension), dense_(dimension <= dense_limit) {
    for (const auto& e : off_diagonal) {
      if (e.row >= dim_ || e.col >= dim_) throw InvalidArgument("rate entry outside the state space");
      if (e.row == e.col) throw InvalidArgument("diagonal entries are derived, not given");
      if (!(e.rate >= 0.0) || !std::isfinite(e.rate)) throw InvalidArgument("rates must be finite and non-negative");
    }
    std::sort(off_diagonal.begin(), off_diagonal.end(),
              [](const RateEntry& a, const RateEntry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });

    diagonal_.assign(dim_, 0.0);
    for (const auto& e : off_diagonal) diagonal_[e.row] -= e.rate;
    q_ = 0.0;
    for (double d : diagonal_) q_ = std::max(q_, -d);

    if (dense_) {
      values_.assign(dim_ * dim_, 0.0);
      for (const auto& e : off_diagonal) values_[e.row * dim_ + e.col] += e.rate;
      for (std::size_t i = 0; i < dim_; ++i) values_[i * dim_ + i] = diagonal_[i];
    } else {
      row_start_.assign(dim_ + 1, 0);
      for (const auto& e : off_diagonal) ++row_start_[e.row + 1];
      std::partial_sum(row_start_.begin(), row_start_.end(), row_start_.begin());
      cols_.reserve(off_diagonal.size());
      values_.reserve(off_diagonal.size());
      for (const auto& e : off_diagonal) {
        cols_.push_back(e.col);
        values_.push_back(e.rate);
      }
    }
  }

  std::size_t dimension() const noexcept { return dim_; }
  bool is_dense() const noexcept { return dense_; }

  /// max_i |q_ii|, the smallest admissible uniformization rate.
  double uniformization_rate() const noexcept { return q_; }

  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return diagonal_[i];
    if (dense_) return values_[i * dim_ + j];
    double v = 0.0;
    for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p)
      if (cols_[p] == j) v += values_[p];
    return v;
  }

  /// Calls fn(col, rate) for every off-diagonal rate in row i, including zeros
  /// in dense storage.
  template <typename Fn>
  void for_each_off_diagonal(std::size_t i, Fn&& fn) const {
    if (dense_) {
      for (std::size_t j = 0; j < dim_; ++j)
        if (j != i && values_[i * dim_ + j] != 0.0) fn(j, values_[i * dim_ + j]);
    } else {
      for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p) fn(cols_[p], values_[p]);
    }
  }

  double row_sum(std::size_t i) const {
    double s = diagonal_[i];
    for_each_off_diagonal(i, [&](std::size_t, double v) { s += v; });
    return s;
  }

  /// y = x (I + Q/q).
  void multiply_uniformized(std::span<const double> x, std::span<double> y, double q) const {
    for (std::size_t j = 0; j < dim_; ++j) y[j] = x[j] * (1.0 + diagonal_[j] / q);
    for (std::size_t i = 0; i < dim_; ++i) {
      if (x[i] == 0.0) continue;
      const double xi = x[i] / q;
      for_each_off_diagonal(i, [&](std::size_t j, double v) { y[j] += xi * v; });
    }
  }

  /// Same state space with every outgoing rate of the flagged rows removed.
  GeneratorMatrix with_absorbing_rows(const std::vector<bool>& absorbing) const {
    std::vector<RateEntry> entries;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (absorbing[i]) continue;
      for_each_off_diagonal(i, [&](std::size_t j, double v) { entries.push_back({i, j, v}); });
    }
    return GeneratorMatrix(dim_, std::move(entries), dense_ ? std::max(dim_, default_dense_limit) : dim_ - 1);
  }

 private:
  std::size_t dim_;
  bool dense_;
  double q_ = 0.0;
  std::vector<double> diagonal_;
  std::vector<double> values_;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> cols_;
};

/// Two independent birth/death dimensions: arrivals at lambda_u while
/// n_u < M_u, departures at n_u * mu.
inline GeneratorMatrix build_generator(const ErlangChainSpec& spec,
                                       std::size_t dense_limit = GeneratorMatrix::default_dense_limit) {
  spec.validate();
  const StateSpace space(spec.partition);
  const auto& p = spec.partition;
  std::vector<RateEntry> entries;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ChainState s = space.state(i);
    if (s.n_a < p.m_a) entries.push_back({i, space.index({s.n_a + 1, s.n_n}), spec.lambda_a()});
    if (s.n_n < p.m_n) entries.push_back({i, space.index({s.n_a, s.n_n + 1}), spec.lambda_n()});
    if (s.n_a > 0) entries.push_back({i, space.index({s.n_a - 1, s.n_n}), static_cast<double>(s.n_a) * spec.mu});
    if (s.n_n > 0) entries.push_back({i, space.index({s.n_a, s.n_n - 1}), static_cast<double>(s.n_n) * spec.mu});
  }
  std::erase_if(entries, [](const RateEntry& e) { return e.rate == 0.0; });
  return GeneratorMatrix(space.size(), std::move(entries), dense_limit);
}

/// Generator in which the unavailable states of `region` (n_u = M_u) absorb.
inline GeneratorMatrix make_absorbing(const GeneratorMatrix& gen, ChannelPartition partition, Region region) {
  const StateSpace space(partition);
  if (space.size() != gen.dimension()) throw InvalidArgument("make_absorbing: partition does not match generator");
  std::vector<bool> absorbing(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) absorbing[i] = !space.available(space.state(i), region);
  return gen.with_absorbing_rows(absorbing);
}

struct TransientSolution {
  std::vector<double> distribution;
  std::size_t truncation_level = 0;  // N_c
  double tail_bound = 0.0;           // Poisson mass beyond N_c
};

/// tau(t) = sum_{i=0}^{N_c} Poisson(i; q t) * tau(0) R^i with R = I + Q/q.
///
/// Poisson weights are formed in log space. N_c is the first level past the
/// Poisson mode whose geometric tail bound drops to `eps`; that bound is
/// reported, the result is not renormalized.
inline TransientSolution uniformized_transient(const GeneratorMatrix& gen, std::span<const double> initial, double t,
                                               double eps = 1e-10) {
  if (!(eps > 0.0)) throw InvalidArgument("uniformized_transient: eps must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("uniformized_transient: t must be finite and >= 0");
  if (initial.size() != gen.dimension()) throw InvalidArgument("uniformized_transient: initial vector size mismatch");
  double mass = 0.0;
  for (double v : initial) {
    if (!(v >= 0.0)) throw InvalidArgument("uniformized_transient: initial entries must be non-negative");
    mass += v;
  }
  if (std::abs(mass - 1.0) > 1e-12) throw InvalidArgument("uniformized_transient: initial distribution must sum to 1");

  TransientSolution out;
  const double q = gen.uniformization_rate();
  const double qt = q * t;
  if (qt == 0.0) {
    out.distribution.assign(initial.begin(), initial.end());
    return out;
  }

  if (qt > 1e9) throw NumericalError(fmt::format("uniformization: q*t = {:.3g} is beyond the supported range", qt));

  const std::size_t n = gen.dimension();
  const double log_qt = std::log(qt);
  const auto max_level = static_cast<std::size_t>(qt + 40.0 * std::sqrt(qt) + 1000.0);
  std::vector<double> v(initial.begin(), initial.end()), next(n);
  std::vector<double>& acc = out.distribution;
  acc.assign(n, 0.0);

  for (std::size_t level = 0;; ++level) {
    const double lw = -qt + static_cast<double>(level) * log_qt - std::lgamma(static_cast<double>(level) + 1.0);
    const double w = std::exp(lw);
    for (std::size_t j = 0; j < n; ++j) acc[j] += w * v[j];

    // Past the mode, successive weights shrink by at least r = qt/(level+2).
    if (static_cast<double>(level) + 2.0 > qt) {
      const double r = qt / (static_cast<double>(level) + 2.0);
      const double tail = w * (qt / (static_cast<double>(level) + 1.0)) / (1.0 - r);
      if (tail <= eps) {
        out.truncation_level = level;
        out.tail_bound = tail;
        break;
      }
    }
    if (level >= max_level)
      throw NumericalError(fmt::format("uniformization did not reach tail {} within {} terms", eps, max_level));
    gen.multiply_uniformized(v, next, q);
    v.swap(next);
  }

  for (double& x : acc) {
    if (x < 0.0) {
      if (x < -1e-12) throw NumericalError("uniformization produced a negative probability");
      x = 0.0;
    }
  }
  return out;
}

/// Stationary distribution of an M/M/m/m loss system (truncated Poisson),
/// computed with the same recursion that yields Erlang-B.
inline std::vector<double> erlang_stationary(double rho, std::size_t m) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  std::vector<double> p(m + 1);
  // Unnormalized weights relative to the largest, in log space.
  std::vector<double> lw(m + 1);
  for (std::size_t i = 0; i <= m; ++i) lw[i] = static_cast<double>(i) * std::log(rho) - std::lgamma(static_cast<double>(i) + 1.0);
  const double top = *std::max_element(lw.begin(), lw.end());
  double z = 0.0;
  for (std::size_t i = 0; i <= m; ++i) z += (p[i] = std::exp(lw[i] - top));
  for (double& x : p) x /= z;
  return p;
}

/// Erlang-B blocking probability via B(0)=1, B(n) = rho B(n-1) / (n + rho B(n-1)).
inline double erlang_b(double rho, std::size_t m) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  double b = 1.0;
  for (std::size_t n = 1; n <= m; ++n) b = rho * b / (static_cast<double>(n) + rho * b);
  return b;
}

/// Long-run probability that at least one of `m_u` channels is idle.
inline double steady_state_availability(double rho, std::size_t m_u) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be positive");
  if (m_u == 0) return 0.0;
  return 1.0 - erlang_b(rho, m_u);
}

/// Joint stationary distribution of the 2D chain (product of the two loss systems).
inline std::vector<double> stationary_distribution(const ErlangChainSpec& spec) {
  spec.validate();
  const StateSpace space(spec.partition);
  auto region_distribution = [&](double lambda_u, std::size_t m_u) {
    if (lambda_u == 0.0) {
      std::vector<double> point(m_u + 1, 0.0);
      point[0] = 1.0;
      return point;
    }
    return erlang_stationary(lambda_u / spec.mu, m_u);
  };
  const auto pa = region_distribution(spec.lambda_a(), spec.partition.m_a);
  const auto pn = region_distribution(spec.lambda_n(), spec.partition.m_n);
  std::vector<double> pi(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ChainState s = space.state(i);
    pi[i] = pa[s.n_a] * pn[s.n_n];
  }
  return pi;
}

struct TransientResult {
  std::vector<double> times;
  std::vector<double> avail_a;
  std::vector<double> avail_n;
  std::vector<double> rel_a;
  std::vector<double> rel_n;
  std::size_t truncation_level = 0;  // largest N_c over all solves
  double tail_bound = 0.0;           // largest reported tail over all solves
};

/// Transient availability and reliability of both regions on `times`,
/// starting from the spec's initial state.
inline TransientResult temporal_availability(const ErlangChainSpec& spec, std::span<const double> times,
                                             double eps = 1e-10) {
  spec.validate();
  if (times.empty()) throw InvalidArgument("temporal_availability: empty time grid");
  const StateSpace space(spec.partition);
  const GeneratorMatrix gen = build_generator(spec);
  const GeneratorMatrix abs_a = make_absorbing(gen, spec.partition, Region::available);
  const GeneratorMatrix abs_n = make_absorbing(gen, spec.partition, Region::non_available);

  std::vector<double> initial(space.size(), 0.0);
  initial[space.index(spec.initial_state)] = 1.0;

  auto sum_available = [&](const std::vector<double>& tau, Region region) {
    double s = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i)
      if (space.available(space.state(i), region)) s += tau[i];
    return std::clamp(s, 0.0, 1.0);
  };

  TransientResult out;
  out.times.assign(times.begin(), times.end());
  for (double t : times) {
    const auto full = uniformized_transient(gen, initial, t, eps);
    const auto ra = uniformized_transient(abs_a, initial, t, eps);
    const auto rn = uniformized_transient(abs_n, initial, t, eps);
    out.avail_a.push_back(sum_available(full.distribution, Region::available));
    out.avail_n.push_back(sum_available(full.distribution, Region::non_available));
    out.rel_a.push_back(sum_available(ra.distribution, Region::available));
    out.rel_n.push_back(sum_available(rn.distribution, Region::non_available));
    for (const auto* s : {&full, &ra, &rn}) {
      out.truncation_level = std::max(out.truncation_level, s->truncation_level);
      out.tail_bound = std::max(out.tail_bound, s->tail_bound);
    }
  }
  return out;
}

/// CSV `t,avail_a,avail_n,rel_a,rel_n`, 12 significant digits.
inline void write_transient_csv(std::ostream& os, const TransientResult& r) {
  os << "t,avail_a,avail_n,rel_a,rel_n\n";
  for (std::size_t i = 0; i < r.times.size(); ++i)
    os << fmt::format("{:.12g},{:.12g},{:.12g},{:.12g},{:.12g}\n", r.times[i], r.avail_a[i], r.avail_n[i], r.rel_a[i],
                      r.rel_n[i]);
}

}  // namespace wavail
