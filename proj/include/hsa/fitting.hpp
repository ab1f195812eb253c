#pragma once

// From raw cycling-test logs to fitted SpringFit tables: cycle segmentation,
// per-cycle measurement, first-cycle rejection with median aggregation, the
// four least-squares families, zero-force displacement procedures and the
// row-count power law.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hsa/design_space.hpp"
#include "hsa/error.hpp"
#include "hsa/least_squares.hpp"
#include "hsa/spring_model.hpp"

namespace hsa {

struct Sample {
  double time_s = 0;
  double displacement_mm = 0;
  double force_n = 0;
  double torque_nmm = 0;
  double theta_deg = 0;
  bool operator==(const Sample&) const = default;
};

/// Ordered key/value pairs carried alongside a log (design id, reference
/// length, generator seed, ...).
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct CycleTestRecord {
  std::vector<Sample> samples;
  Metadata metadata;

  bool operator==(const CycleTestRecord&) const = default;

  std::optional<std::string> meta(std::string_view key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return v;
    return std::nullopt;
  }

  void set_meta(std::string key, std::string value) {
    for (auto& [k, v] : metadata)
      if (k == key) {
        v = std::move(value);
        return;
      }
    metadata.emplace_back(std::move(key), std::move(value));
  }

  /// Inferred from the time column.
  double sample_rate_hz() const {
    if (samples.size() < 2) return 0.0;
    return (samples.size() - 1) / (samples.back().time_s - samples.front().time_s);
  }
};

inline void validate(const CycleTestRecord& r) {
  if (r.samples.empty()) throw Error(Errc::InvalidArgument, "record has no samples");
  for (std::size_t i = 1; i < r.samples.size(); ++i)
    if (!(r.samples[i].time_s > r.samples[i - 1].time_s))
      throw Error(Errc::NonMonotoneTime, "time not strictly increasing at sample " + std::to_string(i));
}

struct ThetaValue {
  double theta = 0;
  double value = 0;
};

struct AggregatedPoint {
  double theta = 0;
  double median = 0;
  double min = 0;
  double max = 0;
  int n_cycles = 0;
};

// ---------------------------------------------------------------------------
// Cycle segmentation

/// Splits a log into complete displacement cycles (low -> high -> low).
/// A cycle starts where the trace lifts off the low end of the cycling range;
/// the ends of the range are detected with a band of 1% of the observed
/// displacement span. Leading and trailing partial excursions are dropped.
inline std::vector<CycleTestRecord> segment_cycles(const CycleTestRecord& record) {
  validate(record);
  const auto& s = record.samples;
  const auto [lo_it, hi_it] = std::minmax_element(
      s.begin(), s.end(), [](const Sample& a, const Sample& b) { return a.displacement_mm < b.displacement_mm; });
  const double lo = lo_it->displacement_mm, hi = hi_it->displacement_mm;
  if (!(hi > lo)) throw Error(Errc::NoCyclesFound, "displacement never changes");
  const double band = 0.01 * (hi - lo);

  const std::size_t n = s.size();
  std::vector<std::size_t> boundaries;
  bool seen_high = false;
  std::size_t i = 0;
  while (i < n) {
    if (s[i].displacement_mm <= lo + band) {
      const std::size_t run_begin = i;
      while (i < n && s[i].displacement_mm <= lo + band) ++i;
      if (boundaries.empty() || seen_high) {
        std::size_t lift_off = run_begin;
        for (std::size_t j = run_begin; j < i; ++j)
          if (s[j].displacement_mm <= s[lift_off].displacement_mm) lift_off = j;
        boundaries.push_back(i == n && !boundaries.empty() ? n : lift_off);
        seen_high = false;
      }
      continue;
    }
    if (s[i].displacement_mm >= hi - band && !boundaries.empty()) seen_high = true;
    ++i;
  }

  std::vector<CycleTestRecord> cycles;
  for (std::size_t b = 0; b + 1 < boundaries.size(); ++b) {
    CycleTestRecord c;
    c.metadata = record.metadata;
    c.samples.assign(s.begin() + static_cast<std::ptrdiff_t>(boundaries[b]),
                     s.begin() + static_cast<std::ptrdiff_t>(boundaries[b + 1]));
    cycles.push_back(std::move(c));
  }
  if (cycles.empty()) throw Error(Errc::NoCyclesFound, "no complete low-high-low excursion");
  return cycles;
}

/// Commanded twist of a cycle (taken from its first sample).
inline double cycle_theta(const CycleTestRecord& cycle) {
  if (cycle.samples.empty()) throw Error(Errc::InvalidArgument, "empty cycle");
  return cycle.samples.front().theta_deg;
}

// ---------------------------------------------------------------------------
// Aggregation

namespace detail {
inline constexpr double kThetaMatch = 1e-6;

inline double median_of_sorted(std::span<const double> v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

/// Order statistics per requested theta over per-cycle values given in time
/// order. With drop_first, the earliest cycle at each theta is discarded.
inline std::vector<AggregatedPoint> aggregate_values(std::span<const ThetaValue> per_cycle, bool drop_first,
                                                     std::span<const double> at_thetas) {
  std::vector<AggregatedPoint> out;
  out.reserve(at_thetas.size());
  for (double theta : at_thetas) {
    std::vector<double> values;
    for (const auto& tv : per_cycle)
      if (std::abs(tv.theta - theta) <= detail::kThetaMatch) values.push_back(tv.value);
    const std::size_t needed = drop_first ? 2 : 1;
    if (values.size() < needed)
      throw Error(Errc::InsufficientCycles, "only " + std::to_string(values.size()) + " cycles at theta " +
                                                message_number(theta));
    if (drop_first) values.erase(values.begin());
    std::sort(values.begin(), values.end());
    out.push_back({theta, detail::median_of_sorted(values), values.front(), values.back(),
                   static_cast<int>(values.size())});
  }
  return out;
}

/// Aggregates one measured quantity, `quantity(cycle) -> double`, over cycles
/// in time order.
template <class Quantity>
std::vector<AggregatedPoint> aggregate(std::span<const CycleTestRecord> cycles, Quantity&& quantity,
                                       bool drop_first, std::span<const double> at_thetas) {
  std::vector<ThetaValue> values;
  values.reserve(cycles.size());
  for (const auto& c : cycles) values.push_back({cycle_theta(c), quantity(c)});
  return aggregate_values(values, drop_first, at_thetas);
}

/// Distinct commanded thetas of a set of cycles, ascending.
inline std::vector<double> distinct_thetas(std::span<const CycleTestRecord> cycles) {
  std::vector<double> t;
  for (const auto& c : cycles) {
    const double th = cycle_theta(c);
    if (std::none_of(t.begin(), t.end(), [&](double x) { return std::abs(x - th) <= detail::kThetaMatch; }))
      t.push_back(th);
  }
  std::sort(t.begin(), t.end());
  return t;
}

// ---------------------------------------------------------------------------
// Per-cycle measurement

struct CycleMeasurement {
  double theta = 0;
  double blocked_force_n = 0;              // force with the end held at the reference length
  double zero_force_displacement_mm = 0;   // displacement where force crosses zero
  double spring_constant_n_per_mm = 0;     // slope of force vs displacement there
  double holding_torque_nmm = 0;           // torque at that displacement
  double min_energy_length_mm = 0;         // reference length + zero-force displacement
};

/// Fits force = p0 + p1 x + p2 x^2 and torque = q0 + q1 x over the cycle,
/// where x is displacement from the reference length. Blocked force is the
/// force at x = 0; the minimum-energy point is the zero crossing with positive
/// slope.
inline CycleMeasurement measure_cycle(const CycleTestRecord& cycle, double reference_length_mm) {
  const auto n = static_cast<Eigen::Index>(cycle.samples.size());
  Eigen::MatrixXd xq(n, 3), xl(n, 2);
  Eigen::VectorXd force(n), torque(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = cycle.samples[static_cast<std::size_t>(i)];
    xq.row(i) << 1.0, s.displacement_mm, s.displacement_mm * s.displacement_mm;
    xl.row(i) << 1.0, s.displacement_mm;
    force(i) = s.force_n;
    torque(i) = s.torque_nmm;
  }
  const Eigen::VectorXd p = solve_least_squares(xq, force);
  const Eigen::VectorXd q = solve_least_squares(xl, torque);

  const double p0 = p(0), p1 = p(1), p2 = p(2);
  const double disc = p1 * p1 - 4 * p2 * p0;
  if (disc < 0 || (p1 == 0 && p2 == 0))
    throw Error(Errc::NoForceMinimum, "force never crosses zero in cycle at theta " +
                                          std::to_string(cycle_theta(cycle)));
  // Stable quadratic roots; keep the one with positive slope.
  const double root_disc = std::sqrt(disc);
  const double qq = -0.5 * (p1 + std::copysign(root_disc, p1));
  std::vector<double> roots;
  if (qq != 0) roots.push_back(p0 / qq);
  if (p2 != 0) roots.push_back(qq / p2);
  std::optional<double> zero;
  double best_slope = 0;
  for (double r : roots) {
    const double slope = p1 + 2 * p2 * r;
    if (slope > best_slope) {
      best_slope = slope;
      zero = r;
    }
  }
  if (!zero) throw Error(Errc::NoForceMinimum, "no stable zero-force point in cycle");

  CycleMeasurement m;
  m.theta = cycle_theta(cycle);
  m.blocked_force_n = p0;
  m.zero_force_displacement_mm = *zero;
  m.spring_constant_n_per_mm = best_slope;
  m.holding_torque_nmm = q(0) + q(1) * *zero;
  m.min_energy_length_mm = reference_length_mm + *zero;
  return m;
}

// ---------------------------------------------------------------------------
// Spring model fit

enum class TorqueOrder { Linear, Quadratic };

namespace detail {
inline std::size_t count_distinct_thetas(std::span<const ThetaValue> s) {
  std::vector<double> t;
  for (const auto& v : s) t.push_back(v.theta);
  std::sort(t.begin(), t.end());
  return static_cast<std::size_t>(std::unique(t.begin(), t.end(),
                                              [](double a, double b) { return std::abs(a - b) <= kThetaMatch; }) -
                                  t.begin());
}

inline void require_support(std::span<const ThetaValue> s, std::size_t needed, std::string_view name) {
  if (count_distinct_thetas(s) < needed)
    throw Error(Errc::DegenerateDesignMatrix,
                std::string(name) + " series needs " + std::to_string(needed) + " distinct thetas");
}

// Fits y = sum_j c_j * theta^powers[j]; returns coefficients and R^2.
inline std::pair<Eigen::VectorXd, double> fit_powers(std::span<const ThetaValue> s, std::span<const int> powers) {
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(powers.size()));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double th = s[static_cast<std::size_t>(i)].theta;
    for (std::size_t j = 0; j < powers.size(); ++j)
      x(i, static_cast<Eigen::Index>(j)) = std::pow(th, powers[j]);
    y(i) = s[static_cast<std::size_t>(i)].value;
  }
  Eigen::VectorXd c = solve_least_squares(x, y);
  const Eigen::VectorXd pred = x * c;
  return {c, std::clamp(r_squared(y, pred), 0.0, 1.0)};
}
}  // namespace detail

/// Least-squares fit of the four property families:
///   blocked force  A th^2 + B th        (through the origin)
///   torque         C_tau th [+ D_tau th^2]
///   stiffness      C_k th + k0
///   length         C_l th + L0
/// The valid theta range is the observed span over all four series.
inline SpringFit fit_spring_model(std::span<const ThetaValue> blocked, std::span<const ThetaValue> torque,
                                  std::span<const ThetaValue> stiffness, std::span<const ThetaValue> lengths,
                                  TorqueOrder torque_order, const HsaDesign& design = {}) {
  detail::require_support(blocked, 3, "blocked force");
  detail::require_support(torque, torque_order == TorqueOrder::Linear ? 2 : 3, "torque");
  detail::require_support(stiffness, 3, "stiffness");
  detail::require_support(lengths, 3, "length");

  SpringFit f;
  f.design = design;
  static constexpr int kQuadOrigin[] = {2, 1};
  static constexpr int kLinOrigin[] = {1};
  static constexpr int kAffine[] = {1, 0};

  auto [cb, rb] = detail::fit_powers(blocked, kQuadOrigin);
  f.force_quadratic = cb(0);
  f.force_linear = cb(1);
  f.r2_blocked = rb;

  if (torque_order == TorqueOrder::Linear) {
    auto [ct, rt] = detail::fit_powers(torque, kLinOrigin);
    f.torque_linear = ct(0);
    f.torque_quadratic = 0.0;
    f.r2_torque = rt;
  } else {
    auto [ct, rt] = detail::fit_powers(torque, kQuadOrigin);
    f.torque_quadratic = ct(0);
    f.torque_linear = ct(1);
    f.r2_torque = rt;
  }

  auto [ck, rk] = detail::fit_powers(stiffness, kAffine);
  f.stiffness_slope = ck(0);
  f.rest_stiffness = ck(1);
  f.r2_stiffness = rk;

  auto [cl, rl] = detail::fit_powers(lengths, kAffine);
  f.length_slope = cl(0);
  f.rest_length = cl(1);
  f.r2_length = rl;

  double lo = blocked.front().theta, hi = lo;
  for (auto series : {blocked, torque, stiffness, lengths})
    for (const auto& v : series) {
      lo = std::min(lo, v.theta);
      hi = std::max(hi, v.theta);
    }
  f.theta_min = lo;
  f.theta_max = hi;
  validate(f);
  return f;
}

struct LogFit {
  SpringFit fit;
  std::vector<AggregatedPoint> blocked, torque, stiffness, length;
};

namespace detail {
inline std::vector<ThetaValue> medians(std::span<const AggregatedPoint> pts) {
  std::vector<ThetaValue> v;
  for (const auto& p : pts) v.push_back({p.theta, p.median});
  return v;
}
}  // namespace detail

/// segment -> measure -> aggregate -> fit for one cycling log.
inline LogFit fit_test_log(const CycleTestRecord& log, double reference_length_mm, TorqueOrder torque_order,
                           const HsaDesign& design = {}, bool drop_first = true) {
  const auto cycles = segment_cycles(log);
  std::vector<CycleMeasurement> ms;
  ms.reserve(cycles.size());
  for (const auto& c : cycles) ms.push_back(measure_cycle(c, reference_length_mm));
  const auto thetas = distinct_thetas(cycles);

  auto agg = [&](double CycleMeasurement::*field) {
    std::vector<ThetaValue> v;
    for (const auto& m : ms) v.push_back({m.theta, m.*field});
    return aggregate_values(v, drop_first, thetas);
  };
  LogFit out;
  out.blocked = agg(&CycleMeasurement::blocked_force_n);
  out.torque = agg(&CycleMeasurement::holding_torque_nmm);
  out.stiffness = agg(&CycleMeasurement::spring_constant_n_per_mm);
  out.length = agg(&CycleMeasurement::min_energy_length_mm);
  out.fit = fit_spring_model(detail::medians(out.blocked), detail::medians(out.torque),
                             detail::medians(out.stiffness), detail::medians(out.length), torque_order, design);
  return out;
}

// ---------------------------------------------------------------------------
// Zero-force displacement procedures

namespace detail {
struct Dwell {
  double theta;
  std::size_t begin, end;
};

inline std::vector<Dwell> dwell_segments(const CycleTestRecord& r) {
  std::vector<Dwell> out;
  const auto& s = r.samples;
  std::size_t b = 0;
  for (std::size_t i = 1; i <= s.size(); ++i)
    if (i == s.size() || s[i].theta_deg != s[b].theta_deg) {
      out.push_back({s[b].theta_deg, b, i});
      b = i;
    }
  return out;
}

// Displacement of the interior force minimum of a dwell, refined to the
// zero crossing when the force changes sign next to it.
inline double dwell_zero_force(const CycleTestRecord& r, const Dwell& d) {
  const auto& s = r.samples;
  std::size_t best = d.begin;
  for (std::size_t i = d.begin; i < d.end; ++i)
    if (std::abs(s[i].force_n) < std::abs(s[best].force_n)) best = i;
  if (best == d.begin || best + 1 == d.end)
    throw Error(Errc::NoForceMinimum, "force has no interior minimum in dwell at theta " + std::to_string(d.theta));
  for (std::size_t j : {best - 1, best + 1}) {
    const double fa = s[best].force_n, fb = s[j].force_n;
    if (fa == 0.0) break;
    if ((fa < 0) != (fb < 0)) {
      const double w = fa / (fa - fb);
      return s[best].displacement_mm + w * (s[j].displacement_mm - s[best].displacement_mm);
    }
  }
  return s[best].displacement_mm;
}
}  // namespace detail

/// Zero-force displacement per rotation step, following the procedure used
/// for each trajectory point:
///   Closed   - mean increment between successive steps' zero-force points
///   SemiOpen - slope of zero-force displacement against step index
///   Open     - zero-force displacement at the extreme step divided by the
///              number of steps back to rest
inline double zero_force_displacement(const CycleTestRecord& record, TrajectoryPoint point) {
  validate(record);
  const auto dwells = detail::dwell_segments(record);
  if (dwells.size() < 2) throw Error(Errc::InvalidArgument, "need at least two rotation steps");
  std::vector<double> z;
  for (const auto& d : dwells) z.push_back(detail::dwell_zero_force(record, d));
  const auto steps = static_cast<double>(z.size() - 1);

  switch (point) {
    case TrajectoryPoint::Closed: {
      return std::abs((z.back() - z.front()) / steps);  // mean of successive differences
    }
    case TrajectoryPoint::SemiOpen: {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(z.size()), 2);
      Eigen::VectorXd y(static_cast<Eigen::Index>(z.size()));
      for (std::size_t i = 0; i < z.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) << static_cast<double>(i), 1.0;
        y(static_cast<Eigen::Index>(i)) = z[i];
      }
      return std::abs(solve_least_squares(x, y)(0));
    }
    case TrajectoryPoint::Open: {
      std::size_t extreme = 0;
      for (std::size_t i = 1; i < dwells.size(); ++i)
        if (std::abs(dwells[i].theta) > std::abs(dwells[extreme].theta)) extreme = i;
      return std::abs(z[extreme] / steps);
    }
  }
  return 0.0;
}

/// Least-squares slope of force against displacement over an extension test.
inline double local_spring_constant(const CycleTestRecord& extension) {
  const auto n = static_cast<Eigen::Index>(extension.samples.size());
  if (n < 2) throw Error(Errc::DegenerateDesignMatrix, "need at least two samples");
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = extension.samples[static_cast<std::size_t>(i)];
    x.row(i) << s.displacement_mm, 1.0;
    y(i) = s.force_n;
  }
  return solve_least_squares(x, y)(0);
}

// ---------------------------------------------------------------------------
// Power law

struct PowerLawFit {
  double coefficient = 0;
  double exponent = 0;
  double r_squared = 0;  // in log-log space
};

/// y ~ coefficient * x^exponent by least squares on (ln x, ln y).
inline PowerLawFit fit_power_law(std::span<const std::pair<double, double>> pairs) {
  for (const auto& [x, y] : pairs)
    if (!(x > 0) || !(y > 0)) throw Error(Errc::NonPositiveInput, "power-law data must be strictly positive");
  if (pairs.size() < 2) throw Error(Errc::DegenerateDesignMatrix, "need at least two pairs");
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) << std::log(pairs[static_cast<std::size_t>(i)].first), 1.0;
    y(i) = std::log(pairs[static_cast<std::size_t>(i)].second);
  }
  const Eigen::VectorXd c = solve_least_squares(x, y);
  return {std::exp(c(1)), c(0), r_squared(y, Eigen::VectorXd(x * c))};
}

// ---------------------------------------------------------------------------
// Log metadata

namespace detail {
inline double parse_meta_number(const std::string& key, const std::string& s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw Error(Errc::InvalidArgument, "metadata '" + key + "' is not a number: " + s);
  return v;
}
}  // namespace detail

/// Design described by a log's metadata (trajectory_point, rows, handedness,
/// printed_length_mm, outer_diameter_mm, wall_thickness_mm, symmetry_order).
/// Printed length falls back to the tabulated envelope when available.
inline HsaDesign design_from_metadata(const CycleTestRecord& log) {
  HsaDesign d;
  if (auto v = log.meta("trajectory_point")) d.trajectory_point = parse_trajectory_point(*v);
  if (auto v = log.meta("rows")) d.rows = static_cast<int>(detail::parse_meta_number("rows", *v));
  if (auto v = log.meta("handedness")) d.handedness = parse_handedness(*v);
  if (auto v = log.meta("symmetry_order"))
    d.symmetry_order = static_cast<int>(detail::parse_meta_number("symmetry_order", *v));
  if (auto v = log.meta("outer_diameter_mm")) d.outer_diameter_mm = detail::parse_meta_number("outer_diameter_mm", *v);
  if (auto v = log.meta("wall_thickness_mm")) d.wall_thickness_mm = detail::parse_meta_number("wall_thickness_mm", *v);
  if (auto v = log.meta("printed_length_mm"))
    d.printed_length_mm = detail::parse_meta_number("printed_length_mm", *v);
  else if (auto s = find_spec(kBuiltinSpecs, d.trajectory_point, d.rows))
    d.printed_length_mm = s->printed_length_mm;
  validate(d);
  return d;
}

/// Length at which the log's displacement reads zero.
inline double reference_length_from_metadata(const CycleTestRecord& log) {
  if (auto v = log.meta("reference_length_mm")) return detail::parse_meta_number("reference_length_mm", *v);
  return design_from_metadata(log).printed_length_mm;
}

}  // namespace hsa
