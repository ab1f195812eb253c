#pragma once

// The HSA as a programmable spring: blocked force, holding torque, stiffness
// and minimum-energy length as functions of the twist angle theta (degrees).
//
// Sign convention for forces follows the load cell: a negative blocked force
// is the actuator pushing against the fixture, a positive one pulling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hsa/design_space.hpp"
#include "hsa/error.hpp"

namespace hsa {

/// Fitted constants of one design. Field comments give the symbol used in
/// parameter tables.
struct SpringFit {
  double force_quadratic = 0;   // A    [N/deg^2]
  double force_linear = 0;      // B    [N/deg]
  double torque_linear = 0;     // C_tau [N mm/deg]
  double torque_quadratic = 0;  // D_tau [N mm/deg^2], 0 for linear torque
  double stiffness_slope = 0;   // C_k  [N/mm/deg]
  double rest_stiffness = 0;    // k0   [N/mm]
  double length_slope = 0;      // C_l  [mm/deg]
  double rest_length = 0;       // L0   [mm]
  double r2_blocked = 1;
  double r2_torque = 1;
  double r2_stiffness = 1;
  double r2_length = 1;
  double theta_min = 0;
  double theta_max = 0;
  HsaDesign design{};

  bool operator==(const SpringFit&) const = default;
};

namespace detail {
inline constexpr double kThetaSlack = 1e-9;

inline bool in_unit_interval(double r) { return r >= 0.0 && r <= 1.0; }

inline void require_theta(double theta, double lo, double hi) {
  if (!(theta >= lo - kThetaSlack && theta <= hi + kThetaSlack))
    throw Error(Errc::ThetaOutOfRange, "theta " + message_number(theta) + " outside [" +
                                           message_number(lo) + ", " + message_number(hi) + "]");
}
}  // namespace detail

inline void validate(const SpringFit& f) {
  if (!(f.rest_stiffness > 0)) throw Error(Errc::InvalidArgument, "k0 must be positive");
  if (!(f.rest_length > 0)) throw Error(Errc::InvalidArgument, "L0 must be positive");
  if (!(f.theta_min <= f.theta_max)) throw Error(Errc::InvalidArgument, "theta_min > theta_max");
  for (double r : {f.r2_blocked, f.r2_torque, f.r2_stiffness, f.r2_length})
    if (!detail::in_unit_interval(r)) throw Error(Errc::InvalidArgument, "R^2 outside [0,1]");
  for (double t : {f.theta_min, f.theta_max})
    if (!(f.stiffness_slope * t + f.rest_stiffness > 0))
      throw Error(Errc::InvalidArgument, "spring constant not positive over the valid range");
}

inline double blocked_force(const SpringFit& f, double theta) {
  detail::require_theta(theta, f.theta_min, f.theta_max);
  return (f.force_quadratic * theta + f.force_linear) * theta;
}

inline double holding_torque(const SpringFit& f, double theta) {
  detail::require_theta(theta, f.theta_min, f.theta_max);
  return (f.torque_quadratic * theta + f.torque_linear) * theta;
}

inline double spring_constant(const SpringFit& f, double theta) {
  detail::require_theta(theta, f.theta_min, f.theta_max);
  return f.stiffness_slope * theta + f.rest_stiffness;
}

inline double min_energy_length(const SpringFit& f, double theta) {
  detail::require_theta(theta, f.theta_min, f.theta_max);
  return f.length_slope * theta + f.rest_length;
}

/// Linearised spring force about the minimum-energy length; positive when
/// stretched past it.
inline double force_at(const SpringFit& f, double theta, double length_mm) {
  if (!(length_mm > 0)) throw Error(Errc::InvalidArgument, "length must be positive");
  return spring_constant(f, theta) * (length_mm - min_energy_length(f, theta));
}

/// Inverse of an affine length law L = slope*theta + intercept restricted to
/// [theta_min, theta_max].
inline double theta_for_linear_length(double slope, double intercept, double theta_min,
                                      double theta_max, double target_length) {
  if (slope == 0.0)
    throw Error(Errc::DegenerateCoupling, "length does not depend on theta");
  const double a = slope * theta_min + intercept;
  const double b = slope * theta_max + intercept;
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  if (!(target_length >= lo - slack && target_length <= hi + slack))
    throw Error(Errc::LengthUnreachable, "length " + message_number(target_length) +
                                             " mm outside [" + message_number(lo) + ", " +
                                             message_number(hi) + "]");
  return std::clamp((target_length - intercept) / slope, theta_min, theta_max);
}

inline double theta_for_length(const SpringFit& f, double target_length_mm) {
  return theta_for_linear_length(f.length_slope, f.rest_length, f.theta_min, f.theta_max,
                                 target_length_mm);
}

enum class ForceDirection { None, Push, Pull };

/// Positive twist extends the actuator (push), negative twist contracts it.
constexpr ForceDirection force_direction(double theta) noexcept {
  if (theta > 0) return ForceDirection::Push;
  if (theta < 0) return ForceDirection::Pull;
  return ForceDirection::None;
}

constexpr std::string_view to_string(ForceDirection d) noexcept {
  switch (d) {
    case ForceDirection::Push: return "push";
    case ForceDirection::Pull: return "pull";
    case ForceDirection::None: return "none";
  }
  return "none";
}

struct ConsistencyPoint {
  double theta = 0;
  double blocked_magnitude = 0;    // |F_b(theta)|
  double stiffness_magnitude = 0;  // |k(theta) * C_l * theta|
  double relative_discrepancy = 0;
};

struct ConsistencyReport {
  std::vector<ConsistencyPoint> points;
  double max_relative_discrepancy = 0;
};

/// Compares the fitted blocked force with the force implied by holding the
/// actuator at its rest length while the minimum-energy length moves by
/// C_l*theta. Discrepancy is relative to |F_b|; zero where both vanish and
/// infinite where only F_b does.
inline ConsistencyReport consistency_report(const SpringFit& f, int samples) {
  if (samples < 2) throw Error(Errc::InvalidArgument, "need at least 2 samples");
  ConsistencyReport report;
  report.points.reserve(static_cast<std::size_t>(samples));
  const double span = f.theta_max - f.theta_min;
  for (int i = 0; i < samples; ++i) {
    const double theta = i + 1 == samples ? f.theta_max : f.theta_min + span * i / (samples - 1);
    ConsistencyPoint p;
    p.theta = theta;
    p.blocked_magnitude = std::abs(blocked_force(f, theta));
    p.stiffness_magnitude = std::abs(spring_constant(f, theta) * f.length_slope * theta);
    const double diff = std::abs(p.blocked_magnitude - p.stiffness_magnitude);
    if (diff == 0.0)
      p.relative_discrepancy = 0.0;
    else if (p.blocked_magnitude == 0.0)
      p.relative_discrepancy = std::numeric_limits<double>::infinity();
    else
      p.relative_discrepancy = diff / p.blocked_magnitude;
    report.max_relative_discrepancy = std::max(report.max_relative_discrepancy, p.relative_discrepancy);
    report.points.push_back(p);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sparse anchor curves

enum class AnchorUnit { Force_N, Torque_Nmm, Stiffness_NperMM, Length_mm };

constexpr std::string_view to_string(AnchorUnit u) noexcept {
  switch (u) {
    case AnchorUnit::Force_N: return "N";
    case AnchorUnit::Torque_Nmm: return "Nmm";
    case AnchorUnit::Stiffness_NperMM: return "N/mm";
    case AnchorUnit::Length_mm: return "mm";
  }
  return "N";
}

inline AnchorUnit parse_anchor_unit(std::string_view s) {
  if (s == "N") return AnchorUnit::Force_N;
  if (s == "Nmm") return AnchorUnit::Torque_Nmm;
  if (s == "N/mm") return AnchorUnit::Stiffness_NperMM;
  if (s == "mm") return AnchorUnit::Length_mm;
  throw Error(Errc::InvalidArgument, "unknown anchor unit '" + std::string(s) + "'");
}

struct AnchorPoint {
  double theta = 0;
  double value = 0;
  bool operator==(const AnchorPoint&) const = default;
};

struct AnchorCurve {
  AnchorUnit unit = AnchorUnit::Force_N;
  std::vector<AnchorPoint> points;
  bool operator==(const AnchorCurve&) const = default;

  double theta_min() const { return points.front().theta; }
  double theta_max() const { return points.back().theta; }
};

inline void validate(const AnchorCurve& c) {
  if (c.points.size() < 2) throw Error(Errc::InvalidArgument, "anchor curve needs >= 2 breakpoints");
  for (std::size_t i = 1; i < c.points.size(); ++i)
    if (!(c.points[i].theta > c.points[i - 1].theta))
      throw Error(Errc::InvalidArgument, "anchor thetas must be strictly increasing");
}

inline double anchor_value(const AnchorCurve& c, double theta) {
  validate(c);
  detail::require_theta(theta, c.theta_min(), c.theta_max());
  const auto& pts = c.points;
  auto hi = std::lower_bound(pts.begin(), pts.end(), theta,
                             [](const AnchorPoint& p, double t) { return p.theta < t; });
  if (hi == pts.end()) return pts.back().value;
  if (hi->theta == theta || hi == pts.begin()) return hi->value;
  const auto lo = std::prev(hi);
  const double w = (theta - lo->theta) / (hi->theta - lo->theta);
  return lo->value + w * (hi->value - lo->value);
}

// ---------------------------------------------------------------------------
// Design models mixing closed-form fits and anchor curves

/// constant + linear*theta + quadratic*theta^2
struct QuadraticCurve {
  double constant = 0;
  double linear = 0;
  double quadratic = 0;
  bool operator==(const QuadraticCurve&) const = default;
};

using PropertyCurve = std::variant<QuadraticCurve, AnchorCurve>;

enum class Property { BlockedForce, HoldingTorque, SpringConstant, MinEnergyLength };

struct DesignModel {
  std::string id;
  HsaDesign design{};
  double theta_min = 0;
  double theta_max = 0;
  PropertyCurve blocked_force;
  PropertyCurve holding_torque;
  PropertyCurve spring_constant;
  PropertyCurve min_energy_length;

  const PropertyCurve& curve(Property p) const {
    switch (p) {
      case Property::BlockedForce: return blocked_force;
      case Property::HoldingTorque: return holding_torque;
      case Property::SpringConstant: return spring_constant;
      case Property::MinEnergyLength: return min_energy_length;
    }
    return blocked_force;
  }
};

constexpr AnchorUnit unit_of(Property p) noexcept {
  switch (p) {
    case Property::BlockedForce: return AnchorUnit::Force_N;
    case Property::HoldingTorque: return AnchorUnit::Torque_Nmm;
    case Property::SpringConstant: return AnchorUnit::Stiffness_NperMM;
    case Property::MinEnergyLength: return AnchorUnit::Length_mm;
  }
  return AnchorUnit::Force_N;
}

inline void validate(const DesignModel& m) {
  validate(m.design);
  if (!(m.theta_min <= m.theta_max)) throw Error(Errc::InvalidArgument, m.id + ": theta_min > theta_max");
  for (Property p : {Property::BlockedForce, Property::HoldingTorque, Property::SpringConstant,
                     Property::MinEnergyLength}) {
    if (const auto* a = std::get_if<AnchorCurve>(&m.curve(p))) {
      validate(*a);
      if (a->unit != unit_of(p)) throw Error(Errc::InvalidArgument, m.id + ": anchor unit mismatch");
      if (a->theta_min() > m.theta_min + detail::kThetaSlack ||
          a->theta_max() < m.theta_max - detail::kThetaSlack)
        throw Error(Errc::InvalidArgument, m.id + ": anchor curve does not span the theta range");
    }
  }
}

inline double evaluate(const DesignModel& m, Property p, double theta) {
  detail::require_theta(theta, m.theta_min, m.theta_max);
  theta = std::clamp(theta, m.theta_min, m.theta_max);
  return std::visit(
      [theta](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuadraticCurve>)
          return c.constant + (c.linear + c.quadratic * theta) * theta;
        else
          return anchor_value(c, theta);
      },
      m.curve(p));
}

inline DesignModel to_design_model(std::string id, const SpringFit& f) {
  DesignModel m;
  m.id = std::move(id);
  m.design = f.design;
  m.theta_min = f.theta_min;
  m.theta_max = f.theta_max;
  m.blocked_force = QuadraticCurve{0.0, f.force_linear, f.force_quadratic};
  m.holding_torque = QuadraticCurve{0.0, f.torque_linear, f.torque_quadratic};
  m.spring_constant = QuadraticCurve{f.rest_stiffness, f.stiffness_slope, 0.0};
  m.min_energy_length = QuadraticCurve{f.rest_length, f.length_slope, 0.0};
  return m;
}

/// Theta reaching a target minimum-energy length; requires an affine length law.
inline double theta_for_length(const DesignModel& m, double target_length_mm) {
  const auto* q = std::get_if<QuadraticCurve>(&m.min_energy_length);
  if (q == nullptr || q->quadratic != 0.0)
    throw Error(Errc::InvalidArgument, m.id + ": length law is not affine in theta");
  return theta_for_linear_length(q->linear, q->constant, m.theta_min, m.theta_max,
                                 target_length_mm);
}

}  // namespace hsa
