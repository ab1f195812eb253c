#pragma once

// Inverse design: which twist and holding torque does a requirement need on
// a given HSA model, and which servos can supply it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hsa/error.hpp"
#include "hsa/relaxation.hpp"
#include "hsa/spring_model.hpp"

namespace hsa {

enum class ActuationMode { Push, Pull, Bidirectional };

constexpr std::string_view to_string(ActuationMode m) noexcept {
  switch (m) {
    case ActuationMode::Push: return "push";
    case ActuationMode::Pull: return "pull";
    case ActuationMode::Bidirectional: return "bidirectional";
  }
  return "push";
}

struct ActuationRequirement {
  ActuationMode mode = ActuationMode::Push;
  double force_n = 0;
  double stroke_mm = 0;
  std::optional<double> stiffness_n_per_mm;
  std::optional<double> hold_duration_s;
};

inline void validate(const ActuationRequirement& r) {
  if (!(r.force_n > 0)) throw Error(Errc::InvalidArgument, "required force must be positive");
  if (!(r.stroke_mm >= 0)) throw Error(Errc::InvalidArgument, "required stroke must be non-negative");
  if (r.hold_duration_s && !(*r.hold_duration_s >= 0))
    throw Error(Errc::InvalidArgument, "hold duration must be non-negative");
}

struct ServoSpec {
  std::string name;
  double holding_torque_nmm = 0;
  double angle_range_deg = 0;
  std::optional<double> speed_dps;
  std::optional<double> mass_g;
  bool operator==(const ServoSpec&) const = default;
};

inline void validate(const ServoSpec& s) {
  if (!(s.holding_torque_nmm > 0) || !(s.angle_range_deg > 0))
    throw Error(Errc::InvalidArgument, "servo '" + s.name + "' needs positive torque and angle range");
}

struct FeasibilityReport {
  std::string design_id;
  HsaDesign design{};
  double required_theta_deg = 0;
  double required_theta_span_deg = 0;  // servo travel: |theta|, or theta+ - theta- when bidirectional
  double required_torque_nmm = 0;
  double achievable_force_n = 0;
  double achievable_stroke_mm = 0;
  bool feasible = false;
  std::optional<double> derated_force_n;
  std::vector<std::string> notes;
};

namespace detail {

inline constexpr double kMonotoneGridDeg = 0.1;

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// |F_b| must not decrease moving away from theta = 0 towards `extreme`.
inline bool force_magnitude_monotone(const DesignModel& m, double extreme) {
  const int steps = static_cast<int>(std::ceil(std::abs(extreme) / kMonotoneGridDeg));
  double prev = std::abs(evaluate(m, Property::BlockedForce, 0.0));
  for (int i = 1; i <= steps; ++i) {
    const double th = i == steps ? extreme : std::copysign(i * kMonotoneGridDeg, extreme);
    const double cur = std::abs(evaluate(m, Property::BlockedForce, th));
    if (cur < prev) return false;
    prev = cur;
  }
  return true;
}

// Smallest |theta| on [0, extreme] with |F_b| >= target, for monotone |F_b|.
inline double invert_force(const DesignModel& m, double extreme, double target) {
  double lo = 0, hi = extreme;
  for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(evaluate(m, Property::BlockedForce, mid)) >= target ? hi : lo) = mid;
  }
  return hi;
}

struct SideResult {
  double extreme = 0;
  double theta = 0;
  bool force_ok = false;
  double max_force = 0;
};

}  // namespace detail

/// Twist, torque and stroke needed for `req` on one design. Positive twist
/// pushes and negative twist pulls, so the mode selects which side of the
/// theta range is used. Infeasible reports name the binding constraint in
/// `notes` and quote the extreme of the range.
inline FeasibilityReport evaluate_design(const DesignModel& model, const ActuationRequirement& req,
                                         const RelaxationModel* relax = nullptr) {
  validate(req);
  validate(model);
  const bool has_push = model.theta_max > 0, has_pull = model.theta_min < 0;
  const bool want_push = req.mode != ActuationMode::Pull, want_pull = req.mode != ActuationMode::Push;
  if ((want_push && !has_push) || (want_pull && !has_pull))
    throw Error(Errc::ModeUnsupported, model.id + " cannot " + std::string(to_string(req.mode)));

  FeasibilityReport rep;
  rep.design_id = model.id;
  rep.design = model.design;
  rep.feasible = true;

  double retained = 1.0;
  if (relax != nullptr && req.hold_duration_s && *req.hold_duration_s > 0)
    retained = retained_fraction(*relax, *req.hold_duration_s);
  const double target = req.force_n / retained;

  std::vector<double> extremes;
  if (want_push) extremes.push_back(model.theta_max);
  if (want_pull) extremes.push_back(model.theta_min);

  std::vector<detail::SideResult> sides;
  double achievable = std::numeric_limits<double>::infinity();
  for (double extreme : extremes) {
    detail::SideResult side;
    side.extreme = extreme;
    side.theta = extreme;
    side.max_force = std::abs(evaluate(model, Property::BlockedForce, extreme));
    achievable = std::min(achievable, side.max_force);
    const char* name = extreme > 0 ? "push" : "pull";
    if (!detail::force_magnitude_monotone(model, extreme)) {
      rep.feasible = false;
      rep.notes.push_back(std::string(name) + ": blocked-force magnitude is not monotone in theta; rejected");
    } else if (side.max_force < target) {
      rep.feasible = false;
      rep.notes.push_back(std::string(name) + ": needs " + detail::fmt(target) + " N but reaches " +
                          detail::fmt(side.max_force) + " N at theta " + detail::fmt(extreme));
    } else {
      side.force_ok = true;
      side.theta = detail::invert_force(model, extreme, target);
    }
    sides.push_back(side);
  }
  rep.achievable_force_n = achievable;
  if (req.hold_duration_s) rep.derated_force_n = achievable * retained;
  if (retained < 1.0)
    rep.notes.push_back("force derated to " + detail::fmt(retained * 100) + "% after " +
                        detail::fmt(*req.hold_duration_s) + " s hold");

  const auto& widest = *std::max_element(sides.begin(), sides.end(), [](const auto& a, const auto& b) {
    return std::abs(a.theta) < std::abs(b.theta);
  });
  rep.required_theta_deg = widest.theta;
  rep.required_theta_span_deg = 0;
  for (const auto& s : sides) {
    rep.required_theta_span_deg += std::abs(s.theta);
    rep.required_torque_nmm =
        std::max(rep.required_torque_nmm, std::abs(evaluate(model, Property::HoldingTorque, s.theta)));
  }

  const double l_top = evaluate(model, Property::MinEnergyLength, want_push ? model.theta_max : 0.0);
  const double l_bottom = evaluate(model, Property::MinEnergyLength, want_pull ? model.theta_min : 0.0);
  rep.achievable_stroke_mm = std::abs(l_top - l_bottom);
  if (rep.achievable_stroke_mm < req.stroke_mm) {
    rep.feasible = false;
    rep.notes.push_back("stroke: needs " + detail::fmt(req.stroke_mm) + " mm but the length span is " +
                        detail::fmt(rep.achievable_stroke_mm) + " mm");
  }

  if (req.stiffness_n_per_mm) {
    for (const auto& s : sides) {
      const double k = evaluate(model, Property::SpringConstant, s.theta);
      if (k < *req.stiffness_n_per_mm) {
        rep.feasible = false;
        rep.notes.push_back("stiffness: " + detail::fmt(k) + " N/mm at theta " + detail::fmt(s.theta) +
                            " is below the required " + detail::fmt(*req.stiffness_n_per_mm) + " N/mm");
      }
    }
  }
  return rep;
}

inline constexpr double kDefaultTorqueMargin = 1.5;

/// Servos with torque >= margin * required torque and enough travel, ordered
/// by torque surplus, then mass (unknown mass last), then name.
inline std::vector<ServoSpec> rank_servos(std::span<const ServoSpec> catalog, const FeasibilityReport& report,
                                          double torque_margin = kDefaultTorqueMargin) {
  if (catalog.empty()) throw Error(Errc::EmptyCatalog, "servo catalog is empty");
  if (!report.feasible) throw Error(Errc::InvalidArgument, "cannot rank servos for an infeasible design");
  if (!(torque_margin >= 1)) throw Error(Errc::InvalidArgument, "torque margin must be >= 1");
  const double need = torque_margin * report.required_torque_nmm;
  std::vector<ServoSpec> out;
  for (const auto& s : catalog) {
    validate(s);
    if (s.holding_torque_nmm >= need && s.angle_range_deg >= report.required_theta_span_deg) out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(), [need](const ServoSpec& a, const ServoSpec& b) {
    const double sa = a.holding_torque_nmm - need, sb = b.holding_torque_nmm - need;
    if (sa != sb) return sa < sb;
    if (a.mass_g.has_value() != b.mass_g.has_value()) return a.mass_g.has_value();
    if (a.mass_g && *a.mass_g != *b.mass_g) return *a.mass_g < *b.mass_g;
    return a.name < b.name;
  });
  return out;
}

struct TradeoffRow {
  std::string design_id;
  int rows = 0;
  double theta_deg = 0;  // extreme of largest magnitude
  double throw_mm = 0;
  double blocked_force_n = 0;
  double spring_constant_n_per_mm = 0;
  double holding_torque_nmm = 0;
};

/// Throw against stiffness, force and torque, each design evaluated at its
/// theta extreme of largest magnitude.
inline std::vector<TradeoffRow> tradeoff_table(std::span<const DesignModel> models) {
  if (models.empty()) throw Error(Errc::InvalidArgument, "no designs given");
  std::vector<TradeoffRow> rows;
  for (const auto& m : models) {
    const double th = std::abs(m.theta_max) >= std::abs(m.theta_min) ? m.theta_max : m.theta_min;
    const double rest = std::clamp(0.0, m.theta_min, m.theta_max);
    TradeoffRow r;
    r.design_id = m.id;
    r.rows = m.design.rows;
    r.theta_deg = th;
    r.throw_mm = std::abs(evaluate(m, Property::MinEnergyLength, th) - evaluate(m, Property::MinEnergyLength, rest));
    r.blocked_force_n = std::abs(evaluate(m, Property::BlockedForce, th));
    r.spring_constant_n_per_mm = evaluate(m, Property::SpringConstant, th);
    r.holding_torque_nmm = std::abs(evaluate(m, Property::HoldingTorque, th));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<TradeoffRow> tradeoff_table(std::span<const SpringFit> fits) {
  std::vector<DesignModel> models;
  for (const auto& f : fits)
    models.push_back(to_design_model(std::string(to_string(f.design.trajectory_point)) + "-" +
                                         std::to_string(f.design.rows),
                                     f));
  return tradeoff_table(models);
}

}  // namespace hsa
