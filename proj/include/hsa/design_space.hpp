#pragma once

// Design parameters of a handed shearing auxetic (HSA) cylinder, the tabulated
// test envelopes for the characterised designs, and the coil-spring baseline
// the row study is compared against.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "hsa/error.hpp"

namespace hsa {

enum class Handedness { Left, Right };
enum class TrajectoryPoint { Closed, SemiOpen, Open };
enum class RotationSense { Clockwise, Counterclockwise };
enum class LengthChange { Shortens, Extends };

constexpr std::string_view to_string(Handedness h) noexcept {
  return h == Handedness::Left ? "left" : "right";
}

constexpr std::string_view to_string(TrajectoryPoint p) noexcept {
  switch (p) {
    case TrajectoryPoint::Closed: return "closed";
    case TrajectoryPoint::SemiOpen: return "semi-open";
    case TrajectoryPoint::Open: return "open";
  }
  return "closed";
}

inline Handedness parse_handedness(std::string_view s) {
  if (s == "left") return Handedness::Left;
  if (s == "right") return Handedness::Right;
  throw Error(Errc::InvalidArgument, "unknown handedness '" + std::string(s) + "'");
}

inline TrajectoryPoint parse_trajectory_point(std::string_view s) {
  if (s == "closed") return TrajectoryPoint::Closed;
  if (s == "semi-open" || s == "semiopen") return TrajectoryPoint::SemiOpen;
  if (s == "open") return TrajectoryPoint::Open;
  throw Error(Errc::InvalidArgument, "unknown trajectory point '" + std::string(s) + "'");
}

/// Normalised position along the auxetic trajectory: 0 maximally closed,
/// 1 maximally open.
constexpr double trajectory_coordinate(TrajectoryPoint p) noexcept {
  switch (p) {
    case TrajectoryPoint::Closed: return 0.0;
    case TrajectoryPoint::SemiOpen: return 0.5;
    case TrajectoryPoint::Open: return 1.0;
  }
  return 0.0;
}

struct HsaDesign {
  Handedness handedness = Handedness::Left;
  TrajectoryPoint trajectory_point = TrajectoryPoint::Closed;
  int rows = 4;
  double outer_diameter_mm = 21.0;
  double wall_thickness_mm = 2.0;
  double printed_length_mm = 75.0;
  int symmetry_order = 3;

  bool operator==(const HsaDesign&) const = default;
};

inline void validate(const HsaDesign& d) {
  if (d.rows < 1) throw Error(Errc::InvalidArgument, "rows must be >= 1");
  if (d.symmetry_order < 1) throw Error(Errc::InvalidArgument, "symmetry_order must be >= 1");
  if (!(d.outer_diameter_mm > 0) || !(d.wall_thickness_mm > 0) || !(d.printed_length_mm > 0))
    throw Error(Errc::InvalidArgument, "design lengths must be positive");
  if (!(d.wall_thickness_mm < d.outer_diameter_mm / 2))
    throw Error(Errc::InvalidArgument, "wall thickness must be below half the outer diameter");
}

struct TrajectoryPointSpec {
  TrajectoryPoint trajectory_point = TrajectoryPoint::Closed;
  int rows = 4;
  double theta_min_deg = 0;
  double theta_max_deg = 0;
  double theta_step_deg = 30;
  double printed_length_mm = 0;
  double cycling_min_mm = 0;
  double cycling_max_mm = 0;
  double zero_force_displacement_mm = 0;
  double trajectory_coordinate = 0;

  bool operator==(const TrajectoryPointSpec&) const = default;
};

inline void validate(const TrajectoryPointSpec& s) {
  if (s.rows < 1) throw Error(Errc::InvalidArgument, "rows must be >= 1");
  if (!(s.theta_min_deg <= s.theta_max_deg)) throw Error(Errc::InvalidArgument, "theta_min > theta_max");
  if (!(s.theta_step_deg > 0)) throw Error(Errc::InvalidArgument, "theta_step must be positive");
  if (!(s.printed_length_mm > 0)) throw Error(Errc::InvalidArgument, "printed length must be positive");
  if (!(s.cycling_min_mm <= s.cycling_max_mm)) throw Error(Errc::InvalidArgument, "cycling_min > cycling_max");
  if (!(s.zero_force_displacement_mm >= 0))
    throw Error(Errc::InvalidArgument, "zero-force displacement must be non-negative");
  if (!(s.trajectory_coordinate >= 0 && s.trajectory_coordinate <= 1))
    throw Error(Errc::InvalidArgument, "trajectory coordinate must lie in [0,1]");
}

/// The seven characterised design points. Closed 4-row carries the
/// trajectory-study envelope (0:30:90); the row study swept it to 180.
inline constexpr std::array<TrajectoryPointSpec, 7> kBuiltinSpecs{{
    {TrajectoryPoint::Closed, 4, 0, 90, 30, 75.0, 0.0, 20.0, 2.7, 0.0},
    {TrajectoryPoint::Closed, 6, 0, 180, 30, 89.0, 0.0, 19.4, 3.6, 0.0},
    {TrajectoryPoint::Closed, 8, 0, 180, 30, 100.0, 0.0, 31.7, 3.5, 0.0},
    {TrajectoryPoint::Closed, 10, 0, 180, 30, 112.0, 0.0, 41.8, 3.5, 0.0},
    {TrajectoryPoint::Closed, 12, 0, 180, 30, 124.0, 0.0, 60.0, 3.8, 0.0},
    {TrajectoryPoint::SemiOpen, 4, -90, 90, 30, 109.0, -3.4, 6.6, 1.1, 0.5},
    {TrajectoryPoint::Open, 4, -180, 0, 30, 122.2, -3.4, 0.0, 0.6, 1.0},
}};

inline std::optional<TrajectoryPointSpec> find_spec(std::span<const TrajectoryPointSpec> specs,
                                                    TrajectoryPoint point, int rows) {
  for (const auto& s : specs)
    if (s.trajectory_point == point && s.rows == rows) return s;
  return std::nullopt;
}

inline TrajectoryPointSpec builtin_spec(TrajectoryPoint point, int rows) {
  if (auto s = find_spec(kBuiltinSpecs, point, rows)) return *s;
  throw Error(Errc::UnknownDesignPoint, std::string(to_string(point)) + " with " +
                                            std::to_string(rows) + " rows is not tabulated");
}

/// Left-handed HSAs shorten under clockwise twist; right-handed ones mirror.
constexpr LengthChange rotation_effect(Handedness handedness, RotationSense sense) noexcept {
  const bool shortens = (handedness == Handedness::Left) == (sense == RotationSense::Clockwise);
  return shortens ? LengthChange::Shortens : LengthChange::Extends;
}

/// Wide beams wrapping the cylinder: one coil per symmetry arm per row.
constexpr int coil_count(const HsaDesign& design) noexcept {
  return design.symmetry_order * design.rows;
}

struct CoilSpringParams {
  double shear_modulus_n_per_mm2 = 0;  // G
  double wire_diameter_mm = 0;         // d
  double mean_coil_diameter_mm = 0;    // D
  double coil_count = 0;               // n_c
};

/// Helical spring rate G d^4 / (8 n_c D^3), in N/mm.
inline double coil_spring_constant(const CoilSpringParams& p) {
  if (!(p.shear_modulus_n_per_mm2 > 0) || !(p.wire_diameter_mm > 0) ||
      !(p.mean_coil_diameter_mm > 0) || !(p.coil_count > 0))
    throw Error(Errc::InvalidArgument, "coil spring parameters must be positive");
  const double d2 = p.wire_diameter_mm * p.wire_diameter_mm;
  const double D = p.mean_coil_diameter_mm;
  return p.shear_modulus_n_per_mm2 * d2 * d2 / (8.0 * p.coil_count * D * D * D);
}

/// Exponent of the empirical rest-stiffness vs row-count law.
inline constexpr double kRowStiffnessExponent = -1.4;

inline double rest_stiffness_estimate(int rows, int reference_rows, double reference_k0,
                                      double exponent = kRowStiffnessExponent) {
  if (rows < 1 || reference_rows < 1) throw Error(Errc::InvalidArgument, "row counts must be >= 1");
  if (!(reference_k0 > 0)) throw Error(Errc::InvalidArgument, "reference stiffness must be positive");
  return reference_k0 * std::pow(static_cast<double>(rows) / reference_rows, exponent);
}

}  // namespace hsa
