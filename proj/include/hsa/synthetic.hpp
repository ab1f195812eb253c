#pragma once

// Synthetic test records with known ground truth, used for fixtures and
// round-trip tests.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hsa/design_space.hpp"
#include "hsa/error.hpp"
#include "hsa/fitting.hpp"
#include "hsa/spring_model.hpp"

namespace hsa {

/// Standard normal deviates from a fixed engine. std::normal_distribution is
/// implementation-defined, so Box-Muller is done by hand to keep seeded
/// output identical across standard libraries.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    const double u1 = unit_open(), u2 = unit_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  // Uniform on (0, 1].
  double unit_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  std::mt19937_64 engine_;
};

struct CycleLogOptions {
  std::vector<double> thetas;       // empty: the design's tabulated grid, else 0..theta_max by 30
  int cycles_per_theta = 10;
  double sample_rate_hz = 50;
  double speed_mm_s = 20;
  double range_mm = 0;              // 0: tabulated cycling span, else 20 mm
  double noise_fraction = 0;        // relative standard deviation on force and torque
  std::uint64_t seed = 42;
};

namespace detail {
inline std::string meta_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}
}  // namespace detail

/// Cycling log whose per-cycle measurements reproduce `fit` exactly when
/// noise is off. Displacement is measured from the fit's rest length; at each
/// twist the force follows k (x - dL) + c (x - dL)^2 with dL = C_l theta, and
/// c chosen so the force at x = 0 equals the blocked force. Torque is held at
/// the holding torque. Cycles run 0 -> range -> 0 at constant speed.
inline CycleTestRecord synthesize_cycle_log(const SpringFit& fit, const CycleLogOptions& opt = {}) {
  validate(fit);
  if (opt.cycles_per_theta < 2) throw Error(Errc::InvalidArgument, "need at least two cycles per theta");
  if (!(opt.sample_rate_hz > 0) || !(opt.speed_mm_s > 0))
    throw Error(Errc::InvalidArgument, "sample rate and speed must be positive");
  if (!(opt.noise_fraction >= 0)) throw Error(Errc::InvalidArgument, "noise fraction must be non-negative");

  const auto spec = find_spec(kBuiltinSpecs, fit.design.trajectory_point, fit.design.rows);
  double range = opt.range_mm;
  if (range <= 0) range = spec ? spec->cycling_max_mm - spec->cycling_min_mm : 20.0;
  if (!(range > 0)) throw Error(Errc::InvalidArgument, "cycling range must be positive");

  std::vector<double> thetas = opt.thetas;
  if (thetas.empty())
    for (double th = fit.theta_min; th <= fit.theta_max + 1e-9; th += 30.0) thetas.push_back(th);
  for (double th : thetas) detail::require_theta(th, fit.theta_min, fit.theta_max);

  const double step_mm = opt.speed_mm_s / opt.sample_rate_hz;
  const int half = static_cast<int>(std::ceil(range / step_mm - 1e-9));
  const double dx = range / half;

  CycleTestRecord rec;
  rec.set_meta("generator", "synthetic");
  rec.set_meta("trajectory_point", std::string(to_string(fit.design.trajectory_point)));
  rec.set_meta("rows", std::to_string(fit.design.rows));
  rec.set_meta("handedness", std::string(to_string(fit.design.handedness)));
  rec.set_meta("symmetry_order", std::to_string(fit.design.symmetry_order));
  rec.set_meta("outer_diameter_mm", detail::meta_number(fit.design.outer_diameter_mm));
  rec.set_meta("wall_thickness_mm", detail::meta_number(fit.design.wall_thickness_mm));
  rec.set_meta("printed_length_mm", detail::meta_number(fit.design.printed_length_mm));
  rec.set_meta("reference_length_mm", detail::meta_number(fit.rest_length));
  rec.set_meta("sample_rate_hz", detail::meta_number(opt.sample_rate_hz));
  rec.set_meta("seed", std::to_string(opt.seed));
  rec.set_meta("noise_fraction", detail::meta_number(opt.noise_fraction));

  GaussianSource noise(opt.seed);
  std::size_t index = 0;
  for (double th : thetas) {
    const double k = spring_constant(fit, th);
    if (!(k > 0)) throw Error(Errc::InvalidArgument, "spring constant must be positive at every theta");
    const double fb = blocked_force(fit, th);
    const double tau = holding_torque(fit, th);
    const double dl = fit.length_slope * th;
    const double c = dl == 0.0 ? 0.0 : (fb + k * dl) / (dl * dl);
    for (int cyc = 0; cyc < opt.cycles_per_theta; ++cyc) {
      for (int j = 0; j <= 2 * half; ++j) {
        const double x = (j <= half ? j : 2 * half - j) * dx;
        const double u = x - dl;
        double force = k * u + c * u * u;
        double torque = tau;
        if (opt.noise_fraction > 0) {
          force *= 1.0 + opt.noise_fraction * noise();
          torque *= 1.0 + opt.noise_fraction * noise();
        }
        rec.samples.push_back({static_cast<double>(index) / opt.sample_rate_hz, x, force, torque, th});
        ++index;
      }
    }
  }
  return rec;
}

/// Rotation-step record for the zero-force displacement procedures. Each
/// dwell sweeps displacement across a linear force law whose zero sits at
/// `offset_mm` per step: at step i the zero is i * offset for Closed and
/// SemiOpen records, and for Open records the steps run from rest to the
/// extreme so the zero at the extreme is steps * offset.
inline CycleTestRecord synthesize_zero_force_record(TrajectoryPoint point, double offset_mm, int steps,
                                                    double theta_step_deg = 30.0, double stiffness = 2.0) {
  if (steps < 1) throw Error(Errc::InvalidArgument, "need at least one rotation step");
  if (!(stiffness > 0)) throw Error(Errc::InvalidArgument, "stiffness must be positive");
  const double sense = point == TrajectoryPoint::Open ? -1.0 : 1.0;
  const double start = point == TrajectoryPoint::SemiOpen ? -0.5 * steps * theta_step_deg : 0.0;
  CycleTestRecord rec;
  rec.set_meta("generator", "synthetic-zero-force");
  rec.set_meta("trajectory_point", std::string(to_string(point)));
  std::size_t index = 0;
  constexpr int kHalfSweep = 20;
  constexpr double kSweepStep = 0.1;
  for (int i = 0; i <= steps; ++i) {
    const double theta = start + sense * i * theta_step_deg;
    const double zero = i * offset_mm;
    for (int j = -kHalfSweep; j <= kHalfSweep; ++j) {
      // Offset the grid by a third of a step so the zero falls between samples.
      const double x = zero + (j + 1.0 / 3.0) * kSweepStep;
      rec.samples.push_back({static_cast<double>(index) / 50.0, x, stiffness * (x - zero), 0.0, theta});
      ++index;
    }
  }
  return rec;
}

}  // namespace hsa
