#pragma once

// Stress relaxation of a held actuator as a Prony series:
//   F(t) = F_inf + sum_i a_i exp(-t / tau_i),  a_i >= 0, tau_i > 0
// with t = 0 at the force peak.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hsa/error.hpp"
#include "hsa/least_squares.hpp"

namespace hsa {

struct RelaxationMode {
  double amplitude_n = 0;
  double tau_s = 0;
  bool operator==(const RelaxationMode&) const = default;
};

struct RelaxationModel {
  double plateau_n = 0;
  std::vector<RelaxationMode> modes;
  double reference_extension_mm = 0;
  double reference_peak_n = 0;
  bool operator==(const RelaxationModel&) const = default;
};

inline void validate(const RelaxationModel& m) {
  double sum = m.plateau_n;
  for (const auto& mode : m.modes) {
    if (!(mode.tau_s > 0) || !std::isfinite(mode.tau_s))
      throw Error(Errc::InvalidArgument, "relaxation time constants must be positive");
    if (!(mode.amplitude_n >= 0) || !std::isfinite(mode.amplitude_n))
      throw Error(Errc::InvalidArgument, "relaxation amplitudes must be non-negative");
    sum += mode.amplitude_n;
  }
  if (!(std::abs(sum - m.reference_peak_n) <= 1e-6 * std::max(1.0, std::abs(m.reference_peak_n))))
    throw Error(Errc::InvalidArgument, "plateau plus amplitudes must equal the reference peak");
}

inline RelaxationModel make_relaxation_model(double plateau_n, std::vector<RelaxationMode> modes,
                                             double reference_extension_mm = 0) {
  RelaxationModel m;
  m.plateau_n = plateau_n;
  m.reference_peak_n = plateau_n;
  for (const auto& mode : modes) m.reference_peak_n += mode.amplitude_n;
  m.modes = std::move(modes);
  m.reference_extension_mm = reference_extension_mm;
  validate(m);
  return m;
}

/// Written as peak minus the relaxed amount so that F(0) is the peak exactly.
inline double force_at_time(const RelaxationModel& m, double t_s) {
  if (!(t_s >= 0)) throw Error(Errc::InvalidArgument, "time must be non-negative");
  double relaxed = 0;
  for (const auto& mode : m.modes) relaxed += mode.amplitude_n * -std::expm1(-t_s / mode.tau_s);
  return m.reference_peak_n - relaxed;
}

inline double retained_fraction(const RelaxationModel& m, double t_s) {
  if (!(m.reference_peak_n > 0)) throw Error(Errc::InvalidArgument, "reference peak must be positive");
  return force_at_time(m, t_s) / m.reference_peak_n;
}

/// Longest hold keeping at least `min_fraction` of the peak, to 1 ms.
/// Empty when the plateau alone already satisfies it.
inline std::optional<double> max_hold_time(const RelaxationModel& m, double min_fraction) {
  if (!(min_fraction > 0 && min_fraction < 1))
    throw Error(Errc::InvalidArgument, "min_fraction must lie in (0,1)");
  double total = 0, longest_tau = 0;
  for (const auto& mode : m.modes) {
    total += mode.amplitude_n;
    longest_tau = std::max(longest_tau, mode.tau_s);
  }
  if ((m.reference_peak_n - total) / m.reference_peak_n >= min_fraction) return std::nullopt;
  double lo = 0, hi = std::max(longest_tau, 1e-3);
  while (retained_fraction(m, hi) >= min_fraction) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (retained_fraction(m, mid) >= min_fraction ? lo : hi) = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Fitting

struct TimedForce {
  double time_s = 0;
  double force_n = 0;
};

struct TimeWindow {
  double start_s = 0;
  double end_s = 0;
};

struct RelaxationFitOptions {
  int n_modes = 2;
  /// One window per mode: each mode's time constant comes from a
  /// single-exponential fit over its window, amplitudes and plateau are then
  /// solved jointly. Without windows all parameters are refined together.
  std::optional<std::vector<TimeWindow>> windows;
  double reference_extension_mm = 0;
};

namespace detail {

inline double relaxed_shape(double t, double tau) { return -std::expm1(-t / tau); }

struct AmplitudeSolution {
  std::vector<double> amplitudes;
  double sse = std::numeric_limits<double>::infinity();
};

// Non-negative amplitudes for fixed time constants, enumerating active sets
// (n_modes <= 2 keeps this exhaustive and exact).
inline AmplitudeSolution amplitudes_for(std::span<const TimedForce> series, std::span<const double> taus) {
  const double peak = series.front().force_n;
  const auto n = static_cast<Eigen::Index>(series.size());
  const std::size_t k = taus.size();
  Eigen::VectorXd drop(n);
  for (Eigen::Index j = 0; j < n; ++j) drop(j) = peak - series[static_cast<std::size_t>(j)].force_n;

  AmplitudeSolution best;
  best.amplitudes.assign(k, 0.0);
  best.sse = drop.squaredNorm();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (1u << i)) active.push_back(i);
    Eigen::MatrixXd g(n, static_cast<Eigen::Index>(active.size()));
    for (Eigen::Index j = 0; j < n; ++j)
      for (std::size_t c = 0; c < active.size(); ++c)
        g(j, static_cast<Eigen::Index>(c)) = relaxed_shape(series[static_cast<std::size_t>(j)].time_s, taus[active[c]]);
    Eigen::VectorXd a;
    try {
      a = solve_least_squares(g, drop);
    } catch (const Error&) {
      continue;
    }
    if ((a.array() < 0).any()) continue;
    const double sse = (g * a - drop).squaredNorm();
    if (sse < best.sse) {
      best.sse = sse;
      best.amplitudes.assign(k, 0.0);
      for (std::size_t c = 0; c < active.size(); ++c) best.amplitudes[active[c]] = a(static_cast<Eigen::Index>(c));
    }
  }
  return best;
}

inline RelaxationModel assemble(std::span<const TimedForce> series, std::span<const double> taus,
                                std::span<const double> amplitudes, double extension) {
  RelaxationModel m;
  m.reference_peak_n = series.front().force_n;
  m.reference_extension_mm = extension;
  double total = 0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    m.modes.push_back({amplitudes[i], taus[i]});
    total += amplitudes[i];
  }
  std::sort(m.modes.begin(), m.modes.end(),
            [](const RelaxationMode& a, const RelaxationMode& b) { return a.tau_s < b.tau_s; });
  m.plateau_n = m.reference_peak_n - total;
  return m;
}

// Single exponential c*exp(-t/tau) over a window, by least squares in ln F.
inline double window_time_constant(std::span<const TimedForce> series, const TimeWindow& w) {
  std::vector<TimedForce> pts;
  for (const auto& p : series)
    if (p.time_s >= w.start_s && p.time_s <= w.end_s) {
      if (!(p.force_n > 0)) throw Error(Errc::FitDivergence, "non-positive force inside a fit window");
      pts.push_back(p);
    }
  if (pts.size() < 2) throw Error(Errc::InvalidArgument, "fit window holds fewer than two points");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pts.size()), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) << pts[i].time_s, 1.0;
    y(static_cast<Eigen::Index>(i)) = std::log(pts[i].force_n);
  }
  const double slope = solve_least_squares(x, y)(0);
  if (!(slope < 0)) throw Error(Errc::NonDecreasingSeries, "no decay inside fit window");
  return -1.0 / slope;
}

inline RelaxationModel fit_sequential(std::span<const TimedForce> series, std::span<const TimeWindow> windows,
                                      double extension) {
  std::vector<double> taus;
  for (const auto& w : windows) taus.push_back(window_time_constant(series, w));
  const auto sol = amplitudes_for(series, taus);
  return assemble(series, taus, sol.amplitudes, extension);
}

// Contiguous windows holding roughly equal numbers of points.
inline std::vector<TimeWindow> default_windows(std::span<const TimedForce> series, int n_modes) {
  std::vector<TimeWindow> w;
  const std::size_t n = series.size();
  for (int i = 0; i < n_modes; ++i) {
    const std::size_t b = (n - 1) * static_cast<std::size_t>(i) / static_cast<std::size_t>(n_modes);
    const std::size_t e = (n - 1) * static_cast<std::size_t>(i + 1) / static_cast<std::size_t>(n_modes);
    w.push_back({series[b].time_s, series[e].time_s});
  }
  return w;
}

}  // namespace detail

/// Fits a plateau plus `n_modes` exponential modes to a hold test starting
/// at the force peak (t = 0). The joint fit is seeded by the windowed
/// sequential estimate and a grid of time constants, then refined by
/// Levenberg-Marquardt in log-parameters.
inline RelaxationModel fit_relaxation(std::span<const TimedForce> series, const RelaxationFitOptions& opt = {}) {
  if (opt.n_modes < 1 || opt.n_modes > 2) throw Error(Errc::InvalidArgument, "n_modes must be 1 or 2");
  const auto k = static_cast<std::size_t>(opt.n_modes);
  if (series.size() < 2 * k + 1)
    throw Error(Errc::InvalidArgument, "need at least " + std::to_string(2 * k + 1) + " points");
  if (series.front().time_s != 0.0) throw Error(Errc::InvalidArgument, "series must start at t = 0 (the peak)");
  for (std::size_t i = 1; i < series.size(); ++i)
    if (!(series[i].time_s > series[i - 1].time_s))
      throw Error(Errc::NonMonotoneTime, "hold-test times must be strictly increasing");
  const double peak = series.front().force_n;
  if (std::none_of(series.begin(), series.end(), [&](const TimedForce& p) { return p.force_n < peak; }))
    throw Error(Errc::NonDecreasingSeries, "force never drops below its initial value");

  if (opt.windows) {
    if (opt.windows->size() != k) throw Error(Errc::InvalidArgument, "need one window per mode");
    auto m = detail::fit_sequential(series, *opt.windows, opt.reference_extension_mm);
    validate(m);
    return m;
  }

  // Candidate starting points: (taus, amplitudes, sse).
  struct Start {
    std::vector<double> taus, amps;
    double sse;
  };
  std::vector<Start> starts;
  try {
    auto seq = detail::fit_sequential(series, detail::default_windows(series, opt.n_modes), 0);
    Start s;
    for (const auto& mode : seq.modes) {
      s.taus.push_back(mode.tau_s);
      s.amps.push_back(mode.amplitude_n);
    }
    s.sse = detail::amplitudes_for(series, s.taus).sse;
    starts.push_back(std::move(s));
  } catch (const Error&) {
    // the grid below still seeds the fit
  }
  const double t_small = series[1].time_s, t_large = series.back().time_s;
  constexpr int kGrid = 15;
  std::vector<double> grid;
  for (int i = 0; i < kGrid; ++i)
    grid.push_back(0.5 * t_small * std::pow(4.0 * t_large / t_small, static_cast<double>(i) / (kGrid - 1)));
  auto add_start = [&](std::vector<double> taus) {
    const auto sol = detail::amplitudes_for(series, taus);
    starts.push_back({std::move(taus), sol.amplitudes, sol.sse});
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (k == 1)
      add_start({grid[i]});
    else
      for (std::size_t j = i + 1; j < grid.size(); ++j) add_start({grid[i], grid[j]});
  }
  std::sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) { return a.sse < b.sse; });
  if (starts.size() > 4) starts.resize(4);

  const double drop_scale = std::max(peak - std::min_element(series.begin(), series.end(),
                                                             [](const TimedForce& a, const TimedForce& b) {
                                                               return a.force_n < b.force_n;
                                                             })->force_n,
                                     1e-12);
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(series.size()));
    for (std::size_t j = 0; j < series.size(); ++j) {
      double relaxed = 0;
      for (std::size_t i = 0; i < k; ++i)
        relaxed += std::exp(p(static_cast<Eigen::Index>(2 * i))) *
                   detail::relaxed_shape(series[j].time_s, std::exp(p(static_cast<Eigen::Index>(2 * i + 1))));
      r(static_cast<Eigen::Index>(j)) = peak - relaxed - series[j].force_n;
    }
    return r;
  };

  std::optional<LmResult> best;
  for (const auto& s : starts) {
    Eigen::VectorXd p0(static_cast<Eigen::Index>(2 * k));
    for (std::size_t i = 0; i < k; ++i) {
      p0(static_cast<Eigen::Index>(2 * i)) = std::log(std::max(s.amps[i], 1e-6 * drop_scale));
      p0(static_cast<Eigen::Index>(2 * i + 1)) = std::log(s.taus[i]);
    }
    auto res = levenberg_marquardt(residuals, p0);
    if (std::isfinite(res.cost) && res.params.allFinite() && (!best || res.cost < best->cost)) best = res;
  }
  if (!best) throw Error(Errc::FitDivergence, "relaxation fit did not converge");

  std::vector<double> taus, amps;
  for (std::size_t i = 0; i < k; ++i) {
    amps.push_back(std::exp(best->params(static_cast<Eigen::Index>(2 * i))));
    taus.push_back(std::exp(best->params(static_cast<Eigen::Index>(2 * i + 1))));
  }
  auto m = detail::assemble(series, taus, amps, opt.reference_extension_mm);
  for (const auto& mode : m.modes)
    if (!std::isfinite(mode.tau_s) || !std::isfinite(mode.amplitude_n) || !(mode.tau_s > 0))
      throw Error(Errc::FitDivergence, "relaxation fit produced invalid parameters");
  validate(m);
  return m;
}

}  // namespace hsa
