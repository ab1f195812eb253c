// hsa: fit cycling logs, query fitted HSA models, size servos and fit
// stress-relaxation data.
//
// Exit status: 0 success, 1 domain failure (fit failure, infeasible
// requirement, query out of range), 2 usage, input or I/O error.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsa/hsa.hpp"

namespace fs = std::filesystem;
using hsa::io::format_number;

namespace {

constexpr int kUsageStatus = 2;

std::string default_data_path(const char* name) {
#ifdef HSA_DATA_DIR
  return (fs::path(HSA_DATA_DIR) / name).string();
#else
  return (fs::path("data") / name).string();
#endif
}

hsa::TorqueOrder parse_torque_order(const std::string& s) {
  if (s == "linear") return hsa::TorqueOrder::Linear;
  if (s == "quadratic") return hsa::TorqueOrder::Quadratic;
  throw hsa::Error(hsa::Errc::InvalidArgument, "torque order must be 'linear' or 'quadratic'");
}

const hsa::io::TableEntry& require_entry(const hsa::io::ParameterTable& t, const std::string& id) {
  if (const auto* e = t.find(id)) return *e;
  throw hsa::Error(hsa::Errc::UnknownDesign, "design '" + id + "' is not in the table");
}

std::string design_id_for(const hsa::CycleTestRecord& log, const hsa::HsaDesign& d) {
  if (auto id = log.meta("design_id")) return *id;
  return std::string(hsa::to_string(d.trajectory_point)) + "-" + std::to_string(d.rows);
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::vector<std::string> logs;
  std::string torque_order = "linear";
  std::string output;
  bool keep_first = false;
};

int run_fit(const FitArgs& a) {
  if (a.logs.empty()) throw hsa::Error(hsa::Errc::InvalidArgument, "no logs given");
  const auto order = parse_torque_order(a.torque_order);
  hsa::io::ParameterTable table;
  for (const auto& path : a.logs) {
    const auto log = hsa::io::load_test_log(path);
    const auto design = hsa::design_from_metadata(log);
    const auto id = design_id_for(log, design);
    if (table.find(id)) throw hsa::Error(hsa::Errc::InvalidArgument, "two logs describe design '" + id + "'");
    const auto result = hsa::fit_test_log(log, hsa::reference_length_from_metadata(log), order, design, !a.keep_first);
    table.entries.push_back({id, result.fit});
  }
  // Nothing is written unless every log fitted.
  hsa::io::write_file_atomic(a.output, hsa::io::to_text(table));

  std::cout << "design,A,B,R2_blocked,C_tau,D_tau,R2_torque,C_k,k0,R2_k,C_l,L0,R2_length\n";
  for (const auto& e : table.entries) {
    const auto& f = std::get<hsa::SpringFit>(e.value);
    std::cout << e.id;
    for (double v : {f.force_quadratic, f.force_linear, f.r2_blocked, f.torque_linear, f.torque_quadratic, f.r2_torque,
                     f.stiffness_slope, f.rest_stiffness, f.r2_stiffness, f.length_slope, f.rest_length, f.r2_length})
      std::cout << ',' << format_number(v, 6);
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// predict / report

std::vector<double> theta_grid(double lo, double hi, double step) {
  if (!(step > 0)) throw hsa::Error(hsa::Errc::InvalidArgument, "step must be positive");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g;
  for (std::size_t i = 0; i < n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

std::string sweep_csv(const hsa::DesignModel& m, double step) {
  std::ostringstream os;
  os << "theta_deg,blocked_force_N,spring_constant_N_per_mm,min_energy_length_mm,holding_torque_Nmm\n";
  for (double th : theta_grid(m.theta_min, m.theta_max, step)) {
    os << format_number(th);
    for (auto p : {hsa::Property::BlockedForce, hsa::Property::SpringConstant, hsa::Property::MinEnergyLength,
                   hsa::Property::HoldingTorque})
      os << ',' << format_number(hsa::evaluate(m, p, th));
    os << '\n';
  }
  return os.str();
}

struct PredictArgs {
  std::string table;
  std::string design;
  std::optional<double> theta, length;
  std::string sweep;
  double step = 1.0;
};

int run_predict(const PredictArgs& a) {
  const auto table = hsa::io::load_parameter_table(a.table);
  const auto model = table.model(require_entry(table, a.design));
  if (a.theta.has_value() == a.length.has_value() && a.sweep.empty())
    throw hsa::Error(hsa::Errc::InvalidArgument, "give exactly one of --theta or --length");
  if (a.theta && a.length) throw hsa::Error(hsa::Errc::InvalidArgument, "give exactly one of --theta or --length");

  if (a.theta || a.length) {
    const double th = a.theta ? *a.theta : hsa::theta_for_length(model, *a.length);
    const double fb = hsa::evaluate(model, hsa::Property::BlockedForce, th);
    const double k = hsa::evaluate(model, hsa::Property::SpringConstant, th);
    const double len = hsa::evaluate(model, hsa::Property::MinEnergyLength, th);
    const double tau = hsa::evaluate(model, hsa::Property::HoldingTorque, th);
    std::cout << "design " << model.id << '\n'
              << "theta_deg " << format_number(th) << '\n'
              << "blocked_force_N " << format_number(fb) << '\n'
              << "spring_constant_N_per_mm " << format_number(k) << '\n'
              << "min_energy_length_mm " << format_number(len) << '\n'
              << "holding_torque_Nmm " << format_number(tau) << '\n';
  }
  if (!a.sweep.empty()) hsa::io::write_file_atomic(a.sweep, sweep_csv(model, a.step));
  return 0;
}

struct ReportArgs {
  std::string table;
  std::string out_dir;
  double step = 1.0;
};

int run_report(const ReportArgs& a) {
  const auto table = hsa::io::load_parameter_table(a.table);
  const auto models = table.models();
  if (models.empty()) throw hsa::Error(hsa::Errc::MalformedTable, "table has no designs");
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw hsa::Error(hsa::Errc::Io, "cannot create " + a.out_dir);
  for (const auto& m : models) hsa::io::write_file_atomic(fs::path(a.out_dir) / (m.id + ".csv"), sweep_csv(m, a.step));

  std::ostringstream os;
  os << "design,rows,theta_deg,throw_mm,blocked_force_N,spring_constant_N_per_mm,holding_torque_Nmm\n";
  for (const auto& r : hsa::tradeoff_table(models))
    os << r.design_id << ',' << r.rows << ',' << format_number(r.theta_deg) << ',' << format_number(r.throw_mm) << ','
       << format_number(r.blocked_force_n) << ',' << format_number(r.spring_constant_n_per_mm) << ','
       << format_number(r.holding_torque_nmm) << '\n';
  hsa::io::write_file_atomic(fs::path(a.out_dir) / "tradeoff.csv", os.str());
  std::cout << os.str();
  return 0;
}

// ---------------------------------------------------------------------------
// select-motor

struct SelectArgs {
  std::string table = default_data_path("reference_fits.hsa");
  std::string catalog = default_data_path("servo_catalog.csv");
  std::optional<double> push, pull, force;
  bool bidirectional = false;
  double stroke = 0;
  std::optional<double> stiffness, hold;
  std::string relaxation;
  double margin = hsa::kDefaultTorqueMargin;
};

hsa::RelaxationModel load_relaxation(const std::string& path) {
  std::istringstream in(hsa::io::read_file(path));
  return hsa::io::read_relaxation_model(in);
}

int run_select(const SelectArgs& a) {
  hsa::ActuationRequirement req;
  const int modes = int(a.push.has_value()) + int(a.pull.has_value()) + int(a.bidirectional);
  if (modes != 1) throw hsa::Error(hsa::Errc::InvalidArgument, "give exactly one of --push, --pull, --bidirectional");
  if (a.bidirectional) {
    if (!a.force) throw hsa::Error(hsa::Errc::InvalidArgument, "--bidirectional needs --force");
    req.mode = hsa::ActuationMode::Bidirectional;
    req.force_n = *a.force;
  } else {
    if (a.force) throw hsa::Error(hsa::Errc::InvalidArgument, "--force only applies to --bidirectional");
    req.mode = a.push ? hsa::ActuationMode::Push : hsa::ActuationMode::Pull;
    req.force_n = a.push ? *a.push : *a.pull;
  }
  req.stroke_mm = a.stroke;
  req.stiffness_n_per_mm = a.stiffness;
  req.hold_duration_s = a.hold;
  hsa::validate(req);
  if (a.hold && a.relaxation.empty()) throw hsa::Error(hsa::Errc::InvalidArgument, "--hold needs --relaxation");
  std::optional<hsa::RelaxationModel> relax;
  if (!a.relaxation.empty()) relax = load_relaxation(a.relaxation);

  const auto table = hsa::io::load_parameter_table(a.table);
  std::istringstream cat_in(hsa::io::read_file(a.catalog));
  const auto catalog = hsa::io::read_servo_catalog(cat_in);

  std::cout << "requirement: " << hsa::to_string(req.mode) << ' ' << format_number(req.force_n) << " N, stroke "
            << format_number(req.stroke_mm) << " mm";
  if (req.stiffness_n_per_mm) std::cout << ", stiffness >= " << format_number(*req.stiffness_n_per_mm) << " N/mm";
  if (req.hold_duration_s) std::cout << ", hold " << format_number(*req.hold_duration_s) << " s";
  std::cout << '\n';

  std::optional<hsa::FeasibilityReport> best;
  for (const auto& m : table.models()) {
    std::cout << m.id << ": ";
    hsa::FeasibilityReport rep;
    try {
      rep = hsa::evaluate_design(m, req, relax ? &*relax : nullptr);
    } catch (const hsa::Error& e) {
      if (e.code() != hsa::Errc::ModeUnsupported) throw;
      std::cout << "mode unsupported\n";
      continue;
    }
    std::cout << (rep.feasible ? "feasible" : "infeasible") << ", theta " << format_number(rep.required_theta_deg, 6)
              << " deg, span " << format_number(rep.required_theta_span_deg, 6) << " deg, torque "
              << format_number(rep.required_torque_nmm, 6) << " N mm, max force "
              << format_number(rep.achievable_force_n, 6) << " N, stroke " << format_number(rep.achievable_stroke_mm, 6)
              << " mm";
    if (rep.derated_force_n) std::cout << ", derated force " << format_number(*rep.derated_force_n, 6) << " N";
    std::cout << '\n';
    for (const auto& n : rep.notes) std::cout << "  " << n << '\n';
    if (rep.feasible && (!best || rep.required_torque_nmm < best->required_torque_nmm)) best = rep;
  }
  if (!best) throw hsa::Error(hsa::Errc::NoFeasibleDesign, "no design in the table meets the requirement");

  std::cout << "selected: " << best->design_id << '\n';
  const auto servos = hsa::rank_servos(catalog, *best, a.margin);
  std::cout << "servos (torque >= " << format_number(a.margin * best->required_torque_nmm, 6) << " N mm, travel >= "
            << format_number(best->required_theta_span_deg, 6) << " deg):\n";
  if (servos.empty()) std::cout << "  none in catalog\n";
  for (std::size_t i = 0; i < servos.size(); ++i)
    std::cout << "  " << i + 1 << ". " << servos[i].name << ", " << format_number(servos[i].holding_torque_nmm)
              << " N mm, " << format_number(servos[i].angle_range_deg) << " deg\n";
  return 0;
}

// ---------------------------------------------------------------------------
// relax

struct RelaxArgs {
  std::string data, model;
  int modes = 2;
  std::string windows;
  std::vector<double> at;
  std::optional<double> max_hold;
  std::string curve;
  double curve_end = 0;
  int curve_points = 241;
  std::string save_model;
};

std::vector<hsa::TimeWindow> parse_windows(const std::string& text) {
  std::vector<hsa::TimeWindow> out;
  for (auto part : hsa::io::split(text, ',')) {
    const auto colon = part.find(':');
    const auto a = colon == std::string_view::npos ? std::nullopt : hsa::io::try_parse_number(part.substr(0, colon));
    const auto b = colon == std::string_view::npos ? std::nullopt : hsa::io::try_parse_number(part.substr(colon + 1));
    if (!a || !b) throw hsa::Error(hsa::Errc::InvalidArgument, "windows are 'start:end,start:end'");
    out.push_back({*a, *b});
  }
  return out;
}

int run_relax(const RelaxArgs& a) {
  if (a.data.empty() == a.model.empty()) throw hsa::Error(hsa::Errc::InvalidArgument, "give one of --data or --model");
  hsa::RelaxationModel model;
  double last_time = 1200;
  if (!a.data.empty()) {
    std::istringstream in(hsa::io::read_file(a.data));
    const auto series = hsa::io::read_hold_test(in);
    hsa::RelaxationFitOptions opt;
    opt.n_modes = a.modes;
    if (!a.windows.empty()) opt.windows = parse_windows(a.windows);
    model = hsa::fit_relaxation(series, opt);
    if (!series.empty()) last_time = series.back().time_s;
  } else {
    model = load_relaxation(a.model);
  }

  std::cout << "peak_N " << format_number(model.reference_peak_n) << '\n'
            << "plateau_N " << format_number(model.plateau_n) << '\n';
  for (std::size_t i = 0; i < model.modes.size(); ++i)
    std::cout << "mode " << i + 1 << " amplitude_N " << format_number(model.modes[i].amplitude_n) << " tau_s "
              << format_number(model.modes[i].tau_s) << '\n';
  for (double t : a.at) {
    if (!(t >= 0)) throw hsa::Error(hsa::Errc::InvalidArgument, "query times must be non-negative");
    std::cout << "t " << format_number(t) << " s: force_N " << format_number(hsa::force_at_time(model, t))
              << " retained " << format_number(hsa::retained_fraction(model, t)) << '\n';
  }
  if (a.max_hold) {
    const auto t = hsa::max_hold_time(model, *a.max_hold);
    std::cout << "max_hold_s(" << format_number(*a.max_hold) << ") " << (t ? format_number(*t) : "unbounded") << '\n';
  }
  if (!a.curve.empty()) {
    if (a.curve_points < 2) throw hsa::Error(hsa::Errc::InvalidArgument, "--curve-points must be at least 2");
    const double end = a.curve_end > 0 ? a.curve_end : last_time;
    std::ostringstream os;
    os << "time_s,force_N,retained\n";
    for (int i = 0; i < a.curve_points; ++i) {
      const double t = end * i / (a.curve_points - 1);
      os << format_number(t) << ',' << format_number(hsa::force_at_time(model, t)) << ','
         << format_number(hsa::retained_fraction(model, t)) << '\n';
    }
    hsa::io::write_file_atomic(a.curve, os.str());
  }
  if (!a.save_model.empty()) {
    std::ostringstream os;
    hsa::io::write_relaxation_model(os, model);
    hsa::io::write_file_atomic(a.save_model, os.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string table;
  std::string design;
  std::string output;
  double noise = 0;
  std::uint64_t seed = 42;
  int cycles = 10;
  std::vector<double> thetas;
};

int run_synth(const SynthArgs& a) {
  const auto table = hsa::io::load_parameter_table(a.table);
  const auto& entry = require_entry(table, a.design);
  const auto* fit = std::get_if<hsa::SpringFit>(&entry.value);
  if (fit == nullptr) throw hsa::Error(hsa::Errc::InvalidArgument, "design '" + a.design + "' has no fitted constants");
  hsa::CycleLogOptions opt;
  opt.noise_fraction = a.noise;
  opt.seed = a.seed;
  opt.cycles_per_theta = a.cycles;
  opt.thetas = a.thetas;
  auto log = hsa::synthesize_cycle_log(*fit, opt);
  log.set_meta("design_id", a.design);
  std::ostringstream os;
  hsa::io::write_test_log(os, log);
  hsa::io::write_file_atomic(a.output, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HSA actuator characterization, prediction and servo sizing"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit cycling logs into a parameter table");
  fit_cmd->add_option("logs", fit.logs, "Cycling log CSV files")->required();
  fit_cmd->add_option("--torque-order", fit.torque_order, "linear or quadratic")->capture_default_str();
  fit_cmd->add_option("-o,--output", fit.output, "Parameter table to write")->required();
  fit_cmd->add_flag("--keep-first-cycle", fit.keep_first, "Keep the first cycle at each twist");

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Evaluate one design at a twist or length");
  pred_cmd->add_option("table", pred.table, "Parameter table")->required();
  pred_cmd->add_option("--design", pred.design, "Design id")->required();
  pred_cmd->add_option("--theta", pred.theta, "Twist in degrees");
  pred_cmd->add_option("--length", pred.length, "Target minimum-energy length in mm");
  pred_cmd->add_option("--sweep", pred.sweep, "Write a theta sweep CSV here");
  pred_cmd->add_option("--step", pred.step, "Sweep step in degrees")->capture_default_str();

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Sweep every design and write a tradeoff table");
  rep_cmd->add_option("table", rep.table, "Parameter table")->required();
  rep_cmd->add_option("--out-dir", rep.out_dir, "Output directory")->required();
  rep_cmd->add_option("--step", rep.step, "Sweep step in degrees")->capture_default_str();

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select-motor", "Pick a design and rank servos for a requirement");
  sel_cmd->add_option("table", sel.table, "Parameter table")->capture_default_str();
  sel_cmd->add_option("--catalog", sel.catalog, "Servo catalog CSV")->capture_default_str();
  sel_cmd->add_option("--push", sel.push, "Required push force in N");
  sel_cmd->add_option("--pull", sel.pull, "Required pull force in N");
  sel_cmd->add_flag("--bidirectional", sel.bidirectional, "Require both push and pull");
  sel_cmd->add_option("--force", sel.force, "Force in N for --bidirectional");
  sel_cmd->add_option("--stroke", sel.stroke, "Required stroke in mm")->capture_default_str();
  sel_cmd->add_option("--stiffness", sel.stiffness, "Minimum spring constant in N/mm");
  sel_cmd->add_option("--hold", sel.hold, "Hold duration in s");
  sel_cmd->add_option("--relaxation", sel.relaxation, "Relaxation model file");
  sel_cmd->add_option("--margin", sel.margin, "Servo torque safety factor")->capture_default_str();

  RelaxArgs rel;
  auto* rel_cmd = app.add_subcommand("relax", "Fit or query a stress-relaxation model");
  rel_cmd->add_option("--data", rel.data, "Hold-test CSV (time_s,force_N)");
  rel_cmd->add_option("--model", rel.model, "Saved relaxation model");
  rel_cmd->add_option("--modes", rel.modes, "Exponential modes (1 or 2)")->capture_default_str();
  rel_cmd->add_option("--windows", rel.windows, "Per-mode time windows, e.g. 0:1,1:1200");
  rel_cmd->add_option("--at", rel.at, "Query time in s (repeatable)");
  rel_cmd->add_option("--max-hold", rel.max_hold, "Longest hold retaining this force fraction");
  rel_cmd->add_option("--curve", rel.curve, "Write a decay curve CSV here");
  rel_cmd->add_option("--curve-end", rel.curve_end, "Curve end time in s (default: last sample)");
  rel_cmd->add_option("--curve-points", rel.curve_points, "Curve samples")->capture_default_str();
  rel_cmd->add_option("--save-model", rel.save_model, "Write the model here");

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "Generate a cycling log from fitted constants");
  syn_cmd->add_option("table", syn.table, "Parameter table")->required();
  syn_cmd->add_option("--design", syn.design, "Design id")->required();
  syn_cmd->add_option("-o,--output", syn.output, "Log CSV to write")->required();
  syn_cmd->add_option("--noise", syn.noise, "Relative force/torque noise")->capture_default_str();
  syn_cmd->add_option("--seed", syn.seed, "Noise seed")->capture_default_str();
  syn_cmd->add_option("--cycles", syn.cycles, "Cycles per twist")->capture_default_str();
  syn_cmd->add_option("--thetas", syn.thetas, "Twists in degrees (default: every 30 deg)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageStatus;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*pred_cmd) return run_predict(pred);
    if (*rep_cmd) return run_report(rep);
    if (*sel_cmd) return run_select(sel);
    if (*rel_cmd) return run_relax(rel);
    if (*syn_cmd) return run_synth(syn);
  } catch (const hsa::Error& e) {
    std::cerr << "error: " << e.what();
    if (e.line()) std::cerr << " (line " << *e.line() << ')';
    std::cerr << '\n';
    return hsa::exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageStatus;
  }
  return kUsageStatus;
}
