#pragma once

// Text formats:
//   cycling log      CSV `time_s,displacement_mm,force_N,torque_Nmm,theta_deg`,
//                    optionally preceded by `# key = value` metadata lines
//   hold test        CSV `time_s,force_N`
//   servo catalog    CSV `name,holding_torque_Nmm,angle_range_deg,speed_dps,mass_g`
//   design envelopes CSV, one TrajectoryPointSpec per row
//   parameter table  sectioned key/value records ([fit id] / [model id])
//   relaxation model key/value with one `mode = amplitude_N, tau_s` row per mode
// Numbers use '.' as decimal point regardless of locale.

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <unistd.h>

#include "hsa/design_space.hpp"
#include "hsa/error.hpp"
#include "hsa/fitting.hpp"
#include "hsa/motor_select.hpp"
#include "hsa/relaxation.hpp"
#include "hsa/spring_model.hpp"

namespace hsa::io {

// ---------------------------------------------------------------------------
// Primitives

/// Shortest text that parses back to exactly `v`.
inline std::string format_exact(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

/// `v` to ten significant digits, trailing zeros dropped.
inline std::string format_number(double v, int precision = 10) {
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, precision);
  return std::string(buf.data(), res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> try_parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == sep) {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file in the same directory and renames it over
/// `path`, so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::Io, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::Io, "cannot replace " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Cycling logs

inline constexpr std::string_view kTestLogHeader = "time_s,displacement_mm,force_N,torque_Nmm,theta_deg";

inline CycleTestRecord read_test_log(std::istream& in) {
  CycleTestRecord rec;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view v = trim(line);
    if (!header_seen) {
      if (v.empty()) continue;
      if (v.front() == '#') {
        const auto body = trim(v.substr(1));
        const auto eq = body.find('=');
        if (eq != std::string_view::npos)
          rec.set_meta(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
        continue;
      }
      if (v != kTestLogHeader)
        throw Error(Errc::MalformedHeader, "expected header '" + std::string(kTestLogHeader) + "'", lineno);
      header_seen = true;
      continue;
    }
    if (v.empty()) continue;
    const auto fields = split(v, ',');
    if (fields.size() != 5) throw Error(Errc::UnparseableRow, "expected 5 fields", lineno);
    std::array<double, 5> x{};
    for (std::size_t i = 0; i < 5; ++i) {
      const auto n = try_parse_number(fields[i]);
      if (!n) throw Error(Errc::UnparseableRow, "bad number '" + std::string(fields[i]) + "'", lineno);
      x[i] = *n;
    }
    if (!rec.samples.empty() && !(x[0] > rec.samples.back().time_s))
      throw Error(Errc::NonMonotoneTime, "time does not increase", lineno);
    rec.samples.push_back({x[0], x[1], x[2], x[3], x[4]});
  }
  if (!header_seen) throw Error(Errc::MalformedHeader, "missing header");
  if (rec.samples.size() < 2) throw Error(Errc::UnparseableRow, "need at least two data rows");
  return rec;
}

inline void write_test_log(std::ostream& out, const CycleTestRecord& rec) {
  for (const auto& [k, v] : rec.metadata) out << "# " << k << " = " << v << '\n';
  out << kTestLogHeader << '\n';
  for (const auto& s : rec.samples)
    out << format_exact(s.time_s) << ',' << format_exact(s.displacement_mm) << ',' << format_exact(s.force_n) << ','
        << format_exact(s.torque_nmm) << ',' << format_exact(s.theta_deg) << '\n';
}

inline CycleTestRecord load_test_log(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return read_test_log(in);
}

// ---------------------------------------------------------------------------
// Hold tests

inline std::vector<TimedForce> read_hold_test(std::istream& in) {
  std::vector<TimedForce> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    if (!header_seen) {
      if (v != "time_s,force_N") throw Error(Errc::MalformedHeader, "expected header 'time_s,force_N'", lineno);
      header_seen = true;
      continue;
    }
    const auto f = split(v, ',');
    if (f.size() != 2) throw Error(Errc::UnparseableRow, "expected 2 fields", lineno);
    const auto t = try_parse_number(f[0]), F = try_parse_number(f[1]);
    if (!t || !F) throw Error(Errc::UnparseableRow, "bad number", lineno);
    if (!out.empty() && !(*t > out.back().time_s)) throw Error(Errc::NonMonotoneTime, "time does not increase", lineno);
    out.push_back({*t, *F});
  }
  if (!header_seen) throw Error(Errc::MalformedHeader, "missing header");
  return out;
}

inline void write_hold_test(std::ostream& out, std::span<const TimedForce> series) {
  out << "time_s,force_N\n";
  for (const auto& p : series) out << format_exact(p.time_s) << ',' << format_exact(p.force_n) << '\n';
}

// ---------------------------------------------------------------------------
// Servo catalog

inline constexpr std::string_view kCatalogHeader = "name,holding_torque_Nmm,angle_range_deg,speed_dps,mass_g";

inline std::vector<ServoSpec> read_servo_catalog(std::istream& in) {
  std::vector<ServoSpec> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    if (!header_seen) {
      if (v != kCatalogHeader)
        throw Error(Errc::MalformedHeader, "expected header '" + std::string(kCatalogHeader) + "'", lineno);
      header_seen = true;
      continue;
    }
    auto f = split(v, ',');
    if (f.size() < 3 || f.size() > 5) throw Error(Errc::UnparseableRow, "expected 3 to 5 fields", lineno);
    f.resize(5);
    ServoSpec s;
    s.name = std::string(f[0]);
    const auto torque = try_parse_number(f[1]), range = try_parse_number(f[2]);
    if (s.name.empty() || !torque || !range) throw Error(Errc::UnparseableRow, "bad servo row", lineno);
    s.holding_torque_nmm = *torque;
    s.angle_range_deg = *range;
    for (auto [field, slot] : {std::pair{f[3], &s.speed_dps}, std::pair{f[4], &s.mass_g}}) {
      if (field.empty()) continue;
      const auto n = try_parse_number(field);
      if (!n) throw Error(Errc::UnparseableRow, "bad optional number", lineno);
      *slot = *n;
    }
    try {
      validate(s);
    } catch (const Error& e) {
      throw Error(Errc::UnparseableRow, e.what(), lineno);
    }
    out.push_back(std::move(s));
  }
  if (!header_seen) throw Error(Errc::MalformedHeader, "missing header");
  return out;
}

// ---------------------------------------------------------------------------
// Design envelopes

inline constexpr std::string_view kSpecHeader =
    "trajectory_point,rows,theta_min_deg,theta_max_deg,theta_step_deg,printed_length_mm,"
    "cycling_min_mm,cycling_max_mm,zero_force_displacement_mm,trajectory_coordinate";

inline std::vector<TrajectoryPointSpec> read_trajectory_specs(std::istream& in) {
  std::vector<TrajectoryPointSpec> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    if (!header_seen) {
      if (v != kSpecHeader) throw Error(Errc::MalformedHeader, "unexpected envelope header", lineno);
      header_seen = true;
      continue;
    }
    const auto f = split(v, ',');
    if (f.size() != 10) throw Error(Errc::UnparseableRow, "expected 10 fields", lineno);
    std::array<double, 9> x{};
    for (std::size_t i = 1; i < 10; ++i) {
      const auto n = try_parse_number(f[i]);
      if (!n) throw Error(Errc::UnparseableRow, "bad number '" + std::string(f[i]) + "'", lineno);
      x[i - 1] = *n;
    }
    TrajectoryPointSpec s;
    try {
      s.trajectory_point = parse_trajectory_point(f[0]);
      s.rows = static_cast<int>(x[0]);
      s.theta_min_deg = x[1];
      s.theta_max_deg = x[2];
      s.theta_step_deg = x[3];
      s.printed_length_mm = x[4];
      s.cycling_min_mm = x[5];
      s.cycling_max_mm = x[6];
      s.zero_force_displacement_mm = x[7];
      s.trajectory_coordinate = x[8];
      validate(s);
    } catch (const Error& e) {
      throw Error(Errc::UnparseableRow, e.what(), lineno);
    }
    out.push_back(s);
  }
  if (!header_seen) throw Error(Errc::MalformedHeader, "missing header");
  return out;
}

inline void write_trajectory_specs(std::ostream& out, std::span<const TrajectoryPointSpec> specs) {
  out << kSpecHeader << '\n';
  for (const auto& s : specs)
    out << to_string(s.trajectory_point) << ',' << s.rows << ',' << format_number(s.theta_min_deg) << ','
        << format_number(s.theta_max_deg) << ',' << format_number(s.theta_step_deg) << ','
        << format_number(s.printed_length_mm) << ',' << format_number(s.cycling_min_mm) << ','
        << format_number(s.cycling_max_mm) << ',' << format_number(s.zero_force_displacement_mm) << ','
        << format_number(s.trajectory_coordinate) << '\n';
}

// ---------------------------------------------------------------------------
// Parameter tables

inline constexpr int kTableFormatVersion = 1;

struct TableEntry {
  std::string id;
  std::variant<SpringFit, DesignModel> value;
};

struct ParameterTable {
  int format_version = kTableFormatVersion;
  std::vector<TableEntry> entries;

  const TableEntry* find(std::string_view id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }

  DesignModel model(const TableEntry& e) const {
    if (const auto* f = std::get_if<SpringFit>(&e.value)) return to_design_model(e.id, *f);
    return std::get<DesignModel>(e.value);
  }

  std::vector<DesignModel> models() const {
    std::vector<DesignModel> out;
    for (const auto& e : entries) out.push_back(model(e));
    return out;
  }
};

namespace detail {

struct Section {
  std::string kind, id;
  std::size_t line = 0;
  std::vector<std::pair<std::string, std::string>> kv;
  std::vector<std::size_t> kv_lines;
};

class SectionReader {
 public:
  explicit SectionReader(const Section& s) : s_(s) {}

  std::optional<std::string> take(std::string_view key) {
    for (std::size_t i = 0; i < s_.kv.size(); ++i)
      if (s_.kv[i].first == key && !used_.count(i)) {
        used_.insert(i);
        return s_.kv[i].second;
      }
    return std::nullopt;
  }

  std::string require(std::string_view key) {
    auto v = take(key);
    if (!v) throw Error(Errc::MalformedTable, "[" + s_.id + "] missing '" + std::string(key) + "'", s_.line);
    return *v;
  }

  double number(std::string_view key) { return to_number(key, require(key)); }

  std::optional<double> optional_number(std::string_view key) {
    auto v = take(key);
    if (!v) return std::nullopt;
    return to_number(key, *v);
  }

  std::vector<std::pair<std::string, std::size_t>> take_all(std::string_view key) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (std::size_t i = 0; i < s_.kv.size(); ++i)
      if (s_.kv[i].first == key && !used_.count(i)) {
        used_.insert(i);
        out.emplace_back(s_.kv[i].second, s_.kv_lines[i]);
      }
    return out;
  }

  void finish() const {
    for (std::size_t i = 0; i < s_.kv.size(); ++i)
      if (!used_.count(i))
        throw Error(Errc::MalformedTable, "[" + s_.id + "] unknown key '" + s_.kv[i].first + "'", s_.kv_lines[i]);
  }

  const Section& section() const { return s_; }

 private:
  double to_number(std::string_view key, const std::string& text) const {
    const auto n = try_parse_number(text);
    if (!n) throw Error(Errc::MalformedTable, "[" + s_.id + "] '" + std::string(key) + "' is not a number", s_.line);
    return *n;
  }

  const Section& s_;
  std::set<std::size_t> used_;
};

inline HsaDesign read_design(SectionReader& r) {
  HsaDesign d;
  d.trajectory_point = parse_trajectory_point(r.require("trajectory_point"));
  d.rows = static_cast<int>(r.number("rows"));
  if (auto h = r.take("handedness")) d.handedness = parse_handedness(*h);
  if (auto v = r.optional_number("symmetry_order")) d.symmetry_order = static_cast<int>(*v);
  if (auto v = r.optional_number("outer_diameter_mm")) d.outer_diameter_mm = *v;
  if (auto v = r.optional_number("wall_thickness_mm")) d.wall_thickness_mm = *v;
  if (auto v = r.optional_number("printed_length_mm"))
    d.printed_length_mm = *v;
  else if (auto s = find_spec(kBuiltinSpecs, d.trajectory_point, d.rows))
    d.printed_length_mm = s->printed_length_mm;
  validate(d);
  return d;
}

inline void write_design(std::ostream& out, const HsaDesign& d) {
  out << "handedness = " << to_string(d.handedness) << '\n'
      << "trajectory_point = " << to_string(d.trajectory_point) << '\n'
      << "rows = " << d.rows << '\n'
      << "symmetry_order = " << d.symmetry_order << '\n'
      << "outer_diameter_mm = " << format_number(d.outer_diameter_mm) << '\n'
      << "wall_thickness_mm = " << format_number(d.wall_thickness_mm) << '\n'
      << "printed_length_mm = " << format_number(d.printed_length_mm) << '\n';
}

inline SpringFit read_fit(SectionReader& r) {
  SpringFit f;
  f.design = read_design(r);
  f.theta_min = r.number("theta_min");
  f.theta_max = r.number("theta_max");
  f.force_quadratic = r.number("A");
  f.force_linear = r.number("B");
  f.r2_blocked = r.number("R2_blocked");
  f.torque_linear = r.number("C_tau");
  f.torque_quadratic = r.optional_number("D_tau").value_or(0.0);
  f.r2_torque = r.number("R2_torque");
  f.stiffness_slope = r.number("C_k");
  f.rest_stiffness = r.number("k0");
  f.r2_stiffness = r.number("R2_k");
  f.length_slope = r.number("C_l");
  f.rest_length = r.number("L0");
  f.r2_length = r.number("R2_length");
  return f;
}

inline constexpr std::array<std::pair<Property, std::string_view>, 4> kPropertyKeys{{
    {Property::BlockedForce, "blocked_force"},
    {Property::HoldingTorque, "holding_torque"},
    {Property::SpringConstant, "spring_constant"},
    {Property::MinEnergyLength, "min_energy_length"},
}};

inline PropertyCurve& curve_slot(DesignModel& m, Property p) {
  switch (p) {
    case Property::BlockedForce: return m.blocked_force;
    case Property::HoldingTorque: return m.holding_torque;
    case Property::SpringConstant: return m.spring_constant;
    case Property::MinEnergyLength: return m.min_energy_length;
  }
  return m.blocked_force;
}

inline DesignModel read_model(SectionReader& r) {
  const auto& sec = r.section();
  DesignModel m;
  m.id = sec.id;
  m.design = read_design(r);
  m.theta_min = r.number("theta_min");
  m.theta_max = r.number("theta_max");

  std::map<AnchorUnit, AnchorCurve> anchors;
  for (const auto& [text, line] : r.take_all("anchor")) {
    const auto f = split(text, ',');
    if (f.size() != 3) throw Error(Errc::MalformedTable, "anchor rows are 'theta, value, unit'", line);
    const auto th = try_parse_number(f[0]), val = try_parse_number(f[1]);
    if (!th || !val) throw Error(Errc::MalformedTable, "bad anchor numbers", line);
    const auto unit = parse_anchor_unit(f[2]);
    auto& c = anchors[unit];
    c.unit = unit;
    c.points.push_back({*th, *val});
  }
  for (const auto& [prop, key] : kPropertyKeys) {
    const auto spec = r.require(key);
    const auto words = split(spec, ' ');
    if (spec == "anchors") {
      auto it = anchors.find(unit_of(prop));
      if (it == anchors.end())
        throw Error(Errc::MalformedTable, "[" + sec.id + "] no anchor rows for " + std::string(key), sec.line);
      curve_slot(m, prop) = it->second;
      anchors.erase(it);
    } else if (!words.empty() && words[0] == "quadratic") {
      std::vector<double> c;
      for (std::size_t i = 1; i < words.size(); ++i) {
        if (words[i].empty()) continue;
        const auto n = try_parse_number(words[i]);
        if (!n) throw Error(Errc::MalformedTable, "bad coefficient in " + std::string(key), sec.line);
        c.push_back(*n);
      }
      if (c.size() != 3)
        throw Error(Errc::MalformedTable, std::string(key) + " needs 'quadratic c0 c1 c2'", sec.line);
      curve_slot(m, prop) = QuadraticCurve{c[0], c[1], c[2]};
    } else {
      throw Error(Errc::MalformedTable, std::string(key) + " must be 'anchors' or 'quadratic c0 c1 c2'", sec.line);
    }
  }
  if (!anchors.empty()) throw Error(Errc::MalformedTable, "[" + sec.id + "] unused anchor rows", sec.line);
  return m;
}

}  // namespace detail

inline ParameterTable read_parameter_table(std::istream& in) {
  std::vector<detail::Section> sections;
  std::optional<int> version;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    if (v.front() == '[') {
      if (v.back() != ']') throw Error(Errc::MalformedTable, "unterminated section header", lineno);
      const auto words = split(trim(v.substr(1, v.size() - 2)), ' ');
      if (words.size() != 2 || words[1].empty() || (words[0] != "fit" && words[0] != "model"))
        throw Error(Errc::MalformedTable, "section header must be [fit <id>] or [model <id>]", lineno);
      sections.push_back({std::string(words[0]), std::string(words[1]), lineno, {}, {}});
      continue;
    }
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::MalformedTable, "expected 'key = value'", lineno);
    const std::string key(trim(v.substr(0, eq)));
    const std::string value(trim(v.substr(eq + 1)));
    if (sections.empty()) {
      if (key != "format_version") throw Error(Errc::MalformedTable, "unexpected key before first section", lineno);
      const auto n = try_parse_number(value);
      if (!n) throw Error(Errc::MalformedTable, "bad format_version", lineno);
      version = static_cast<int>(*n);
      continue;
    }
    sections.back().kv.emplace_back(key, value);
    sections.back().kv_lines.push_back(lineno);
  }
  if (!version) throw Error(Errc::MalformedTable, "missing format_version");
  if (*version != kTableFormatVersion)
    throw Error(Errc::MalformedTable, "unsupported format_version " + std::to_string(*version));

  ParameterTable table;
  table.format_version = *version;
  std::set<std::string> ids;
  for (const auto& sec : sections) {
    if (!ids.insert(sec.id).second) throw Error(Errc::MalformedTable, "duplicate design id '" + sec.id + "'", sec.line);
    detail::SectionReader r(sec);
    try {
      if (sec.kind == "fit") {
        auto f = detail::read_fit(r);
        r.finish();
        validate(f);
        table.entries.push_back({sec.id, f});
      } else {
        auto m = detail::read_model(r);
        r.finish();
        validate(m);
        table.entries.push_back({sec.id, m});
      }
    } catch (const Error& e) {
      if (e.code() == Errc::MalformedTable) throw;
      throw Error(Errc::MalformedTable, "[" + sec.id + "] " + e.what(), sec.line);
    }
  }
  return table;
}

inline ParameterTable load_parameter_table(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return read_parameter_table(in);
}

/// Field order follows the conventional fit table layout: blocked force (A, B, R2),
/// holding torque (C_tau, D_tau, R2), stiffness (C_k, k0, R2), length (C_l, L0, R2).
inline void write_fit(std::ostream& out, const std::string& id, const SpringFit& f) {
  out << "[fit " << id << "]\n";
  detail::write_design(out, f.design);
  out << "theta_min = " << format_number(f.theta_min) << '\n'
      << "theta_max = " << format_number(f.theta_max) << '\n'
      << "A = " << format_number(f.force_quadratic) << '\n'
      << "B = " << format_number(f.force_linear) << '\n'
      << "R2_blocked = " << format_number(f.r2_blocked) << '\n'
      << "C_tau = " << format_number(f.torque_linear) << '\n'
      << "D_tau = " << format_number(f.torque_quadratic) << '\n'
      << "R2_torque = " << format_number(f.r2_torque) << '\n'
      << "C_k = " << format_number(f.stiffness_slope) << '\n'
      << "k0 = " << format_number(f.rest_stiffness) << '\n'
      << "R2_k = " << format_number(f.r2_stiffness) << '\n'
      << "C_l = " << format_number(f.length_slope) << '\n'
      << "L0 = " << format_number(f.rest_length) << '\n'
      << "R2_length = " << format_number(f.r2_length) << '\n';
}

inline void write_model(std::ostream& out, const DesignModel& m) {
  out << "[model " << m.id << "]\n";
  detail::write_design(out, m.design);
  out << "theta_min = " << format_number(m.theta_min) << '\n' << "theta_max = " << format_number(m.theta_max) << '\n';
  std::vector<const AnchorCurve*> anchors;
  for (const auto& [prop, key] : detail::kPropertyKeys) {
    const auto& c = m.curve(prop);
    if (const auto* q = std::get_if<QuadraticCurve>(&c)) {
      out << key << " = quadratic " << format_number(q->constant) << ' ' << format_number(q->linear) << ' '
          << format_number(q->quadratic) << '\n';
    } else {
      out << key << " = anchors\n";
      anchors.push_back(&std::get<AnchorCurve>(c));
    }
  }
  for (const auto* a : anchors)
    for (const auto& p : a->points)
      out << "anchor = " << format_number(p.theta) << ", " << format_number(p.value) << ", " << to_string(a->unit)
          << '\n';
}

inline void write_parameter_table(std::ostream& out, const ParameterTable& t) {
  out << "# HSA parameter table\n";
  out << "format_version = " << t.format_version << '\n';
  for (const auto& e : t.entries) {
    out << '\n';
    if (const auto* f = std::get_if<SpringFit>(&e.value))
      write_fit(out, e.id, *f);
    else
      write_model(out, std::get<DesignModel>(e.value));
  }
}

inline std::string to_text(const ParameterTable& t) {
  std::ostringstream os;
  write_parameter_table(os, t);
  return os.str();
}

// ---------------------------------------------------------------------------
// Relaxation models

inline RelaxationModel read_relaxation_model(std::istream& in) {
  std::optional<double> plateau, peak, extension;
  std::vector<RelaxationMode> modes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::MalformedTable, "expected 'key = value'", lineno);
    const auto key = trim(v.substr(0, eq)), value = trim(v.substr(eq + 1));
    if (key == "mode") {
      const auto f = split(value, ',');
      const auto a = f.size() == 2 ? try_parse_number(f[0]) : std::nullopt;
      const auto tau = f.size() == 2 ? try_parse_number(f[1]) : std::nullopt;
      if (!a || !tau) throw Error(Errc::MalformedTable, "mode rows are 'amplitude_N, tau_s'", lineno);
      modes.push_back({*a, *tau});
      continue;
    }
    const auto n = try_parse_number(value);
    if (!n) throw Error(Errc::MalformedTable, "bad number", lineno);
    if (key == "plateau_N")
      plateau = n;
    else if (key == "reference_peak_N")
      peak = n;
    else if (key == "reference_extension_mm")
      extension = n;
    else
      throw Error(Errc::MalformedTable, "unknown key '" + std::string(key) + "'", lineno);
  }
  if (!plateau) throw Error(Errc::MalformedTable, "missing plateau_N");
  RelaxationModel m;
  m.plateau_n = *plateau;
  m.modes = std::move(modes);
  m.reference_extension_mm = extension.value_or(0.0);
  m.reference_peak_n = m.plateau_n;
  for (const auto& mode : m.modes) m.reference_peak_n += mode.amplitude_n;
  if (peak) {
    if (std::abs(*peak - m.reference_peak_n) > 1e-6 * std::max(1.0, std::abs(*peak)))
      throw Error(Errc::MalformedTable, "reference_peak_N disagrees with plateau + amplitudes");
    m.reference_peak_n = *peak;
  }
  try {
    validate(m);
  } catch (const Error& e) {
    throw Error(Errc::MalformedTable, e.what());
  }
  return m;
}

inline void write_relaxation_model(std::ostream& out, const RelaxationModel& m) {
  out << "# relaxation model: F(t) = plateau + sum amplitude * exp(-t / tau)\n";
  out << "plateau_N = " << format_exact(m.plateau_n) << '\n';
  out << "reference_peak_N = " << format_exact(m.reference_peak_n) << '\n';
  out << "reference_extension_mm = " << format_exact(m.reference_extension_mm) << '\n';
  for (const auto& mode : m.modes)
    out << "mode = " << format_exact(mode.amplitude_n) << ", " << format_exact(mode.tau_s) << '\n';
}

}  // namespace hsa::io
