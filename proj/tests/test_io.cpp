#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hsa/io.hpp"
#include "hsa/synthetic.hpp"
#include "reference_fits.hpp"
#include "test_util.hpp"

using namespace hsa;
using hsa::io::ParameterTable;
using hsa::test::data_path;
using hsa::test::expect_code;

namespace {

CycleTestRecord parse_log(const std::string& text) {
  std::istringstream in(text);
  return io::read_test_log(in);
}

ParameterTable parse_table(const std::string& text) {
  std::istringstream in(text);
  return io::read_parameter_table(in);
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() /
             ("hsa_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
              ::testing::UnitTest::GetInstance()->current_test_info()->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const std::string kHeader(io::kTestLogHeader);

}  // namespace

TEST(Numbers, FormatAndParse) {
  EXPECT_EQ(io::format_exact(0.1), "0.1");
  EXPECT_EQ(io::format_exact(-4.2339e-4), "-0.00042339");
  EXPECT_EQ(io::format_number(0.0), "0");
  EXPECT_EQ(io::format_number(-0.0903), "-0.0903");
  EXPECT_EQ(io::try_parse_number(" +2.5 "), 2.5);
  EXPECT_EQ(io::try_parse_number("1e-3"), 1e-3);
  EXPECT_FALSE(io::try_parse_number("2.5x"));
  EXPECT_FALSE(io::try_parse_number(""));
  EXPECT_EQ(io::split("a,,b", ',').size(), 3u);
}

TEST(TestLog, RoundTripIsIdentity) {
  CycleLogOptions opt;
  opt.thetas = {0, 90};
  opt.cycles_per_theta = 2;
  opt.noise_fraction = 0.02;
  const auto rec = synthesize_cycle_log(test::reference_fit(4), opt);
  std::ostringstream os;
  io::write_test_log(os, rec);
  const auto back = parse_log(os.str());
  EXPECT_EQ(back, rec);
  std::ostringstream again;
  io::write_test_log(again, back);
  EXPECT_EQ(again.str(), os.str());
}

TEST(TestLog, MetadataAndBlankLines) {
  const auto r = parse_log("# rows = 8\n\n# note without equals\n" + kHeader + "\n0,0,0,0,0\n\n0.02,1,2,3,4\n");
  EXPECT_EQ(r.meta("rows"), "8");
  EXPECT_EQ(r.samples.size(), 2u);
  EXPECT_EQ(r.samples[1].theta_deg, 4);
}

TEST(TestLog, ReorderedHeader) {
  expect_code(Errc::MalformedHeader,
              [] { parse_log("time_s,force_N,displacement_mm,torque_Nmm,theta_deg\n0,0,0,0,0\n1,0,0,0,0\n"); });
  expect_code(Errc::MalformedHeader, [] { parse_log(""); });
}

TEST(TestLog, DuplicateTimestamp) {
  try {
    parse_log(kHeader + "\n0,0,0,0,0\n0.02,0,0,0,0\n0.02,1,0,0,0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonMonotoneTime);
    EXPECT_EQ(e.line(), std::optional<std::size_t>(4));
  }
}

TEST(TestLog, UnparseableRowReportsLine) {
  try {
    parse_log("# a = b\n" + kHeader + "\n0,0,0,0,0\n0.02,0,abc,0,0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnparseableRow);
    EXPECT_EQ(e.line(), std::optional<std::size_t>(4));
  }
  expect_code(Errc::UnparseableRow, [] { parse_log(kHeader + "\n0,0,0,0\n1,0,0,0,0\n"); });
  expect_code(Errc::UnparseableRow, [] { parse_log(kHeader + "\n0,0,0,0,0\n"); });
}

TEST(TestLog, BundledSingleTwistFixtureHasTenCycles) {
  const auto rec = io::load_test_log(data_path("fixtures/closed-4-theta90.csv"));
  EXPECT_EQ(segment_cycles(rec).size(), 10u);
  EXPECT_EQ(rec.meta("seed"), "42");
}

// ---------------------------------------------------------------------------

TEST(ParameterTable, ShippedTableRoundTrips) {
  const auto t = io::load_parameter_table(data_path("reference_fits.hsa"));
  ASSERT_EQ(t.entries.size(), 7u);
  const auto text = io::to_text(t);
  const auto back = parse_table(text);
  EXPECT_EQ(io::to_text(back), text);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(std::get<SpringFit>(back.entries[i].value), std::get<SpringFit>(t.entries[i].value));
}

TEST(ParameterTable, FitRoundTripIsExactAtTenDigits) {
  ParameterTable t;
  for (const auto& r : test::kClosedFits) t.entries.push_back({"closed-" + std::to_string(r.rows), test::reference_fit(r.rows)});
  const auto back = parse_table(io::to_text(t));
  for (std::size_t i = 0; i < t.entries.size(); ++i)
    EXPECT_EQ(std::get<SpringFit>(back.entries[i].value), std::get<SpringFit>(t.entries[i].value));
  ASSERT_NE(back.find("closed-10"), nullptr);
  EXPECT_EQ(back.find("closed-11"), nullptr);
}

TEST(ParameterTable, Errors) {
  const std::string fit = io::to_text(ParameterTable{1, {{"a", test::reference_fit(4)}}});
  const auto body = fit.substr(fit.find("[fit"));
  expect_code(Errc::MalformedTable, [&] { parse_table("format_version = 2\n" + body); });
  expect_code(Errc::MalformedTable, [&] { parse_table(body); });
  expect_code(Errc::MalformedTable, [&] { parse_table(fit + "\n" + body); });
  expect_code(Errc::MalformedTable, [&] { parse_table(fit + "colour = blue\n"); });
  expect_code(Errc::MalformedTable, [&] { parse_table(fit + "[gizmo b]\n"); });
  std::string bad_number = fit;
  bad_number.replace(bad_number.find("B = "), 4, "B = x");
  expect_code(Errc::MalformedTable, [&] { parse_table(bad_number); });
  std::string missing = fit;
  missing.erase(missing.find("L0 = "), missing.find('\n', missing.find("L0 = ")) - missing.find("L0 = ") + 1);
  expect_code(Errc::MalformedTable, [&] { parse_table(missing); });
}

// ---------------------------------------------------------------------------

TEST(RelaxationModelFile, RoundTrip) {
  const auto m = make_relaxation_model(8.25, {{2.5, 0.3}, {5.55, 18}}, 4);
  std::ostringstream os;
  io::write_relaxation_model(os, m);
  std::istringstream in(os.str());
  EXPECT_EQ(io::read_relaxation_model(in), m);
}

TEST(RelaxationModelFile, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return io::read_relaxation_model(in);
  };
  expect_code(Errc::MalformedTable, [&] { parse("mode = 1, 2\n"); });
  expect_code(Errc::MalformedTable, [&] { parse("plateau_N = 1\nmode = 1\n"); });
  expect_code(Errc::MalformedTable, [&] { parse("plateau_N = 1\nmode = 1, 2\nreference_peak_N = 5\n"); });
  expect_code(Errc::MalformedTable, [&] { parse("plateau_N = 1\nmode = 1, -2\n"); });
  expect_code(Errc::MalformedTable, [&] { parse("plateau_N = 1\nspeed = 3\n"); });
}

TEST(HoldTest, BundledDataset) {
  std::ifstream in(data_path("relaxation_hold.csv"));
  const auto s = io::read_hold_test(in);
  ASSERT_EQ(s.size(), 6u);
  EXPECT_EQ(s.front().force_n, 16.3);
  EXPECT_EQ(s.back().time_s, 1200);
  std::ostringstream os;
  io::write_hold_test(os, s);
  std::istringstream back(os.str());
  EXPECT_EQ(io::read_hold_test(back).size(), 6u);
}

TEST(ServoCatalog, OptionalColumns) {
  std::istringstream in(std::string(io::kCatalogHeader) + "\nA,40,180\nB,50,90,,12\nC,60,120,300,\n");
  const auto cat = io::read_servo_catalog(in);
  ASSERT_EQ(cat.size(), 3u);
  EXPECT_FALSE(cat[0].mass_g);
  EXPECT_EQ(cat[1].mass_g, 12.0);
  EXPECT_FALSE(cat[1].speed_dps);
  EXPECT_EQ(cat[2].speed_dps, 300.0);
}

TEST(ServoCatalog, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return io::read_servo_catalog(in);
  };
  const std::string h(io::kCatalogHeader);
  expect_code(Errc::MalformedHeader, [&] { parse("name,torque\nA,1,2\n"); });
  expect_code(Errc::UnparseableRow, [&] { parse(h + "\nA,1\n"); });
  expect_code(Errc::UnparseableRow, [&] { parse(h + "\nA,-1,180\n"); });
  expect_code(Errc::UnparseableRow, [&] { parse(h + "\nA,1,180,fast\n"); });
}

TEST(TrajectorySpecs, RoundTrip) {
  std::ostringstream os;
  io::write_trajectory_specs(os, kBuiltinSpecs);
  std::istringstream in(os.str());
  const auto back = io::read_trajectory_specs(in);
  EXPECT_TRUE(std::equal(back.begin(), back.end(), kBuiltinSpecs.begin(), kBuiltinSpecs.end()));
}

// ---------------------------------------------------------------------------

TEST(AtomicWrite, ReplacesWholeFileAndLeavesNoTemporaries) {
  const auto dir = scratch_dir();
  const auto path = dir / "out.hsa";
  io::write_file_atomic(path, "first\n");
  io::write_file_atomic(path, "second\n");
  EXPECT_EQ(io::read_file(path), "second\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1);
  std::filesystem::remove_all(dir);
}

TEST(AtomicWrite, MissingDirectoryIsIoError) {
  const auto dir = scratch_dir();
  expect_code(Errc::Io, [&] { io::write_file_atomic(dir / "nope" / "out.hsa", "x"); });
  expect_code(Errc::Io, [&] { io::read_file(dir / "absent.csv"); });
  std::filesystem::remove_all(dir);
}
