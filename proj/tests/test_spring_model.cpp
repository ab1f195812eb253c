#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hsa/io.hpp"
#include "hsa/spring_model.hpp"
#include "reference_fits.hpp"
#include "test_util.hpp"

using namespace hsa;
using hsa::test::expect_code;
using hsa::test::reference_fit;

TEST(BlockedForce, FourRowAtNinetyDegrees) {
  const auto f = reference_fit(4);
  const double want = -4.2339e-4 * 8100 - 0.0903 * 90;  // -11.556459
  EXPECT_DOUBLE_EQ(blocked_force(f, 90), want);
  EXPECT_NEAR(blocked_force(f, 90), -11.56, 0.005);
  EXPECT_EQ(force_direction(90), ForceDirection::Push);
}

TEST(BlockedForce, TwelveRowAtFullTwist) {
  EXPECT_NEAR(blocked_force(reference_fit(12), 180), -8.115, 5e-4);
}

TEST(BlockedForce, OutOfRangeIsAnError) {
  const auto f = reference_fit(4);
  expect_code(Errc::ThetaOutOfRange, [&] { blocked_force(f, -1); });
  expect_code(Errc::ThetaOutOfRange, [&] { blocked_force(f, 181); });
  expect_code(Errc::ThetaOutOfRange, [&] { spring_constant(f, 200); });
  expect_code(Errc::ThetaOutOfRange, [&] { min_energy_length(f, -30); });
  expect_code(Errc::ThetaOutOfRange, [&] { holding_torque(f, 180.5); });
}

TEST(HoldingTorque, FourRowLinear) { EXPECT_NEAR(holding_torque(reference_fit(4), 180), 171.81, 1e-9); }

TEST(HoldingTorque, OpenQuadratic) {
  SpringFit f = reference_fit(4);
  f.theta_min = -180;
  f.theta_max = 0;
  f.torque_linear = test::kOpenTorqueLinear;
  f.torque_quadratic = test::kOpenTorqueQuadratic;
  EXPECT_NEAR(holding_torque(f, -180), -3.94956 - 33.012, 1e-9);
  EXPECT_NEAR(holding_torque(f, -180), -36.96, 0.01);
}

TEST(Origin, ForceAndTorqueVanishForEveryFit) {
  for (const auto& r : test::kClosedFits) {
    const auto f = reference_fit(r.rows);
    EXPECT_EQ(blocked_force(f, 0), 0.0) << r.rows;
    EXPECT_EQ(holding_torque(f, 0), 0.0) << r.rows;
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    SpringFit f = reference_fit(8);
    f.force_quadratic = u(rng);
    f.force_linear = u(rng);
    f.torque_linear = u(rng);
    f.torque_quadratic = u(rng);
    EXPECT_EQ(blocked_force(f, 0), 0.0);
    EXPECT_EQ(holding_torque(f, 0), 0.0);
  }
}

TEST(SpringConstant, ReferenceValues) {
  EXPECT_DOUBLE_EQ(spring_constant(reference_fit(4), 0), 1.664);
  EXPECT_NEAR(spring_constant(reference_fit(4), 90), 2.762, 1e-12);
  EXPECT_DOUBLE_EQ(spring_constant(reference_fit(12), 0), 0.3576);
}

TEST(MinEnergyLength, ReferenceValues) {
  EXPECT_DOUBLE_EQ(min_energy_length(reference_fit(12), 0), 124.3016);
  EXPECT_NEAR(min_energy_length(reference_fit(4), 90), 79.6345, 1e-12);
  EXPECT_DOUBLE_EQ(min_energy_length(reference_fit(8), 0), 99.7678);
}

TEST(Affine, SecondDifferencesVanish) {
  for (const auto& r : test::kClosedFits) {
    const auto f = reference_fit(r.rows);
    for (double th = 0; th + 20 <= 180; th += 7.5) {
      const double dk = spring_constant(f, th + 20) - 2 * spring_constant(f, th + 10) + spring_constant(f, th);
      const double dl =
          min_energy_length(f, th + 20) - 2 * min_energy_length(f, th + 10) + min_energy_length(f, th);
      EXPECT_NEAR(dk, 0, 1e-12);
      EXPECT_NEAR(dl, 0, 1e-11);
    }
  }
}

TEST(BlockedForce, MagnitudeNondecreasingOnTabulatedSteps) {
  for (const auto& r : test::kClosedFits) {
    const auto f = reference_fit(r.rows);
    double prev = 0;
    for (double th = 30; th <= 180; th += 30) {
      const double mag = std::abs(blocked_force(f, th));
      EXPECT_GE(mag, prev) << r.rows << " rows at " << th;
      prev = mag;
    }
  }
}

TEST(HoldingTorque, SlopeDecreasesWithRows) {
  for (std::size_t i = 1; i < test::kClosedFits.size(); ++i)
    EXPECT_LT(test::kClosedFits[i].C_tau, test::kClosedFits[i - 1].C_tau);
}

TEST(ForceAt, ZeroAtMinimumEnergyLength) {
  for (const auto& r : test::kClosedFits) {
    const auto f = reference_fit(r.rows);
    for (double th = 0; th <= 180; th += 15) EXPECT_EQ(force_at(f, th, min_energy_length(f, th)), 0.0);
  }
}

TEST(ForceAt, ReferenceExamples) {
  const auto f = reference_fit(4);
  EXPECT_NEAR(force_at(f, 0, 74.8555 + 1), 1.664, 1e-12);
  EXPECT_NEAR(force_at(f, 90, 74.8555), 2.762 * (74.8555 - 79.6345), 1e-12);
  EXPECT_NEAR(force_at(f, 90, 74.8555), -13.19, 0.01);  // -13.1996, quoted truncated
  expect_code(Errc::InvalidArgument, [&] { force_at(f, 0, 0); });
}

TEST(ThetaForLength, Examples) {
  const auto f = reference_fit(4);
  EXPECT_EQ(theta_for_length(f, 74.8555), 0.0);
  EXPECT_NEAR(theta_for_length(f, 79.63), 89.915, 1e-3);
  EXPECT_NEAR(theta_for_length(f, 79.6345), 90, 1e-9);
  expect_code(Errc::LengthUnreachable, [&] { theta_for_length(f, 60); });
  expect_code(Errc::LengthUnreachable, [&] { theta_for_length(f, 200); });
  auto flat = f;
  flat.length_slope = 0;
  expect_code(Errc::DegenerateCoupling, [&] { theta_for_length(flat, 74.8555); });
}

TEST(ThetaForLength, InvertsMinEnergyLength) {
  std::mt19937_64 rng(11);
  for (const auto& r : test::kClosedFits) {
    const auto f = reference_fit(r.rows);
    std::uniform_real_distribution<double> u(f.theta_min, f.theta_max);
    for (int i = 0; i < 500; ++i) {
      const double th = u(rng);
      EXPECT_NEAR(theta_for_length(f, min_energy_length(f, th)), th, 1e-9 * std::max(1.0, std::abs(th)));
    }
  }
}

TEST(ThetaForLength, NegativeCouplingOrdersInterval) {
  // Open designs contract under negative twist: L(-180) < L(0).
  EXPECT_NEAR(theta_for_linear_length(0.013, 122.2, -180, 0, 122.2 - 0.013 * 90), -90, 1e-9);
  EXPECT_NEAR(theta_for_linear_length(-0.02, 50, 0, 100, 49), 50, 1e-9);
  expect_code(Errc::LengthUnreachable, [] { theta_for_linear_length(-0.02, 50, 0, 100, 50.5); });
}

TEST(Consistency, FourRowDiscrepancyAtNinety) {
  const auto rep = consistency_report(reference_fit(4), 7);  // grid 0, 30, ..., 180
  ASSERT_EQ(rep.points.size(), 7u);
  const auto& p = rep.points[3];
  EXPECT_EQ(p.theta, 90);
  EXPECT_NEAR(p.blocked_magnitude, 11.556459, 1e-9);
  EXPECT_NEAR(p.stiffness_magnitude, 2.762 * 0.0531 * 90, 1e-12);
  // Oracle: | |F_b| - |k C_l theta| | / |F_b|
  const double want = std::abs(11.556459 - 2.762 * 0.0531 * 90) / 11.556459;
  EXPECT_NEAR(p.relative_discrepancy, want, 1e-12);
  EXPECT_NEAR(p.relative_discrepancy, 0.14, 0.005);
  EXPECT_EQ(rep.points.front().relative_discrepancy, 0.0);
}

TEST(Consistency, ExactWhenModelsAgree) {
  SpringFit f = reference_fit(6);
  f.force_quadratic = -f.stiffness_slope * f.length_slope;
  f.force_linear = -f.rest_stiffness * f.length_slope;
  const auto rep = consistency_report(f, 37);
  EXPECT_LE(rep.max_relative_discrepancy, 1e-12);
  expect_code(Errc::InvalidArgument, [&] { consistency_report(f, 1); });
}

TEST(Consistency, GridIncludesEndpoints) {
  const auto rep = consistency_report(reference_fit(10), 4);
  EXPECT_EQ(rep.points.front().theta, 0);
  EXPECT_EQ(rep.points.back().theta, 180);
  EXPECT_EQ(rep.points[1].theta, 60);
}

TEST(SpringFitValidate, RejectsBrokenInvariants) {
  auto f = reference_fit(4);
  EXPECT_NO_THROW(validate(f));
  auto bad = f;
  bad.rest_stiffness = 0;
  expect_code(Errc::InvalidArgument, [&] { validate(bad); });
  bad = f;
  bad.rest_length = -1;
  expect_code(Errc::InvalidArgument, [&] { validate(bad); });
  bad = f;
  bad.r2_length = 1.01;
  expect_code(Errc::InvalidArgument, [&] { validate(bad); });
  bad = f;
  bad.theta_min = 200;
  expect_code(Errc::InvalidArgument, [&] { validate(bad); });
  bad = f;
  bad.stiffness_slope = -0.01;  // k(180) = 1.664 - 1.8 < 0
  expect_code(Errc::InvalidArgument, [&] { validate(bad); });
}

TEST(AnchorCurve, OpenForceAnchors) {
  const AnchorCurve c{AnchorUnit::Force_N, {{-180, 124}, {0, 0}}};
  EXPECT_EQ(anchor_value(c, -180), 124.0);
  EXPECT_EQ(force_direction(-180), ForceDirection::Pull);
  EXPECT_EQ(anchor_value(c, 0), 0.0);
  EXPECT_EQ(anchor_value(c, -90), 62.0);
  expect_code(Errc::ThetaOutOfRange, [&] { anchor_value(c, 10); });
  expect_code(Errc::ThetaOutOfRange, [&] { anchor_value(c, -181); });
}

TEST(AnchorCurve, ExactAtBreakpointsAndLinearBetween) {
  const AnchorCurve c{AnchorUnit::Torque_Nmm, {{-90, -45}, {-30, -12}, {0, 0}, {30, 12}, {90, 45}}};
  for (const auto& p : c.points) EXPECT_EQ(anchor_value(c, p.theta), p.value);
  EXPECT_DOUBLE_EQ(anchor_value(c, 60), 28.5);
  EXPECT_DOUBLE_EQ(anchor_value(c, -60), -28.5);
  EXPECT_DOUBLE_EQ(anchor_value(c, 15), 6);
}

TEST(AnchorCurve, RejectsBadBreakpoints) {
  expect_code(Errc::InvalidArgument, [] { validate(AnchorCurve{AnchorUnit::Force_N, {{0, 1}}}); });
  expect_code(Errc::InvalidArgument, [] { validate(AnchorCurve{AnchorUnit::Force_N, {{0, 1}, {0, 2}}}); });
  expect_code(Errc::InvalidArgument, [] { validate(AnchorCurve{AnchorUnit::Force_N, {{5, 1}, {0, 2}}}); });
  expect_code(Errc::InvalidArgument, [] { parse_anchor_unit("lbf"); });
}

TEST(DesignModel, MatchesSpringFitEvaluation) {
  for (const auto& r : test::kClosedFits) {
    const auto f = reference_fit(r.rows);
    const auto m = to_design_model("closed", f);
    for (double th = 0; th <= 180; th += 10) {
      EXPECT_NEAR(evaluate(m, Property::BlockedForce, th), blocked_force(f, th), 1e-12);
      EXPECT_NEAR(evaluate(m, Property::HoldingTorque, th), holding_torque(f, th), 1e-12);
      EXPECT_NEAR(evaluate(m, Property::SpringConstant, th), spring_constant(f, th), 1e-12);
      EXPECT_NEAR(evaluate(m, Property::MinEnergyLength, th), min_energy_length(f, th), 1e-12);
    }
    EXPECT_NEAR(theta_for_length(m, min_energy_length(f, 45)), 45, 1e-9);
  }
}

TEST(DesignModel, RejectsAnchorsNotSpanningRange) {
  DesignModel m = to_design_model("x", reference_fit(4));
  m.blocked_force = AnchorCurve{AnchorUnit::Force_N, {{0, 0}, {90, -11}}};
  expect_code(Errc::InvalidArgument, [&] { validate(m); });
  m.blocked_force = AnchorCurve{AnchorUnit::Torque_Nmm, {{0, 0}, {180, -11}}};
  expect_code(Errc::InvalidArgument, [&] { validate(m); });
}

// The shipped table against independently typed constants.
class ShippedTable : public ::testing::Test {
 protected:
  io::ParameterTable table = io::load_parameter_table(test::data_path("reference_fits.hsa"));
};

TEST_F(ShippedTable, ClosedFitsAreVerbatim) {
  for (const auto& r : test::kClosedFits) {
    const auto* e = table.find("closed-" + std::to_string(r.rows));
    ASSERT_NE(e, nullptr) << r.rows;
    EXPECT_EQ(std::get<SpringFit>(e->value), reference_fit(r.rows)) << r.rows;
  }
}

TEST_F(ShippedTable, OpenAnchorsAndTorque) {
  const auto m = table.model(*table.find("open-4"));
  EXPECT_EQ(evaluate(m, Property::BlockedForce, -180), 124.0);
  EXPECT_EQ(evaluate(m, Property::BlockedForce, 0), 0.0);
  EXPECT_NEAR(evaluate(m, Property::HoldingTorque, -180), -36.96, 0.01);
  EXPECT_NEAR(evaluate(m, Property::MinEnergyLength, 0), 122.2, 1e-12);
}

TEST_F(ShippedTable, SemiOpenPushesAndPulls) {
  const auto m = table.model(*table.find("semi-open-4"));
  EXPECT_EQ(evaluate(m, Property::BlockedForce, 90), -8.9);
  EXPECT_GT(evaluate(m, Property::BlockedForce, -90), 0);
  EXPECT_EQ(evaluate(m, Property::BlockedForce, 0), 0.0);
  EXPECT_EQ(evaluate(m, Property::HoldingTorque, 0), 0.0);
  // Linear torque region between -30 and 30 degrees.
  EXPECT_DOUBLE_EQ(evaluate(m, Property::HoldingTorque, 15), 0.5 * evaluate(m, Property::HoldingTorque, 30));
  EXPECT_DOUBLE_EQ(evaluate(m, Property::HoldingTorque, -15), 0.5 * evaluate(m, Property::HoldingTorque, -30));
}

TEST_F(ShippedTable, StiffnessOrderedAlongTrajectory) {
  const auto open = table.model(*table.find("open-4"));
  const auto semi = table.model(*table.find("semi-open-4"));
  const auto closed = table.model(*table.find("closed-4"));
  auto range = [](const DesignModel& m) {
    double lo = INFINITY, hi = -INFINITY;
    for (double th = m.theta_min; th <= m.theta_max + 1e-9; th += 1) {
      const double k = evaluate(m, Property::SpringConstant, th);
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
    return std::pair{lo, hi};
  };
  EXPECT_GT(range(open).first, range(semi).second);
  EXPECT_GT(range(semi).first, range(closed).second);
}
