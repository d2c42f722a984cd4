#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "nmsgait/analysis.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace nmsgait;

namespace {

constexpr double kTight = 1e-9;

// Force lines from CoPs spread along the ground through a point at `height`
// above the CoM, with varying magnitudes.
std::vector<ForceLine> fan(std::size_t n, double height) {
  std::vector<ForceLine> lines;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 cop(-0.15 + 0.3 * double(i) / double(n - 1), -0.95);
    const Vec2 dir = (Vec2(0.0, height) - cop).normalized();
    lines.push_back({(500.0 + 10.0 * double(i)) * dir, cop});
  }
  return lines;
}

std::vector<oracle::Line> to_oracle(const std::vector<ForceLine>& lines) {
  std::vector<oracle::Line> out;
  for (const ForceLine& l : lines) out.push_back({l.force, l.cop});
  return out;
}

// Nearly vertical forces, angular spread `eps`, uncorrelated with the CoP.
std::vector<ForceLine> near_parallel(double eps) {
  std::vector<ForceLine> lines;
  for (int i = 0; i < 40; ++i) {
    const double a = eps * std::sin(2.3 * i + 0.7);
    lines.push_back({Vec2(std::sin(a), std::cos(a)) * 700.0, Vec2(-0.1 + 0.005 * i, -1.0)});
  }
  return lines;
}

}  // namespace

TEST(IpRegression, ExactFanRecoversHeight) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto lines = fan(50, 1.0);
  const IpResult r = ip_regression(lines);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(r.height, 1.0, 1e-3);
  EXPECT_GE(r.r2, 1.0 - kTight);
  EXPECT_LE(r.r2, 1.0);
  EXPECT_FALSE(r.degenerate);
  EXPECT_EQ(r.samples, 50u);
  EXPECT_LT(seconds, 1.0);
}

TEST(IpRegression, BelowCoMAndHighPointsRecovered) {
  for (double h : {-0.4, 0.3, 2.5}) {
    const IpResult r = ip_regression(fan(30, h));
    EXPECT_NEAR(r.height, h, 1e-3);
    EXPECT_GE(r.r2, 1.0 - kTight);
  }
}

TEST(IpRegression, R2MatchesOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-0.3, 0.3), x(-0.2, 0.2), h(-1.0, 3.0);
  std::vector<ForceLine> lines;
  for (int i = 0; i < 60; ++i) {
    const double a = ang(rng);
    lines.push_back({Vec2(std::sin(a), std::cos(a)) * 600.0, Vec2(x(rng), -1.0)});
  }
  const auto ol = to_oracle(lines);
  for (int i = 0; i < 50; ++i) {
    const double hh = h(rng);
    EXPECT_NEAR(ip_r2(lines, hh), oracle::r2(ol, hh), 1e-12);
  }
  const IpResult r = ip_regression(lines);
  const double scan = oracle::best_height(ol, -2.0, 5.0, 1e-3);
  EXPECT_GE(r.r2, oracle::r2(ol, scan) - 1e-9);
  EXPECT_LE(r.r2, 1.0);
}

TEST(IpRegression, ScalingForcesChangesNothing) {
  auto lines = near_parallel(0.2);
  const IpResult a = ip_regression(lines);
  for (ForceLine& l : lines) l.force *= 3.7;
  const IpResult b = ip_regression(lines);
  EXPECT_NEAR(a.height, b.height, 1e-12);
  EXPECT_NEAR(a.r2, b.r2, 1e-12);
}

TEST(IpRegression, ParallelForcesAreDegenerate) {
  std::vector<ForceLine> lines;
  for (int i = 0; i < 21; ++i) lines.push_back({Vec2(0.0, 700.0), Vec2(-0.1 + 0.01 * i, -1.0)});
  const IpResult r = ip_regression(lines);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.r2, -std::numeric_limits<double>::infinity());
  EXPECT_FALSE(is_ip_gait(r.r2));
}

TEST(IpRegression, NearParallelFamilyDivergesDownward) {
  double prev = std::numeric_limits<double>::infinity();
  double last = 0.0;
  for (double eps = 1e-1; eps >= 1e-6; eps /= 10.0) {
    const IpResult r = ip_regression(near_parallel(eps));
    EXPECT_FALSE(r.degenerate);
    EXPECT_LT(r.r2, prev) << eps;
    prev = last = r.r2;
  }
  EXPECT_LT(last, -1e3);
}

TEST(IpRegression, RejectsBadInput) {
  EXPECT_THROW(ip_regression(fan(9, 1.0)), AnalysisError);
  auto lines = fan(20, 1.0);
  lines[3].cop.x() = std::nan("");
  EXPECT_THROW(ip_regression(lines), AnalysisError);
  lines = fan(20, 1.0);
  lines[4].force = Vec2::Zero();
  EXPECT_THROW(ip_regression(lines), AnalysisError);
}

TEST(IpClassification, StrictThreshold) {
  EXPECT_TRUE(is_ip_gait(0.93));
  EXPECT_FALSE(is_ip_gait(0.6));
  EXPECT_TRUE(is_ip_gait(std::nextafter(0.6, 1.0)));
  EXPECT_FALSE(is_ip_gait(-835.08));
  EXPECT_FALSE(is_ip_gait(-std::numeric_limits<double>::infinity()));
}

TEST(CollisionAngle, ClosedForms) {
  EXPECT_EQ(collision_angle({0.0, 1.0}, {1.0, 0.0}), 0.0);
  EXPECT_NEAR(collision_angle({1.0, 0.0}, {1.0, 0.0}), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(collision_angle({0.1, 1.0}, {1.0, 0.0}), std::asin(0.1 / std::sqrt(1.01)), 1e-15);
  EXPECT_LT(collision_angle({-0.1, 1.0}, {1.0, 0.0}), 0.0);
  EXPECT_THROW(collision_angle({0.0, 0.0}, {1.0, 0.0}), AnalysisError);
  EXPECT_THROW(collision_angle({0.0, 1.0}, {0.0, 0.0}), AnalysisError);
}

TEST(CollisionFraction, RollingWheelIsZero) {
  std::vector<Vec2> f, v;
  for (int i = 0; i < 100; ++i) {
    const double a = -0.4 + 0.008 * i;
    f.push_back(700.0 * Vec2(std::sin(a), std::cos(a)));
    v.push_back(1.3 * Vec2(std::cos(a), -std::sin(a)));
  }
  EXPECT_NEAR(collision_fraction(f, v).fraction, 0.0, kTight);
}

TEST(CollisionFraction, CollinearIsOne) {
  std::vector<Vec2> f, v;
  for (int i = 0; i < 100; ++i) {
    const double a = 0.1 + 0.006 * i;  // upward-forward: theta + lambda = pi / 2
    const Vec2 d(std::cos(a), std::sin(a));
    f.push_back((300.0 + i) * d);
    v.push_back(1.2 * d);
  }
  EXPECT_NEAR(collision_fraction(f, v).fraction, 1.0, kTight);
}

TEST(CollisionFraction, HalfAtPotentialHalfAtZero) {
  // phi = theta + lambda needs F and v on the same side; phi = 0 needs a
  // perpendicular pair with theta + lambda equal to the first group's.
  std::vector<Vec2> f, v;
  const double a = 0.15;
  for (int i = 0; i < 10; ++i) {
    f.push_back(Vec2(std::sin(a), std::cos(a)));
    v.push_back(Vec2(1.0, 0.0));
  }
  for (int i = 0; i < 10; ++i) {
    f.push_back(Vec2(std::sin(a / 2), std::cos(a / 2)));
    v.push_back(Vec2(std::cos(a / 2), -std::sin(a / 2)));
  }
  EXPECT_NEAR(collision_fraction(f, v).fraction, 0.5, kTight);
}

TEST(CollisionFraction, RandomPhysicalSamplesInUnitInterval) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> fa(-0.5, 0.5), va(-0.4, 0.4), fm(10.0, 2000.0),
      vm(0.2, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vec2> f, v;
    for (int i = 0; i < 20; ++i) {
      const double a = fa(rng), b = va(rng);
      f.push_back(fm(rng) * Vec2(std::sin(a), std::cos(a)));
      v.push_back(vm(rng) * Vec2(std::cos(b), std::sin(b)));
    }
    const CollisionResult r = collision_fraction(f, v);
    ASSERT_GE(r.fraction, 0.0);
    ASSERT_LE(r.fraction, 1.0);
    EXPECT_EQ(r.violations, 0u);
    EXPECT_NEAR(r.fraction, oracle::collision_fraction(f, v), 1e-12);
  }
}

TEST(CollisionFraction, InvariantToTimeReparameterization) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> a(-0.3, 0.3);
  std::vector<Vec2> f, v, f2, v2;
  for (int i = 0; i < 30; ++i) {
    f.push_back(Vec2(std::sin(a(rng)), 1.0) * 500.0);
    v.push_back(Vec2(1.0, a(rng)));
    for (int r = 0; r < 3; ++r) {
      f2.push_back(f.back());
      v2.push_back(v.back());
    }
  }
  EXPECT_NEAR(collision_fraction(f, v).fraction, collision_fraction(f2, v2).fraction, 1e-14);
}

TEST(CollisionFraction, RejectsBadInput) {
  std::vector<Vec2> f(9, Vec2(0.0, 1.0)), v(9, Vec2(1.0, 0.0));
  EXPECT_THROW(collision_fraction(f, v), AnalysisError);
  f.resize(12, Vec2(0.0, 1.0));
  EXPECT_THROW(collision_fraction(f, v), AnalysisError);
  v.resize(12, Vec2(1.0, 0.0));
  EXPECT_THROW(collision_fraction(f, v), AnalysisError);  // zero potential
}

TEST(MarginOfStability, HandExample) {
  EXPECT_NEAR(margin_of_stability(0.0, 0.3, 1.0, 0.15, 9.81), 0.0542, 1e-4);
  EXPECT_NEAR(margin_of_stability(0.0, 0.3, 1.0, 0.15, 9.81),
              oracle::hof_margin(0.0, 0.3, 1.0, 0.15), 1e-15);
  EXPECT_EQ(margin_of_stability(0.4, 0.0, 1.0, 0.4), 0.0);
  const double w = std::sqrt(9.81 / 0.9);
  EXPECT_NEAR(margin_of_stability(0.1, 0.6, 0.9, 0.3) - margin_of_stability(0.1, 1.2, 0.9, 0.3),
              0.6 / w, 1e-14);
  EXPECT_GT(margin_of_stability(0.0, 0.0, 1.0, 0.1), 0.0);  // inside the base: positive
  EXPECT_THROW(margin_of_stability(0.0, 0.3, 0.0, 0.15), AnalysisError);
  EXPECT_THROW(margin_of_stability(0.0, 0.3, -1.0, 0.15), AnalysisError);
}

TEST(Steadiness, StrictThreshold) {
  const std::array<double, 6> same = {0.05, 0.05, 0.05, 0.05, 0.05, 0.05};
  EXPECT_EQ(steadiness(same).spread, 0.0);
  EXPECT_TRUE(steadiness(same).steady);
  const std::array<double, 6> wide = {0.05, 0.052, 0.058, 0.05, 0.051, 0.053};
  EXPECT_FALSE(steadiness(wide).steady);
  const std::array<double, 6> narrow = {0.0, 0.001, 0.0074, 0.002, 0.0, 0.003};
  EXPECT_TRUE(steadiness(narrow).steady);
  const std::array<double, 6> edge = {0.0, 0.0, kSteadinessThreshold, 0.0, 0.0, 0.0};
  EXPECT_FALSE(steadiness(edge).steady);
  const std::array<double, 5> five{};
  EXPECT_THROW(steadiness(five), AnalysisError);
  const std::array<double, 7> seven{};
  EXPECT_THROW(steadiness(seven), AnalysisError);
}

TEST(Descriptors, ConstantSpeedGait) {
  synthetic::GaitShape shape;
  shape.speed = 1.0;
  const GaitTrace tr = synthetic::gait(12001, shape);
  const Descriptors d = gait_descriptors(tr);
  EXPECT_EQ(d.speed, 1.0);
  EXPECT_NEAR(d.step_length, 0.5, kTight);
  EXPECT_NEAR(d.cadence, 2.0, kTight);
  EXPECT_NEAR(d.speed, d.step_length * d.cadence, 0.05 * d.speed);
  EXPECT_THROW(gait_descriptors(synthetic::gait(4000, shape)), InsufficientStrides);
}

TEST(Analyze, SyntheticGaitHasKnownIntersection) {
  const GaitTrace tr = synthetic::gait(12001);
  const GaitAnalysis a = analyze(tr);
  EXPECT_NEAR(a.ip.height, 0.5, 1e-3);
  EXPECT_GE(a.ip.r2, 1.0 - kTight);
  EXPECT_TRUE(is_ip_gait(a.ip.r2));
  EXPECT_EQ(a.ip_lines.size(), kIpResampleCount);
  EXPECT_GE(a.collision.fraction, 0.0);
  EXPECT_LE(a.collision.fraction, 1.0);
  // Identical geometry at every heel strike.
  EXPECT_NEAR(a.steadiness.spread, 0.0, 1e-12);
  EXPECT_TRUE(a.steadiness.steady);
  const double expected_mos = synthetic::kFootLength - 1.4 / std::sqrt(kGravity / 1.0);
  for (double m : a.margins) EXPECT_NEAR(m, expected_mos, 1e-12);
  EXPECT_NEAR(a.descriptors.speed, 1.4, 1e-12);
}

TEST(Analyze, PureAndRepeatable) {
  const GaitTrace tr = synthetic::gait(12001);
  const GaitAnalysis a = analyze(tr);
  const GaitAnalysis b = analyze(tr);
  EXPECT_EQ(a.ip.height, b.ip.height);
  EXPECT_EQ(a.ip.r2, b.ip.r2);
  EXPECT_EQ(a.collision.fraction, b.collision.fraction);
  EXPECT_EQ(a.margins, b.margins);
  EXPECT_EQ(a.steadiness.spread, b.steadiness.spread);
  EXPECT_EQ(a.descriptors.speed, b.descriptors.speed);
  EXPECT_EQ(a.descriptors.step_length, b.descriptors.step_length);
}

TEST(Analyze, ShortTraceRejected) {
  EXPECT_THROW(analyze(synthetic::gait(3000)), InsufficientStrides);
}
