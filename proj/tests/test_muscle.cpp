#include <random>

#include <gtest/gtest.h>

#include "nmsgait/muscle.hpp"

using namespace nmsgait;

namespace {

constexpr double kArmTol = 1e-6;  // m, finite-difference moment arm check

const MuscleParams& params(Muscle m) {
  static const MuscleTable table = geyer_herr_muscles();
  return table[static_cast<int>(m)];
}

JointAngles random_angles(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> hip(-0.8, 1.2), knee(0.05, 1.5), ankle(-0.6, 0.3);
  return {hip(rng), knee(rng), ankle(rng)};
}

}  // namespace

TEST(MuscleTable, AllUnitsValid) {
  for (Muscle m : kMuscles) EXPECT_NO_THROW(params(m).validate());
  MuscleParams bad = params(Muscle::kSOL);
  bad.tau = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = params(Muscle::kSOL);
  bad.f_max = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Activation, FixedPointAndInitialRate) {
  EXPECT_EQ(activation_rate(0.4, 0.4, 0.01), 0.0);
  EXPECT_DOUBLE_EQ(activation_step(0.4, 0.4, 0.05, 0.01), 0.4);
  EXPECT_DOUBLE_EQ(activation_rate(1.0, 0.0, 0.01), 100.0);
}

TEST(Activation, ExactFirstOrderResponse) {
  const double a = activation_step(1.0, 0.0, 0.01, 0.01);
  EXPECT_NEAR(a, 1.0 - std::exp(-1.0), 1e-14);
}

TEST(Activation, DecaysMonotonicallyAndStaysInUnitInterval) {
  double a = 0.9;
  for (int i = 0; i < 200; ++i) {
    const double next = activation_step(0.0, a, 0.001, 0.01);
    EXPECT_LT(next, a);
    a = next;
  }
  EXPECT_LT(a, 1e-8);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0), dt(0.0, 0.05);
  a = 0.0;
  for (int i = 0; i < 10000; ++i) {
    a = activation_step(u(rng), a, dt(rng), 0.01);
    ASSERT_GE(a, 0.0);
    ASSERT_LE(a, 1.0);
  }
}

TEST(HillModel, NormalizationAndBoundaries) {
  for (Muscle m : kMuscles) {
    const MuscleParams& p = params(m);
    EXPECT_DOUBLE_EQ(force_length(p.l_opt, p), 1.0);
    EXPECT_DOUBLE_EQ(force_velocity(0.0, p), 1.0);
    EXPECT_DOUBLE_EQ(ce_force(1.0, p.l_opt, 0.0, p), p.f_max);
    EXPECT_NEAR(force_velocity(-p.v_max * p.l_opt, p), 0.0, 1e-15);
    EXPECT_EQ(ce_force(1.0, p.l_opt, -p.v_max * p.l_opt, p), 0.0);
    EXPECT_EQ(series_elastic_force(p.l_slack, p), 0.0);
  }
}

TEST(HillModel, ForceLengthUnimodal) {
  const MuscleParams& p = params(Muscle::kVAS);
  double prev = 0.0;
  for (int i = 30; i <= 100; ++i) {
    const double f = force_length(0.01 * i * p.l_opt, p);
    EXPECT_GE(f, prev - 1e-15);
    EXPECT_LE(f, 1.0);
    prev = f;
  }
  for (int i = 100; i <= 170; ++i) {
    const double f = force_length(0.01 * i * p.l_opt, p);
    EXPECT_LE(f, prev + 1e-15);
    prev = f;
  }
}

TEST(HillModel, ForceVelocityMonotone) {
  const MuscleParams& p = params(Muscle::kSOL);
  const double vmax = p.v_max * p.l_opt;
  double prev = -1.0;
  for (double v = -vmax; v <= vmax; v += vmax / 100) {
    const double f = force_velocity(v, p);
    EXPECT_GE(f, prev);
    EXPECT_LE(f, p.eccentric);
    prev = f;
  }
  for (double fv = 0.05; fv < 1.45; fv += 0.05) {
    EXPECT_NEAR(force_velocity(inverse_force_velocity(fv, p), p), fv, 1e-9);
  }
}

TEST(HillModel, TendonForceNeverNegative) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> a(0.0, 1.0), s(0.5, 1.6);
  for (Muscle m : kMuscles) {
    const MuscleParams& p = params(m);
    for (int i = 0; i < 500; ++i) {
      const double l_ce = s(rng) * p.l_opt;
      const double l_mtu = l_ce + s(rng) * p.l_slack;
      const MtuEval e = mtu_evaluate(a(rng), l_mtu, l_ce, p);
      EXPECT_GE(e.force, 0.0);
      EXPECT_TRUE(std::isfinite(e.v_ce));
    }
  }
}

TEST(HillModel, SlackPassiveUnitIsForceFree) {
  const MuscleParams& p = params(Muscle::kGAS);
  const MtuEval e = mtu_evaluate(0.0, p.l_opt + p.l_slack, p.l_opt, p);
  EXPECT_EQ(e.force, 0.0);
}

TEST(HillModel, EquilibriumLengthBalancesForces) {
  for (Muscle m : kMuscles) {
    const MuscleParams& p = params(m);
    const double l_mtu = p.l_slack * 1.02 + p.l_opt;
    const double l_ce = equilibrium_ce_length(0.5, l_mtu, p);
    const MtuEval e = mtu_evaluate(0.5, l_mtu, l_ce, p);
    EXPECT_NEAR(e.v_ce, 0.0, 1e-6) << muscle_name(m);
  }
}

TEST(HillModel, MtuForceStepConsistent) {
  const MuscleParams& p = params(Muscle::kVAS);
  const double l_mtu = p.l_opt + p.l_slack * 1.03;
  const double l0 = equilibrium_ce_length(0.3, l_mtu, p);
  const MtuStep st = mtu_force(0.3, l_mtu, 0.0, l0, 1e-3, p);
  EXPECT_NEAR(st.l_ce, l0, 1e-6);
  EXPECT_GT(st.force, 0.0);
}

TEST(Geometry, MomentArmIsNegativePathDerivative) {
  std::mt19937_64 rng(21);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const JointAngles q = random_angles(rng);
    for (Muscle m : kMuscles) {
      const MuscleParams& p = params(m);
      for (Joint j : {Joint::kHip, Joint::kKnee, Joint::kAnkle}) {
        JointAngles plus = q, minus = q;
        double* c_plus = j == Joint::kHip ? &plus.hip : j == Joint::kKnee ? &plus.knee : &plus.ankle;
        double* c_minus =
            j == Joint::kHip ? &minus.hip : j == Joint::kKnee ? &minus.knee : &minus.ankle;
        *c_plus += h;
        *c_minus -= h;
        const double fd = -(path_length(p, plus) - path_length(p, minus)) / (2 * h);
        EXPECT_NEAR(moment_arm(p, j, q), fd, kArmTol) << muscle_name(m);
      }
    }
  }
}

TEST(Geometry, TorqueIsForceTimesArm) {
  std::mt19937_64 rng(23);
  const MuscleTable table = geyer_herr_muscles();
  const JointAngles q = random_angles(rng);
  std::array<double, kMusclesPerLeg> zero{};
  const auto t0 = muscle_torques(zero, table, q);
  for (double t : t0) EXPECT_EQ(t, 0.0);

  std::array<double, kMusclesPerLeg> glu{};
  glu[static_cast<int>(Muscle::kGLU)] = 1000.0;
  const auto tg = muscle_torques(glu, table, q);
  EXPECT_DOUBLE_EQ(tg[0], 1000.0 * moment_arm(table[static_cast<int>(Muscle::kGLU)], Joint::kHip, q));
  EXPECT_DOUBLE_EQ(std::abs(tg[0]), 1000.0 * 0.10);  // constant arm
  EXPECT_EQ(tg[1], 0.0);
  EXPECT_EQ(tg[2], 0.0);

  std::uniform_real_distribution<double> f(0.0, 3000.0);
  std::array<double, kMusclesPerLeg> forces{};
  for (double& x : forces) x = f(rng);
  const auto t = muscle_torques(forces, table, q);
  for (Joint j : {Joint::kHip, Joint::kKnee, Joint::kAnkle}) {
    double expected = 0.0;
    for (int i = 0; i < kMusclesPerLeg; ++i) expected += forces[i] * moment_arm(table[i], j, q);
    EXPECT_NEAR(t[static_cast<int>(j)], expected, 1e-9);
  }
}

TEST(Geometry, ExtensorsAndFlexorsPullOpposite) {
  const MuscleTable table = geyer_herr_muscles();
  const JointAngles q{0.2, 0.3, 0.0};
  const auto arm = [&](Muscle m, Joint j) { return moment_arm(table[static_cast<int>(m)], j, q); };
  EXPECT_LT(arm(Muscle::kGLU, Joint::kHip) * arm(Muscle::kHFL, Joint::kHip), 0.0);
  EXPECT_LT(arm(Muscle::kSOL, Joint::kAnkle) * arm(Muscle::kTA, Joint::kAnkle), 0.0);
  EXPECT_LT(arm(Muscle::kVAS, Joint::kKnee) * arm(Muscle::kHAM, Joint::kKnee), 0.0);
}
