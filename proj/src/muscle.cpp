#include "nmsgait/muscle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nmsgait {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
const double kFlExponent = std::log(0.05);

// Divisors of the force-velocity inversion are floored so that an inactive
// or strongly overstretched fibre still has a finite velocity.
constexpr double kActivationFloor = 0.01;
constexpr double kForceLengthFloor = 0.01;
// Eccentric velocity cap in units of v_max * l_opt.
constexpr double kEccentricCap = 5.0;
// Hill-curve constant of the eccentric branch.
constexpr double kEccentricShape = 7.56;

MomentArm variable_arm(Joint j, double r0, double phi_max_deg, double phi_ref_deg, double rho,
                       int direction) {
  return {j, r0, phi_max_deg * kDeg, phi_ref_deg * kDeg, rho, direction, false};
}

MomentArm constant_arm(Joint j, double r0, double phi_ref_deg, double rho, int direction) {
  return {j, r0, 0.0, phi_ref_deg * kDeg, rho, direction, true};
}

MuscleParams unit(double f_max, double v_max, double l_opt, double l_slack) {
  MuscleParams p;
  p.f_max = f_max;
  p.v_max = v_max;
  p.l_opt = l_opt;
  p.l_slack = l_slack;
  return p;
}

// Path-length change of one spanned joint relative to its reference angle.
double arm_excursion(const MomentArm& arm, double coordinate) {
  const double phi = inner_angle(arm.joint, coordinate);
  if (arm.constant) return arm.direction * arm.r0 * (phi - arm.phi_ref);
  return arm.direction * arm.r0 *
         (std::sin(phi - arm.phi_max) - std::sin(arm.phi_ref - arm.phi_max));
}

}  // namespace

std::string_view muscle_name(Muscle m) {
  switch (m) {
    case Muscle::kSOL: return "SOL";
    case Muscle::kTA: return "TA";
    case Muscle::kGAS: return "GAS";
    case Muscle::kVAS: return "VAS";
    case Muscle::kHAM: return "HAM";
    case Muscle::kGLU: return "GLU";
    case Muscle::kHFL: return "HFL";
  }
  return "?";
}

double JointAngles::operator[](Joint j) const {
  switch (j) {
    case Joint::kHip: return hip;
    case Joint::kKnee: return knee;
    case Joint::kAnkle: return ankle;
  }
  return 0.0;
}

double inner_angle(Joint j, double coordinate) {
  switch (j) {
    case Joint::kAnkle: return std::numbers::pi / 2.0 - coordinate;
    case Joint::kKnee:
    case Joint::kHip: return std::numbers::pi - coordinate;
  }
  return 0.0;
}

void MuscleParams::validate() const {
  if (!(f_max > 0.0 && l_opt > 0.0 && v_max > 0.0 && l_slack > 0.0 && tau > 0.0 && width > 0.0)) {
    throw std::invalid_argument("muscle: f_max, l_opt, v_max, l_slack, tau and width must be > 0");
  }
  if (arm_count < 1 || arm_count > 2) {
    throw std::invalid_argument("muscle: a unit spans one or two joints");
  }
}

MuscleTable geyer_herr_muscles() {
  MuscleTable t;
  auto& sol = t[static_cast<int>(Muscle::kSOL)];
  sol = unit(4000.0, 6.0, 0.04, 0.26);
  sol.arms[0] = variable_arm(Joint::kAnkle, 0.05, 110.0, 80.0, 0.5, -1);
  sol.arm_count = 1;

  auto& ta = t[static_cast<int>(Muscle::kTA)];
  ta = unit(800.0, 12.0, 0.06, 0.24);
  ta.arms[0] = variable_arm(Joint::kAnkle, 0.04, 80.0, 110.0, 0.7, 1);
  ta.arm_count = 1;

  auto& gas = t[static_cast<int>(Muscle::kGAS)];
  gas = unit(1500.0, 12.0, 0.05, 0.40);
  gas.arms[0] = variable_arm(Joint::kAnkle, 0.05, 110.0, 80.0, 0.7, -1);
  gas.arms[1] = variable_arm(Joint::kKnee, 0.05, 140.0, 165.0, 0.7, 1);
  gas.arm_count = 2;

  auto& vas = t[static_cast<int>(Muscle::kVAS)];
  vas = unit(6000.0, 12.0, 0.08, 0.23);
  vas.arms[0] = variable_arm(Joint::kKnee, 0.06, 165.0, 125.0, 0.7, -1);
  vas.arm_count = 1;

  auto& ham = t[static_cast<int>(Muscle::kHAM)];
  ham = unit(3000.0, 12.0, 0.10, 0.31);
  ham.arms[0] = variable_arm(Joint::kKnee, 0.05, 180.0, 180.0, 0.7, 1);
  ham.arms[1] = constant_arm(Joint::kHip, 0.08, 155.0, 0.7, -1);
  ham.arm_count = 2;

  auto& glu = t[static_cast<int>(Muscle::kGLU)];
  glu = unit(1500.0, 12.0, 0.11, 0.13);
  glu.arms[0] = constant_arm(Joint::kHip, 0.10, 150.0, 0.5, -1);
  glu.arm_count = 1;

  auto& hfl = t[static_cast<int>(Muscle::kHFL)];
  hfl = unit(2000.0, 12.0, 0.11, 0.10);
  hfl.arms[0] = constant_arm(Joint::kHip, 0.10, 180.0, 0.5, 1);
  hfl.arm_count = 1;
  return t;
}

double activation_rate(double u, double a, double tau) { return (u - a) / tau; }

double activation_step(double u, double a, double dt, double tau) {
  const double next = a + (u - a) * (1.0 - std::exp(-dt / tau));
  return std::clamp(next, 0.0, 1.0);
}

double force_length(double l_ce, const MuscleParams& p) {
  const double x = std::abs((l_ce - p.l_opt) / (p.l_opt * p.width));
  return std::exp(kFlExponent * x * x * x);
}

double force_velocity(double v_ce, const MuscleParams& p) {
  const double v = v_ce / (p.v_max * p.l_opt);
  const double k = p.curvature;
  if (v < 0.0) return std::max(0.0, (1.0 + v) / (1.0 - k * v));
  const double n = p.eccentric;
  return n + (n - 1.0) * (v - 1.0) / (kEccentricShape * k * v + 1.0);
}

double inverse_force_velocity(double fv, const MuscleParams& p) {
  const double k = p.curvature;
  const double n = p.eccentric;
  double v = 0.0;
  if (fv <= 0.0) {
    v = -1.0;
  } else if (fv <= 1.0) {
    v = (fv - 1.0) / (1.0 + k * fv);
  } else {
    const double denom = (n - 1.0) + kEccentricShape * k * (n - fv);
    v = denom > 0.0 ? std::min((fv - 1.0) / denom, kEccentricCap) : kEccentricCap;
  }
  return v * p.v_max * p.l_opt;
}

double series_elastic_force(double l_se, const MuscleParams& p) {
  if (l_se <= p.l_slack) return 0.0;
  const double e = (l_se - p.l_slack) / (p.l_slack * p.tendon_strain);
  return p.f_max * e * e;
}

double parallel_elastic_force(double l_ce, const MuscleParams& p) {
  if (l_ce <= p.l_opt) return 0.0;
  const double e = (l_ce - p.l_opt) / (p.l_opt * p.width);
  return p.f_max * e * e;
}

double buffer_elastic_force(double l_ce, const MuscleParams& p) {
  const double l_min = p.l_opt * (1.0 - p.width);
  if (l_ce >= l_min) return 0.0;
  const double e = (l_min - l_ce) / (p.l_opt * p.width * 0.5);
  return p.f_max * e * e;
}

double ce_force(double activation, double l_ce, double v_ce, const MuscleParams& p) {
  return activation * p.f_max * force_length(l_ce, p) * force_velocity(v_ce, p);
}

MtuEval mtu_evaluate(double activation, double l_mtu, double l_ce, const MuscleParams& p) {
  MtuEval e;
  e.force = series_elastic_force(l_mtu - l_ce, p);
  const double active = std::max(activation, kActivationFloor) * p.f_max *
                        std::max(force_length(l_ce, p), kForceLengthFloor);
  const double fv =
      (e.force - parallel_elastic_force(l_ce, p) + buffer_elastic_force(l_ce, p)) / active;
  e.v_ce = inverse_force_velocity(fv, p);
  return e;
}

MtuStep mtu_force(double activation, double l_mtu, double v_mtu, double l_ce, double dt,
                  const MuscleParams& p) {
  // Midpoint substeps; the fibre time constant is well above 1e-5 s.
  const int n = std::max(1, static_cast<int>(std::ceil(dt / 1e-5)));
  const double h = dt / n;
  double l = l_ce;
  for (int i = 0; i < n; ++i) {
    const double t0 = i * h;
    const double k1 = mtu_evaluate(activation, l_mtu + v_mtu * t0, l, p).v_ce;
    const double k2 =
        mtu_evaluate(activation, l_mtu + v_mtu * (t0 + 0.5 * h), l + 0.5 * h * k1, p).v_ce;
    l += h * k2;
  }
  return {series_elastic_force(l_mtu + v_mtu * dt - l, p), l};
}

double equilibrium_ce_length(double activation, double l_mtu, const MuscleParams& p) {
  const auto imbalance = [&](double l_ce) {
    const double ce = activation * p.f_max * force_length(l_ce, p) +
                      parallel_elastic_force(l_ce, p) - buffer_elastic_force(l_ce, p);
    return series_elastic_force(l_mtu - l_ce, p) - ce;
  };
  // Tendon slack bracket: at l_ce = l_mtu - l_slack the tendon carries nothing.
  double hi = l_mtu - p.l_slack;
  if (hi <= 0.0) return std::max(1e-4, l_mtu * 0.5);
  if (imbalance(hi) >= 0.0) return hi;
  double lo = hi - 0.1 * p.l_slack;
  while (imbalance(lo) < 0.0 && lo > 1e-4) lo = std::max(1e-4, lo - 0.1 * p.l_slack);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (imbalance(mid) > 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double path_length(const MuscleParams& p, const JointAngles& angles) {
  double l = 0.0;
  for (int i = 0; i < p.arm_count; ++i) l += arm_excursion(p.arms[i], angles[p.arms[i].joint]);
  return l;
}

double moment_arm(const MuscleParams& p, Joint joint, const JointAngles& angles) {
  for (int i = 0; i < p.arm_count; ++i) {
    const MomentArm& arm = p.arms[i];
    if (arm.joint != joint) continue;
    if (arm.constant) return arm.direction * arm.r0;
    const double phi = inner_angle(joint, angles[joint]);
    return arm.direction * arm.r0 * std::cos(phi - arm.phi_max);
  }
  return 0.0;
}

double mtu_length(const MuscleParams& p, const JointAngles& angles) {
  double l = p.l_opt + p.l_slack;
  for (int i = 0; i < p.arm_count; ++i) {
    l += p.arms[i].rho * arm_excursion(p.arms[i], angles[p.arms[i].joint]);
  }
  return l;
}

std::array<double, 3> muscle_torques(std::span<const double, kMusclesPerLeg> forces,
                                     const MuscleTable& muscles, const JointAngles& angles) {
  std::array<double, 3> tau{};
  for (int m = 0; m < kMusclesPerLeg; ++m) {
    const MuscleParams& p = muscles[m];
    for (int i = 0; i < p.arm_count; ++i) {
      const Joint j = p.arms[i].joint;
      tau[static_cast<int>(j)] += forces[m] * moment_arm(p, j, angles);
    }
  }
  return tau;
}

}  // namespace nmsgait
