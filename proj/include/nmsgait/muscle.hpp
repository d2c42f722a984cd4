#pragma once

// Hill-type muscle-tendon units (contractile, series-elastic, parallel-elastic
// and buffer elements) with first-order excitation-activation dynamics and a
// joint-angle dependent moment-arm geometry.

#include <array>
#include <span>
#include <string_view>

namespace nmsgait {

enum class Muscle : int { kSOL = 0, kTA, kGAS, kVAS, kHAM, kGLU, kHFL };
inline constexpr int kMusclesPerLeg = 7;
inline constexpr int kNumMuscles = 2 * kMusclesPerLeg;

inline constexpr std::array<Muscle, kMusclesPerLeg> kMuscles = {
    Muscle::kSOL, Muscle::kTA, Muscle::kGAS, Muscle::kVAS,
    Muscle::kHAM, Muscle::kGLU, Muscle::kHFL};

std::string_view muscle_name(Muscle m);

enum class Joint : int { kHip = 0, kKnee = 1, kAnkle = 2 };

/// Joint angles of one leg in the model's coordinate convention: hip flexion,
/// knee flexion and ankle dorsiflexion, all zero in the standing pose.
struct JointAngles {
  double hip = 0.0;
  double knee = 0.0;
  double ankle = 0.0;

  double operator[](Joint j) const;
};

/// Classic "inner" joint angle used by the moment-arm tables: ankle 90 deg in
/// the neutral pose and increasing with plantarflexion, knee and hip 180 deg
/// when straight. d(inner)/d(coordinate) = -1 for every joint.
double inner_angle(Joint j, double coordinate);

struct MomentArm {
  Joint joint = Joint::kHip;
  double r0 = 0.0;        // m
  double phi_max = 0.0;   // rad, inner angle of maximum arm
  double phi_ref = 0.0;   // rad, inner angle where l_mtu = l_opt + l_slack
  double rho = 1.0;       // pennation/compliance scaling of fibre excursion
  int direction = 1;      // +1: path lengthens as the inner angle grows
  bool constant = false;  // constant arm r0 (hip muscles)
};

struct MuscleParams {
  double f_max = 0.0;         // N
  double l_opt = 0.0;         // m
  double v_max = 0.0;         // l_opt / s, maximum shortening speed
  double l_slack = 0.0;       // m
  double tau = 0.01;          // s, excitation-activation time constant
  double width = 0.56;        // force-length width (fraction of l_opt)
  double eccentric = 1.5;     // eccentric force enhancement N
  double curvature = 5.0;     // force-velocity curvature K
  double tendon_strain = 0.04;  // reference strain at F_max
  std::array<MomentArm, 2> arms{};
  int arm_count = 0;

  /// Throws std::invalid_argument if any required constant is not positive.
  void validate() const;
};

struct MuscleState {
  double activation = 0.01;
  double l_ce = 0.0;
};

/// Per-leg table of the seven muscles, indexed by Muscle.
using MuscleTable = std::array<MuscleParams, kMusclesPerLeg>;

MuscleTable geyer_herr_muscles();

// -- activation -------------------------------------------------------------

/// da/dt = (u - a) / tau.
double activation_rate(double u, double a, double tau);

/// Exact first-order response to a stimulation held constant over dt.
double activation_step(double u, double a, double dt, double tau);

// -- contractile element ---------------------------------------------------

double force_length(double l_ce, const MuscleParams& p);

/// Force-velocity factor for v_ce in m/s (negative = shortening).
double force_velocity(double v_ce, const MuscleParams& p);

/// Inverse of force_velocity, returning v_ce in m/s. Factors at or below 0 map
/// to maximum shortening; the eccentric branch is capped below its asymptote.
double inverse_force_velocity(double fv, const MuscleParams& p);

double series_elastic_force(double l_se, const MuscleParams& p);
double parallel_elastic_force(double l_ce, const MuscleParams& p);
double buffer_elastic_force(double l_ce, const MuscleParams& p);

/// Active contractile force a * F_max * fl * fv.
double ce_force(double activation, double l_ce, double v_ce, const MuscleParams& p);

struct MtuEval {
  double force = 0.0;  // tendon force, N
  double v_ce = 0.0;   // dl_ce/dt resolving the force balance, m/s
};

/// Tendon force and the CE velocity that balances F_se = F_ce + F_pe - F_be.
MtuEval mtu_evaluate(double activation, double l_mtu, double l_ce, const MuscleParams& p);

struct MtuStep {
  double force = 0.0;
  double l_ce = 0.0;
};

/// Advances the CE length over dt for an MTU stretched at v_mtu from l_mtu and
/// returns the tendon force at the end of the step.
MtuStep mtu_force(double activation, double l_mtu, double v_mtu, double l_ce, double dt,
                  const MuscleParams& p);

/// CE length that puts the unit in static equilibrium at the given activation.
double equilibrium_ce_length(double activation, double l_mtu, const MuscleParams& p);

// -- geometry -------------------------------------------------------------

/// Geometric path length relative to the reference pose; its negative
/// derivative with respect to each joint coordinate is that joint's moment arm.
double path_length(const MuscleParams& p, const JointAngles& angles);

/// Moment arm in the joint-coordinate sense: a tendon force F produces the
/// generalized torque F * r on that coordinate.
double moment_arm(const MuscleParams& p, Joint joint, const JointAngles& angles);

/// MTU length seen by the Hill model (fibre excursion scaled by rho).
double mtu_length(const MuscleParams& p, const JointAngles& angles);

/// Hip, knee and ankle torques of one leg from its seven tendon forces.
std::array<double, 3> muscle_torques(std::span<const double, kMusclesPerLeg> forces,
                                     const MuscleTable& muscles, const JointAngles& angles);

}  // namespace nmsgait
