#pragma once

// Closed-loop neuromuscular walker: the biped, its fourteen muscle-tendon
// units, compliant ground contact and the reflex controller assembled into
// one ODE system.
//
// State layout: q (9) | qd (9) | activation (14) | CE length (14).

#include <array>

#include <Eigen/Dense>

#include "nmsgait/contact.hpp"
#include "nmsgait/integrator.hpp"
#include "nmsgait/model.hpp"
#include "nmsgait/muscle.hpp"
#include "nmsgait/reflex.hpp"

namespace nmsgait {

inline constexpr int kStateSize = 2 * kNumDof + 2 * kNumMuscles;
inline constexpr int kActivationOffset = 2 * kNumDof;
inline constexpr int kFiberOffset = kActivationOffset + kNumMuscles;

/// Soft joint range limits: tau = k * depth * max(0, 1 + depth_rate / rate).
struct JointLimits {
  double stiffness = 17.19;    // N m / rad
  double relax_rate = 0.01745;  // rad/s
  double knee_min = 0.0873;    // flexion, rad (hyperextension stop)
  double ankle_min = -0.698;   // dorsiflexion, rad (plantarflexion stop)
  double ankle_max = 0.349;    // dorsiflexion, rad
  double hip_min = -0.873;     // flexion, rad (hyperextension stop)
};

/// Generalized torques of the joint range limits.
GenVec joint_limit_torques(const GenVec& q, const GenVec& qd, const JointLimits& limits);

/// Starting configuration of a rollout: the left leg in early stance with its
/// foot flat, the right leg just after lift-off.
struct InitialPose {
  double speed = 1.295176;     // m/s, forward hip velocity
  double lean = 0.111126;      // rad
  double stance_hip = 0.14218;  // rad
  double stance_knee = 0.3015445;
  double swing_hip = 0.509869;
  double swing_knee = 0.098631;
  double swing_ankle = 0.021928;
  double swing_hip_rate = -0.042375;  // rad/s
  double swing_knee_rate = -0.19618;  // rad/s
  double stance_activation = 0.0990916;
};

struct WalkerConfig {
  Anthropometry anthropometry = Anthropometry::geyer_herr();
  MuscleTable muscles = geyer_herr_muscles();
  ContactParams contact;
  JointLimits limits;
  ReflexConstants reflex;
  InitialPose initial;
  IntegratorOptions integrator = default_integrator();

  static IntegratorOptions default_integrator();
};

/// Everything recorded about one instant of a rollout.
struct WalkerOutputs {
  ModelState state;
  ComState com;
  FootContacts contacts{};
  std::array<Vec2, 2> grf{};  // per foot
  std::array<Vec2, 2> cop{};  // NaN while unloaded
  std::array<double, kNumMuscles> stimulation{};
  std::array<double, kNumMuscles> activation{};
  std::array<double, kNumMuscles> force{};
  std::array<double, kNumMuscles> fiber_length{};
  LegPhases phases{};
};

/// True if the trunk pitches beyond 60 degrees or the CoM drops below 60 % of
/// its standing height above the local ground.
bool fall_check(const BipedModel& model, const ModelState& state, const Terrain& terrain);

class Walker final : public OdeSystem {
 public:
  Walker(const WalkerConfig& config, const ControlParams& params, Terrain terrain);

  int dimension() const override { return kStateSize; }
  void derivative(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) override;
  bool accept_step(double t, const Eigen::VectorXd& y) override;

  /// Builds the initial state and primes the controller history.
  Eigen::VectorXd initial_state();

  WalkerOutputs outputs(double t, const Eigen::VectorXd& y) const;

  const BipedModel& model() const { return model_; }
  const Terrain& terrain() const { return terrain_; }
  const PhaseDetector& phases() const { return detector_; }
  bool fallen() const { return fallen_; }

  static ModelState unpack(double t, const Eigen::VectorXd& y);

 private:
  struct Muscles {
    std::array<double, kNumMuscles> force{};
    std::array<double, kNumMuscles> v_ce{};
    std::array<double, kNumMuscles> l_mtu{};
  };
  Muscles muscle_state(const ModelState& s, const Eigen::VectorXd& y) const;
  std::array<double, kNumMuscles> current_stimulation(double t) const;
  SensoryFrame sense(double t, const Eigen::VectorXd& y) const;

  WalkerConfig config_;
  ControlParams params_;
  Terrain terrain_;
  BipedModel model_;
  PhaseDetector detector_;
  DelayBuffer buffer_;
  double body_weight_;
  bool fallen_ = false;
};

}  // namespace nmsgait
