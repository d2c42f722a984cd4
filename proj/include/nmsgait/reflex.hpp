#pragma once

// Muscle-reflex controller. Stance legs run positive force feedback on the
// anti-gravity muscles and a trunk-lean PD term on the hip muscles; swing
// legs run length feedback for foot clearance and leg placement. All
// pathways act on sensory signals delayed by fixed neural transport times.

#include <array>
#include <deque>
#include <string_view>

#include <Eigen/Dense>

#include "nmsgait/model.hpp"
#include "nmsgait/muscle.hpp"

namespace nmsgait {

inline constexpr int kNumControlParams = 12;

/// The twelve tuned control parameters, in serialization order.
enum class ControlParam : int {
  kSolForceGain = 0,
  kGasForceGain,
  kVasForceGain,
  kTaLengthGain,
  kHflLengthGain,
  kHamBalanceGain,
  kGluBalanceGain,
  kHflBalanceGain,
  kTrunkLeanRef,
  kTrunkKp,
  kTrunkKd,
  kSwingInitiation,
};

std::string_view control_param_name(int i);

struct ParamBounds {
  std::array<double, kNumControlParams> lower{};
  std::array<double, kNumControlParams> upper{};

  static ParamBounds defaults();
  bool contains(const std::array<double, kNumControlParams>& values) const;
};

struct ControlParams {
  std::array<double, kNumControlParams> values{};

  double operator[](ControlParam p) const { return values[static_cast<int>(p)]; }
  double& operator[](ControlParam p) { return values[static_cast<int>(p)]; }

  /// Documented defaults of the reflex walker (the "default gait").
  static ControlParams defaults();

  bool operator==(const ControlParams&) const = default;
};

using NormalizedParams = Eigen::Matrix<double, kNumControlParams, 1>;

/// Affine map of each coordinate onto [0, 1].
NormalizedParams encode(const ControlParams& p, const ParamBounds& b);

struct DecodeResult {
  ControlParams params;
  bool clamped = false;
};

/// Inverse of encode. Coordinates outside [0, 1] are clamped and flagged.
DecodeResult decode(const NormalizedParams& x, const ParamBounds& b);

/// Reflex constants that are not tuned by the optimizer.
struct ReflexConstants {
  double pre_stimulation = 0.01;
  double hip_stance_pre_stimulation = 0.05;
  double vas_stance_pre_stimulation = 0.09;
  double ta_length_offset = 0.71;      // l_ce / l_opt
  double sol_ta_inhibition = 0.3;
  double knee_overextension_gain = 2.0;
  double knee_overextension_angle = 2.967;  // rad inner knee angle (170 deg)
  double contra_load_gain = 1.2;            // per body weight
  double glu_swing_force_gain = 0.4;
  double ham_swing_force_gain = 0.65;
  double hfl_length_offset = 0.6;
  double ham_hfl_inhibition = 4.0;
  double ham_length_offset = 0.85;
  double swing_lean_gain = 1.15;
  double delay_long = 0.020;    // s, ankle muscles
  double delay_medium = 0.010;  // s, knee muscles
  double delay_short = 0.005;   // s, hip muscles and trunk
  double stance_threshold = 20.0;  // N
  double stance_hysteresis = 5.0;  // N
};

enum class Phase { kSwing, kStance };

struct LegPhase {
  Phase phase = Phase::kSwing;
  double since = 0.0;        // time of the last transition
  double lean_at_liftoff = 0.0;
};

using LegPhases = std::array<LegPhase, 2>;

/// Threshold with hysteresis: enter stance above `threshold`, leave below
/// `threshold - hysteresis`.
class PhaseDetector {
 public:
  PhaseDetector(double threshold, double hysteresis);

  /// Updates both legs from their vertical GRFs; returns true if any changed.
  bool update(double t, double grf_left, double grf_right, double trunk_lean);

  const LegPhases& phases() const { return phases_; }
  void reset(const LegPhases& phases) { phases_ = phases; }

  bool double_support() const;
  /// The rear leg of a double-support phase: the one that touched down first.
  bool trailing(Side s) const;

 private:
  double enter_;
  double leave_;
  LegPhases phases_{};
};

/// Sensory signals of one instant, stored for delayed feedback.
struct SensoryFrame {
  double t = 0.0;
  std::array<double, kNumMuscles> force{};   // F / F_max
  std::array<double, kNumMuscles> length{};  // l_ce / l_opt
  std::array<double, 2> knee_angle{};        // inner angle, rad
  std::array<double, 2> knee_rate{};         // rad/s
  std::array<double, 2> load{};              // vertical GRF / body weight
  double lean = 0.0;
  double lean_rate = 0.0;
};

/// Linear-interpolating history of sensory frames. Queries before the first
/// frame return the first frame.
class DelayBuffer {
 public:
  explicit DelayBuffer(double horizon = 0.05) : horizon_(horizon) {}
  void push(const SensoryFrame& frame);
  SensoryFrame at(double t) const;
  bool empty() const { return frames_.empty(); }
  void clear() { frames_.clear(); }

 private:
  double horizon_;
  std::deque<SensoryFrame> frames_;
};

/// Feedback signals of one leg as seen by the spinal pathways, each already
/// taken at its pathway delay.
struct LegInputs {
  std::array<double, kMusclesPerLeg> force{};
  std::array<double, kMusclesPerLeg> length{};
  double knee_angle = 0.0;
  double knee_rate = 0.0;
  double load = 0.0;
  double contra_load = 0.0;
};

struct ReflexInputs {
  std::array<LegInputs, 2> legs{};
  double lean = 0.0;
  double lean_rate = 0.0;
};

/// Baseline stimulation of a muscle in the given phase.
double baseline_stimulation(Muscle m, Phase phase, const ReflexConstants& c);

/// Stimulation of every muscle, indexed leg * 7 + muscle, clamped to [0, 1].
std::array<double, kNumMuscles> stimulations(const ReflexInputs& inputs, const LegPhases& phases,
                                             const std::array<bool, 2>& trailing,
                                             const ControlParams& params,
                                             const ReflexConstants& c);

/// Gathers delayed inputs from a history buffer.
ReflexInputs delayed_inputs(const DelayBuffer& buffer, double t, const ReflexConstants& c);

inline constexpr int muscle_slot(Side s, Muscle m) {
  return index(s) * kMusclesPerLeg + static_cast<int>(m);
}

}  // namespace nmsgait
