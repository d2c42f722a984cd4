#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmsgait/walker.hpp"

namespace nmsgait {

enum class Termination { kCompleted, kFell, kIntegrationFailure };

std::string_view termination_name(Termination t);

struct TraceSample {
  double t = 0.0;
  GenVec q = GenVec::Zero();
  GenVec qd = GenVec::Zero();
  Vec2 com = Vec2::Zero();
  Vec2 com_velocity = Vec2::Zero();
  std::array<Vec2, 2> grf{};   // per foot, N
  std::array<Vec2, 2> cop{};   // per foot, NaN while unloaded
  std::array<Vec2, 2> heel{};  // contact point positions
  std::array<Vec2, 2> ball{};
  std::array<double, kNumMuscles> stimulation{};
  std::array<double, kNumMuscles> activation{};
  std::array<double, kNumMuscles> force{};

  Vec2 total_grf() const { return grf[0] + grf[1]; }
};

enum class EventType { kHeelStrike, kToeOff };

struct GaitEvent {
  double t = 0.0;
  std::size_t sample = 0;
  Side side = Side::kLeft;
  EventType type = EventType::kHeelStrike;
};

struct GaitTrace {
  double sample_interval = 1e-3;
  std::vector<TraceSample> samples;
  std::vector<GaitEvent> events;
  Termination termination = Termination::kCompleted;
  double end_time = 0.0;
  std::string message;
  Terrain terrain;
  IntegrationStats stats;
};

/// Closed-loop simulation on `terrain` until t_max, a fall or an integration
/// failure. Failures are recorded in the trace, never thrown.
GaitTrace rollout(const WalkerConfig& config, const ControlParams& params, const Terrain& terrain,
                  double t_max);

/// Heel strike: vertical foot GRF rises above the stance threshold.
/// Toe-off: it falls below threshold - hysteresis.
std::vector<GaitEvent> detect_events(const std::vector<TraceSample>& samples,
                                     double threshold = 20.0, double hysteresis = 5.0);

std::vector<GaitEvent> heel_strikes(const std::vector<GaitEvent>& events);
std::vector<GaitEvent> heel_strikes(const std::vector<GaitEvent>& events, Side side);

/// Completed strides: consecutive heel strikes of the same leg.
std::size_t stride_count(const std::vector<GaitEvent>& events);

class InsufficientStrides : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Heel strike to ipsilateral heel strike, with the single-support sub-range of
/// the stride leg (contralateral toe-off to contralateral heel strike).
struct StrideWindow {
  Side side = Side::kLeft;
  std::size_t begin = 0;  // sample index of the opening heel strike
  std::size_t end = 0;    // sample index of the closing heel strike
  std::size_t single_begin = 0;
  std::size_t single_end = 0;  // exclusive
};

inline constexpr std::size_t kMinStridesForSteady = 8;

/// Last complete stride of the trace. Throws InsufficientStrides when the
/// trace holds fewer than kMinStridesForSteady strides.
StrideWindow steady_stride(const GaitTrace& trace);

/// Step-down protocol settings.
struct StepDownProtocol {
  double increment = 0.01;             // m
  double max_height = 0.20;            // m, sweep stops here
  std::size_t strides_before = 8;      // settled strides before the drop
  std::size_t strides_after = 10;      // strides that must follow it
  double flat_duration = 20.0;         // s, unperturbed reference rollout
  int concurrency = 1;                 // heights evaluated per batch
};

struct StepDownResult {
  bool stable_on_flat = false;
  int max_height_cm = 0;
  std::vector<std::pair<int, bool>> trials;  // (height cm, recovered)
};

/// Drop location for the protocol: between the stance foot and the landing
/// point of the next heel strike after `strides_before` strides.
std::optional<double> step_down_location(const GaitTrace& flat, std::size_t strides_before);

/// One perturbed trial: true if the walker completes the required strides
/// after landing on the lower level.
bool step_down_trial(const WalkerConfig& config, const ControlParams& params, double drop_x,
                     double height, const StepDownProtocol& protocol);

StepDownResult step_down_robustness(const WalkerConfig& config, const ControlParams& params,
                                    const StepDownProtocol& protocol = {});

/// Height sweep of the protocol: trial(h) for h = 1, 2, ... increments until
/// the first failure, `concurrency` heights at a time. Reports first failure - 1.
StepDownResult step_down_sweep(int max_steps, int concurrency,
                               const std::function<bool(int)>& trial);

}  // namespace nmsgait
