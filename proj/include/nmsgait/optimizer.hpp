#pragma once

// Staged gait optimization: candidates are ranked first by whether they walk,
// then by whether the walk is steady, and only then by the intersection-point
// objective of the run.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nmsgait/analysis.hpp"
#include "nmsgait/cmaes.hpp"
#include "nmsgait/reflex.hpp"
#include "nmsgait/simulation.hpp"

namespace nmsgait {

enum class Mode { kMinimizeR2, kMaximizeR2 };

std::string_view mode_name(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

inline constexpr double kStage1Offset = 1e6;
inline constexpr double kStage2Offset = 1e3;
inline constexpr double kDefaultTargetSpeed = 1.25;  // m/s

/// What the cost needs from a rollout and its analysis.
struct CostInputs {
  bool completed = false;      // reached t_max without falling
  double distance = 0.0;       // CoM travel, m
  double end_time = 0.0;       // s
  std::optional<double> spread;  // steadiness spread, m; empty if not computable
  double r2 = 0.0;
  double speed = 0.0;
  double collision_fraction = 0.0;
};

struct StagedCost {
  int stage = 1;
  double value = kStage1Offset;
  CostInputs inputs;
};

struct CostSettings {
  Mode mode = Mode::kMinimizeR2;
  double target_speed = kDefaultTargetSpeed;
  double cf_weight = 0.0;  // adds w * CF to the minimize objective
};

/// Stage 1: offset1 - distance. Stage 2: offset2 + spread. Stage 3: R^2
/// (+ w CF) when minimizing, 1 - R^2 + |v - v_target| when maximizing.
StagedCost staged_cost(const CostInputs& in, const CostSettings& settings);

/// Reduces a trace to cost inputs; `analysis` is filled when the trace is
/// steady enough to analyse.
CostInputs cost_inputs(const GaitTrace& trace, std::optional<GaitAnalysis>* analysis = nullptr);

struct GaitRecord {
  std::uint64_t id = 0;
  std::uint64_t generation = 0;
  ControlParams params;
  int stage = 1;
  double cost = 0.0;
  double r2 = 0.0;
  double ip_height = 0.0;
  bool ip_degenerate = false;
  double speed = 0.0;
  double step_length = 0.0;
  double collision_fraction = 0.0;
  double spread = 0.0;
  std::optional<int> max_step_down_cm;
  std::string note;

  bool operator==(const GaitRecord&) const = default;
};

std::string record_to_json(const GaitRecord& r);
GaitRecord record_from_json(const std::string& line);

/// One JSON object per line.
std::vector<GaitRecord> read_archive(const std::filesystem::path& path);
void write_archive(const std::filesystem::path& path, const std::vector<GaitRecord>& records);
void append_archive(const std::filesystem::path& path, const std::vector<GaitRecord>& records);

struct Evaluation {
  StagedCost cost;
  std::optional<GaitRecord> record;  // set for stage-3 gaits
};

Evaluation evaluate_candidate(const WalkerConfig& config, const ControlParams& params,
                              const CostSettings& cost, double t_max);

struct OptimizeSettings {
  CostSettings cost;
  std::size_t budget = 110;  // evaluations, rounded up to whole generations
  std::uint64_t seed = 1;
  double t_max = 20.0;
  double sigma0 = 0.05;  // in normalized parameter units
  int concurrency = 1;
  ParamBounds bounds = ParamBounds::defaults();
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> archive;
  bool resume = false;
};

struct GenerationLog {
  std::uint64_t generation = 0;
  double best_cost = 0.0;
  int best_stage = 1;
  std::size_t archived = 0;
};

struct OptimizeResult {
  std::vector<GaitRecord> archive;  // stage-3 gaits, sorted by R^2
  std::optional<GaitRecord> best;   // lowest cost stage-3 gait
  std::uint64_t evaluations = 0;
  std::uint64_t generations = 0;
  std::vector<GenerationLog> log;
};

using ProgressCallback = std::function<void(const GenerationLog&)>;

OptimizeResult optimize(const WalkerConfig& config, const ControlParams& initial,
                        const OptimizeSettings& settings, const ProgressCallback& progress = {});

/// Stage-3 cost R^2 + w CF; w = 0 is the plain minimize run.
OptimizeResult cf_constrained_optimize(const WalkerConfig& config, const ControlParams& initial,
                                       OptimizeSettings settings, double cf_weight = 1.0,
                                       const ProgressCallback& progress = {});

/// Gaits with R^2 below `r2_max` and CF below `cf_max`.
std::vector<GaitRecord> query_low_r2_low_cf(const std::vector<GaitRecord>& archive,
                                            double r2_max = -1.0, double cf_max = 0.6);

/// Fills max_step_down_cm per record; failures are noted and the sweep goes on.
std::vector<GaitRecord> robustness_sweep(const WalkerConfig& config,
                                         std::vector<GaitRecord> archive,
                                         const StepDownProtocol& protocol = {});

/// Stage-3 record of a parameter set, for the default gait marker.
std::optional<GaitRecord> analyse_params(const WalkerConfig& config, const ControlParams& params,
                                         double t_max = 20.0);

}  // namespace nmsgait
