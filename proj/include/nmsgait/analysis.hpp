#pragma once

// Gait analysis: intersection point of the ground reaction forces, collision
// fraction, margin of stability, steadiness and scalar descriptors. All
// functions are pure.

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "nmsgait/simulation.hpp"

namespace nmsgait {

class AnalysisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One force line in the CoM-centred frame.
struct ForceLine {
  Vec2 force;  // GRF
  Vec2 cop;    // centre of pressure relative to the CoM
};

struct IpResult {
  double height = 0.0;  // above the CoM, m
  double r2 = -std::numeric_limits<double>::infinity();
  std::size_t samples = 0;
  bool degenerate = false;  // all forces parallel; r2 is -inf
};

struct IpSearch {
  double min_height = -2.0;
  double max_height = 5.0;
  double grid_step = 0.01;
  double tolerance = 1e-4;
};

inline constexpr std::size_t kMinIpSamples = 10;
inline constexpr std::size_t kIpResampleCount = 100;

/// Best intersection point on the vertical axis through the CoM. R^2 compares
/// measured force angles with the angles of lines from each CoP to the point.
IpResult ip_regression(std::span<const ForceLine> lines, const IpSearch& search = {});

/// R^2 of the force angles for a given point height.
double ip_r2(std::span<const ForceLine> lines, double height);

inline constexpr double kIpThreshold = 0.6;

/// Strictly above the threshold.
bool is_ip_gait(double r2);

/// Signed angle between the CoM velocity and the perpendicular to the GRF.
double collision_angle(const Vec2& force, const Vec2& velocity);

struct CollisionResult {
  double fraction = 0.0;
  std::vector<double> angle;        // collision angle per sample
  std::vector<double> force_angle;  // GRF from vertical
  std::vector<double> velocity_angle;  // CoM velocity from horizontal
  std::size_t violations = 0;  // samples with |angle| above the potential collision
};

inline constexpr std::size_t kMinCollisionSamples = 10;

/// Weighted ratio of actual to potential collision, weights |F||v|.
CollisionResult collision_fraction(std::span<const Vec2> forces, std::span<const Vec2> velocities);

/// Hof's margin: boundary - (x + v / sqrt(g / l)).
double margin_of_stability(double com_x, double com_vx, double com_height, double boundary_x,
                           double gravity = kGravity);

inline constexpr std::size_t kSteadinessWindow = 6;
inline constexpr double kSteadinessThreshold = 0.0075;  // m

struct Steadiness {
  double spread = 0.0;
  bool steady = false;
};

Steadiness steadiness(std::span<const double> margins);

struct Descriptors {
  double speed = 0.0;        // m/s
  double step_length = 0.0;  // m
  double cadence = 0.0;      // steps/s
};

inline constexpr std::size_t kMinDescriptorStrides = 6;

/// Mean CoM speed and step length over the last kMinDescriptorStrides strides.
Descriptors gait_descriptors(const GaitTrace& trace);

/// Margin of stability at every heel strike (leading foot: the striking one).
std::vector<double> heel_strike_margins(const GaitTrace& trace);

/// Force lines of the single-support part of a stride, resampled uniformly.
std::vector<ForceLine> single_support_lines(const GaitTrace& trace, const StrideWindow& w,
                                            std::size_t count = kIpResampleCount);

struct GaitAnalysis {
  StrideWindow stride;
  IpResult ip;
  CollisionResult collision;
  std::vector<double> margins;
  Steadiness steadiness;
  Descriptors descriptors;
  std::vector<ForceLine> ip_lines;
};

/// Full analysis of a steady trace. Throws InsufficientStrides or
/// AnalysisError when the trace cannot be analysed.
GaitAnalysis analyze(const GaitTrace& trace);

/// Steadiness over the last six heel strikes; throws InsufficientStrides
/// when fewer exist.
Steadiness trace_steadiness(const GaitTrace& trace);

}  // namespace nmsgait
