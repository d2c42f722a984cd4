#pragma once

// Planar seven-segment biped: trunk (head-arms-trunk), two thighs, two shanks
// and two feet connected by hinge joints. Nine generalized coordinates:
//
//   q[0] hip x (m)            q[1] hip y (m)          q[2] trunk forward lean (rad)
//   q[3 + 3s] hip flexion     q[4 + 3s] knee flexion  q[5 + 3s] ankle dorsiflexion
//
// with s = 0 for the left leg and s = 1 for the right leg. x points forward,
// y points up. In the standing reference pose all angles are zero: the trunk
// is vertical, both legs are straight and vertical, and the feet are flat.

#include <array>
#include <span>

#include <Eigen/Dense>

namespace nmsgait {

inline constexpr int kNumDof = 9;
inline constexpr int kNumSegments = 7;
inline constexpr double kGravity = 9.81;

using Vec2 = Eigen::Vector2d;
using GenVec = Eigen::Matrix<double, kNumDof, 1>;
using MassMatrix = Eigen::Matrix<double, kNumDof, kNumDof>;

enum class Side : int { kLeft = 0, kRight = 1 };

inline constexpr std::array<Side, 2> kSides = {Side::kLeft, Side::kRight};

constexpr int index(Side s) { return static_cast<int>(s); }
constexpr Side other(Side s) { return s == Side::kLeft ? Side::kRight : Side::kLeft; }

namespace dof {
inline constexpr int kX = 0;
inline constexpr int kY = 1;
inline constexpr int kLean = 2;
constexpr int hip(Side s) { return 3 + 3 * index(s); }
constexpr int knee(Side s) { return 4 + 3 * index(s); }
constexpr int ankle(Side s) { return 5 + 3 * index(s); }
}  // namespace dof

enum class Segment : int {
  kTrunk = 0,
  kThighL = 1,
  kShankL = 2,
  kFootL = 3,
  kThighR = 4,
  kShankR = 5,
  kFootR = 6,
};

constexpr Segment thigh(Side s) { return s == Side::kLeft ? Segment::kThighL : Segment::kThighR; }
constexpr Segment shank(Side s) { return s == Side::kLeft ? Segment::kShankL : Segment::kShankR; }
constexpr Segment foot(Side s) { return s == Side::kLeft ? Segment::kFootL : Segment::kFootR; }

/// Mass, length and inertia of a long segment. `com_offset` is measured from
/// the proximal joint (the hip for trunk and thigh, the knee for the shank).
struct SegmentGeometry {
  double mass = 0.0;        // kg
  double length = 0.0;      // m
  double com_offset = 0.0;  // m
  double inertia = 0.0;     // kg m^2 about the segment CoM
};

/// The foot is a line from heel to ball with the ankle on it. Offsets are
/// signed distances along the foot axis measured from the ankle, positive
/// toward the toes.
struct FootGeometry {
  double mass = 0.0;
  double heel_offset = 0.0;  // < 0
  double ball_offset = 0.0;  // > 0
  double com_offset = 0.0;
  double inertia = 0.0;
};

struct Anthropometry {
  SegmentGeometry trunk;
  SegmentGeometry thigh;
  SegmentGeometry shank;
  FootGeometry foot;

  /// Segment table of the Geyer & Herr (2010) reflex walker.
  static Anthropometry geyer_herr();

  double total_mass() const;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

struct ModelState {
  GenVec q = GenVec::Zero();
  GenVec qd = GenVec::Zero();
  double t = 0.0;
};

struct ComState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

/// A point fixed on a segment, reached from the hip by a chain of at most
/// three segment-axis offsets.
struct BodyPoint {
  struct Term {
    int segment = 0;
    double offset = 0.0;
  };
  std::array<Term, 3> terms{};
  int count = 0;
};

enum class ContactPoint : int { kHeel = 0, kBall = 1 };

class BipedModel {
 public:
  static BipedModel build(const Anthropometry& anthro);

  const Anthropometry& anthropometry() const { return anthro_; }
  double total_mass() const { return total_mass_; }

  /// Absolute counter-clockwise rotation of each segment from its standing
  /// orientation, as a linear map of q.
  const Eigen::Matrix<double, kNumSegments, kNumDof>& angle_map() const { return angle_map_; }

  /// Upright standing pose with the feet flat on y = 0 and zero velocity.
  ModelState standing_pose() const;

  Vec2 position(const BodyPoint& p, const GenVec& q) const;
  Vec2 velocity(const BodyPoint& p, const GenVec& q, const GenVec& qd) const;
  Eigen::Matrix<double, 2, kNumDof> jacobian(const BodyPoint& p, const GenVec& q) const;

  const BodyPoint& segment_com(Segment s) const { return com_points_[static_cast<int>(s)]; }
  const BodyPoint& contact_point(Side s, ContactPoint c) const {
    return contact_points_[2 * index(s) + static_cast<int>(c)];
  }
  const BodyPoint& knee(Side s) const { return knee_points_[index(s)]; }
  const BodyPoint& ankle(Side s) const { return ankle_points_[index(s)]; }

  MassMatrix mass_matrix(const GenVec& q) const;

  /// Generalized accelerations for the given joint torques (generalized forces
  /// on q[3..8]) and external point forces. `locked` freezes individual
  /// coordinates (zero acceleration); used by pinned test rigs.
  GenVec forward_dynamics(const ModelState& state, const GenVec& generalized_forces,
                          std::span<const Vec2> contact_forces = {},
                          std::span<const BodyPoint> contact_points = {},
                          const std::array<bool, kNumDof>& locked = {}) const;

  /// Whole-body CoM acceleration implied by generalized accelerations.
  Vec2 com_acceleration(const ModelState& state, const GenVec& qdd) const;

  ComState com_state(const ModelState& state) const;

  double kinetic_energy(const ModelState& state) const;
  double potential_energy(const ModelState& state) const;

 private:
  BipedModel() = default;

  Anthropometry anthro_;
  double total_mass_ = 0.0;
  std::array<double, kNumSegments> mass_{};
  std::array<double, kNumSegments> inertia_{};
  std::array<double, kNumSegments> base_angle_{};
  Eigen::Matrix<double, kNumSegments, kNumDof> angle_map_ = decltype(angle_map_)::Zero();
  std::array<BodyPoint, kNumSegments> com_points_{};
  std::array<BodyPoint, 4> contact_points_{};
  std::array<BodyPoint, 2> knee_points_{};
  std::array<BodyPoint, 2> ankle_points_{};
};

}  // namespace nmsgait
