#pragma once

#include <array>
#include <vector>

#include "nmsgait/model.hpp"

namespace nmsgait {

/// Piecewise-constant ground profile. The ground is at height 0 left of the
/// first breakpoint; from each breakpoint on it takes that breakpoint's height.
class Terrain {
 public:
  struct Breakpoint {
    double x_start = 0.0;
    double height = 0.0;
  };

  Terrain() = default;
  explicit Terrain(std::vector<Breakpoint> breakpoints);

  static Terrain flat() { return Terrain{}; }
  /// Single drop of `depth` metres (depth > 0 lowers the ground) starting at x.
  static Terrain step_down(double x, double depth);

  double height(double x) const;
  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }

 private:
  std::vector<Breakpoint> breakpoints_;
};

struct ContactParams {
  double stiffness = 81500.0;      // N/m
  double relax_velocity = 0.03;    // m/s, damping: F = k d (1 + d_dot / v)
  double friction = 0.9;           // Coulomb coefficient
  double slip_velocity = 0.01;     // m/s, friction regularization width
};

struct ContactForce {
  Vec2 position = Vec2::Zero();
  Vec2 force = Vec2::Zero();
};

/// Forces at the four foot contact points, ordered left heel, left ball,
/// right heel, right ball.
using FootContacts = std::array<ContactForce, 4>;

inline constexpr int contact_slot(Side s, ContactPoint c) {
  return 2 * index(s) + static_cast<int>(c);
}

/// Normal force of the compliant contact law for penetration depth `depth`
/// (m, positive into the ground) and penetration rate `depth_rate` (m/s).
double normal_force(double depth, double depth_rate, const ContactParams& p);

/// Regularized Coulomb friction for a normal load and sliding velocity.
double friction_force(double normal, double slip_velocity, const ContactParams& p);

FootContacts ground_contact(const BipedModel& model, const ModelState& state,
                            const Terrain& terrain, const ContactParams& params);

}  // namespace nmsgait
