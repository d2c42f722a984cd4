#include "nmsgait/contact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nmsgait {

Terrain::Terrain(std::vector<Breakpoint> breakpoints) : breakpoints_(std::move(breakpoints)) {
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i].x_start) || !std::isfinite(breakpoints_[i].height)) {
      throw std::invalid_argument("terrain: breakpoints must be finite");
    }
    if (i > 0 && !(breakpoints_[i].x_start > breakpoints_[i - 1].x_start)) {
      throw std::invalid_argument("terrain: breakpoints must be sorted by strictly increasing x");
    }
  }
}

Terrain Terrain::step_down(double x, double depth) { return Terrain({{x, -depth}}); }

double Terrain::height(double x) const {
  double h = 0.0;
  for (const auto& b : breakpoints_) {
    if (x < b.x_start) break;
    h = b.height;
  }
  return h;
}

double normal_force(double depth, double depth_rate, const ContactParams& p) {
  if (depth <= 0.0) return 0.0;
  return std::max(0.0, p.stiffness * depth * (1.0 + depth_rate / p.relax_velocity));
}

double friction_force(double normal, double slip_velocity, const ContactParams& p) {
  if (normal <= 0.0) return 0.0;
  const double v = slip_velocity;
  return -p.friction * normal * v / std::sqrt(v * v + p.slip_velocity * p.slip_velocity);
}

FootContacts ground_contact(const BipedModel& model, const ModelState& state,
                            const Terrain& terrain, const ContactParams& params) {
  FootContacts out{};
  for (Side side : kSides) {
    for (ContactPoint cp : {ContactPoint::kHeel, ContactPoint::kBall}) {
      const BodyPoint& bp = model.contact_point(side, cp);
      ContactForce& c = out[contact_slot(side, cp)];
      c.position = model.position(bp, state.q);
      const double depth = terrain.height(c.position.x()) - c.position.y();
      if (depth <= 0.0) continue;
      const Vec2 v = model.velocity(bp, state.q, state.qd);
      const double fn = normal_force(depth, -v.y(), params);
      c.force = Vec2(friction_force(fn, v.x(), params), fn);
    }
  }
  return out;
}

}  // namespace nmsgait
