#include "nmsgait/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nmsgait {
namespace {

void require_positive(double value, const std::string& name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("anthropometry: " + name + " must be positive and finite");
  }
}

BodyPoint chain(std::initializer_list<BodyPoint::Term> terms) {
  BodyPoint p;
  for (const auto& t : terms) p.terms[p.count++] = t;
  return p;
}

struct SegmentFrames {
  std::array<Vec2, kNumSegments> axis;
  std::array<Vec2, kNumSegments> normal;  // d(axis)/d(angle)
};

}  // namespace

Anthropometry Anthropometry::geyer_herr() {
  Anthropometry a;
  a.trunk = {53.5, 0.8, 0.35, 3.0};
  a.thigh = {8.5, 0.5, 0.2, 0.15};
  a.shank = {3.5, 0.5, 0.2, 0.05};
  a.foot = {1.25, -0.04, 0.16, 0.02, 0.005};
  return a;
}

double Anthropometry::total_mass() const {
  return trunk.mass + 2.0 * (thigh.mass + shank.mass + foot.mass);
}

void Anthropometry::validate() const {
  const auto check_segment = [](const SegmentGeometry& s, const std::string& name) {
    require_positive(s.mass, name + ".mass");
    require_positive(s.length, name + ".length");
    require_positive(s.inertia, name + ".inertia");
    if (!std::isfinite(s.com_offset)) {
      throw std::invalid_argument("anthropometry: " + name + ".com_offset must be finite");
    }
  };
  check_segment(trunk, "trunk");
  check_segment(thigh, "thigh");
  check_segment(shank, "shank");
  require_positive(foot.mass, "foot.mass");
  require_positive(foot.inertia, "foot.inertia");
  require_positive(foot.ball_offset, "foot.ball_offset");
  require_positive(-foot.heel_offset, "-foot.heel_offset");
  if (!std::isfinite(foot.com_offset)) {
    throw std::invalid_argument("anthropometry: foot.com_offset must be finite");
  }
}

BipedModel BipedModel::build(const Anthropometry& anthro) {
  anthro.validate();
  BipedModel m;
  m.anthro_ = anthro;
  m.total_mass_ = anthro.total_mass();

  constexpr double kHalfPi = std::numbers::pi / 2.0;
  const int trunk = static_cast<int>(Segment::kTrunk);
  m.mass_[trunk] = anthro.trunk.mass;
  m.inertia_[trunk] = anthro.trunk.inertia;
  m.base_angle_[trunk] = kHalfPi;
  m.angle_map_(trunk, dof::kLean) = -1.0;
  m.com_points_[trunk] = chain({{trunk, anthro.trunk.com_offset}});

  for (Side side : kSides) {
    const int th = static_cast<int>(thigh(side));
    const int sh = static_cast<int>(shank(side));
    const int ft = static_cast<int>(foot(side));

    m.mass_[th] = anthro.thigh.mass;
    m.mass_[sh] = anthro.shank.mass;
    m.mass_[ft] = anthro.foot.mass;
    m.inertia_[th] = anthro.thigh.inertia;
    m.inertia_[sh] = anthro.shank.inertia;
    m.inertia_[ft] = anthro.foot.inertia;
    m.base_angle_[th] = -kHalfPi;
    m.base_angle_[sh] = -kHalfPi;
    m.base_angle_[ft] = 0.0;

    // thigh = hip - lean, shank = thigh - knee, foot = shank + ankle
    m.angle_map_.row(th) = m.angle_map_.row(trunk);
    m.angle_map_(th, dof::hip(side)) = 1.0;
    m.angle_map_.row(sh) = m.angle_map_.row(th);
    m.angle_map_(sh, dof::knee(side)) = -1.0;
    m.angle_map_.row(ft) = m.angle_map_.row(sh);
    m.angle_map_(ft, dof::ankle(side)) = 1.0;

    const double lt = anthro.thigh.length;
    const double ls = anthro.shank.length;
    m.com_points_[th] = chain({{th, anthro.thigh.com_offset}});
    m.com_points_[sh] = chain({{th, lt}, {sh, anthro.shank.com_offset}});
    m.com_points_[ft] = chain({{th, lt}, {sh, ls}, {ft, anthro.foot.com_offset}});
    m.knee_points_[index(side)] = chain({{th, lt}});
    m.ankle_points_[index(side)] = chain({{th, lt}, {sh, ls}});
    m.contact_points_[2 * index(side)] = chain({{th, lt}, {sh, ls}, {ft, anthro.foot.heel_offset}});
    m.contact_points_[2 * index(side) + 1] =
        chain({{th, lt}, {sh, ls}, {ft, anthro.foot.ball_offset}});
  }
  return m;
}

namespace {

SegmentFrames frames(const std::array<double, kNumSegments>& base,
                     const Eigen::Matrix<double, kNumSegments, kNumDof>& map, const GenVec& q) {
  SegmentFrames f;
  const Eigen::Matrix<double, kNumSegments, 1> angles = map * q;
  for (int k = 0; k < kNumSegments; ++k) {
    const double a = base[k] + angles[k];
    const double c = std::cos(a);
    const double s = std::sin(a);
    f.axis[k] = Vec2(c, s);
    f.normal[k] = Vec2(-s, c);
  }
  return f;
}

}  // namespace

ModelState BipedModel::standing_pose() const {
  ModelState s;
  s.q[dof::kY] = anthro_.thigh.length + anthro_.shank.length;
  return s;
}

Vec2 BipedModel::position(const BodyPoint& p, const GenVec& q) const {
  const auto f = frames(base_angle_, angle_map_, q);
  Vec2 r(q[dof::kX], q[dof::kY]);
  for (int i = 0; i < p.count; ++i) r += p.terms[i].offset * f.axis[p.terms[i].segment];
  return r;
}

Vec2 BipedModel::velocity(const BodyPoint& p, const GenVec& q, const GenVec& qd) const {
  const auto f = frames(base_angle_, angle_map_, q);
  const Eigen::Matrix<double, kNumSegments, 1> omega = angle_map_ * qd;
  Vec2 v(qd[dof::kX], qd[dof::kY]);
  for (int i = 0; i < p.count; ++i) {
    const auto& t = p.terms[i];
    v += t.offset * omega[t.segment] * f.normal[t.segment];
  }
  return v;
}

Eigen::Matrix<double, 2, kNumDof> BipedModel::jacobian(const BodyPoint& p, const GenVec& q) const {
  const auto f = frames(base_angle_, angle_map_, q);
  Eigen::Matrix<double, 2, kNumDof> j = Eigen::Matrix<double, 2, kNumDof>::Zero();
  j(0, dof::kX) = 1.0;
  j(1, dof::kY) = 1.0;
  for (int i = 0; i < p.count; ++i) {
    const auto& t = p.terms[i];
    j.noalias() += t.offset * f.normal[t.segment] * angle_map_.row(t.segment);
  }
  return j;
}

MassMatrix BipedModel::mass_matrix(const GenVec& q) const {
  const auto f = frames(base_angle_, angle_map_, q);
  MassMatrix m = MassMatrix::Zero();
  for (int k = 0; k < kNumSegments; ++k) {
    Eigen::Matrix<double, 2, kNumDof> j = Eigen::Matrix<double, 2, kNumDof>::Zero();
    j(0, dof::kX) = 1.0;
    j(1, dof::kY) = 1.0;
    const BodyPoint& p = com_points_[k];
    for (int i = 0; i < p.count; ++i) {
      const auto& t = p.terms[i];
      j.noalias() += t.offset * f.normal[t.segment] * angle_map_.row(t.segment);
    }
    m.noalias() += mass_[k] * j.transpose() * j;
    m.noalias() += inertia_[k] * angle_map_.row(k).transpose() * angle_map_.row(k);
  }
  return m;
}

GenVec BipedModel::forward_dynamics(const ModelState& state, const GenVec& generalized_forces,
                                    std::span<const Vec2> contact_forces,
                                    std::span<const BodyPoint> contact_points,
                                    const std::array<bool, kNumDof>& locked) const {
  const auto f = frames(base_angle_, angle_map_, state.q);
  const Eigen::Matrix<double, kNumSegments, 1> omega = angle_map_ * state.qd;

  const auto point_jacobian = [&](const BodyPoint& p) {
    Eigen::Matrix<double, 2, kNumDof> j = Eigen::Matrix<double, 2, kNumDof>::Zero();
    j(0, dof::kX) = 1.0;
    j(1, dof::kY) = 1.0;
    for (int i = 0; i < p.count; ++i) {
      const auto& t = p.terms[i];
      j.noalias() += t.offset * f.normal[t.segment] * angle_map_.row(t.segment);
    }
    return j;
  };

  MassMatrix m = MassMatrix::Zero();
  GenVec rhs = generalized_forces;
  for (int k = 0; k < kNumSegments; ++k) {
    const BodyPoint& p = com_points_[k];
    const auto j = point_jacobian(p);
    // centripetal part of the CoM acceleration, J-dot * qd
    Vec2 bias = Vec2::Zero();
    for (int i = 0; i < p.count; ++i) {
      const auto& t = p.terms[i];
      bias -= t.offset * omega[t.segment] * omega[t.segment] * f.axis[t.segment];
    }
    m.noalias() += mass_[k] * j.transpose() * j;
    m.noalias() += inertia_[k] * angle_map_.row(k).transpose() * angle_map_.row(k);
    const Vec2 load = mass_[k] * (Vec2(0.0, -kGravity) - bias);
    rhs.noalias() += j.transpose() * load;
  }
  const std::size_t n_contacts = std::min(contact_forces.size(), contact_points.size());
  for (std::size_t c = 0; c < n_contacts; ++c) {
    rhs.noalias() += point_jacobian(contact_points[c]).transpose() * contact_forces[c];
  }

  bool any_locked = false;
  for (bool l : locked) any_locked = any_locked || l;
  if (!any_locked) {
    Eigen::LLT<MassMatrix> llt(m);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("forward_dynamics: mass matrix is not positive definite");
    }
    return llt.solve(rhs);
  }

  std::array<int, kNumDof> free_idx{};
  int n_free = 0;
  for (int i = 0; i < kNumDof; ++i) {
    if (!locked[i]) free_idx[n_free++] = i;
  }
  GenVec qdd = GenVec::Zero();
  if (n_free == 0) return qdd;
  Eigen::MatrixXd mr(n_free, n_free);
  Eigen::VectorXd br(n_free);
  for (int a = 0; a < n_free; ++a) {
    br[a] = rhs[free_idx[a]];
    for (int b = 0; b < n_free; ++b) mr(a, b) = m(free_idx[a], free_idx[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(mr);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("forward_dynamics: reduced mass matrix is not positive definite");
  }
  const Eigen::VectorXd sol = llt.solve(br);
  for (int a = 0; a < n_free; ++a) qdd[free_idx[a]] = sol[a];
  return qdd;
}

Vec2 BipedModel::com_acceleration(const ModelState& state, const GenVec& qdd) const {
  const auto f = frames(base_angle_, angle_map_, state.q);
  const Eigen::Matrix<double, kNumSegments, 1> omega = angle_map_ * state.qd;
  const Eigen::Matrix<double, kNumSegments, 1> alpha = angle_map_ * qdd;
  Vec2 acc = Vec2::Zero();
  for (int k = 0; k < kNumSegments; ++k) {
    const BodyPoint& p = com_points_[k];
    Vec2 a(qdd[dof::kX], qdd[dof::kY]);
    for (int i = 0; i < p.count; ++i) {
      const auto& t = p.terms[i];
      a += t.offset * (alpha[t.segment] * f.normal[t.segment] -
                       omega[t.segment] * omega[t.segment] * f.axis[t.segment]);
    }
    acc += mass_[k] * a;
  }
  return acc / total_mass_;
}

ComState BipedModel::com_state(const ModelState& state) const {
  const auto f = frames(base_angle_, angle_map_, state.q);
  const Eigen::Matrix<double, kNumSegments, 1> omega = angle_map_ * state.qd;
  ComState c;
  for (int k = 0; k < kNumSegments; ++k) {
    const BodyPoint& p = com_points_[k];
    Vec2 r(state.q[dof::kX], state.q[dof::kY]);
    Vec2 v(state.qd[dof::kX], state.qd[dof::kY]);
    for (int i = 0; i < p.count; ++i) {
      const auto& t = p.terms[i];
      r += t.offset * f.axis[t.segment];
      v += t.offset * omega[t.segment] * f.normal[t.segment];
    }
    c.position += mass_[k] * r;
    c.velocity += mass_[k] * v;
  }
  c.position /= total_mass_;
  c.velocity /= total_mass_;
  return c;
}

double BipedModel::kinetic_energy(const ModelState& state) const {
  return 0.5 * state.qd.dot(mass_matrix(state.q) * state.qd);
}

double BipedModel::potential_energy(const ModelState& state) const {
  double v = 0.0;
  for (int k = 0; k < kNumSegments; ++k) {
    v += mass_[k] * kGravity * position(com_points_[k], state.q).y();
  }
  return v;
}

}  // namespace nmsgait
