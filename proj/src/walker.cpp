#include "nmsgait/walker.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace nmsgait {
namespace {

// Penetration-rate form shared by all range limits.
double limit_torque(double depth, double depth_rate, const JointLimits& l) {
  if (depth <= 0.0) return 0.0;
  return l.stiffness * depth * std::max(0.0, 1.0 + depth_rate / l.relax_rate);
}

JointAngles leg_angles(const GenVec& q, Side s) {
  return {q[dof::hip(s)], q[dof::knee(s)], q[dof::ankle(s)]};
}

}  // namespace

IntegratorOptions WalkerConfig::default_integrator() {
  IntegratorOptions o;
  o.rel_tol = 1e-3;
  o.abs_tol = 1e-4;
  // The shortest neural delay; delayed signals never need extrapolation.
  o.max_step = 0.005;
  o.report_interval = 1e-3;
  o.jacobian_reuse = 1;
  return o;
}

GenVec joint_limit_torques(const GenVec& q, const GenVec& qd, const JointLimits& limits) {
  GenVec tau = GenVec::Zero();
  for (Side s : kSides) {
    const int h = dof::hip(s);
    const int k = dof::knee(s);
    const int a = dof::ankle(s);
    tau[k] += limit_torque(limits.knee_min - q[k], -qd[k], limits);
    tau[h] += limit_torque(limits.hip_min - q[h], -qd[h], limits);
    tau[a] += limit_torque(limits.ankle_min - q[a], -qd[a], limits);
    tau[a] -= limit_torque(q[a] - limits.ankle_max, qd[a], limits);
  }
  return tau;
}

bool fall_check(const BipedModel& model, const ModelState& state, const Terrain& terrain) {
  constexpr double kMaxLean = std::numbers::pi / 3.0;
  if (std::abs(state.q[dof::kLean]) > kMaxLean) return true;
  const double standing_height = model.com_state(model.standing_pose()).position.y();
  const Vec2 com = model.com_state(state).position;
  return com.y() - terrain.height(com.x()) < 0.6 * standing_height;
}

Walker::Walker(const WalkerConfig& config, const ControlParams& params, Terrain terrain)
    : config_(config),
      params_(params),
      terrain_(std::move(terrain)),
      model_(BipedModel::build(config.anthropometry)),
      detector_(config.reflex.stance_threshold, config.reflex.stance_hysteresis),
      buffer_(std::max({config.reflex.delay_long, config.reflex.delay_medium,
                        config.reflex.delay_short}) +
              0.02),
      body_weight_(model_.total_mass() * kGravity) {
  for (const auto& m : config_.muscles) m.validate();
}

ModelState Walker::unpack(double t, const Eigen::VectorXd& y) {
  ModelState s;
  s.q = y.segment<kNumDof>(0);
  s.qd = y.segment<kNumDof>(kNumDof);
  s.t = t;
  return s;
}

Walker::Muscles Walker::muscle_state(const ModelState& s, const Eigen::VectorXd& y) const {
  Muscles out;
  for (Side side : kSides) {
    const JointAngles angles = leg_angles(s.q, side);
    for (Muscle m : kMuscles) {
      const int slot = muscle_slot(side, m);
      const MuscleParams& p = config_.muscles[static_cast<int>(m)];
      const double a = std::clamp(y[kActivationOffset + slot], 0.0, 1.0);
      out.l_mtu[slot] = mtu_length(p, angles);
      const MtuEval e = mtu_evaluate(a, out.l_mtu[slot], y[kFiberOffset + slot], p);
      out.force[slot] = e.force;
      out.v_ce[slot] = e.v_ce;
    }
  }
  return out;
}

std::array<double, kNumMuscles> Walker::current_stimulation(double t) const {
  const ReflexInputs in = delayed_inputs(buffer_, t, config_.reflex);
  const std::array<bool, 2> trailing = {detector_.trailing(Side::kLeft),
                                        detector_.trailing(Side::kRight)};
  return stimulations(in, detector_.phases(), trailing, params_, config_.reflex);
}

void Walker::derivative(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
  const ModelState s = unpack(t, y);
  const FootContacts contacts = ground_contact(model_, s, terrain_, config_.contact);
  const Muscles mus = muscle_state(s, y);

  GenVec tau = joint_limit_torques(s.q, s.qd, config_.limits);
  for (Side side : kSides) {
    const auto torques = muscle_torques(
        std::span<const double, kMusclesPerLeg>(mus.force.data() + index(side) * kMusclesPerLeg,
                                                kMusclesPerLeg),
        config_.muscles, leg_angles(s.q, side));
    tau[dof::hip(side)] += torques[0];
    tau[dof::knee(side)] += torques[1];
    tau[dof::ankle(side)] += torques[2];
  }

  std::array<Vec2, 4> forces;
  std::array<BodyPoint, 4> points;
  for (Side side : kSides) {
    for (ContactPoint cp : {ContactPoint::kHeel, ContactPoint::kBall}) {
      const int slot = contact_slot(side, cp);
      forces[slot] = contacts[slot].force;
      points[slot] = model_.contact_point(side, cp);
    }
  }
  const GenVec qdd = model_.forward_dynamics(s, tau, forces, points);
  const auto u = current_stimulation(t);

  dy.resize(kStateSize);
  dy.segment<kNumDof>(0) = s.qd;
  dy.segment<kNumDof>(kNumDof) = qdd;
  for (Side side : kSides) {
    for (Muscle m : kMuscles) {
      const int slot = muscle_slot(side, m);
      const double tau_act = config_.muscles[static_cast<int>(m)].tau;
      dy[kActivationOffset + slot] = activation_rate(u[slot], y[kActivationOffset + slot], tau_act);
      dy[kFiberOffset + slot] = mus.v_ce[slot];
    }
  }
}

SensoryFrame Walker::sense(double t, const Eigen::VectorXd& y) const {
  const ModelState s = unpack(t, y);
  const Muscles mus = muscle_state(s, y);
  const FootContacts contacts = ground_contact(model_, s, terrain_, config_.contact);
  SensoryFrame f;
  f.t = t;
  for (Side side : kSides) {
    const int i = index(side);
    for (Muscle m : kMuscles) {
      const int slot = muscle_slot(side, m);
      const MuscleParams& p = config_.muscles[static_cast<int>(m)];
      f.force[slot] = mus.force[slot] / p.f_max;
      f.length[slot] = y[kFiberOffset + slot] / p.l_opt;
    }
    f.knee_angle[i] = inner_angle(Joint::kKnee, s.q[dof::knee(side)]);
    f.knee_rate[i] = -s.qd[dof::knee(side)];
    f.load[i] = (contacts[contact_slot(side, ContactPoint::kHeel)].force.y() +
                 contacts[contact_slot(side, ContactPoint::kBall)].force.y()) /
                body_weight_;
  }
  f.lean = s.q[dof::kLean];
  f.lean_rate = s.qd[dof::kLean];
  return f;
}

bool Walker::accept_step(double t, const Eigen::VectorXd& y) {
  const SensoryFrame f = sense(t, y);
  buffer_.push(f);
  detector_.update(t, f.load[0] * body_weight_, f.load[1] * body_weight_, f.lean);
  fallen_ = fall_check(model_, unpack(t, y), terrain_);
  return !fallen_;
}

Eigen::VectorXd Walker::initial_state() {
  const InitialPose& ip = config_.initial;
  const Anthropometry& an = config_.anthropometry;
  ModelState s;
  s.q[dof::kLean] = ip.lean;
  const Side st = Side::kLeft;
  const Side sw = Side::kRight;
  s.q[dof::hip(st)] = ip.stance_hip;
  s.q[dof::knee(st)] = ip.stance_knee;
  s.q[dof::ankle(st)] = ip.lean - ip.stance_hip + ip.stance_knee;  // flat foot
  s.q[dof::hip(sw)] = ip.swing_hip;
  s.q[dof::knee(sw)] = ip.swing_knee;
  s.q[dof::ankle(sw)] = ip.swing_ankle;

  const double th = ip.stance_hip - ip.lean;
  const double sh = th - ip.stance_knee;
  const double static_sink = body_weight_ / (2.0 * config_.contact.stiffness);
  s.q[dof::kY] = an.thigh.length * std::cos(th) + an.shank.length * std::cos(sh) - static_sink;
  s.q[dof::kX] = 0.0;

  s.qd[dof::kX] = ip.speed;
  s.qd[dof::hip(sw)] = ip.swing_hip_rate;
  s.qd[dof::knee(sw)] = ip.swing_knee_rate;
  // Remaining rates (hip y, stance hip and ankle) keep the stance foot still.
  const std::array<int, 3> unknown = {dof::kY, dof::hip(st), dof::ankle(st)};
  Eigen::Matrix<double, 4, 3> a;
  Eigen::Vector4d b;
  for (int row = 0; row < 2; ++row) {
    const auto& bp = model_.contact_point(st, row == 0 ? ContactPoint::kHeel : ContactPoint::kBall);
    const auto j = model_.jacobian(bp, s.q);
    const Vec2 known = j * s.qd;
    for (int c = 0; c < 3; ++c) a.block<2, 1>(2 * row, c) = j.col(unknown[c]);
    b.segment<2>(2 * row) = -known;
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(b);
  for (int c = 0; c < 3; ++c) s.qd[unknown[c]] = sol[c];

  Eigen::VectorXd y(kStateSize);
  y.segment<kNumDof>(0) = s.q;
  y.segment<kNumDof>(kNumDof) = s.qd;
  for (Side side : kSides) {
    const JointAngles angles = leg_angles(s.q, side);
    for (Muscle m : kMuscles) {
      const int slot = muscle_slot(side, m);
      const bool support = side == st && (m == Muscle::kSOL || m == Muscle::kGAS ||
                                          m == Muscle::kVAS);
      const double act = support ? ip.stance_activation : config_.reflex.pre_stimulation;
      const MuscleParams& p = config_.muscles[static_cast<int>(m)];
      y[kActivationOffset + slot] = act;
      y[kFiberOffset + slot] = equilibrium_ce_length(act, mtu_length(p, angles), p);
    }
  }

  LegPhases phases;
  phases[index(st)] = {Phase::kStance, s.t, ip.lean};
  phases[index(sw)] = {Phase::kSwing, s.t, ip.lean};
  detector_.reset(phases);
  buffer_.clear();
  buffer_.push(sense(s.t, y));
  fallen_ = false;
  return y;
}

WalkerOutputs Walker::outputs(double t, const Eigen::VectorXd& y) const {
  WalkerOutputs o;
  o.state = unpack(t, y);
  o.com = model_.com_state(o.state);
  o.contacts = ground_contact(model_, o.state, terrain_, config_.contact);
  const Muscles mus = muscle_state(o.state, y);
  o.stimulation = current_stimulation(t);
  for (int i = 0; i < kNumMuscles; ++i) {
    o.activation[i] = std::clamp(y[kActivationOffset + i], 0.0, 1.0);
    o.fiber_length[i] = y[kFiberOffset + i];
    o.force[i] = mus.force[i];
  }
  for (Side side : kSides) {
    const int i = index(side);
    const ContactForce& heel = o.contacts[contact_slot(side, ContactPoint::kHeel)];
    const ContactForce& ball = o.contacts[contact_slot(side, ContactPoint::kBall)];
    o.grf[i] = heel.force + ball.force;
    const double fy = o.grf[i].y();
    if (fy > 0.0) {
      o.cop[i] = (heel.force.y() * heel.position + ball.force.y() * ball.position) / fy;
    } else {
      o.cop[i] = Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  o.phases = detector_.phases();
  return o;
}

}  // namespace nmsgait
