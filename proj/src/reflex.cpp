#include "nmsgait/reflex.hpp"

#include <algorithm>
#include <iterator>

namespace nmsgait {
namespace {

constexpr std::array<std::string_view, kNumControlParams> kParamNames = {
    "sol_force_gain",   "gas_force_gain",   "vas_force_gain",  "ta_length_gain",
    "hfl_length_gain",  "ham_balance_gain", "glu_balance_gain", "hfl_balance_gain",
    "trunk_lean_ref",   "trunk_kp",         "trunk_kd",         "swing_initiation",
};

double positive(double x) { return x > 0.0 ? x : 0.0; }

SensoryFrame lerp(const SensoryFrame& a, const SensoryFrame& b, double t) {
  const double w = (t - a.t) / (b.t - a.t);
  const auto mix = [w](double x, double y) { return x + w * (y - x); };
  SensoryFrame f;
  f.t = t;
  for (int i = 0; i < kNumMuscles; ++i) {
    f.force[i] = mix(a.force[i], b.force[i]);
    f.length[i] = mix(a.length[i], b.length[i]);
  }
  for (int s = 0; s < 2; ++s) {
    f.knee_angle[s] = mix(a.knee_angle[s], b.knee_angle[s]);
    f.knee_rate[s] = mix(a.knee_rate[s], b.knee_rate[s]);
    f.load[s] = mix(a.load[s], b.load[s]);
  }
  f.lean = mix(a.lean, b.lean);
  f.lean_rate = mix(a.lean_rate, b.lean_rate);
  return f;
}

}  // namespace

std::string_view control_param_name(int i) { return kParamNames.at(static_cast<std::size_t>(i)); }

ParamBounds ParamBounds::defaults() {
  ParamBounds b;
  b.lower = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.1, 0.0, 0.0, 0.0};
  b.upper = {3.0, 3.0, 3.0, 4.0, 2.0, 3.0, 3.0, 3.0, 0.35, 6.0, 1.0, 1.0};
  return b;
}

bool ParamBounds::contains(const std::array<double, kNumControlParams>& values) const {
  for (int i = 0; i < kNumControlParams; ++i) {
    if (!(values[i] >= lower[i] && values[i] <= upper[i])) return false;
  }
  return true;
}

ControlParams ControlParams::defaults() {
  ControlParams p;
  p.values = {1.21701, 0.95382, 1.25082, 1.63376, 0.1888,  0.89502,
              1.12587, 0.00801, 0.0715445, 2.81844, 0.32381, 0.42493};
  return p;
}

NormalizedParams encode(const ControlParams& p, const ParamBounds& b) {
  NormalizedParams x;
  for (int i = 0; i < kNumControlParams; ++i) {
    x[i] = (p.values[i] - b.lower[i]) / (b.upper[i] - b.lower[i]);
  }
  return x;
}

DecodeResult decode(const NormalizedParams& x, const ParamBounds& b) {
  DecodeResult r;
  for (int i = 0; i < kNumControlParams; ++i) {
    double xi = x[i];
    if (!(xi >= 0.0 && xi <= 1.0)) {
      r.clamped = true;
      xi = std::clamp(xi, 0.0, 1.0);  // NaN stays NaN here; callers reject it
    }
    // Endpoints are returned exactly so that bounds survive a round trip.
    if (xi == 0.0) {
      r.params.values[i] = b.lower[i];
    } else if (xi == 1.0) {
      r.params.values[i] = b.upper[i];
    } else {
      r.params.values[i] = b.lower[i] + xi * (b.upper[i] - b.lower[i]);
    }
  }
  return r;
}

PhaseDetector::PhaseDetector(double threshold, double hysteresis)
    : enter_(threshold), leave_(threshold - hysteresis) {}

bool PhaseDetector::update(double t, double grf_left, double grf_right, double trunk_lean) {
  bool changed = false;
  const std::array<double, 2> grf = {grf_left, grf_right};
  for (int s = 0; s < 2; ++s) {
    LegPhase& leg = phases_[s];
    if (leg.phase == Phase::kSwing && grf[s] > enter_) {
      leg.phase = Phase::kStance;
      leg.since = t;
      changed = true;
    } else if (leg.phase == Phase::kStance && grf[s] < leave_) {
      leg.phase = Phase::kSwing;
      leg.since = t;
      leg.lean_at_liftoff = trunk_lean;
      changed = true;
    }
  }
  return changed;
}

bool PhaseDetector::double_support() const {
  return phases_[0].phase == Phase::kStance && phases_[1].phase == Phase::kStance;
}

bool PhaseDetector::trailing(Side s) const {
  return double_support() && phases_[index(s)].since < phases_[index(other(s))].since;
}

void DelayBuffer::push(const SensoryFrame& frame) {
  frames_.push_back(frame);
  while (frames_.size() > 2 && frames_[1].t <= frame.t - horizon_) frames_.pop_front();
}

SensoryFrame DelayBuffer::at(double t) const {
  if (frames_.empty()) return SensoryFrame{};
  if (t <= frames_.front().t) return frames_.front();
  if (t >= frames_.back().t) return frames_.back();
  const auto it = std::upper_bound(frames_.begin(), frames_.end(), t,
                                   [](double v, const SensoryFrame& f) { return v < f.t; });
  return lerp(*std::prev(it), *it, t);
}

double baseline_stimulation(Muscle m, Phase phase, const ReflexConstants& c) {
  if (phase == Phase::kSwing) return c.pre_stimulation;
  if (m == Muscle::kVAS) return c.vas_stance_pre_stimulation;
  const bool hip = m == Muscle::kHAM || m == Muscle::kGLU || m == Muscle::kHFL;
  return hip ? c.hip_stance_pre_stimulation : c.pre_stimulation;
}

std::array<double, kNumMuscles> stimulations(const ReflexInputs& in, const LegPhases& phases,
                                             const std::array<bool, 2>& trailing,
                                             const ControlParams& p, const ReflexConstants& c) {
  using enum Muscle;
  std::array<double, kNumMuscles> u{};
  const double lean_error = in.lean - p[ControlParam::kTrunkLeanRef];
  for (Side side : kSides) {
    const int s = index(side);
    const LegInputs& leg = in.legs[s];
    const auto F = [&](Muscle m) { return leg.force[static_cast<int>(m)]; };
    const auto L = [&](Muscle m) { return leg.length[static_cast<int>(m)]; };
    const Phase phase = phases[s].phase;
    const auto base = [&](Muscle m) { return baseline_stimulation(m, phase, c); };
    std::array<double, kMusclesPerLeg> v{};
    const auto set = [&](Muscle m, double value) { v[static_cast<int>(m)] = value; };

    const double ta_stretch = positive(L(kTA) - c.ta_length_offset);
    if (phase == Phase::kStance) {
      set(kSOL, base(kSOL) + p[ControlParam::kSolForceGain] * F(kSOL));
      set(kTA, base(kTA) + p[ControlParam::kTaLengthGain] * ta_stretch -
                   c.sol_ta_inhibition * F(kSOL));
      set(kGAS, base(kGAS) + p[ControlParam::kGasForceGain] * F(kGAS));

      double vas = base(kVAS) + p[ControlParam::kVasForceGain] * F(kVAS);
      if (leg.knee_angle > c.knee_overextension_angle && leg.knee_rate > 0.0) {
        vas -= c.knee_overextension_gain * (leg.knee_angle - c.knee_overextension_angle);
      }
      if (trailing[s]) vas -= c.contra_load_gain * leg.contra_load;
      set(kVAS, vas);

      const double pd = p[ControlParam::kTrunkKp] * lean_error +
                        p[ControlParam::kTrunkKd] * in.lean_rate;
      const double extend = positive(pd) * leg.load;
      const double flex = positive(-pd) * leg.load;
      double glu = base(kGLU) + p[ControlParam::kGluBalanceGain] * extend;
      double hfl = base(kHFL) + p[ControlParam::kHflBalanceGain] * flex;
      if (trailing[s]) {
        glu -= p[ControlParam::kSwingInitiation];
        hfl += p[ControlParam::kSwingInitiation];
      }
      set(kHAM, base(kHAM) + p[ControlParam::kHamBalanceGain] * extend);
      set(kGLU, glu);
      set(kHFL, hfl);
    } else {
      set(kSOL, base(kSOL));
      set(kGAS, base(kGAS));
      set(kVAS, base(kVAS));
      set(kTA, base(kTA) + p[ControlParam::kTaLengthGain] * ta_stretch);
      set(kHFL, base(kHFL) +
                    c.swing_lean_gain * (phases[s].lean_at_liftoff -
                                         p[ControlParam::kTrunkLeanRef]) +
                    p[ControlParam::kHflLengthGain] * positive(L(kHFL) - c.hfl_length_offset) -
                    c.ham_hfl_inhibition * positive(L(kHAM) - c.ham_length_offset));
      set(kGLU, base(kGLU) + c.glu_swing_force_gain * F(kGLU));
      set(kHAM, base(kHAM) + c.ham_swing_force_gain * F(kHAM));
    }
    for (int m = 0; m < kMusclesPerLeg; ++m) {
      u[s * kMusclesPerLeg + m] = std::clamp(v[m], 0.0, 1.0);
    }
  }
  return u;
}

ReflexInputs delayed_inputs(const DelayBuffer& buffer, double t, const ReflexConstants& c) {
  const SensoryFrame lng = buffer.at(t - c.delay_long);
  const SensoryFrame med = buffer.at(t - c.delay_medium);
  const SensoryFrame sht = buffer.at(t - c.delay_short);
  ReflexInputs in;
  for (Side side : kSides) {
    const int s = index(side);
    LegInputs& leg = in.legs[s];
    for (Muscle m : kMuscles) {
      const int slot = muscle_slot(side, m);
      const SensoryFrame& src =
          (m == Muscle::kSOL || m == Muscle::kTA || m == Muscle::kGAS) ? lng
          : m == Muscle::kVAS                                          ? med
                                                                       : sht;
      leg.force[static_cast<int>(m)] = src.force[slot];
      leg.length[static_cast<int>(m)] = src.length[slot];
    }
    leg.knee_angle = med.knee_angle[s];
    leg.knee_rate = med.knee_rate[s];
    leg.load = sht.load[s];
    leg.contra_load = sht.load[1 - s];
  }
  in.lean = sht.lean;
  in.lean_rate = sht.lean_rate;
  return in;
}

}  // namespace nmsgait
