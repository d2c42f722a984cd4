#include "nmsgait/config.hpp"

#include <charconv>
#include <cmath>
#include <type_traits>
#include <fstream>

namespace nmsgait {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 3> kJointNames = {"hip", "knee", "ankle"};

json segment_json(const SegmentGeometry& s) {
  return {{"mass", s.mass}, {"length", s.length}, {"com_offset", s.com_offset},
          {"inertia", s.inertia}};
}

SegmentGeometry segment_from(const json& j) {
  return {j.at("mass").get<double>(), j.at("length").get<double>(),
          j.at("com_offset").get<double>(), j.at("inertia").get<double>()};
}

json muscle_json(const MuscleParams& m) {
  json arms = json::array();
  for (int i = 0; i < m.arm_count; ++i) {
    const MomentArm& a = m.arms[i];
    arms.push_back({{"joint", kJointNames[static_cast<int>(a.joint)]},
                    {"r0", a.r0},
                    {"phi_max", a.phi_max},
                    {"phi_ref", a.phi_ref},
                    {"rho", a.rho},
                    {"direction", a.direction},
                    {"constant", a.constant}});
  }
  return {{"f_max", m.f_max},       {"l_opt", m.l_opt},         {"v_max", m.v_max},
          {"l_slack", m.l_slack},   {"tau", m.tau},             {"width", m.width},
          {"eccentric", m.eccentric}, {"curvature", m.curvature},
          {"tendon_strain", m.tendon_strain}, {"arms", arms}};
}

MuscleParams muscle_from(const json& j) {
  MuscleParams m;
  m.f_max = j.at("f_max").get<double>();
  m.l_opt = j.at("l_opt").get<double>();
  m.v_max = j.at("v_max").get<double>();
  m.l_slack = j.at("l_slack").get<double>();
  m.tau = j.at("tau").get<double>();
  m.width = j.at("width").get<double>();
  m.eccentric = j.at("eccentric").get<double>();
  m.curvature = j.at("curvature").get<double>();
  m.tendon_strain = j.at("tendon_strain").get<double>();
  const json& arms = j.at("arms");
  if (!arms.is_array() || arms.empty() || arms.size() > m.arms.size()) {
    throw ConfigError("muscle needs one or two moment arms");
  }
  m.arm_count = static_cast<int>(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const json& a = arms[i];
    MomentArm& arm = m.arms[i];
    const std::string joint = a.at("joint").get<std::string>();
    const auto it = std::find(kJointNames.begin(), kJointNames.end(), joint);
    if (it == kJointNames.end()) throw ConfigError("unknown joint '" + joint + "'");
    arm.joint = static_cast<Joint>(it - kJointNames.begin());
    arm.r0 = a.at("r0").get<double>();
    arm.phi_max = a.at("phi_max").get<double>();
    arm.phi_ref = a.at("phi_ref").get<double>();
    arm.rho = a.at("rho").get<double>();
    arm.direction = a.at("direction").get<int>();
    arm.constant = a.at("constant").get<bool>();
  }
  return m;
}

#define NMSGAIT_FIELDS_REFLEX(X)                                                     \
  X(pre_stimulation) X(hip_stance_pre_stimulation) X(vas_stance_pre_stimulation)     \
  X(ta_length_offset) X(sol_ta_inhibition) X(knee_overextension_gain)                \
  X(knee_overextension_angle) X(contra_load_gain) X(glu_swing_force_gain)            \
  X(ham_swing_force_gain) X(hfl_length_offset) X(ham_hfl_inhibition)                 \
  X(ham_length_offset) X(swing_lean_gain) X(delay_long) X(delay_medium)              \
  X(delay_short) X(stance_threshold) X(stance_hysteresis)

#define NMSGAIT_FIELDS_POSE(X)                                                       \
  X(speed) X(lean) X(stance_hip) X(stance_knee) X(swing_hip) X(swing_knee)           \
  X(swing_ankle) X(swing_hip_rate) X(swing_knee_rate) X(stance_activation)

#define NMSGAIT_FIELDS_LIMITS(X) \
  X(stiffness) X(relax_rate) X(knee_min) X(ankle_min) X(ankle_max) X(hip_min)

#define NMSGAIT_FIELDS_CONTACT(X) X(stiffness) X(relax_velocity) X(friction) X(slip_velocity)

#define NMSGAIT_TO_JSON(f) dst[#f] = v.f;
#define NMSGAIT_FROM_JSON(f) v.f = src.at(#f).get<std::remove_cvref_t<decltype(v.f)>>();

template <typename T>
T checked(const json& j, const char* what) {
  if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
  return j.get<T>();
}

}  // namespace

RunConfig RunConfig::builtin() { return RunConfig{}; }

nlohmann::json config_to_json(const RunConfig& c) {
  json out;
  const Anthropometry& an = c.walker.anthropometry;
  out["anthropometry"] = {{"trunk", segment_json(an.trunk)},
                          {"thigh", segment_json(an.thigh)},
                          {"shank", segment_json(an.shank)},
                          {"foot",
                           {{"mass", an.foot.mass},
                            {"heel_offset", an.foot.heel_offset},
                            {"ball_offset", an.foot.ball_offset},
                            {"com_offset", an.foot.com_offset},
                            {"inertia", an.foot.inertia}}}};
  json muscles;
  for (Muscle m : kMuscles) {
    muscles[std::string(muscle_name(m))] = muscle_json(c.walker.muscles[static_cast<int>(m)]);
  }
  out["muscles"] = muscles;
  {
    json dst;
    const auto& v = c.walker.contact;
    NMSGAIT_FIELDS_CONTACT(NMSGAIT_TO_JSON)
    out["contact"] = dst;
  }
  {
    json dst;
    const auto& v = c.walker.limits;
    NMSGAIT_FIELDS_LIMITS(NMSGAIT_TO_JSON)
    out["joint_limits"] = dst;
  }
  {
    json dst;
    const auto& v = c.walker.reflex;
    NMSGAIT_FIELDS_REFLEX(NMSGAIT_TO_JSON)
    out["reflex"] = dst;
  }
  {
    json dst;
    const auto& v = c.walker.initial;
    NMSGAIT_FIELDS_POSE(NMSGAIT_TO_JSON)
    out["initial_pose"] = dst;
  }
  json defaults;
  json bounds;
  for (int i = 0; i < kNumControlParams; ++i) {
    const std::string name(control_param_name(i));
    defaults[name] = c.defaults.values[i];
    bounds[name] = {c.bounds.lower[i], c.bounds.upper[i]};
  }
  out["controller"] = {{"defaults", defaults}, {"bounds", bounds}};
  const IntegratorOptions& io = c.walker.integrator;
  out["simulation"] = {{"t_max", c.t_max},
                       {"rel_tol", io.rel_tol},
                       {"abs_tol", io.abs_tol},
                       {"max_step", io.max_step},
                       {"min_step", io.min_step},
                       {"report_interval", io.report_interval},
                       {"jacobian_reuse", io.jacobian_reuse}};
  json terrain = json::array();
  for (const auto& b : c.terrain.breakpoints()) terrain.push_back({b.x_start, b.height});
  out["terrain"] = terrain;
  const OptimizeSettings& o = c.optimizer;
  out["optimizer"] = {{"mode", std::string(mode_name(o.cost.mode))},
                      {"target_speed", o.cost.target_speed},
                      {"cf_weight", o.cost.cf_weight},
                      {"budget", o.budget},
                      {"seed", o.seed},
                      {"t_max", o.t_max},
                      {"sigma0", o.sigma0},
                      {"concurrency", o.concurrency}};
  const StepDownProtocol& r = c.robustness;
  out["robustness"] = {{"increment", r.increment},
                       {"max_height", r.max_height},
                       {"strides_before", r.strides_before},
                       {"strides_after", r.strides_after},
                       {"flat_duration", r.flat_duration},
                       {"concurrency", r.concurrency}};
  out["output_dir"] = c.output_dir;
  return out;
}

std::vector<std::string> missing_keys(const json& reference, const json& candidate) {
  std::vector<std::string> out;
  const auto walk = [&](auto&& self, const json& ref, const json& cand,
                        const std::string& path) -> void {
    if (ref.is_object()) {
      if (!cand.is_object()) {
        if (!path.empty()) out.push_back(path);
        return;
      }
      for (const auto& [key, value] : ref.items()) {
        const std::string p = path.empty() ? key : path + "." + key;
        if (!cand.contains(key)) {
          out.push_back(p);
        } else {
          self(self, value, cand.at(key), p);
        }
      }
    } else if (ref.is_array() && !ref.empty() && ref.front().is_object() && cand.is_array()) {
      for (std::size_t i = 0; i < cand.size(); ++i) {
        self(self, ref[std::min(i, ref.size() - 1)], cand[i], path + "[" + std::to_string(i) + "]");
      }
    }
  };
  walk(walk, reference, candidate, "");
  return out;
}

RunConfig config_from_json(const json& j) {
  const json reference = config_to_json(RunConfig::builtin());
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  const std::vector<std::string> missing = missing_keys(reference, j);
  if (!missing.empty()) {
    std::string msg = "configuration is missing " + std::to_string(missing.size()) + " key(s):";
    for (const auto& k : missing) msg += "\n  " + k;
    throw ConfigError(msg, missing);
  }
  RunConfig c;
  try {
    const json& an = j.at("anthropometry");
    Anthropometry& a = c.walker.anthropometry;
    a.trunk = segment_from(an.at("trunk"));
    a.thigh = segment_from(an.at("thigh"));
    a.shank = segment_from(an.at("shank"));
    const json& ft = an.at("foot");
    a.foot.mass = ft.at("mass").get<double>();
    a.foot.heel_offset = ft.at("heel_offset").get<double>();
    a.foot.ball_offset = ft.at("ball_offset").get<double>();
    a.foot.com_offset = ft.at("com_offset").get<double>();
    a.foot.inertia = ft.at("inertia").get<double>();
    a.validate();
    for (Muscle m : kMuscles) {
      MuscleParams p = muscle_from(j.at("muscles").at(std::string(muscle_name(m))));
      p.validate();
      c.walker.muscles[static_cast<int>(m)] = p;
    }
    {
      const json& src = j.at("contact");
      auto& v = c.walker.contact;
      NMSGAIT_FIELDS_CONTACT(NMSGAIT_FROM_JSON)
    }
    {
      const json& src = j.at("joint_limits");
      auto& v = c.walker.limits;
      NMSGAIT_FIELDS_LIMITS(NMSGAIT_FROM_JSON)
    }
    {
      const json& src = j.at("reflex");
      auto& v = c.walker.reflex;
      NMSGAIT_FIELDS_REFLEX(NMSGAIT_FROM_JSON)
    }
    {
      const json& src = j.at("initial_pose");
      auto& v = c.walker.initial;
      NMSGAIT_FIELDS_POSE(NMSGAIT_FROM_JSON)
    }
    const json& ctl = j.at("controller");
    for (int i = 0; i < kNumControlParams; ++i) {
      const std::string name(control_param_name(i));
      c.defaults.values[i] = checked<double>(ctl.at("defaults").at(name), name.c_str());
      const json& b = ctl.at("bounds").at(name);
      if (!b.is_array() || b.size() != 2) throw ConfigError("bounds." + name + " must be [lo, hi]");
      c.bounds.lower[i] = b[0].get<double>();
      c.bounds.upper[i] = b[1].get<double>();
      if (!(c.bounds.lower[i] < c.bounds.upper[i])) {
        throw ConfigError("bounds." + name + ": lower must be below upper");
      }
    }
    if (!c.bounds.contains(c.defaults.values)) {
      throw ConfigError("controller defaults lie outside their bounds");
    }
    const json& sim = j.at("simulation");
    c.t_max = sim.at("t_max").get<double>();
    IntegratorOptions& io = c.walker.integrator;
    io.rel_tol = sim.at("rel_tol").get<double>();
    io.abs_tol = sim.at("abs_tol").get<double>();
    io.max_step = sim.at("max_step").get<double>();
    io.min_step = sim.at("min_step").get<double>();
    io.report_interval = sim.at("report_interval").get<double>();
    io.jacobian_reuse = sim.at("jacobian_reuse").get<int>();
    if (!(c.t_max > 0.0) || !(io.rel_tol > 0.0) || !(io.abs_tol > 0.0) || !(io.max_step > 0.0) ||
        !(io.report_interval > 0.0)) {
      throw ConfigError("simulation settings must be positive");
    }
    std::vector<Terrain::Breakpoint> bps;
    for (const json& b : j.at("terrain")) {
      if (!b.is_array() || b.size() != 2) throw ConfigError("terrain entries must be [x, height]");
      bps.push_back({b[0].get<double>(), b[1].get<double>()});
    }
    c.terrain = Terrain(std::move(bps));
    const json& opt = j.at("optimizer");
    const auto mode = parse_mode(opt.at("mode").get<std::string>());
    if (!mode) throw ConfigError("optimizer.mode must be min-r2 or max-r2");
    c.optimizer.cost.mode = *mode;
    c.optimizer.cost.target_speed = opt.at("target_speed").get<double>();
    c.optimizer.cost.cf_weight = opt.at("cf_weight").get<double>();
    c.optimizer.budget = opt.at("budget").get<std::size_t>();
    c.optimizer.seed = opt.at("seed").get<std::uint64_t>();
    c.optimizer.t_max = opt.at("t_max").get<double>();
    c.optimizer.sigma0 = opt.at("sigma0").get<double>();
    c.optimizer.concurrency = opt.at("concurrency").get<int>();
    c.optimizer.bounds = c.bounds;
    if (c.optimizer.budget == 0 || !(c.optimizer.sigma0 > 0.0)) {
      throw ConfigError("optimizer budget and sigma0 must be positive");
    }
    const json& rb = j.at("robustness");
    c.robustness.increment = rb.at("increment").get<double>();
    c.robustness.max_height = rb.at("max_height").get<double>();
    c.robustness.strides_before = rb.at("strides_before").get<std::size_t>();
    c.robustness.strides_after = rb.at("strides_after").get<std::size_t>();
    c.robustness.flat_duration = rb.at("flat_duration").get<double>();
    c.robustness.concurrency = rb.at("concurrency").get<int>();
    c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

Terrain parse_terrain(const std::string& spec) {
  if (spec.empty() || spec == "flat") return Terrain::flat();
  const std::string prefix = "step:";
  const auto at = spec.find('@');
  if (spec.rfind(prefix, 0) != 0 || at == std::string::npos) {
    throw ConfigError("terrain must be 'flat' or 'step:<dh>@<x>', got '" + spec + "'");
  }
  const auto parse = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ConfigError("terrain: cannot parse number '" + std::string(s) + "'");
    }
    return v;
  };
  const std::string_view body(spec);
  const double dh = parse(body.substr(prefix.size(), at - prefix.size()));
  const double x = parse(body.substr(at + 1));
  return Terrain({{x, dh}});
}

}  // namespace nmsgait
