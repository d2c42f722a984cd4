#include "nmsgait/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>

#include <nlohmann/json.hpp>

namespace nmsgait {
namespace {

using json = nlohmann::json;

// Stage-3 values are kept strictly below the stage-2 offset and stage-2
// spreads strictly below the stage-1 range.
constexpr double kStage3Ceiling = kStage2Offset - 1.0;
constexpr double kStage3Floor = -1e9;
constexpr double kMaxSpread = 100.0;
constexpr double kMaxDistance = kStage1Offset - kStage2Offset - 2.0 * kMaxSpread;

json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw std::invalid_argument("archive: bad number '" + s + "'");
}

void sort_by_r2(std::vector<GaitRecord>& a) {
  std::stable_sort(a.begin(), a.end(), [](const GaitRecord& x, const GaitRecord& y) {
    if (x.r2 != y.r2) return x.r2 < y.r2;
    return x.id < y.id;
  });
}

GaitRecord make_record(const ControlParams& params, const StagedCost& cost,
                       const GaitAnalysis& a) {
  GaitRecord r;
  r.params = params;
  r.stage = cost.stage;
  r.cost = cost.value;
  r.r2 = a.ip.r2;
  r.ip_height = a.ip.height;
  r.ip_degenerate = a.ip.degenerate;
  r.speed = a.descriptors.speed;
  r.step_length = a.descriptors.step_length;
  r.collision_fraction = a.collision.fraction;
  r.spread = a.steadiness.spread;
  return r;
}

}  // namespace

std::string_view mode_name(Mode m) {
  return m == Mode::kMinimizeR2 ? "min-r2" : "max-r2";
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "min-r2") return Mode::kMinimizeR2;
  if (s == "max-r2") return Mode::kMaximizeR2;
  return std::nullopt;
}

StagedCost staged_cost(const CostInputs& in, const CostSettings& settings) {
  StagedCost c;
  c.inputs = in;
  if (!in.completed) {
    c.stage = 1;
    const double d = std::isfinite(in.distance) ? std::clamp(in.distance, 0.0, kMaxDistance) : 0.0;
    c.value = kStage1Offset - d;
    return c;
  }
  if (!in.spread || !(*in.spread < kSteadinessThreshold)) {
    c.stage = 2;
    const double s = in.spread && std::isfinite(*in.spread) ? std::min(*in.spread, kMaxSpread)
                                                            : kMaxSpread;
    c.value = kStage2Offset + s;
    return c;
  }
  c.stage = 3;
  double j = 0.0;
  if (settings.mode == Mode::kMinimizeR2) {
    j = in.r2;
    if (settings.cf_weight != 0.0) j += settings.cf_weight * in.collision_fraction;
  } else {
    j = 1.0 - in.r2 + std::abs(in.speed - settings.target_speed);
  }
  if (std::isnan(j)) j = kStage3Ceiling;
  c.value = std::clamp(j, kStage3Floor, kStage3Ceiling);
  return c;
}

CostInputs cost_inputs(const GaitTrace& trace, std::optional<GaitAnalysis>* analysis) {
  CostInputs in;
  in.completed = trace.termination == Termination::kCompleted;
  in.end_time = trace.end_time;
  if (!trace.samples.empty()) {
    in.distance = trace.samples.back().com.x() - trace.samples.front().com.x();
  }
  if (!in.completed) return in;
  try {
    in.spread = trace_steadiness(trace).spread;
  } catch (const std::exception&) {
    return in;
  }
  if (!(*in.spread < kSteadinessThreshold)) return in;
  try {
    GaitAnalysis a = analyze(trace);
    in.r2 = a.ip.r2;
    in.speed = a.descriptors.speed;
    in.collision_fraction = a.collision.fraction;
    if (analysis) *analysis = std::move(a);
  } catch (const std::exception&) {
    // A steady trace that cannot be analysed is not a usable stage-3 gait.
    in.spread.reset();
  }
  return in;
}

std::string record_to_json(const GaitRecord& r) {
  json j;
  j["id"] = r.id;
  j["generation"] = r.generation;
  json p = json::object();
  for (int i = 0; i < kNumControlParams; ++i) {
    p[std::string(control_param_name(i))] = number(r.params.values[i]);
  }
  j["params"] = p;
  j["stage"] = r.stage;
  j["cost"] = number(r.cost);
  j["r2"] = number(r.r2);
  j["ip_height"] = number(r.ip_height);
  j["ip_degenerate"] = r.ip_degenerate;
  j["speed"] = number(r.speed);
  j["step_length"] = number(r.step_length);
  j["collision_fraction"] = number(r.collision_fraction);
  j["spread"] = number(r.spread);
  j["max_step_down_cm"] = r.max_step_down_cm ? json(*r.max_step_down_cm) : json(nullptr);
  j["note"] = r.note;
  return j.dump();
}

GaitRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  GaitRecord r;
  r.id = j.at("id").get<std::uint64_t>();
  r.generation = j.at("generation").get<std::uint64_t>();
  const json& p = j.at("params");
  for (int i = 0; i < kNumControlParams; ++i) {
    r.params.values[i] = number_from(p.at(std::string(control_param_name(i))));
  }
  r.stage = j.at("stage").get<int>();
  r.cost = number_from(j.at("cost"));
  r.r2 = number_from(j.at("r2"));
  r.ip_height = number_from(j.at("ip_height"));
  r.ip_degenerate = j.at("ip_degenerate").get<bool>();
  r.speed = number_from(j.at("speed"));
  r.step_length = number_from(j.at("step_length"));
  r.collision_fraction = number_from(j.at("collision_fraction"));
  r.spread = number_from(j.at("spread"));
  if (!j.at("max_step_down_cm").is_null()) r.max_step_down_cm = j.at("max_step_down_cm").get<int>();
  r.note = j.value("note", "");
  return r;
}

std::vector<GaitRecord> read_archive(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open archive " + path.string());
  std::vector<GaitRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_archive(const std::filesystem::path& path, const std::vector<GaitRecord>& records) {
  std::string text;
  for (const GaitRecord& r : records) text += record_to_json(r) + "\n";
  write_file_atomic(path, text);
}

void append_archive(const std::filesystem::path& path, const std::vector<GaitRecord>& records) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  for (const GaitRecord& r : records) out << record_to_json(r) << "\n";
  out.flush();
}

Evaluation evaluate_candidate(const WalkerConfig& config, const ControlParams& params,
                              const CostSettings& cost, double t_max) {
  const GaitTrace trace = rollout(config, params, Terrain::flat(), t_max);
  std::optional<GaitAnalysis> analysis;
  const CostInputs in = cost_inputs(trace, &analysis);
  Evaluation e;
  e.cost = staged_cost(in, cost);
  if (e.cost.stage == 3 && analysis) e.record = make_record(params, e.cost, *analysis);
  return e;
}

OptimizeResult optimize(const WalkerConfig& config, const ControlParams& initial,
                        const OptimizeSettings& settings, const ProgressCallback& progress) {
  if (settings.budget == 0) throw std::invalid_argument("optimize: budget must be positive");
  const ParamBounds& bounds = settings.bounds;
  CmaesOptions options;
  options.seed = settings.seed;
  options.bounds = Box{Eigen::VectorXd::Zero(kNumControlParams),
                       Eigen::VectorXd::Ones(kNumControlParams)};

  OptimizeResult result;
  std::optional<Cmaes> es;
  if (settings.resume && settings.checkpoint && std::filesystem::exists(*settings.checkpoint)) {
    std::ifstream in(*settings.checkpoint);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CmaesState state = cmaes_state_from_json(text);
    if (state.seed != settings.seed) {
      throw std::invalid_argument("checkpoint seed " + std::to_string(state.seed) +
                                  " does not match --seed " + std::to_string(settings.seed));
    }
    es.emplace(std::move(state), options);
    if (settings.archive && std::filesystem::exists(*settings.archive)) {
      // Records from a generation the checkpoint does not cover are replayed.
      for (GaitRecord& r : read_archive(*settings.archive)) {
        if (r.generation < es->generation()) result.archive.push_back(std::move(r));
      }
      write_archive(*settings.archive, result.archive);
    }
  } else {
    es.emplace(encode(initial, bounds), settings.sigma0, options);
    if (settings.archive) write_archive(*settings.archive, {});
  }

  const auto lambda = static_cast<std::uint64_t>(es->population());
  const std::uint64_t generations = (settings.budget + lambda - 1) / lambda;
  std::uint64_t next_id = 0;
  for (const GaitRecord& r : result.archive) next_id = std::max(next_id, r.id + 1);

  while (es->generation() < generations) {
    const std::uint64_t gen = es->generation();
    const std::vector<Eigen::VectorXd> xs = es->ask();
    std::vector<Evaluation> evals(xs.size());
    const std::size_t batch = static_cast<std::size_t>(std::max(1, settings.concurrency));
    for (std::size_t start = 0; start < xs.size(); start += batch) {
      const std::size_t stop = std::min(xs.size(), start + batch);
      std::vector<std::future<Evaluation>> jobs;
      for (std::size_t i = start; i < stop; ++i) {
        const ControlParams p = decode(xs[i], bounds).params;
        jobs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred,
                                  [&config, p, &settings] {
                                    return evaluate_candidate(config, p, settings.cost,
                                                              settings.t_max);
                                  }));
      }
      for (std::size_t i = start; i < stop; ++i) evals[i] = jobs[i - start].get();
    }

    std::vector<double> costs;
    std::vector<GaitRecord> fresh;
    GenerationLog log;
    log.generation = gen;
    log.best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < evals.size(); ++i) {
      costs.push_back(evals[i].cost.value);
      if (evals[i].cost.value < log.best_cost) {
        log.best_cost = evals[i].cost.value;
        log.best_stage = evals[i].cost.stage;
      }
      if (evals[i].record) {
        GaitRecord r = *evals[i].record;
        r.id = next_id++;
        r.generation = gen;
        fresh.push_back(r);
      }
    }
    if (settings.archive) append_archive(*settings.archive, fresh);
    result.archive.insert(result.archive.end(), fresh.begin(), fresh.end());
    es->tell(xs, costs);
    if (settings.checkpoint) {
      write_file_atomic(*settings.checkpoint, cmaes_state_to_json(es->state()));
    }
    log.archived = result.archive.size();
    result.log.push_back(log);
    if (progress) progress(log);
  }

  result.evaluations = es->state().evaluations;
  result.generations = es->generation();
  for (const GaitRecord& r : result.archive) {
    if (!result.best || r.cost < result.best->cost ||
        (r.cost == result.best->cost && r.id < result.best->id)) {
      result.best = r;
    }
  }
  sort_by_r2(result.archive);
  return result;
}

OptimizeResult cf_constrained_optimize(const WalkerConfig& config, const ControlParams& initial,
                                       OptimizeSettings settings, double cf_weight,
                                       const ProgressCallback& progress) {
  settings.cost.mode = Mode::kMinimizeR2;
  settings.cost.cf_weight = cf_weight;
  return optimize(config, initial, settings, progress);
}

std::vector<GaitRecord> query_low_r2_low_cf(const std::vector<GaitRecord>& archive, double r2_max,
                                            double cf_max) {
  std::vector<GaitRecord> out;
  for (const GaitRecord& r : archive) {
    if (r.r2 < r2_max && r.collision_fraction < cf_max) out.push_back(r);
  }
  return out;
}

std::vector<GaitRecord> robustness_sweep(const WalkerConfig& config,
                                         std::vector<GaitRecord> archive,
                                         const StepDownProtocol& protocol) {
  for (GaitRecord& r : archive) {
    try {
      const StepDownResult s = step_down_robustness(config, r.params, protocol);
      if (!s.stable_on_flat) {
        r.max_step_down_cm.reset();
        r.note = "unstable on flat ground";
      } else {
        r.max_step_down_cm = s.max_height_cm;
      }
    } catch (const std::exception& e) {
      r.max_step_down_cm.reset();
      r.note = std::string("robustness failed: ") + e.what();
    }
  }
  return archive;
}

std::optional<GaitRecord> analyse_params(const WalkerConfig& config, const ControlParams& params,
                                         double t_max) {
  const Evaluation e = evaluate_candidate(config, params, {}, t_max);
  return e.record;
}

}  // namespace nmsgait
