// nmsgait command-line driver: rollout, optimize, robustness, analyze, animate.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nmsgait/config.hpp"
#include "nmsgait/io.hpp"
#include "nmsgait/optimizer.hpp"

namespace fs = std::filesystem;
using namespace nmsgait;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out;
};

RunConfig load(const Common& c) {
  return c.config.empty() ? RunConfig::builtin() : load_config(c.config);
}

fs::path output_dir(const Common& c, const RunConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("GAITSIM_OUT"); env && *env) return env;
  return cfg.output_dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

ControlParams params_from_archive(const std::string& archive, std::uint64_t id) {
  for (const GaitRecord& r : read_archive(archive)) {
    if (r.id == id) return r.params;
  }
  throw UsageError("gait " + std::to_string(id) + " not found in " + archive);
}

// Writes the analysis part of a bundle. Returns false if the trace is not analysable.
bool write_analysis(const fs::path& dir, const GaitTrace& trace) {
  GaitAnalysis a;
  try {
    a = analyze(trace);
  } catch (const std::exception& e) {
    std::cerr << "analysis failed: " << e.what() << "\n";
    return false;
  }
  write_file(dir / "analysis.json", analysis_to_json(a).dump(2) + "\n");
  write_ip_lines_csv(dir / "ip_lines.csv", a.ip_lines);
  write_file(dir / "ip_plot.svg", ip_plot_svg(a.ip_lines, a.ip));
  write_stance_csv(dir / "stance.csv", trace, a.stride);
  write_file(dir / "stance_plot.svg", stance_plot_svg(trace, a.stride));
  std::cout << "R2 " << a.ip.r2 << "  h " << a.ip.height << " m  CF " << a.collision.fraction
            << "  speed " << a.descriptors.speed << " m/s  step " << a.descriptors.step_length
            << " m  spread " << a.steadiness.spread << " m\n";
  if (!a.steadiness.steady) {
    std::cerr << "gait is not steady (spread " << a.steadiness.spread << " m)\n";
    return false;
  }
  return true;
}

int cmd_rollout(const Common& common, const std::string& terrain_spec,
                const std::optional<double>& t_max, const std::string& archive,
                std::optional<std::uint64_t> id) {
  const RunConfig cfg = load(common);
  const Terrain terrain = terrain_spec.empty() ? cfg.terrain : parse_terrain(terrain_spec);
  const ControlParams params = id ? params_from_archive(archive, *id) : cfg.defaults;
  const fs::path dir = output_dir(common, cfg);
  const GaitTrace trace = rollout(cfg.walker, params, terrain, t_max.value_or(cfg.t_max));
  fs::create_directories(dir);
  write_trace_csv(dir / "trace.csv", trace);
  write_file(dir / "trace.json", trace_sidecar(trace).dump(2) + "\n");
  if (trace.termination != Termination::kCompleted) {
    std::cerr << termination_name(trace.termination) << " at t = " << trace.end_time << " s";
    if (!trace.message.empty()) std::cerr << ": " << trace.message;
    std::cerr << "\n";
    return kExitDomain;
  }
  return write_analysis(dir, trace) ? kExitOk : kExitDomain;
}

int cmd_analyze(const Common& common, const std::string& trace_csv) {
  const RunConfig cfg = load(common);
  const fs::path csv = trace_csv;
  fs::path sidecar = csv;
  sidecar.replace_extension(".json");
  GaitTrace trace;
  try {
    trace = read_trace(csv, sidecar);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = output_dir(common, cfg);
  fs::create_directories(dir);
  return write_analysis(dir, trace) ? kExitOk : kExitDomain;
}

int cmd_optimize(const Common& common, const std::string& mode, const std::optional<double>& vtgt,
                 const std::optional<std::uint64_t>& seed,
                 const std::optional<std::size_t>& budget, bool resume,
                 const std::optional<double>& cf_weight) {
  const RunConfig cfg = load(common);
  OptimizeSettings s = cfg.optimizer;
  if (!mode.empty()) {
    const auto m = parse_mode(mode);
    if (!m) throw UsageError("unknown mode '" + mode + "' (min-r2 or max-r2)");
    s.cost.mode = *m;
  }
  if (vtgt) s.cost.target_speed = *vtgt;
  if (seed) s.seed = *seed;
  if (budget) s.budget = *budget;
  if (cf_weight) s.cost.cf_weight = *cf_weight;
  s.t_max = cfg.t_max;
  s.bounds = cfg.bounds;
  const fs::path dir = output_dir(common, cfg);
  fs::create_directories(dir);
  s.checkpoint = dir / "checkpoint.json";
  s.archive = dir / "archive.jsonl";
  s.resume = resume;
  if (!resume) {
    fs::remove(*s.checkpoint);
    fs::remove(*s.archive);
  } else if (!fs::exists(*s.checkpoint)) {
    std::cerr << "no checkpoint in " << dir << ", starting a new run\n";
    s.resume = false;
  }
  nlohmann::json manifest;
  manifest["config"] = config_to_json(cfg);
  manifest["mode"] = mode_name(s.cost.mode);
  manifest["target_speed"] = s.cost.target_speed;
  manifest["cf_weight"] = s.cost.cf_weight;
  manifest["seed"] = s.seed;
  manifest["budget"] = s.budget;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "mode " << mode_name(s.cost.mode) << "  seed " << s.seed << "  budget "
            << s.budget << "\n";
  const OptimizeResult r = optimize(cfg.walker, cfg.defaults, s, [](const GenerationLog& g) {
    std::cout << "gen " << g.generation << "  best J " << g.best_cost << "  stage "
              << g.best_stage << "  archived " << g.archived << std::endl;
  });
  std::cout << r.evaluations << " evaluations, " << r.archive.size() << " gaits archived\n";
  if (r.best) {
    std::cout << "best gait " << r.best->id << "  R2 " << r.best->r2 << "  speed "
              << r.best->speed << " m/s  CF " << r.best->collision_fraction << "\n";
  } else {
    std::cout << "no candidate walked steadily for the full duration\n";
  }
  return kExitOk;
}

int cmd_robustness(const Common& common, const std::string& archive_path, bool with_default) {
  const RunConfig cfg = load(common);
  const fs::path dir = output_dir(common, cfg);
  const fs::path in = archive_path.empty() ? dir / "archive.jsonl" : fs::path(archive_path);
  if (!fs::exists(in)) throw UsageError("archive not found: " + in.string());
  const std::vector<GaitRecord> archive = read_archive(in);
  std::optional<GaitRecord> def;
  if (with_default) {
    def = analyse_params(cfg.walker, cfg.defaults, cfg.t_max);
    if (!def) {
      def = GaitRecord{};
      def->params = cfg.defaults;
      def->note = "default gait unstable on flat ground";
    } else {
      def = robustness_sweep(cfg.walker, {*def}, cfg.robustness).front();
    }
  }
  const std::vector<GaitRecord> swept = robustness_sweep(cfg.walker, archive, cfg.robustness);
  fs::create_directories(dir);
  const auto rows = robustness_rows(swept, def);
  write_robustness_csv(dir / "robustness.csv", rows);
  write_file(dir / "robustness.svg", robustness_plot_svg(rows));
  write_archive(dir / "robustness.jsonl", swept);
  for (const auto& row : rows) {
    std::cout << row.id << "  R2 " << row.r2 << "  max step-down "
              << (row.max_height_cm ? std::to_string(*row.max_height_cm) + " cm" : "n/a")
              << "  CF " << row.collision_fraction
              << (row.note.empty() ? "" : "  (" + row.note + ")") << "\n";
  }
  return kExitOk;
}

int cmd_animate(const Common& common, const std::string& trace_csv, double fps) {
  const RunConfig cfg = load(common);
  fs::path sidecar = trace_csv;
  sidecar.replace_extension(".json");
  GaitTrace trace;
  try {
    trace = read_trace(trace_csv, sidecar);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const BipedModel model = BipedModel::build(cfg.walker.anthropometry);
  AnimationOptions opts;
  opts.fps = fps;
  const std::size_t n = write_animation(output_dir(common, cfg) / "frames", trace, model, opts);
  std::cout << n << " frames\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neuromuscular planar walker: simulation, gait analysis and optimization"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config, "Run configuration (JSON); built-in if omitted");
  app.add_option("-o,--out", common.out,
                 "Output directory (default: $GAITSIM_OUT, else the config value)");

  auto* roll = app.add_subcommand("rollout", "Simulate one gait and write the report bundle");
  std::string terrain;
  std::optional<double> t_max;
  std::string archive;
  std::optional<std::uint64_t> id;
  roll->add_option("--terrain", terrain, "flat or step:<dh>@<x>");
  roll->add_option("--t-max", t_max, "Simulated time, s");
  auto* from = roll->add_option("--archive", archive, "Archive to take parameters from");
  roll->add_option("--id", id, "Gait id in the archive")->needs(from);

  auto* opt = app.add_subcommand("optimize", "CMA-ES search over the reflex parameters");
  std::string mode;
  std::optional<double> vtgt;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::optional<double> cf_weight;
  bool resume = false;
  opt->add_option("--mode", mode, "min-r2 or max-r2");
  opt->add_option("--vtgt", vtgt, "Target speed for max-r2, m/s");
  opt->add_option("--seed", seed, "Random seed");
  opt->add_option("--budget", budget, "Evaluation budget");
  opt->add_option("--cf-weight", cf_weight, "Collision-fraction weight added to min-r2");
  opt->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");

  auto* rob = app.add_subcommand("robustness", "Step-down sweep over an archive");
  std::string rob_archive;
  bool with_default = false;
  rob->add_option("--archive", rob_archive, "Archive (default: <out>/archive.jsonl)");
  rob->add_flag("--with-default", with_default, "Add the default gait as a reference row");

  auto* ana = app.add_subcommand("analyze", "Analyse a stored trace");
  std::string trace_csv;
  ana->add_option("trace", trace_csv, "Trace CSV (sidecar JSON alongside)")->required();

  auto* ani = app.add_subcommand("animate", "Render stick-figure frames of a stored trace");
  std::string anim_csv;
  double fps = 25.0;
  ani->add_option("trace", anim_csv, "Trace CSV (sidecar JSON alongside)")->required();
  ani->add_option("--fps", fps, "Frame rate")->check(CLI::PositiveNumber);

  auto* dump = app.add_subcommand("config", "Print the effective configuration as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*roll) return cmd_rollout(common, terrain, t_max, archive, id);
    if (*opt) return cmd_optimize(common, mode, vtgt, seed, budget, resume, cf_weight);
    if (*rob) return cmd_robustness(common, rob_archive, with_default);
    if (*ana) return cmd_analyze(common, trace_csv);
    if (*ani) return cmd_animate(common, anim_csv, fps);
    if (*dump) {
      std::cout << config_to_json(load(common)).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}
