#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "nmsgait/config.hpp"
#include "nmsgait/io.hpp"
#include "synthetic.hpp"

using namespace nmsgait;
using json = nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nmsgait_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const Vec2& a, const Vec2& b) {
  return same_bits(a.x(), b.x()) && same_bits(a.y(), b.y());
}

const GaitTrace& short_rollout() {
  static const GaitTrace tr = rollout(WalkerConfig{}, ControlParams::defaults(), Terrain::flat(), 0.8);
  return tr;
}

std::size_t count_color(const Image& img, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 2 < img.pixels.size(); i += 3) {
    if (img.pixels[i] == r && img.pixels[i + 1] == g && img.pixels[i + 2] == b) ++n;
  }
  return n;
}

}  // namespace

TEST(Config, BuiltinRoundTrip) {
  const json j = config_to_json(RunConfig::builtin());
  const RunConfig back = config_from_json(j);
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(back.defaults.values, ControlParams::defaults().values);
  EXPECT_EQ(back.t_max, 20.0);
}

TEST(Config, ShippedDefaultMatchesBuiltin) {
  const RunConfig c = load_config(std::filesystem::path(NMSGAIT_SOURCE_DIR) / "config/default.json");
  EXPECT_EQ(config_to_json(c), config_to_json(RunConfig::builtin()));
}

TEST(Config, MissingKeysAreListed) {
  json j = config_to_json(RunConfig::builtin());
  j["contact"].erase("stiffness");
  j["simulation"].erase("t_max");
  try {
    config_from_json(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const auto& m = e.missing();
    EXPECT_NE(std::find(m.begin(), m.end(), "contact.stiffness"), m.end());
    EXPECT_NE(std::find(m.begin(), m.end(), "simulation.t_max"), m.end());
    EXPECT_NE(std::string(e.what()).find("contact.stiffness"), std::string::npos);
  }
  EXPECT_TRUE(missing_keys(config_to_json(RunConfig::builtin()), config_to_json(RunConfig::builtin())).empty());
}

TEST(Config, InvalidValuesRejected) {
  json j = config_to_json(RunConfig::builtin());
  j["simulation"]["t_max"] = -1.0;
  EXPECT_THROW(config_from_json(j), ConfigError);
  j = config_to_json(RunConfig::builtin());
  j["optimizer"]["mode"] = "sideways";
  EXPECT_THROW(config_from_json(j), ConfigError);
  const auto dir = scratch("config");
  {
    std::ofstream out(dir / "broken.json");
    out << "{ \"contact\": ";
  }
  EXPECT_THROW(load_config(dir / "broken.json"), std::exception);
  EXPECT_THROW(load_config(dir / "absent.json"), std::exception);
  std::filesystem::remove_all(dir);
}

TEST(Config, TerrainSpecs) {
  EXPECT_EQ(parse_terrain("flat").height(3.0), 0.0);
  EXPECT_EQ(parse_terrain("").height(3.0), 0.0);
  const Terrain t = parse_terrain("step:-0.03@5");
  EXPECT_EQ(t.height(4.999), 0.0);
  EXPECT_EQ(t.height(5.0), -0.03);
  EXPECT_EQ(t.height(50.0), -0.03);
  for (const char* bad : {"stairs", "step:-0.03", "step:x@5", "step:-0.03@", "step:-0.03@5m",
                          "step:nan@5"}) {
    EXPECT_THROW(parse_terrain(bad), ConfigError) << bad;
  }
}

TEST(TraceCsv, RoundTripIsBitIdentical) {
  const GaitTrace& tr = short_rollout();
  ASSERT_GT(tr.samples.size(), 700u);
  const auto dir = scratch("trace");
  write_trace_csv(dir / "trace.csv", tr);
  {
    std::ofstream out(dir / "trace.json");
    out << trace_sidecar(tr).dump(1);
  }
  const GaitTrace back = read_trace(dir / "trace.csv", dir / "trace.json");
  ASSERT_EQ(back.samples.size(), tr.samples.size());
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    const TraceSample& a = tr.samples[k];
    const TraceSample& b = back.samples[k];
    ASSERT_TRUE(same_bits(a.t, b.t));
    for (int i = 0; i < kNumDof; ++i) {
      ASSERT_TRUE(same_bits(a.q[i], b.q[i]));
      ASSERT_TRUE(same_bits(a.qd[i], b.qd[i]));
    }
    ASSERT_TRUE(same_bits(a.com, b.com));
    ASSERT_TRUE(same_bits(a.com_velocity, b.com_velocity));
    for (int leg = 0; leg < 2; ++leg) {
      ASSERT_TRUE(same_bits(a.grf[leg], b.grf[leg]));
      ASSERT_EQ(a.cop[leg].allFinite(), b.cop[leg].allFinite());
      if (a.cop[leg].allFinite()) ASSERT_TRUE(same_bits(a.cop[leg], b.cop[leg]));
      ASSERT_TRUE(same_bits(a.heel[leg], b.heel[leg]));
      ASSERT_TRUE(same_bits(a.ball[leg], b.ball[leg]));
    }
    for (int m = 0; m < kNumMuscles; ++m) {
      ASSERT_TRUE(same_bits(a.stimulation[m], b.stimulation[m]));
      ASSERT_TRUE(same_bits(a.activation[m], b.activation[m]));
      ASSERT_TRUE(same_bits(a.force[m], b.force[m]));
    }
  }
  ASSERT_EQ(back.events.size(), tr.events.size());
  for (std::size_t i = 0; i < tr.events.size(); ++i) {
    EXPECT_EQ(back.events[i].sample, tr.events[i].sample);
    EXPECT_EQ(back.events[i].side, tr.events[i].side);
    EXPECT_EQ(back.events[i].type, tr.events[i].type);
    EXPECT_EQ(back.events[i].t, tr.events[i].t);
  }
  EXPECT_EQ(back.termination, tr.termination);
  EXPECT_EQ(back.end_time, tr.end_time);
  EXPECT_EQ(back.sample_interval, tr.sample_interval);

  // Writing the reread trace reproduces the file byte for byte.
  write_trace_csv(dir / "again.csv", back);
  EXPECT_EQ(slurp(dir / "trace.csv"), slurp(dir / "again.csv"));
  std::filesystem::remove_all(dir);
}

TEST(TraceCsv, HeaderAndValidation) {
  const auto cols = trace_columns();
  ASSERT_FALSE(cols.empty());
  EXPECT_EQ(cols.front(), "t");
  EXPECT_NE(std::find(cols.begin(), cols.end(), "grf_y_l"), cols.end());
  EXPECT_NE(std::find(cols.begin(), cols.end(), "force_sol_r"), cols.end());
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");

  const auto dir = scratch("trace_bad");
  const GaitTrace& tr = short_rollout();
  write_trace_csv(dir / "trace.csv", tr);
  json side = trace_sidecar(tr);
  side["termination"] = "exploded";
  {
    std::ofstream out(dir / "trace.json");
    out << side.dump();
  }
  EXPECT_THROW(read_trace(dir / "trace.csv", dir / "trace.json"), std::exception);
  {
    std::ofstream out(dir / "trace.json");
    out << trace_sidecar(tr).dump();
    std::ofstream csv(dir / "trace.csv");
    csv << "t,x\n0,0\n";
  }
  EXPECT_THROW(read_trace(dir / "trace.csv", dir / "trace.json"), std::exception);
  std::filesystem::remove_all(dir);
}

TEST(AnalysisExport, JsonAndPlots) {
  const GaitTrace tr = synthetic::gait(12001);
  const GaitAnalysis a = analyze(tr);
  const json j = analysis_to_json(a);
  for (const char* key : {"ip", "collision", "margin_of_stability", "steadiness", "descriptors",
                          "stride"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["ip"]["r2"].get<double>(), a.ip.r2);
  EXPECT_EQ(j["ip"]["is_ip_gait"].get<bool>(), true);
  const std::string ip_svg = ip_plot_svg(a.ip_lines, a.ip);
  EXPECT_EQ(ip_svg.rfind("<svg", 0), 0u);
  EXPECT_NE(ip_svg.find("</svg>"), std::string::npos);
  const std::string stance_svg = stance_plot_svg(tr, a.stride);
  EXPECT_NE(stance_svg.find("</svg>"), std::string::npos);

  const auto dir = scratch("analysis");
  write_ip_lines_csv(dir / "ip.csv", a.ip_lines);
  write_stance_csv(dir / "stance.csv", tr, a.stride);
  const std::string ip_csv = slurp(dir / "ip.csv");
  EXPECT_EQ(ip_csv.substr(0, ip_csv.find('\n')), "grf_x,grf_y,cop_x,cop_y");
  EXPECT_EQ(std::count(ip_csv.begin(), ip_csv.end(), '\n'), 1 + long(a.ip_lines.size()));
  const std::string st = slurp(dir / "stance.csv");
  EXPECT_EQ(st.substr(0, st.find('\n')), "t,cop_x,com_x,com_y,grf_x,grf_y");
  std::filesystem::remove_all(dir);

  IpResult degenerate;
  degenerate.degenerate = true;
  EXPECT_EQ(analysis_to_json(GaitAnalysis{.ip = degenerate})["ip"]["r2"], "-inf");
}

TEST(Robustness, TableRowsAndCsv) {
  const auto dir = scratch("robust");
  write_robustness_csv(dir / "empty.csv", robustness_rows({}, std::nullopt));
  EXPECT_EQ(slurp(dir / "empty.csv"), "gait_id,r2,max_h_cm,cf,is_default,note\n");

  GaitRecord def;
  def.r2 = 0.77;
  def.max_step_down_cm = 1;
  def.collision_fraction = 0.5;
  GaitRecord other;
  other.id = 7;
  other.r2 = -3.5;
  other.collision_fraction = 0.8;
  other.note = "unstable, on flat";
  const auto rows = robustness_rows({other}, def);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].id, "default");
  EXPECT_TRUE(rows[0].is_default);
  EXPECT_EQ(rows[1].id, "7");
  EXPECT_FALSE(rows[1].max_height_cm.has_value());
  write_robustness_csv(dir / "rows.csv", rows);
  EXPECT_EQ(slurp(dir / "rows.csv"),
            "gait_id,r2,max_h_cm,cf,is_default,note\n"
            "default,0.77000000000000002,1,0.5,1,\n"
            "7,-3.5,,0.80000000000000004,0,unstable; on flat\n");
  const std::string svg = robustness_plot_svg(rows);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(robustness_plot_svg({}).find("</svg>"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Animation, FrameCount) {
  GaitTrace tr;
  EXPECT_EQ(frame_count(tr, 25.0), 0u);
  tr.samples.resize(1);
  EXPECT_EQ(frame_count(tr, 25.0), 0u);
  tr.samples.resize(20001);
  for (std::size_t k = 0; k < tr.samples.size(); ++k) tr.samples[k].t = 1e-3 * double(k);
  EXPECT_EQ(frame_count(tr, 25.0), 500u);
  EXPECT_EQ(frame_count(tr, 30.0), 600u);
}

TEST(Animation, RenderIsDeterministicAndMarksLoadedFeet) {
  const BipedModel model = BipedModel::build(Anthropometry::geyer_herr());
  const GaitTrace& tr = short_rollout();
  const Image a = render_frame(tr, model, 0.3);
  const Image b = render_frame(tr, model, 0.3);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_EQ(a.ppm().rfind("P6\n480 360\n255\n", 0), 0u);
  EXPECT_EQ(a.ppm().size(), std::string("P6\n480 360\n255\n").size() + 480u * 360u * 3u);

  // One loaded foot, one in the air: a single force arrow.
  GaitTrace one;
  one.samples.push_back(tr.samples[300]);
  TraceSample& s = one.samples[0];
  s.grf[0] = Vec2(50.0, 800.0);
  s.cop[0] = s.heel[0];
  s.grf[1] = Vec2::Zero();
  s.cop[1] = Vec2::Constant(std::nan(""));
  const std::size_t arrow_one = count_color(render_frame(one, model, 0.0), 220, 30, 30);
  EXPECT_GT(arrow_one, 0u);
  s.grf[0] = Vec2::Zero();
  s.cop[0] = Vec2::Constant(std::nan(""));
  EXPECT_EQ(count_color(render_frame(one, model, 0.0), 220, 30, 30), 0u);
}

TEST(Animation, WritesNumberedFrames) {
  const BipedModel model = BipedModel::build(Anthropometry::geyer_herr());
  const auto dir = scratch("frames");
  AnimationOptions o;
  o.fps = 10.0;
  const std::size_t n = write_animation(dir, short_rollout(), model, o);
  EXPECT_EQ(n, frame_count(short_rollout(), 10.0));
  EXPECT_TRUE(std::filesystem::exists(dir / "frame_00000.ppm"));
  EXPECT_TRUE(std::filesystem::exists(dir / ("frame_0000" + std::to_string(n - 1) + ".ppm")));
  EXPECT_FALSE(std::filesystem::exists(dir / ("frame_0000" + std::to_string(n) + ".ppm")));
  std::filesystem::remove_all(dir);
}
