#include "nmsgait/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <fstream>
#include <sstream>

#include "nmsgait/cmaes.hpp"

namespace nmsgait {
namespace {

using json = nlohmann::json;

[[gnu::format(printf, 1, 2)]] std::string strf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  const int n = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string out(static_cast<std::size_t>(n), '\0');
  std::vsnprintf(out.data(), out.size() + 1, fmt, args);
  va_end(args);
  return out;
}

constexpr std::array<std::string_view, kNumDof> kDofNames = {
    "x", "y", "lean", "hip_l", "knee_l", "ankle_l", "hip_r", "knee_r", "ankle_r"};
constexpr std::array<std::string_view, 2> kSideSuffix = {"_l", "_r"};

std::string muscle_column(std::string_view prefix, int slot) {
  const Muscle m = kMuscles[slot % kMusclesPerLeg];
  std::string name(muscle_name(m));
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::string(prefix) + "_" + name + std::string(kSideSuffix[slot / kMusclesPerLeg]);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::string_view event_name(EventType t) {
  return t == EventType::kHeelStrike ? "heel_strike" : "toe_off";
}

// Minimal SVG canvas with a data-to-pixel mapping per panel.
struct Panel {
  double x0, y0, w, h;  // pixel box
  double xmin, xmax, ymin, ymax;
  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

std::string svg_header(int w, int h) {
  return strf(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
      w, h, w, h);
}

std::string axes(const Panel& p, std::string_view xlabel, std::string_view ylabel,
                 std::string_view title) {
  std::string s = strf(
      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
      "stroke=\"black\"/>\n",
      p.x0, p.y0, p.w, p.h);
  for (int i = 0; i <= 4; ++i) {
    const double xv = p.xmin + (p.xmax - p.xmin) * i / 4.0;
    const double yv = p.ymin + (p.ymax - p.ymin) * i / 4.0;
    s += strf("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n",
                     p.px(xv), p.y0 + p.h + 14, xv);
    s += strf("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n",
                     p.x0 - 4, p.py(yv) + 4, yv);
  }
  s += strf("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
                   p.x0 + p.w / 2, p.y0 + p.h + 30, std::string(xlabel).c_str());
  s += strf(
      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 %.1f %.1f)\">%s</text>\n",
      p.x0 - 40, p.y0 + p.h / 2, p.x0 - 40, p.y0 + p.h / 2, std::string(ylabel).c_str());
  s += strf("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
                   p.x0 + p.w / 2, p.y0 - 8, std::string(title).c_str());
  return s;
}

std::string polyline(const Panel& p, const std::vector<double>& xs, const std::vector<double>& ys,
                     std::string_view colour) {
  std::string pts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    pts += strf("%.2f,%.2f ", p.px(xs[i]), p.py(ys[i]));
  }
  return strf("<polyline fill=\"none\" stroke=\"%s\" points=\"%s\"/>\n", std::string(colour).c_str(), pts.c_str());
}

std::pair<double, double> range_of(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return strf("%.17g", v);
}

std::vector<std::string> trace_columns() {
  std::vector<std::string> c = {"t"};
  for (auto n : kDofNames) c.push_back("q_" + std::string(n));
  for (auto n : kDofNames) c.push_back("qd_" + std::string(n));
  for (auto n : {"com_x", "com_y", "com_vx", "com_vy"}) c.emplace_back(n);
  for (int s = 0; s < 2; ++s) {
    const std::string suf(kSideSuffix[s]);
    for (auto n : {"grf_x", "grf_y", "cop_x", "cop_y", "heel_x", "heel_y", "ball_x", "ball_y"}) {
      c.push_back(n + suf);
    }
  }
  for (int i = 0; i < kNumMuscles; ++i) c.push_back(muscle_column("stim", i));
  for (int i = 0; i < kNumMuscles; ++i) c.push_back(muscle_column("act", i));
  for (int i = 0; i < kNumMuscles; ++i) c.push_back(muscle_column("force", i));
  return c;
}

void write_trace_csv(const std::filesystem::path& path, const GaitTrace& trace) {
  std::string out;
  const auto cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const TraceSample& s : trace.samples) {
    std::vector<double> row = {s.t};
    for (int i = 0; i < kNumDof; ++i) row.push_back(s.q[i]);
    for (int i = 0; i < kNumDof; ++i) row.push_back(s.qd[i]);
    row.insert(row.end(), {s.com.x(), s.com.y(), s.com_velocity.x(), s.com_velocity.y()});
    for (int k = 0; k < 2; ++k) {
      row.insert(row.end(), {s.grf[k].x(), s.grf[k].y(), s.cop[k].x(), s.cop[k].y(),
                             s.heel[k].x(), s.heel[k].y(), s.ball[k].x(), s.ball[k].y()});
    }
    row.insert(row.end(), s.stimulation.begin(), s.stimulation.end());
    row.insert(row.end(), s.activation.begin(), s.activation.end());
    row.insert(row.end(), s.force.begin(), s.force.end());
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
    out += "\n";
  }
  write_text(path, out);
}

json trace_sidecar(const GaitTrace& trace) {
  json j;
  j["termination"] = std::string(termination_name(trace.termination));
  j["end_time"] = json_number(trace.end_time);
  j["message"] = trace.message;
  j["sample_interval"] = json_number(trace.sample_interval);
  j["samples"] = trace.samples.size();
  j["columns"] = trace_columns();
  json terrain = json::array();
  for (const auto& b : trace.terrain.breakpoints()) terrain.push_back({b.x_start, b.height});
  j["terrain"] = terrain;
  json events = json::array();
  for (const GaitEvent& e : trace.events) {
    events.push_back({{"t", json_number(e.t)},
                      {"sample", e.sample},
                      {"side", e.side == Side::kLeft ? "left" : "right"},
                      {"type", std::string(event_name(e.type))}});
  }
  j["events"] = events;
  j["integrator"] = {{"accepted", trace.stats.accepted},
                     {"rejected", trace.stats.rejected},
                     {"rhs_evaluations", trace.stats.rhs_evaluations},
                     {"jacobians", trace.stats.jacobians}};
  return j;
}

GaitTrace read_trace(const std::filesystem::path& csv, const std::filesystem::path& sidecar) {
  std::ifstream js(sidecar);
  if (!js) throw std::runtime_error("cannot open " + sidecar.string());
  const json meta = json::parse(js);
  GaitTrace trace;
  const std::string term = meta.at("termination").get<std::string>();
  if (term == "completed") {
    trace.termination = Termination::kCompleted;
  } else if (term == "fell") {
    trace.termination = Termination::kFell;
  } else if (term == "integration_failure") {
    trace.termination = Termination::kIntegrationFailure;
  } else {
    throw std::runtime_error("sidecar: unknown termination '" + term + "'");
  }
  const auto num = [](const json& v) {
    return v.is_number() ? v.get<double>() : parse_double(v.get<std::string>());
  };
  trace.end_time = num(meta.at("end_time"));
  trace.message = meta.at("message").get<std::string>();
  trace.sample_interval = num(meta.at("sample_interval"));
  std::vector<Terrain::Breakpoint> bps;
  for (const json& b : meta.at("terrain")) bps.push_back({b[0].get<double>(), b[1].get<double>()});
  trace.terrain = Terrain(std::move(bps));

  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  const auto cols = trace_columns();
  std::string expected;
  for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
  if (line != expected) throw std::runtime_error(csv.string() + ": unexpected header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(parse_double(cell));
    if (v.size() != cols.size()) {
      throw std::runtime_error(csv.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(cols.size()) + " fields");
    }
    TraceSample s;
    std::size_t k = 0;
    s.t = v[k++];
    for (int i = 0; i < kNumDof; ++i) s.q[i] = v[k++];
    for (int i = 0; i < kNumDof; ++i) s.qd[i] = v[k++];
    s.com = {v[k], v[k + 1]};
    s.com_velocity = {v[k + 2], v[k + 3]};
    k += 4;
    for (int f = 0; f < 2; ++f) {
      s.grf[f] = {v[k], v[k + 1]};
      s.cop[f] = {v[k + 2], v[k + 3]};
      s.heel[f] = {v[k + 4], v[k + 5]};
      s.ball[f] = {v[k + 6], v[k + 7]};
      k += 8;
    }
    for (int i = 0; i < kNumMuscles; ++i) s.stimulation[i] = v[k++];
    for (int i = 0; i < kNumMuscles; ++i) s.activation[i] = v[k++];
    for (int i = 0; i < kNumMuscles; ++i) s.force[i] = v[k++];
    trace.samples.push_back(s);
  }
  for (const json& e : meta.at("events")) {
    GaitEvent ev;
    ev.t = num(e.at("t"));
    ev.sample = e.at("sample").get<std::size_t>();
    ev.side = e.at("side").get<std::string>() == "left" ? Side::kLeft : Side::kRight;
    ev.type = e.at("type").get<std::string>() == "heel_strike" ? EventType::kHeelStrike
                                                              : EventType::kToeOff;
    if (ev.sample >= trace.samples.size()) throw std::runtime_error("sidecar: event out of range");
    trace.events.push_back(ev);
  }
  return trace;
}

json analysis_to_json(const GaitAnalysis& a) {
  json j;
  j["ip"] = {{"height", json_number(a.ip.height)},
             {"r2", json_number(a.ip.r2)},
             {"samples", a.ip.samples},
             {"degenerate", a.ip.degenerate},
             {"is_ip_gait", is_ip_gait(a.ip.r2)}};
  j["collision"] = {{"fraction", json_number(a.collision.fraction)},
                    {"samples", a.collision.angle.size()},
                    {"violations", a.collision.violations}};
  json margins = json::array();
  for (double m : a.margins) margins.push_back(json_number(m));
  j["margin_of_stability"] = margins;
  j["steadiness"] = {{"spread", json_number(a.steadiness.spread)},
                     {"steady", a.steadiness.steady}};
  j["descriptors"] = {{"speed", json_number(a.descriptors.speed)},
                      {"step_length", json_number(a.descriptors.step_length)},
                      {"cadence", json_number(a.descriptors.cadence)}};
  j["stride"] = {{"side", a.stride.side == Side::kLeft ? "left" : "right"},
                 {"begin", a.stride.begin},
                 {"end", a.stride.end},
                 {"single_begin", a.stride.single_begin},
                 {"single_end", a.stride.single_end}};
  return j;
}

void write_ip_lines_csv(const std::filesystem::path& path, const std::vector<ForceLine>& lines) {
  std::string out = "grf_x,grf_y,cop_x,cop_y\n";
  for (const ForceLine& l : lines) {
    out += format_double(l.force.x()) + "," + format_double(l.force.y()) + "," +
           format_double(l.cop.x()) + "," + format_double(l.cop.y()) + "\n";
  }
  write_text(path, out);
}

void write_stance_csv(const std::filesystem::path& path, const GaitTrace& trace,
                      const StrideWindow& w) {
  std::string out = "t,cop_x,com_x,com_y,grf_x,grf_y\n";
  const int leg = index(w.side);
  for (std::size_t k = w.begin; k < w.end && k < trace.samples.size(); ++k) {
    const TraceSample& s = trace.samples[k];
    const Vec2 f = s.total_grf();
    out += format_double(s.t) + "," + format_double(s.cop[leg].x()) + "," +
           format_double(s.com.x()) + "," + format_double(s.com.y()) + "," +
           format_double(f.x()) + "," + format_double(f.y()) + "\n";
  }
  write_text(path, out);
}

std::string ip_plot_svg(const std::vector<ForceLine>& lines, const IpResult& ip) {
  const int W = 420;
  const int H = 520;
  Panel p{60, 30, 330, 440, -0.6, 0.6, -1.2, 0.8};
  std::string s = svg_header(W, H);
  s += axes(p, "horizontal (m)", "vertical (m)", "GRF lines in the CoM frame");
  const double scale = 1.0 / 1500.0;  // m per N
  for (std::size_t i = 0; i < lines.size(); i += 2) {
    const ForceLine& l = lines[i];
    const Vec2 tip = l.cop + scale * l.force;
    s += strf(
        "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#4682b4\" "
        "stroke-width=\"0.8\"/>\n",
        p.px(l.cop.x()), p.py(l.cop.y()), p.px(tip.x()), p.py(tip.y()));
  }
  s += strf("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"black\"/>\n", p.px(0.0),
                   p.py(0.0));
  if (!ip.degenerate && std::isfinite(ip.height)) {
    s += strf("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"red\"/>\n", p.px(0.0),
                     p.py(std::clamp(ip.height, p.ymin, p.ymax)));
  }
  s += strf("<text x=\"70\" y=\"50\">R2 = %.3f, h = %.3f m</text>\n", ip.r2,
                   ip.height);
  s += "</svg>\n";
  return s;
}

std::string stance_plot_svg(const GaitTrace& trace, const StrideWindow& w) {
  std::vector<double> t, cop, com, fx, fy;
  const int leg = index(w.side);
  for (std::size_t k = w.begin; k < w.end && k < trace.samples.size(); ++k) {
    const TraceSample& s = trace.samples[k];
    t.push_back(s.t);
    cop.push_back(s.cop[leg].x());
    com.push_back(s.com.x());
    fx.push_back(s.total_grf().x());
    fy.push_back(s.total_grf().y());
  }
  const auto [t0, t1] = range_of(t);
  std::vector<double> both = cop;
  both.insert(both.end(), com.begin(), com.end());
  const auto [x0, x1] = range_of(both);
  std::vector<double> forces = fx;
  forces.insert(forces.end(), fy.begin(), fy.end());
  const auto [f0, f1] = range_of(forces);
  std::string s = svg_header(520, 560);
  Panel a{70, 30, 420, 200, t0, t1, x0, x1};
  Panel b{70, 300, 420, 200, t0, t1, f0, f1};
  s += axes(a, "time (s)", "x (m)", "CoP (blue) and CoM (black)");
  s += polyline(a, t, cop, "#4682b4") + polyline(a, t, com, "black");
  s += axes(b, "time (s)", "GRF (N)", "horizontal (red) and vertical (green) GRF");
  s += polyline(b, t, fx, "#c0392b") + polyline(b, t, fy, "#27ae60");
  s += "</svg>\n";
  return s;
}

std::vector<RobustnessRow> robustness_rows(const std::vector<GaitRecord>& archive,
                                           const std::optional<GaitRecord>& default_gait) {
  std::vector<RobustnessRow> rows;
  if (default_gait) {
    rows.push_back({"default", default_gait->r2, default_gait->max_step_down_cm,
                    default_gait->collision_fraction, true, default_gait->note});
  }
  for (const GaitRecord& r : archive) {
    rows.push_back({std::to_string(r.id), r.r2, r.max_step_down_cm, r.collision_fraction, false,
                    r.note});
  }
  return rows;
}

void write_robustness_csv(const std::filesystem::path& path,
                          const std::vector<RobustnessRow>& rows) {
  std::string out = "gait_id,r2,max_h_cm,cf,is_default,note\n";
  for (const RobustnessRow& r : rows) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    out += r.id + "," + format_double(r.r2) + "," +
           (r.max_height_cm ? std::to_string(*r.max_height_cm) : std::string("")) + "," +
           format_double(r.collision_fraction) + "," + (r.is_default ? "1" : "0") + "," + note +
           "\n";
  }
  write_text(path, out);
}

std::string robustness_plot_svg(const std::vector<RobustnessRow>& rows) {
  std::vector<double> r2;
  for (const auto& r : rows) r2.push_back(std::isfinite(r.r2) ? r.r2 : -1e3);
  auto [rmin, rmax] = range_of(r2);
  rmax = std::max(rmax, 1.0);
  rmin = std::min(rmin, 0.0);
  std::string s = svg_header(900, 420);
  Panel a{70, 40, 350, 300, rmin, rmax, 0.0, 10.0};
  Panel b{510, 40, 350, 300, rmin, rmax, 0.0, 1.0};
  for (const Panel* p : {&a, &b}) {
    // Shade the IP region (R2 above the threshold) as in the reference figure.
    const double xt = std::clamp(kIpThreshold, p->xmin, p->xmax);
    s += strf(
        "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"#dff0d8\"/>\n",
        p->px(xt), p->y0, p->px(p->xmax) - p->px(xt), p->h);
    s += strf(
        "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"#d9e8f5\"/>\n",
        p->x0, p->y0, p->px(xt) - p->x0, p->h);
  }
  s += axes(a, "R2", "max step-down (cm)", "Step-down robustness");
  s += axes(b, "R2", "collision fraction", "Collision fraction");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RobustnessRow& r = rows[i];
    const std::string_view colour =
        r.is_default ? "black" : (is_ip_gait(r.r2) ? "#2e8b57" : "#1f5fa0");
    const double rad = r.is_default ? 5 : 3;
    if (r.max_height_cm) {
      s += strf("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%g\" fill=\"%s\"/>\n",
                       a.px(r2[i]), a.py(std::min(10.0, double(*r.max_height_cm))), rad, std::string(colour).c_str());
    }
    if (std::isfinite(r.collision_fraction)) {
      s += strf("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%g\" fill=\"%s\"/>\n",
                       b.px(r2[i]), b.py(r.collision_fraction), rad, std::string(colour).c_str());
    }
  }
  s += "</svg>\n";
  return s;
}

Image::Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 255) {}

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  pixels[i] = r;
  pixels[i + 1] = g;
  pixels[i + 2] = b;
}

void Image::line(double x0, double y0, double x1, double y1, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b, int thickness) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
  const int half = thickness / 2;
  for (int i = 0; i <= steps; ++i) {
    const double u = static_cast<double>(i) / steps;
    const int x = static_cast<int>(std::lround(x0 + u * (x1 - x0)));
    const int y = static_cast<int>(std::lround(y0 + u * (y1 - y0)));
    for (int dx = -half; dx <= half; ++dx) {
      for (int dy = -half; dy <= half; ++dy) set(x + dx, y + dy, r, g, b);
    }
  }
}

std::string Image::ppm() const {
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

std::size_t frame_count(const GaitTrace& trace, double fps) {
  if (trace.samples.size() < 2) return 0;
  const double duration = trace.samples.back().t - trace.samples.front().t;
  return static_cast<std::size_t>(std::floor(duration * fps + 1e-9));
}

Image render_frame(const GaitTrace& trace, const BipedModel& model, double t,
                   const AnimationOptions& o) {
  Image img(o.width, o.height);
  if (trace.samples.empty()) return img;
  const double t0 = trace.samples.front().t;
  const double dt = trace.sample_interval > 0 ? trace.sample_interval : 1e-3;
  const std::size_t k = std::min(trace.samples.size() - 1,
                                 static_cast<std::size_t>(std::max(0.0, std::round((t - t0) / dt))));
  const TraceSample& s = trace.samples[k];
  const double cx = s.com.x();
  const auto X = [&](double x) { return o.width / 2.0 + (x - cx) * o.pixels_per_metre; };
  const auto Y = [&](double y) { return o.height * 0.85 - y * o.pixels_per_metre; };

  // Ground profile.
  for (int px = 0; px < o.width; ++px) {
    const double x = cx + (px - o.width / 2.0) / o.pixels_per_metre;
    const int py = static_cast<int>(std::lround(Y(trace.terrain.height(x))));
    for (int y = py; y < o.height; ++y) img.set(px, y, 200, 200, 200);
  }
  const Vec2 hip(s.q[dof::kX], s.q[dof::kY]);
  const double trunk_len = model.anthropometry().trunk.length;
  const Vec2 head = hip + trunk_len * Vec2(std::sin(s.q[dof::kLean]), std::cos(s.q[dof::kLean]));
  img.line(X(hip.x()), Y(hip.y()), X(head.x()), Y(head.y()), 0, 0, 0, 3);
  for (Side side : kSides) {
    const int i = index(side);
    const std::uint8_t shade = side == Side::kLeft ? 40 : 140;
    const Vec2 knee = model.position(model.knee(side), s.q);
    const Vec2 ankle = model.position(model.ankle(side), s.q);
    img.line(X(hip.x()), Y(hip.y()), X(knee.x()), Y(knee.y()), shade, shade, shade, 3);
    img.line(X(knee.x()), Y(knee.y()), X(ankle.x()), Y(ankle.y()), shade, shade, shade, 3);
    img.line(X(s.heel[i].x()), Y(s.heel[i].y()), X(s.ball[i].x()), Y(s.ball[i].y()), shade,
             shade, shade, 3);
    if (s.grf[i].y() > 0.0 && s.cop[i].allFinite()) {
      const Vec2 tip = s.cop[i] + s.grf[i] / o.newtons_per_metre;
      img.line(X(s.cop[i].x()), Y(s.cop[i].y()), X(tip.x()), Y(tip.y()), 220, 30, 30, 1);
    }
  }
  const int r = 4;
  for (int dx = -r; dx <= r; ++dx) {
    for (int dy = -r; dy <= r; ++dy) {
      if (dx * dx + dy * dy <= r * r) {
        img.set(static_cast<int>(X(s.com.x())) + dx, static_cast<int>(Y(s.com.y())) + dy, 30, 90,
                200);
      }
    }
  }
  return img;
}

std::size_t write_animation(const std::filesystem::path& dir, const GaitTrace& trace,
                            const BipedModel& model, const AnimationOptions& options) {
  std::filesystem::create_directories(dir);
  const std::size_t n = frame_count(trace, options.fps);
  const double t0 = trace.samples.empty() ? 0.0 : trace.samples.front().t;
  for (std::size_t f = 0; f < n; ++f) {
    const Image img = render_frame(trace, model, t0 + static_cast<double>(f) / options.fps, options);
    write_text(dir / strf("frame_%05zu.ppm", f), img.ppm());
  }
  return n;
}

}  // namespace nmsgait
