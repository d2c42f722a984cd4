#pragma once

// Exports: trace CSV with a JSON sidecar, analysis reports, SVG figures and
// PPM animation frames.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nmsgait/analysis.hpp"
#include "nmsgait/optimizer.hpp"
#include "nmsgait/simulation.hpp"

namespace nmsgait {

/// Shortest-round-trip is not guaranteed by every libc; 17 significant
/// digits always is.
std::string format_double(double v);

/// Column names of the trace CSV, in order.
std::vector<std::string> trace_columns();

void write_trace_csv(const std::filesystem::path& path, const GaitTrace& trace);
nlohmann::json trace_sidecar(const GaitTrace& trace);

/// Rebuilds a trace from its CSV and sidecar.
GaitTrace read_trace(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

nlohmann::json analysis_to_json(const GaitAnalysis& a);

/// Force lines of the IP window in the CoM frame.
void write_ip_lines_csv(const std::filesystem::path& path, const std::vector<ForceLine>& lines);

/// Per-sample CoP, CoM and GRF over a stride window.
void write_stance_csv(const std::filesystem::path& path, const GaitTrace& trace,
                      const StrideWindow& w);

/// Force lines drawn in the CoM frame with the fitted point.
std::string ip_plot_svg(const std::vector<ForceLine>& lines, const IpResult& ip);

/// CoP, CoM and GRF time series of the stride window.
std::string stance_plot_svg(const GaitTrace& trace, const StrideWindow& w);

struct RobustnessRow {
  std::string id;
  double r2 = 0.0;
  std::optional<int> max_height_cm;
  double collision_fraction = 0.0;
  bool is_default = false;
  std::string note;
};

std::vector<RobustnessRow> robustness_rows(const std::vector<GaitRecord>& archive,
                                           const std::optional<GaitRecord>& default_gait);
void write_robustness_csv(const std::filesystem::path& path,
                          const std::vector<RobustnessRow>& rows);
/// Two panels: step-down height and collision fraction against R^2.
std::string robustness_plot_svg(const std::vector<RobustnessRow>& rows);

/// RGB image, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image(int w, int h);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  void line(double x0, double y0, double x1, double y1, std::uint8_t r, std::uint8_t g,
            std::uint8_t b, int thickness = 1);
  std::string ppm() const;
};

struct AnimationOptions {
  double fps = 25.0;
  int width = 480;
  int height = 360;
  double pixels_per_metre = 180.0;
  double newtons_per_metre = 2000.0;  // GRF arrow scale
};

/// Number of frames for a trace: floor(duration * fps), 0 for an empty trace.
std::size_t frame_count(const GaitTrace& trace, double fps);

/// Stick figure at the sample nearest to t, camera centred on the CoM.
Image render_frame(const GaitTrace& trace, const BipedModel& model, double t,
                   const AnimationOptions& options = {});

/// Writes frame_00000.ppm, ... into `dir`; returns the number written.
std::size_t write_animation(const std::filesystem::path& dir, const GaitTrace& trace,
                            const BipedModel& model, const AnimationOptions& options = {});

}  // namespace nmsgait
