#include "nmsgait/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace nmsgait {
namespace {

double wrap(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

double force_angle(const Vec2& f) { return std::atan2(f.x(), f.y()); }

// Below this total squared deviation the force angles are indistinguishable
// from a parallel bundle.
constexpr double kParallelTolerance = 1e-28;

Vec2 lerp(const Vec2& a, const Vec2& b, double w) { return a + w * (b - a); }

}  // namespace

double ip_r2(std::span<const ForceLine> lines, double height) {
  const double n = static_cast<double>(lines.size());
  double mean = 0.0;
  for (const ForceLine& l : lines) mean += force_angle(l.force);
  mean /= n;
  double sst = 0.0;
  double sse = 0.0;
  for (const ForceLine& l : lines) {
    const double measured = force_angle(l.force);
    const double predicted = std::atan2(-l.cop.x(), height - l.cop.y());
    sst += (measured - mean) * (measured - mean);
    const double e = wrap(measured - predicted);
    sse += e * e;
  }
  if (sst <= kParallelTolerance * n) return -std::numeric_limits<double>::infinity();
  return 1.0 - sse / sst;
}

IpResult ip_regression(std::span<const ForceLine> lines, const IpSearch& search) {
  if (lines.size() < kMinIpSamples) {
    throw AnalysisError("ip regression needs at least " + std::to_string(kMinIpSamples) +
                        " samples, got " + std::to_string(lines.size()));
  }
  for (const ForceLine& l : lines) {
    if (!l.force.allFinite() || !l.cop.allFinite() || l.force.norm() == 0.0) {
      throw AnalysisError("ip regression: invalid force line");
    }
  }
  IpResult r;
  r.samples = lines.size();
  if (!std::isfinite(ip_r2(lines, 0.0))) {
    r.degenerate = true;
    r.height = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  const int steps =
      static_cast<int>(std::round((search.max_height - search.min_height) / search.grid_step));
  double best_h = search.min_height;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double h = search.min_height + i * search.grid_step;
    const double v = ip_r2(lines, h);
    if (v > best) {
      best = v;
      best_h = h;
    }
  }
  // Golden-section refinement inside the neighbouring grid cells.
  double a = std::max(search.min_height, best_h - search.grid_step);
  double b = std::min(search.max_height, best_h + search.grid_step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = ip_r2(lines, c);
  double fd = ip_r2(lines, d);
  while (b - a > search.tolerance) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = ip_r2(lines, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = ip_r2(lines, d);
    }
  }
  const double h = 0.5 * (a + b);
  const double fh = ip_r2(lines, h);
  if (fh >= best) {
    r.height = h;
    r.r2 = fh;
  } else {
    r.height = best_h;
    r.r2 = best;
  }
  return r;
}

bool is_ip_gait(double r2) { return r2 > kIpThreshold; }

double collision_angle(const Vec2& force, const Vec2& velocity) {
  const double fn = force.norm();
  const double vn = velocity.norm();
  if (!(fn > 0.0) || !(vn > 0.0)) throw AnalysisError("collision angle: zero-magnitude vector");
  // asin(F.v / |F||v|), written with atan2 to stay accurate near +-pi/2.
  const double cross = force.x() * velocity.y() - force.y() * velocity.x();
  return std::atan2(force.dot(velocity), std::abs(cross));
}

CollisionResult collision_fraction(std::span<const Vec2> forces, std::span<const Vec2> velocities) {
  if (forces.size() != velocities.size()) {
    throw AnalysisError("collision fraction: force and velocity counts differ");
  }
  if (forces.size() < kMinCollisionSamples) {
    throw AnalysisError("collision fraction needs at least " +
                        std::to_string(kMinCollisionSamples) + " samples");
  }
  CollisionResult r;
  double actual = 0.0;
  double potential = 0.0;
  for (std::size_t i = 0; i < forces.size(); ++i) {
    const Vec2& f = forces[i];
    const Vec2& v = velocities[i];
    const double phi = collision_angle(f, v);
    const double theta = std::abs(std::atan2(f.x(), f.y()));
    const double lambda = std::abs(std::atan2(v.y(), v.x()));
    const double w = f.norm() * v.norm();
    r.angle.push_back(phi);
    r.force_angle.push_back(theta);
    r.velocity_angle.push_back(lambda);
    if (std::abs(phi) > theta + lambda + 1e-12) ++r.violations;
    actual += w * std::abs(phi);
    potential += w * (theta + lambda);
  }
  if (!(potential > 0.0)) {
    if (actual == 0.0) throw AnalysisError("collision fraction: zero potential collision");
    r.fraction = 1.0;
    return r;
  }
  r.fraction = std::clamp(actual / potential, 0.0, 1.0);
  return r;
}

double margin_of_stability(double com_x, double com_vx, double com_height, double boundary_x,
                           double gravity) {
  if (!(com_height > 0.0)) throw AnalysisError("margin of stability: CoM height must be positive");
  const double omega = std::sqrt(gravity / com_height);
  return boundary_x - (com_x + com_vx / omega);
}

Steadiness steadiness(std::span<const double> margins) {
  if (margins.size() != kSteadinessWindow) {
    throw AnalysisError("steadiness expects exactly " + std::to_string(kSteadinessWindow) +
                        " values, got " + std::to_string(margins.size()));
  }
  const auto [lo, hi] = std::minmax_element(margins.begin(), margins.end());
  Steadiness s;
  s.spread = *hi - *lo;
  s.steady = s.spread < kSteadinessThreshold;
  return s;
}

std::vector<double> heel_strike_margins(const GaitTrace& trace) {
  std::vector<double> out;
  for (const GaitEvent& e : heel_strikes(trace.events)) {
    const TraceSample& s = trace.samples[e.sample];
    const double ground = trace.terrain.height(s.com.x());
    out.push_back(margin_of_stability(s.com.x(), s.com_velocity.x(), s.com.y() - ground,
                                      s.ball[index(e.side)].x()));
  }
  return out;
}

Steadiness trace_steadiness(const GaitTrace& trace) {
  const std::vector<double> m = heel_strike_margins(trace);
  if (m.size() < kSteadinessWindow) {
    throw InsufficientStrides("steadiness needs " + std::to_string(kSteadinessWindow) +
                              " heel strikes, got " + std::to_string(m.size()));
  }
  return steadiness(std::span<const double>(m).last(kSteadinessWindow));
}

Descriptors gait_descriptors(const GaitTrace& trace) {
  const auto hs = heel_strikes(trace.events);
  if (stride_count(trace.events) < kMinDescriptorStrides || hs.size() < 2 * kMinDescriptorStrides + 1) {
    throw InsufficientStrides("descriptors need " + std::to_string(kMinDescriptorStrides) +
                              " strides");
  }
  const std::size_t first = hs.size() - 1 - 2 * kMinDescriptorStrides;
  const std::size_t begin = hs[first].sample;
  const std::size_t end = hs.back().sample;
  double v = 0.0;
  for (std::size_t k = begin; k < end; ++k) v += trace.samples[k].com_velocity.x();
  Descriptors d;
  d.speed = v / static_cast<double>(end - begin);
  double steps = 0.0;
  for (std::size_t i = first + 1; i < hs.size(); ++i) {
    const Vec2& now = trace.samples[hs[i].sample].heel[index(hs[i].side)];
    const Vec2& prev = trace.samples[hs[i - 1].sample].heel[index(hs[i - 1].side)];
    steps += now.x() - prev.x();
  }
  const double n = static_cast<double>(hs.size() - 1 - first);
  d.step_length = steps / n;
  d.cadence = n / (hs.back().t - hs[first].t);
  return d;
}

std::vector<ForceLine> single_support_lines(const GaitTrace& trace, const StrideWindow& w,
                                            std::size_t count) {
  if (w.single_end <= w.single_begin + 1 || w.single_end > trace.samples.size()) {
    throw AnalysisError("single-support window is empty");
  }
  const int leg = index(w.side);
  const auto line_at = [&](std::size_t k) {
    const TraceSample& s = trace.samples[k];
    return ForceLine{s.grf[leg], s.cop[leg] - s.com};
  };
  std::vector<ForceLine> out;
  out.reserve(count);
  const double last = static_cast<double>(w.single_end - 1 - w.single_begin);
  for (std::size_t i = 0; i < count; ++i) {
    const double pos = count > 1 ? last * static_cast<double>(i) / static_cast<double>(count - 1)
                                 : 0.0;
    const std::size_t k0 = w.single_begin + static_cast<std::size_t>(std::floor(pos));
    const std::size_t k1 = std::min(k0 + 1, w.single_end - 1);
    const double frac = pos - std::floor(pos);
    const ForceLine a = line_at(k0);
    const ForceLine b = line_at(k1);
    out.push_back({lerp(a.force, b.force, frac), lerp(a.cop, b.cop, frac)});
  }
  return out;
}

GaitAnalysis analyze(const GaitTrace& trace) {
  GaitAnalysis a;
  a.stride = steady_stride(trace);
  a.ip_lines = single_support_lines(trace, a.stride);
  a.ip = ip_regression(a.ip_lines);

  std::vector<Vec2> forces;
  std::vector<Vec2> velocities;
  for (std::size_t k = a.stride.begin; k < a.stride.end; ++k) {
    const TraceSample& s = trace.samples[k];
    const Vec2 f = s.total_grf();
    if (f.norm() > 0.0 && s.com_velocity.norm() > 0.0) {
      forces.push_back(f);
      velocities.push_back(s.com_velocity);
    }
  }
  a.collision = collision_fraction(forces, velocities);
  a.margins = heel_strike_margins(trace);
  a.steadiness = trace_steadiness(trace);
  a.descriptors = gait_descriptors(trace);
  return a;
}

}  // namespace nmsgait
