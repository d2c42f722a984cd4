#include "nmsgait/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace nmsgait {

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::kCompleted: return "completed";
    case Termination::kFell: return "fell";
    case Termination::kIntegrationFailure: return "integration_failure";
  }
  return "unknown";
}

GaitTrace rollout(const WalkerConfig& config, const ControlParams& params, const Terrain& terrain,
                  double t_max) {
  GaitTrace trace;
  trace.terrain = terrain;
  trace.sample_interval = config.integrator.report_interval;
  Walker walker(config, params, terrain);
  const Eigen::VectorXd y0 = walker.initial_state();
  const BipedModel& model = walker.model();

  const auto record = [&](double t, const Eigen::VectorXd& y) {
    const WalkerOutputs o = walker.outputs(t, y);
    TraceSample s;
    s.t = t;
    s.q = o.state.q;
    s.qd = o.state.qd;
    s.com = o.com.position;
    s.com_velocity = o.com.velocity;
    s.grf = o.grf;
    s.cop = o.cop;
    for (Side side : kSides) {
      const int i = index(side);
      s.heel[i] = model.position(model.contact_point(side, ContactPoint::kHeel), o.state.q);
      s.ball[i] = model.position(model.contact_point(side, ContactPoint::kBall), o.state.q);
    }
    s.stimulation = o.stimulation;
    s.activation = o.activation;
    s.force = o.force;
    trace.samples.push_back(s);
  };

  trace.samples.reserve(static_cast<std::size_t>(t_max / trace.sample_interval) + 2);
  IntegrationResult r;
  try {
    r = integrate(walker, 0.0, y0, t_max, config.integrator, record);
  } catch (const std::exception& e) {
    if (trace.samples.empty()) record(0.0, y0);
    trace.termination = Termination::kIntegrationFailure;
    trace.message = e.what();
    trace.end_time = trace.samples.empty() ? 0.0 : trace.samples.back().t;
    trace.events = detect_events(trace.samples, config.reflex.stance_threshold,
                                 config.reflex.stance_hysteresis);
    return trace;
  }
  trace.stats = r.stats;
  trace.end_time = r.t_end;
  switch (r.status) {
    case IntegrationStatus::kCompleted:
      trace.termination = Termination::kCompleted;
      break;
    case IntegrationStatus::kStopped:
      trace.termination = walker.fallen() ? Termination::kFell : Termination::kCompleted;
      if (walker.fallen()) trace.message = "fall detected";
      break;
    case IntegrationStatus::kStepSizeUnderflow:
      trace.termination = Termination::kIntegrationFailure;
      trace.message = "step size underflow";
      break;
    case IntegrationStatus::kNonFinite:
      trace.termination = Termination::kIntegrationFailure;
      trace.message = "non-finite state";
      break;
  }
  trace.events = detect_events(trace.samples, config.reflex.stance_threshold,
                               config.reflex.stance_hysteresis);
  return trace;
}

std::vector<GaitEvent> detect_events(const std::vector<TraceSample>& samples, double threshold,
                                     double hysteresis) {
  std::vector<GaitEvent> events;
  if (samples.empty()) return events;
  const double leave = threshold - hysteresis;
  for (Side side : kSides) {
    const int i = index(side);
    bool stance = samples.front().grf[i].y() > threshold;
    for (std::size_t k = 1; k < samples.size(); ++k) {
      const double fy = samples[k].grf[i].y();
      if (!stance && fy > threshold) {
        stance = true;
        events.push_back({samples[k].t, k, side, EventType::kHeelStrike});
      } else if (stance && fy < leave) {
        stance = false;
        events.push_back({samples[k].t, k, side, EventType::kToeOff});
      }
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const GaitEvent& a, const GaitEvent& b) { return a.sample < b.sample; });
  return events;
}

std::vector<GaitEvent> heel_strikes(const std::vector<GaitEvent>& events) {
  std::vector<GaitEvent> out;
  std::copy_if(events.begin(), events.end(), std::back_inserter(out),
               [](const GaitEvent& e) { return e.type == EventType::kHeelStrike; });
  return out;
}

std::vector<GaitEvent> heel_strikes(const std::vector<GaitEvent>& events, Side side) {
  std::vector<GaitEvent> out;
  std::copy_if(events.begin(), events.end(), std::back_inserter(out), [side](const GaitEvent& e) {
    return e.type == EventType::kHeelStrike && e.side == side;
  });
  return out;
}

std::size_t stride_count(const std::vector<GaitEvent>& events) {
  std::size_t n = 0;
  for (Side side : kSides) {
    const std::size_t hs = heel_strikes(events, side).size();
    if (hs > 1) n += hs - 1;
  }
  return n;
}

StrideWindow steady_stride(const GaitTrace& trace) {
  const std::size_t n = stride_count(trace.events);
  if (n < kMinStridesForSteady) {
    throw InsufficientStrides("trace has " + std::to_string(n) + " strides, need " +
                              std::to_string(kMinStridesForSteady));
  }
  // Stride leg: the one whose second-to-last heel strike closes the latest full stride.
  std::optional<StrideWindow> best;
  for (Side side : kSides) {
    const auto hs = heel_strikes(trace.events, side);
    if (hs.size() < 2) continue;
    StrideWindow w;
    w.side = side;
    w.begin = hs[hs.size() - 2].sample;
    w.end = hs.back().sample;
    if (!best || w.end > best->end) best = w;
  }
  StrideWindow w = *best;
  w.single_begin = w.begin;
  w.single_end = w.begin;
  const Side contra = other(w.side);
  for (const GaitEvent& e : trace.events) {
    if (e.side != contra || e.sample <= w.begin || e.sample >= w.end) continue;
    if (e.type == EventType::kToeOff && w.single_begin == w.begin) w.single_begin = e.sample;
    if (e.type == EventType::kHeelStrike && e.sample > w.single_begin) {
      w.single_end = e.sample;
      break;
    }
  }
  if (w.single_end <= w.single_begin) {
    throw InsufficientStrides("last stride has no single-support phase");
  }
  return w;
}

std::optional<double> step_down_location(const GaitTrace& flat, std::size_t strides_before) {
  const auto hs = heel_strikes(flat.events);
  // Each stride is two steps; the drop goes in front of the step after them.
  const std::size_t k = 2 * strides_before + 1;
  if (hs.size() <= k) return std::nullopt;
  const GaitEvent& stance_strike = hs[k - 1];
  const GaitEvent& next_strike = hs[k];
  const double ball_x = flat.samples[stance_strike.sample].ball[index(stance_strike.side)].x();
  const double land_x = flat.samples[next_strike.sample].heel[index(next_strike.side)].x();
  if (!(land_x > ball_x)) return std::nullopt;
  return 0.5 * (ball_x + land_x);
}

namespace {

// Rollout horizon of a trial: long enough for the required strides at a
// conservative cadence.
double trial_duration(const GaitTrace& flat, std::size_t strides) {
  const auto hs = heel_strikes(flat.events);
  const double stride_time = hs.size() > 2 ? 2.0 * (hs.back().t - hs.front().t) / double(hs.size() - 1)
                                           : 1.2;
  return stride_time * (1.5 * double(strides) + 1.0);
}

bool trial_on(const WalkerConfig& config, const ControlParams& params, double drop_x,
              double height, const StepDownProtocol& protocol, double landing_time,
              double extra) {
  const GaitTrace t = rollout(config, params, Terrain::step_down(drop_x, height),
                              landing_time + extra);
  if (t.termination != Termination::kCompleted) return false;
  std::vector<GaitEvent> after;
  for (const GaitEvent& e : t.events) {
    if (e.t > landing_time) after.push_back(e);
  }
  return stride_count(after) >= protocol.strides_after;
}

}  // namespace

bool step_down_trial(const WalkerConfig& config, const ControlParams& params, double drop_x,
                     double height, const StepDownProtocol& protocol) {
  const GaitTrace flat = rollout(config, params, Terrain::flat(), protocol.flat_duration);
  const auto hs = heel_strikes(flat.events);
  const std::size_t k = 2 * protocol.strides_before + 1;
  const double landing = hs.size() > k ? hs[k].t : 0.0;
  return trial_on(config, params, drop_x, height, protocol, landing,
                  trial_duration(flat, protocol.strides_after));
}

StepDownResult step_down_robustness(const WalkerConfig& config, const ControlParams& params,
                                    const StepDownProtocol& protocol) {
  StepDownResult result;
  const GaitTrace flat = rollout(config, params, Terrain::flat(), protocol.flat_duration);
  if (flat.termination != Termination::kCompleted) return result;
  const auto drop = step_down_location(flat, protocol.strides_before);
  if (!drop) return result;
  const auto hs = heel_strikes(flat.events);
  const double landing = hs[2 * protocol.strides_before + 1].t;
  const double extra = trial_duration(flat, protocol.strides_after);

  const int max_cm = static_cast<int>(std::floor(protocol.max_height / protocol.increment + 1e-9));
  StepDownResult swept = step_down_sweep(max_cm, protocol.concurrency, [&](int h) {
    return trial_on(config, params, *drop, h * protocol.increment, protocol, landing, extra);
  });
  swept.stable_on_flat = true;
  return swept;
}

StepDownResult step_down_sweep(int max_steps, int concurrency,
                               const std::function<bool(int)>& trial) {
  StepDownResult result;
  const int batch = std::max(1, concurrency);
  int first_failure = max_steps + 1;
  for (int start = 1; start <= max_steps && first_failure > max_steps; start += batch) {
    const int stop = std::min(max_steps, start + batch - 1);
    std::vector<std::future<bool>> jobs;
    for (int h = start; h <= stop; ++h) {
      jobs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred,
                                [&trial, h] { return trial(h); }));
    }
    for (int h = start; h <= stop; ++h) {
      const bool ok = jobs[h - start].get();
      result.trials.emplace_back(h, ok);
      if (!ok && h < first_failure) first_failure = h;
    }
  }
  result.max_height_cm = first_failure - 1;
  return result;
}

}  // namespace nmsgait
