#include <atomic>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nmsgait/simulation.hpp"
#include "synthetic.hpp"

using namespace nmsgait;

namespace {

constexpr double kFootLength = synthetic::kFootLength;

GaitTrace synthetic_gait(std::size_t samples) { return synthetic::gait(samples); }

}  // namespace

TEST(Events, NoContactNoEvents) {
  std::vector<TraceSample> samples(500);
  for (std::size_t k = 0; k < samples.size(); ++k) samples[k].t = 1e-3 * k;
  EXPECT_TRUE(detect_events(samples).empty());
  EXPECT_TRUE(detect_events({}).empty());
}

TEST(Events, RampCrossingGivesOneHeelStrike) {
  std::vector<TraceSample> samples(1000);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    samples[k].t = 1e-3 * k;
    samples[k].grf[0] = Vec2(0.0, 40.0 * samples[k].t);  // 20 N at t = 0.5 s
  }
  const auto ev = detect_events(samples);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].type, EventType::kHeelStrike);
  EXPECT_EQ(ev[0].side, Side::kLeft);
  EXPECT_NEAR(ev[0].t, 0.5, 1e-3 + 1e-12);
}

TEST(Events, HysteresisSuppressesChatter) {
  std::vector<TraceSample> samples(200);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    samples[k].t = 1e-3 * k;
    samples[k].grf[1] = Vec2(0.0, k % 2 ? 21.0 : 19.0);
  }
  EXPECT_EQ(detect_events(samples).size(), 1u);
}

TEST(Events, SyntheticGaitAlternatesAndHasOneToeOffPerStride) {
  const GaitTrace tr = synthetic_gait(12001);
  const auto hs = heel_strikes(tr.events);
  ASSERT_GE(hs.size(), 20u);
  for (std::size_t i = 1; i < hs.size(); ++i) {
    EXPECT_NE(hs[i].side, hs[i - 1].side);
    EXPECT_GT(hs[i].sample, hs[i - 1].sample);
  }
  for (Side side : kSides) {
    const auto own = heel_strikes(tr.events, side);
    for (std::size_t i = 1; i < own.size(); ++i) {
      int toe_offs = 0;
      for (const GaitEvent& e : tr.events) {
        if (e.side == side && e.type == EventType::kToeOff && e.sample > own[i - 1].sample &&
            e.sample < own[i].sample) {
          ++toe_offs;
        }
      }
      EXPECT_EQ(toe_offs, 1);
    }
  }
  for (const GaitEvent& e : tr.events) {
    EXPECT_GE(e.t, tr.samples.front().t);
    EXPECT_LE(e.t, tr.samples.back().t);
    EXPECT_EQ(e.t, tr.samples[e.sample].t);
  }
}

TEST(StrideWindow, LastStrideWithSingleSupportInside) {
  const GaitTrace tr = synthetic_gait(12001);
  const StrideWindow w = steady_stride(tr);
  EXPECT_EQ(w.side, Side::kLeft);
  EXPECT_EQ(w.begin, 11000u);
  EXPECT_EQ(w.end, 12000u);
  EXPECT_EQ(w.single_begin, 11120u);
  EXPECT_EQ(w.single_end, 11500u);
  EXPECT_GT(w.single_begin, w.begin);
  EXPECT_LT(w.single_end, w.end);
  // Stride lasts two step periods.
  const auto hs = heel_strikes(tr.events);
  const double step = (hs.back().t - hs.front().t) / double(hs.size() - 1);
  EXPECT_NEAR(tr.samples[w.end].t - tr.samples[w.begin].t, 2.0 * step, 0.2 * step);
}

TEST(StrideWindow, TooFewStridesRejected) {
  const GaitTrace tr = synthetic_gait(2200);
  EXPECT_LT(stride_count(tr.events), kMinStridesForSteady);
  EXPECT_THROW(steady_stride(tr), InsufficientStrides);
}

TEST(StepDown, LocationBetweenStanceBallAndNextHeel) {
  const GaitTrace tr = synthetic_gait(12001);
  // Heel strike j falls at t = 0.5 (j + 1) and lands at x = 1.4 t.
  const double t16 = 8.5, t17 = 9.0;
  const double expected = 0.5 * (1.4 * t16 + kFootLength + 1.4 * t17);
  const auto x = step_down_location(tr, 8);
  ASSERT_TRUE(x.has_value());
  EXPECT_NEAR(*x, expected, 1e-9);
  EXPECT_FALSE(step_down_location(synthetic_gait(3000), 8).has_value());
}

TEST(StepDown, SweepReportsLargestLeadingSuccess) {
  const auto run = [](int fail_at, int concurrency) {
    return step_down_sweep(20, concurrency, [fail_at](int h) { return h < fail_at; });
  };
  for (int concurrency : {1, 3, 4}) {
    const StepDownResult zero = run(1, concurrency);
    EXPECT_EQ(zero.max_height_cm, 0);
    const StepDownResult r = run(4, concurrency);
    EXPECT_EQ(r.max_height_cm, 3);
    for (std::size_t i = 0; i < r.trials.size(); ++i) {
      EXPECT_EQ(r.trials[i].first, static_cast<int>(i) + 1);  // 1 cm increments
      if (r.trials[i].first <= r.max_height_cm) EXPECT_TRUE(r.trials[i].second);
    }
    EXPECT_EQ(run(100, concurrency).max_height_cm, 20);
  }
  // A later success after a failure does not raise the result.
  const StepDownResult gap = step_down_sweep(6, 6, [](int h) { return h != 2; });
  EXPECT_EQ(gap.max_height_cm, 1);
}

TEST(StepDown, SequentialSweepStopsAtFirstFailure) {
  std::atomic<int> calls = 0;
  step_down_sweep(20, 1, [&](int h) {
    ++calls;
    return h < 3;
  });
  EXPECT_EQ(calls.load(), 3);
}

TEST(FallCheck, StandingUprightAndThreshold) {
  const BipedModel m = BipedModel::build(Anthropometry::geyer_herr());
  const Terrain flat = Terrain::flat();
  ModelState s = m.standing_pose();
  EXPECT_FALSE(fall_check(m, s, flat));
  ModelState pitched = s;
  pitched.q[dof::kLean] = std::numbers::pi / 2;
  EXPECT_TRUE(fall_check(m, pitched, flat));

  const double h0 = m.com_state(s).position.y();
  const double limit = 0.6 * h0;
  ModelState low = s;
  low.q[dof::kY] -= h0 - limit;
  while (m.com_state(low).position.y() < limit) low.q[dof::kY] = std::nextafter(low.q[dof::kY], 10.0);
  while (m.com_state(low).position.y() > limit) {
    ModelState next = low;
    next.q[dof::kY] = std::nextafter(low.q[dof::kY], -10.0);
    if (m.com_state(next).position.y() < limit) break;
    low = next;
  }
  EXPECT_FALSE(fall_check(m, low, flat));  // at the threshold: not fallen
  ModelState below = low;
  below.q[dof::kY] -= 1e-9;
  EXPECT_TRUE(fall_check(m, below, flat));
}

TEST(Rollout, DeterministicAndWellFormed) {
  const WalkerConfig c;
  const ControlParams p = ControlParams::defaults();
  const GaitTrace a = rollout(c, p, Terrain::flat(), 1.5);
  const GaitTrace b = rollout(c, p, Terrain::flat(), 1.5);
  ASSERT_EQ(a.termination, Termination::kCompleted);
  ASSERT_EQ(a.samples.size(), 1501u);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    ASSERT_EQ(a.samples[k].q, b.samples[k].q);
    ASSERT_EQ(a.samples[k].qd, b.samples[k].qd);
    ASSERT_EQ(a.samples[k].force, b.samples[k].force);
  }
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    const TraceSample& s = a.samples[k];
    if (k > 0) EXPECT_NEAR(s.t - a.samples[k - 1].t, 1e-3, 1e-12);
    for (int leg = 0; leg < 2; ++leg) {
      EXPECT_GE(s.grf[leg].y(), 0.0);
      EXPECT_EQ(s.cop[leg].allFinite(), s.grf[leg].y() > 0.0);
    }
    for (int i = 0; i < kNumMuscles; ++i) {
      EXPECT_GE(s.stimulation[i], 0.0);
      EXPECT_LE(s.stimulation[i], 1.0);
      EXPECT_GE(s.activation[i], 0.0);
      EXPECT_LE(s.activation[i], 1.0);
      EXPECT_GE(s.force[i], 0.0);
    }
  }
}

TEST(Rollout, LowerBoundParametersFall) {
  const WalkerConfig c;
  ControlParams p;
  p.values = ParamBounds::defaults().lower;
  const GaitTrace tr = rollout(c, p, Terrain::flat(), 5.0);
  EXPECT_EQ(tr.termination, Termination::kFell);
  EXPECT_LT(tr.end_time, 5.0);
  EXPECT_NEAR(tr.samples.back().t, tr.end_time, 1e-3);
  EXPECT_FALSE(tr.message.empty());
}
