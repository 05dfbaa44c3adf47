#include <gtest/gtest.h>

#include "aeye/error.hpp"
#include "aeye/session.hpp"
#include "helpers.hpp"

using namespace aeye;
using aeye::test::TempDir;

namespace {

RigConfig low_quality(double q = 0.3) {
  RigConfig cfg = default_config();
  cfg.perception.degradation.quality = q;
  return cfg;
}

StopCondition stop_after(std::size_t cc, double km) {
  StopCondition s;
  s.max_cc = cc;
  s.max_km = km;
  return s;
}

}  // namespace

TEST(Gate, FiresOnRisingEdgeAndRearmsAfterQuietTicks) {
  InterventionGate gate(3);
  EXPECT_FALSE(gate.update(false));
  EXPECT_TRUE(gate.update(true));
  EXPECT_FALSE(gate.update(true));
  EXPECT_FALSE(gate.update(false));
  EXPECT_FALSE(gate.update(false));
  EXPECT_FALSE(gate.update(true));  // only two quiet ticks, still disarmed
  EXPECT_FALSE(gate.update(false));
  EXPECT_FALSE(gate.update(false));
  EXPECT_FALSE(gate.update(false));
  EXPECT_TRUE(gate.armed());
  EXPECT_TRUE(gate.update(true));
}

TEST(Delay, ReturnsDecisionFromTicksAgo) {
  ReactionDelay delay(2);
  const ControlCommand brake{0, 0, 1};
  EXPECT_EQ(delay.push({brake, ClassId::pedestrian}).cmd, ControlCommand{});
  EXPECT_EQ(delay.push({ControlCommand{}, std::nullopt}).cmd, ControlCommand{});
  const auto out = delay.push({ControlCommand{}, std::nullopt});
  EXPECT_EQ(out.cmd, brake);
  EXPECT_EQ(out.hazard, ClassId::pedestrian);

  ReactionDelay none(0);
  EXPECT_EQ(none.push({brake, std::nullopt}).cmd, brake);
}

TEST(Campaign, RecordsEndOneTickBeforeTheTrigger) {
  const RigConfig cfg = low_quality();
  const CampaignResult r =
      run_headless_campaign(cfg, PerceptionChannel(cfg.perception.degradation), stop_after(4, 20.0));
  ASSERT_GE(r.records.size(), 1u);
  ASSERT_EQ(r.records.size(), r.log.events.size());
  for (const CornerCaseRecord& rec : r.records) {
    ASSERT_EQ(rec.frames.size(), 30u);
    const auto trigger = static_cast<std::uint64_t>(std::llround(rec.event.timestamp / kTickSeconds));
    EXPECT_EQ(rec.frames.back().tick_index + 1, trigger);
    for (std::size_t i = 1; i < rec.frames.size(); ++i) {
      EXPECT_EQ(rec.frames[i].tick_index, rec.frames[i - 1].tick_index + 1);
    }
    EXPECT_NEAR(rec.frames.back().timestamp - rec.frames.front().timestamp, 2.9, 1e-9);
    EXPECT_EQ(rec.event.cause == InterventionCause::boredom, false);
    EXPECT_DOUBLE_EQ(rec.km_driven_at_event, rec.event.odometer_km);
  }
  EXPECT_EQ(r.log.events.front().record_id, "cc-0001");
  EXPECT_EQ(r.commands.size(), r.log.ticks);
  EXPECT_NO_THROW(validate(r.log));
}

TEST(Campaign, DeterministicForFixedConfig) {
  const RigConfig cfg = low_quality();
  const PerceptionChannel ch(cfg.perception.degradation);
  const CampaignResult a = run_headless_campaign(cfg, ch, stop_after(2, 5.0));
  const CampaignResult b = run_headless_campaign(cfg, ch, stop_after(2, 5.0));
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.commands, b.commands);
}

TEST(Campaign, PerfectPerceptionNeedsNoInterventions) {
  const RigConfig cfg = low_quality(1.0);
  StopCondition stop;
  stop.max_km = 10.0;
  CampaignOptions opts;
  opts.keep_records = false;
  const CampaignResult r = run_headless_campaign(cfg, PerceptionChannel(cfg.perception.degradation), stop, opts);
  EXPECT_GE(r.log.distance_km, 10.0);
  EXPECT_EQ(r.log.events.size(), 0u);
  EXPECT_EQ(r.log.underfull_interventions, 0u);
}

TEST(Campaign, SinkSeesEveryRecord) {
  const RigConfig cfg = low_quality();
  std::vector<std::string> seen;
  CampaignOptions opts;
  opts.id_prefix = "x";
  opts.keep_records = false;
  opts.sink = [&](const CornerCaseRecord& r) { seen.push_back(r.id); };
  const CampaignResult r =
      run_headless_campaign(cfg, PerceptionChannel(cfg.perception.degradation), stop_after(2, 20.0), opts);
  EXPECT_TRUE(r.records.empty());
  ASSERT_EQ(seen.size(), r.log.events.size());
  if (!seen.empty()) EXPECT_EQ(seen.front(), "x-0001");
}

TEST(Replay, CommandLogReproducesFinalState) {
  const RigConfig cfg = low_quality();
  StopCondition stop;
  stop.max_km = 1.0;
  const CampaignResult r = run_headless_campaign(cfg, PerceptionChannel(cfg.perception.degradation), stop);
  const CommandLog log{cfg.world, r.commands};
  const CommandLog parsed = command_log_from_json(to_json(log));
  EXPECT_EQ(parsed.commands, log.commands);
  WorldState final_state;
  const auto frames = replay(parsed, &final_state);
  EXPECT_EQ(frames.size(), r.commands.size());
  EXPECT_NEAR(final_state.odometer_km, r.log.distance_km, 1e-12);
  EXPECT_EQ(final_state.tick, r.log.ticks);
}

TEST(Replay, RecordFramesUseThePrediction) {
  const RigConfig cfg = low_quality();
  const CampaignResult r =
      run_headless_campaign(cfg, PerceptionChannel(cfg.perception.degradation), stop_after(1, 20.0));
  ASSERT_EQ(r.records.size(), 1u);
  const auto frames = replay(r.records[0]);
  ASSERT_EQ(frames.size(), 30u);
  EXPECT_EQ(frames[5].semantic_view, r.records[0].frames[5].predicted);
  EXPECT_EQ(frames[5].tick, r.records[0].frames[5].tick_index);
}

TEST(Persister, WritesInBackgroundAndReportsErrorsOnFlush) {
  TempDir tmp;
  const RigConfig cfg = low_quality();
  const CampaignResult r =
      run_headless_campaign(cfg, PerceptionChannel(cfg.perception.degradation), stop_after(2, 20.0));
  ASSERT_EQ(r.records.size(), 2u);
  {
    BackgroundPersister p(tmp.path());
    for (const auto& rec : r.records) p.enqueue(rec);
    p.flush();
  }
  EXPECT_EQ(list_records(tmp.path()), (std::vector<std::string>{"cc-0001", "cc-0002"}));
  EXPECT_EQ(load(tmp.path(), "cc-0002"), r.records[1]);

  BackgroundPersister again(tmp.path());
  again.enqueue(r.records[0]);
  EXPECT_THROW(again.flush(), StorageError);
}

TEST(PerceptionChannelTest, DegradeIsSeededPerTick) {
  const World w(WorldConfig{});
  const Rendering r = w.render(w.init());
  DegradationParams p;
  p.quality = 0.0;
  const PerceptionChannel ch(p);
  EXPECT_EQ(ch(r, 5), ch(r, 5));
  EXPECT_NE(ch(r, 5), ch(r, 6));
  p.quality = 1.0;
  EXPECT_EQ(PerceptionChannel(p)(r, 5), r.semantic);
}
