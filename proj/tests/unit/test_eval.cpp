#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "aeye/error.hpp"
#include "aeye/eval.hpp"
#include "aeye/rng.hpp"
#include "helpers.hpp"

using namespace aeye;
using namespace aeye::test;

namespace {

SemanticGrid random_grid(Rng& rng, int rows, int cols, std::uint64_t n_classes = kNumClasses) {
  SemanticGrid g(rows, cols);
  for (ClassId& c : g.cells()) c = static_cast<ClassId>(rng.below(n_classes));
  return g;
}

Dataset one_frame_dataset(const SemanticGrid& label) {
  Dataset d;
  Scene s;
  s.scene_id = "s";
  FrameSample f;
  f.label = label;
  f.appearance = AppearanceGrid(label.rows(), label.cols());
  s.frames.push_back(f);
  d.scenes.push_back(s);
  return d;
}

CampaignLog log_at(std::vector<double> kms, double total_km, std::vector<double> mins = {}, double total_min = 0.0) {
  CampaignLog log;
  for (std::size_t i = 0; i < kms.size(); ++i) {
    log.events.push_back({kms[i], mins.empty() ? kms[i] : mins[i], InterventionCause::overlooked_walker, ""});
  }
  log.distance_km = total_km;
  log.time_min = mins.empty() ? total_km : total_min;
  return log;
}

}  // namespace

TEST(Confusion, PerfectPredictionHasNoErrors) {
  Rng rng(1);
  const SemanticGrid g = random_grid(rng, 7, 9);
  ConfusionAccumulator conf;
  conf.add(g, g);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    EXPECT_EQ(conf.fp(static_cast<ClassId>(c)), 0u);
    EXPECT_EQ(conf.fn(static_cast<ClassId>(c)), 0u);
    if (conf.present(static_cast<ClassId>(c))) EXPECT_EQ(iou(conf, static_cast<ClassId>(c)), 1.0);
  }
  EXPECT_EQ(miou(conf), 1.0);
}

TEST(Confusion, HandCountedTwoByTwo) {
  const SemanticGrid truth = grid({{P, R}, {R, R}});
  const SemanticGrid pred = grid({{R, R}, {R, P}});
  const ConfusionAccumulator conf = accumulate({}, pred, truth);
  EXPECT_EQ(conf.tp(ClassId::pedestrian), 0u);
  EXPECT_EQ(conf.fp(ClassId::pedestrian), 1u);
  EXPECT_EQ(conf.fn(ClassId::pedestrian), 1u);
  EXPECT_EQ(conf.tp(ClassId::road), 2u);
  EXPECT_EQ(iou(conf, ClassId::pedestrian), 0.0);
  EXPECT_DOUBLE_EQ(*iou(conf, ClassId::road), 0.5);
}

TEST(Confusion, OrderDoesNotMatter) {
  Rng rng(2);
  const SemanticGrid a1 = random_grid(rng, 5, 5), a2 = random_grid(rng, 5, 5);
  const SemanticGrid b1 = random_grid(rng, 5, 5), b2 = random_grid(rng, 5, 5);
  EXPECT_EQ(accumulate(accumulate({}, a1, a2), b1, b2), accumulate(accumulate({}, b1, b2), a1, a2));
  ConfusionAccumulator left = accumulate({}, a1, a2);
  left += accumulate({}, b1, b2);
  EXPECT_EQ(left, accumulate(accumulate({}, a1, a2), b1, b2));
}

TEST(Confusion, ShapeMismatchIsInputError) {
  ConfusionAccumulator conf;
  EXPECT_THROW(conf.add(SemanticGrid(2, 3), SemanticGrid(3, 2)), InputError);
}

TEST(Iou, QuarterAndAbsentClass) {
  // tp 1, fp 1, fn 2
  const SemanticGrid truth = grid({{P, P, P, R}});
  const SemanticGrid pred = grid({{P, R, R, P}});
  const ConfusionAccumulator conf = accumulate({}, pred, truth);
  EXPECT_DOUBLE_EQ(*iou(conf, ClassId::pedestrian), 0.25);
  EXPECT_FALSE(iou(conf, ClassId::vehicle).has_value());
  const std::array<ClassId, 1> absent = {ClassId::vehicle};
  EXPECT_FALSE(miou(conf, absent).has_value());
}

TEST(Iou, MatchesSetOracleOnRandomPairs) {
  Rng rng(3);
  for (int trial = 0; trial < 120; ++trial) {
    // Fewer classes on some trials so that absent classes occur.
    const std::uint64_t k = 2 + rng.below(kNumClasses - 1);
    const SemanticGrid pred = random_grid(rng, 16, 16, k);
    const SemanticGrid truth = random_grid(rng, 16, 16, k);
    const ConfusionAccumulator conf = accumulate({}, pred, truth);
    double sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      std::size_t inter = 0;
      std::size_t uni = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool in_p = index(pred.cells()[i]) == c;
        const bool in_t = index(truth.cells()[i]) == c;
        inter += in_p && in_t;
        uni += in_p || in_t;
      }
      const auto got = iou(conf, static_cast<ClassId>(c));
      if (uni == 0) {
        EXPECT_FALSE(got.has_value());
        continue;
      }
      const double expected = static_cast<double>(inter) / static_cast<double>(uni);
      ASSERT_TRUE(got.has_value());
      EXPECT_EQ(*got, expected);
      EXPECT_GE(*got, 0.0);
      EXPECT_LE(*got, 1.0);
      sum += expected;
      ++present;
    }
    EXPECT_DOUBLE_EQ(*miou(conf), sum / present);
  }
}

TEST(CampaignStats, EvenSpacing) {
  const CampaignStats s = campaign_stats(log_at({2, 4, 6}, 7));
  EXPECT_EQ(s.n_cc, 3u);
  EXPECT_DOUBLE_EQ(*s.mean_d_cc, 2.0);
  EXPECT_DOUBLE_EQ(*s.std_d_cc, 0.0);
  EXPECT_DOUBLE_EQ(s.tail_km, 1.0);
}

TEST(CampaignStats, UnevenSpacingUsesSampleStd) {
  const CampaignStats s = campaign_stats(log_at({2, 6, 14}, 14));
  EXPECT_NEAR(*s.mean_d_cc, 14.0 / 3.0, 1e-12);
  // intervals 2, 4, 8: squared deviations sum to 56/3, over n-1 = 2
  EXPECT_NEAR(*s.std_d_cc, std::sqrt(28.0 / 3.0), 1e-12);
  EXPECT_NEAR(*s.std_d_cc, 3.055, 5e-4);
}

TEST(CampaignStats, TooFewEventsAreAbsent) {
  for (const auto& kms : {std::vector<double>{}, std::vector<double>{3.0}}) {
    const CampaignStats s = campaign_stats(log_at(kms, 10));
    EXPECT_FALSE(s.mean_d_cc.has_value());
    EXPECT_FALSE(s.std_t_cc.has_value());
    EXPECT_FALSE(s.absent_reason.empty());
    EXPECT_EQ(s.distance_km, 10.0);
  }
}

TEST(CampaignStats, IntervalsPlusTailSumToTotal) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(20));
    std::vector<double> kms;
    std::vector<double> mins;
    double km = 0.0;
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      km += rng.uniform(0.0, 5.0);
      t += rng.uniform(0.0, 9.0);
      kms.push_back(km);
      mins.push_back(t);
    }
    const double total = km + rng.uniform(0.0, 3.0);
    const double total_min = t + rng.uniform(0.0, 3.0);
    const CampaignStats s = campaign_stats(log_at(kms, total, mins, total_min));
    EXPECT_NEAR(*s.mean_d_cc * n + s.tail_km, total, 1e-9);
    EXPECT_NEAR(*s.mean_t_cc * n + s.tail_min, total_min, 1e-9);
  }
}

TEST(CampaignLog, ValidationAndJsonRoundTrip) {
  CampaignLog log = log_at({1.0, 2.5}, 3.0);
  log.events[1].record_id = "cc-0002";
  log.events[1].cause = InterventionCause::traffic_rule_violation;
  log.ticks = 1234;
  log.underfull_interventions = 2;
  EXPECT_EQ(campaign_log_from_json(to_json(log)), log);
  EXPECT_THROW(validate(log_at({2.0, 1.0}, 3.0)), InputError);
  EXPECT_THROW(validate(log_at({2.0, 4.0}, 3.0)), InputError);
}

TEST(Compare, IdenticalModelsGiveIdenticalRows) {
  PerceiverModel m(1);
  m.bias()[index(ClassId::road)] = 1.0;
  Rng rng(5);
  const Dataset test = one_frame_dataset(random_grid(rng, 8, 8));
  const SeedScores s = compare_models({&m, &m, &m}, test, test, 1);
  for (int model = 1; model < 3; ++model) {
    for (int t = 0; t < 2; ++t) {
      EXPECT_EQ(s.scores[model][t].miou, s.scores[0][t].miou);
      EXPECT_EQ(s.scores[model][t].pedestrian_iou, s.scores[0][t].pedestrian_iou);
    }
  }
  CompareReport report;
  report.seeds = {s, s};
  EXPECT_EQ(report.mean(2, 0).miou, s.scores[2][0].miou);
  EXPECT_EQ(to_json(report)["report"], "aeye-eval/1");
  EXPECT_NE(to_text(report).find("cc_enriched"), std::string::npos);
}

TEST(Compare, EmptyTestSetIsInputError) {
  PerceiverModel m(1);
  const Dataset test = one_frame_dataset(SemanticGrid(4, 4, ClassId::road));
  EXPECT_THROW(compare_models({&m, &m, &m}, Dataset{}, test, 1), InputError);
  EXPECT_THROW(compare_models({&m, &m, &m}, test, Dataset{}, 1), InputError);
}
