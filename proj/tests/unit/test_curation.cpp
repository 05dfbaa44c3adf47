#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "aeye/curation.hpp"
#include "aeye/error.hpp"
#include "aeye/rng.hpp"
#include "helpers.hpp"

using namespace aeye;
using aeye::test::TempDir;

namespace {

FrameSample synthetic_frame(const std::string& scene, int ped_cells, Rng& rng) {
  FrameSample f;
  f.scene_id = scene;
  f.label = SemanticGrid(8, 8, ClassId::road);
  f.appearance = AppearanceGrid(8, 8);
  for (int i = 0; i < ped_cells && i < 64; ++i) f.label.set(i / 8, i % 8, ClassId::pedestrian);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) f.appearance.set(r, c, {static_cast<float>(rng.uniform()), 0.5f, 0.5f});
  return f;
}

// Scenes with the given per-frame pedestrian cell counts.
Dataset synthetic(const std::vector<std::vector<int>>& peds, std::uint64_t seed = 1) {
  Rng rng(seed);
  Dataset d;
  d.meta.name = "synthetic";
  for (std::size_t s = 0; s < peds.size(); ++s) {
    Scene scene;
    scene.scene_id = "scene-" + std::to_string(s);
    for (int p : peds[s]) scene.frames.push_back(synthetic_frame(scene.scene_id, p, rng));
    d.scenes.push_back(scene);
  }
  return d;
}

Dataset uniform_synthetic(int scenes, int frames, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> peds(static_cast<std::size_t>(scenes));
  for (auto& s : peds)
    for (int f = 0; f < frames; ++f) s.push_back(static_cast<int>(rng.below(10)));
  return synthetic(peds, seed);
}

CornerCaseRecord synthetic_record(const std::string& id, int n_frames, int ped_cells, std::uint64_t seed) {
  Rng rng(seed);
  CornerCaseRecord r;
  r.id = id;
  for (int i = 0; i < n_frames; ++i) {
    const FrameSample s = synthetic_frame(id, ped_cells, rng);
    FrameRecord f;
    f.tick_index = static_cast<std::uint64_t>(i);
    f.timestamp = 0.1 * i;
    f.truth = s.label;
    f.predicted = s.label;
    f.appearance = s.appearance;
    r.frames.push_back(f);
  }
  return r;
}

// Independent recount.
double naive_mean(const Dataset& d, ClassId cls) {
  double total = 0.0;
  for (const auto& s : d.scenes)
    for (const auto& f : s.frames)
      for (int r = 0; r < f.label.rows(); ++r)
        for (int c = 0; c < f.label.cols(); ++c) total += f.label.at(r, c) == cls;
  return total / static_cast<double>(d.scenes.size());
}

SceneSampler small_sampler() {
  SceneSampler s;
  s.ticks_per_frame = 5;
  return s;
}

}  // namespace

TEST(ClassStats, TwoScenesMeanIsTotalOverScenes) {
  const Dataset d = synthetic({{4, 6}, {30}});
  const ClassPixelStats st = class_stats(d);
  EXPECT_DOUBLE_EQ(st.mean(ClassId::pedestrian), 20.0);
  EXPECT_EQ(st.total(ClassId::pedestrian), 40u);
  EXPECT_EQ(st.n_scenes, 2u);
  EXPECT_EQ(st.n_frames, 3u);
}

TEST(ClassStats, AllVoidHasZeroObjectMeans) {
  Dataset d = synthetic({{0}, {0}});
  for (auto& s : d.scenes)
    for (auto& f : s.frames) f.label = SemanticGrid(8, 8, ClassId::void_);
  const ClassPixelStats st = class_stats(d);
  for (std::size_t c = 1; c < kNumClasses; ++c) EXPECT_EQ(st.mean_per_scene[c], 0.0);
  EXPECT_DOUBLE_EQ(st.mean(ClassId::void_), 64.0);
}

TEST(ClassStats, MatchesNaiveRecountOnRandomDatasets) {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    Dataset d = uniform_synthetic(1 + static_cast<int>(rng.below(6)), 1 + static_cast<int>(rng.below(5)), trial);
    for (auto& s : d.scenes)
      for (auto& f : s.frames)
        for (ClassId& c : f.label.cells()) c = static_cast<ClassId>(rng.below(kNumClasses));
    const ClassPixelStats st = class_stats(d);
    std::uint64_t all = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      EXPECT_NEAR(st.mean_per_scene[c], naive_mean(d, static_cast<ClassId>(c)), 1e-9);
      all += st.total_cells[c];
    }
    EXPECT_EQ(all, 64u * d.frame_count());
  }
}

TEST(ClassStats, EmptyDatasetIsInputError) { EXPECT_THROW(class_stats(Dataset{}), InputError); }

TEST(GenerateBase, CountsOriginsAndDeterminism) {
  const SceneSampler s = small_sampler();
  const Dataset a = generate_base(s, 20, 12, 5);
  EXPECT_EQ(a.frame_count(), 240u);
  EXPECT_EQ(a.frame_count(FrameOrigin::base), 240u);
  std::set<std::string> ids;
  for (const Scene& sc : a.scenes) {
    ids.insert(sc.scene_id);
    for (const FrameSample& f : sc.frames) EXPECT_EQ(f.scene_id, sc.scene_id);
  }
  EXPECT_EQ(ids.size(), 20u);
  EXPECT_EQ(generate_base(s, 20, 12, 5), a);
  EXPECT_NE(generate_base(s, 20, 12, 6), a);
}

TEST(GenerateBase, NoWalkersMeansNoPedestrianCells) {
  SceneSampler s = small_sampler();
  s.walkers_min = s.walkers_max = 0;
  const Dataset d = generate_base(s, 4, 6, 2);
  EXPECT_EQ(class_stats(d).mean(ClassId::pedestrian), 0.0);
}

TEST(SceneSampler, DrawsStayInRanges) {
  const SceneSampler s;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const WorldConfig c = s.sample(seed);
    EXPECT_GE(c.npc_vehicles, s.vehicles_min);
    EXPECT_LE(c.npc_vehicles, s.vehicles_max);
    EXPECT_GE(c.npc_walkers, s.walkers_min);
    EXPECT_LE(c.npc_walkers, s.walkers_max);
    EXPECT_GE(c.clouds, 0.0);
    EXPECT_LE(c.clouds, 30.0);
    EXPECT_GE(c.wind, 0.0);
    EXPECT_LE(c.wind, 50.0);
    EXPECT_GE(c.sun_altitude, 20.0);
    EXPECT_LE(c.sun_altitude, 90.0);
  }
}

TEST(HoldOut, LastScenesGoToValidation) {
  const Dataset d = uniform_synthetic(10, 2, 3);
  const ValidationSplit split = hold_out_validation(d, 0.2);
  EXPECT_EQ(split.train.scenes.size(), 8u);
  EXPECT_EQ(split.validation.scenes.size(), 2u);
  EXPECT_EQ(split.validation.scenes[1].scene_id, d.scenes[9].scene_id);
  EXPECT_THROW(hold_out_validation(uniform_synthetic(1, 2, 3)), InputError);
}

TEST(SwapIn, SixtyCornerFramesIntoTwoFortyBase) {
  const Dataset base = uniform_synthetic(20, 12, 4);
  const std::vector<CornerCaseRecord> ccs = {synthetic_record("cc-0001", 30, 12, 1),
                                             synthetic_record("cc-0002", 30, 9, 2)};
  const Dataset out = swap_in_corner_cases(base, ccs, 8);
  EXPECT_EQ(out.frame_count(), 240u);
  EXPECT_EQ(out.frame_count(FrameOrigin::corner_case), 60u);
  EXPECT_EQ(out, swap_in_corner_cases(base, ccs, 8));
  std::set<std::string> ids;
  for (const Scene& s : out.scenes) {
    EXPECT_FALSE(s.frames.empty()) << s.scene_id;
    EXPECT_TRUE(ids.insert(s.scene_id).second);
  }
  EXPECT_TRUE(ids.count("cc-0001"));
}

TEST(SwapIn, NoRecordsLeavesDatasetUnchanged) {
  const Dataset base = uniform_synthetic(5, 4, 4);
  EXPECT_EQ(swap_in_corner_cases(base, {}, 1), base);
}

TEST(SwapIn, TooManyCornerFramesIsInputError) {
  const Dataset base = uniform_synthetic(2, 10, 4);
  const std::vector<CornerCaseRecord> ccs = {synthetic_record("cc-1", 30, 1, 1)};
  EXPECT_THROW(swap_in_corner_cases(base, ccs, 1), InputError);
}

TEST(SwapIn, RandomCombosConserveSizeAndProvenance) {
  Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const int scenes = 2 + static_cast<int>(rng.below(10));
    const int frames = 1 + static_cast<int>(rng.below(12));
    const Dataset base = uniform_synthetic(scenes, frames, trial);
    const std::size_t n = base.frame_count();
    std::vector<CornerCaseRecord> ccs;
    std::size_t inserted = 0;
    const int k = static_cast<int>(rng.below(4));
    for (int i = 0; i < k; ++i) {
      const int len = 1 + static_cast<int>(rng.below(8));
      if (inserted + static_cast<std::size_t>(len) > n) break;
      ccs.push_back(synthetic_record("cc-" + std::to_string(i), len, 3, static_cast<std::uint64_t>(trial * 10 + i)));
      inserted += static_cast<std::size_t>(len);
    }
    const Dataset out = swap_in_corner_cases(base, ccs, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(out.frame_count(), n);
    EXPECT_EQ(out.frame_count(FrameOrigin::corner_case), inserted);
    // Scenes survive while there is room for one frame each.
    std::size_t base_scenes_left = 0;
    for (const Scene& s : out.scenes) base_scenes_left += !s.frames.empty() && s.frames[0].origin == FrameOrigin::base;
    if (n - inserted >= static_cast<std::size_t>(scenes)) {
      EXPECT_EQ(base_scenes_left, static_cast<std::size_t>(scenes));
    }
  }
}

TEST(Enrich, TargetAtCurrentMeanNeedsNoReplacements) {
  const Dataset base = uniform_synthetic(6, 4, 1);
  const double current = class_stats(base).mean(ClassId::pedestrian);
  const EnrichmentResult r = build_pedestrian_enriched(base, current, 0.05, small_sampler(), 3);
  EXPECT_EQ(r.replacements, 0u);
  EXPECT_EQ(r.dataset.scenes, base.scenes);
}

TEST(Enrich, ReachesTargetWithinToleranceAndKeepsSize) {
  const Dataset base = generate_base(small_sampler(), 6, 4, 11);
  const double current = class_stats(base).mean(ClassId::pedestrian);
  const double target = 1.4 * current;
  const EnrichmentResult r = build_pedestrian_enriched(base, target, 0.05, small_sampler(), 4);
  EXPECT_EQ(r.dataset.frame_count(), base.frame_count());
  const double got = class_stats(r.dataset).mean(ClassId::pedestrian);
  EXPECT_LE(std::abs(got - target) / target, 0.05);
  EXPECT_DOUBLE_EQ(r.achieved_mean, got);
  EXPECT_GT(r.replacements, 0u);
  EXPECT_EQ(build_pedestrian_enriched(base, target, 0.05, small_sampler(), 4).dataset, r.dataset);
}

TEST(Enrich, UnreachableTargetReportsAchievedMean) {
  const Dataset base = uniform_synthetic(4, 3, 2);
  const double current = class_stats(base).mean(ClassId::pedestrian);
  try {
    build_pedestrian_enriched(base, 10.0 * current + 1000.0, 0.05, small_sampler(), 1, 0.5);
    FAIL() << "expected EnrichmentError";
  } catch (const EnrichmentError& e) {
    EXPECT_GE(e.achieved_mean(), current);
  }
}

TEST(Enrich, RejectsBadArguments) {
  const Dataset base = uniform_synthetic(4, 3, 2);
  const double current = class_stats(base).mean(ClassId::pedestrian);
  EXPECT_THROW(build_pedestrian_enriched(base, current + 1, 0.0, small_sampler(), 1), InputError);
  EXPECT_THROW(build_pedestrian_enriched(base, current + 1, 0.3, small_sampler(), 1), InputError);
  EXPECT_THROW(build_pedestrian_enriched(base, current - 1, 0.05, small_sampler(), 1), InputError);
}

TEST(DatasetIo, RoundTrip) {
  TempDir tmp;
  Dataset d = uniform_synthetic(3, 2, 5);
  d.meta.seed = 77;
  const std::vector<CornerCaseRecord> ccs = {synthetic_record("cc-0001", 2, 4, 3)};
  d = swap_in_corner_cases(d, ccs, 2);
  save_dataset(d, tmp / "ds");
  EXPECT_EQ(load_dataset(tmp / "ds"), d);
}

TEST(DatasetIo, MissingFileIsFormatError) {
  TempDir tmp;
  const Dataset d = uniform_synthetic(2, 2, 5);
  save_dataset(d, tmp / "ds");
  std::filesystem::remove(tmp / "ds" / d.scenes[0].scene_id / "frames" / "001.app.bin");
  EXPECT_THROW(load_dataset(tmp / "ds"), FormatError);
}

TEST(DatasetFromRecords, OneScenePerRecord) {
  const std::vector<CornerCaseRecord> ccs = {synthetic_record("a", 3, 1, 1), synthetic_record("b", 5, 2, 2)};
  const Dataset d = dataset_from_records(ccs, "cc");
  ASSERT_EQ(d.scenes.size(), 2u);
  EXPECT_EQ(d.scenes[1].scene_id, "b");
  EXPECT_EQ(d.frame_count(), 8u);
  EXPECT_EQ(d.scenes[0].frames[0].label, ccs[0].frames[0].truth);
}
