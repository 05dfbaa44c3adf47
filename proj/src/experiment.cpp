#include "aeye/experiment.hpp"

#include "aeye/error.hpp"
#include "aeye/session.hpp"

namespace aeye {

namespace {

constexpr std::uint64_t kBaseStream = 0xba5e;
constexpr std::uint64_t kTestStream = 0x7e57;
constexpr std::uint64_t kCcTrainStream = 0xcc01;
constexpr std::uint64_t kCcTestStream = 0xcc02;

std::vector<CornerCaseRecord> harvest(const RigConfig& cfg, std::uint64_t world_seed, std::size_t count,
                                      const std::string& prefix) {
  RigConfig c = cfg;
  c.world.seed = world_seed;
  DegradationParams p = cfg.perception.degradation;
  p.quality = cfg.experiment.cc_quality;
  p.seed = derive_seed(world_seed, 1);
  StopCondition stop;
  stop.max_cc = count;
  stop.max_km = cfg.experiment.cc_max_km;
  CampaignOptions options;
  options.id_prefix = prefix;
  CampaignResult result = run_headless_campaign(c, PerceptionChannel(p), stop, options);
  if (result.records.size() < count) {
    throw Error("corner-case harvest '" + prefix + "' produced " + std::to_string(result.records.size()) + " of " +
                std::to_string(count) + " records within " + std::to_string(cfg.experiment.cc_max_km) + " km");
  }
  return std::move(result.records);
}

}  // namespace

Corpus build_corpus(const RigConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  Corpus corpus;
  ValidationSplit split = hold_out_validation(
      generate_base(cfg.sampler, e.base_scenes, e.frames_per_scene, derive_seed(e.corpus_seed, kBaseStream), "natural"));
  corpus.base_train = std::move(split.train);
  corpus.validation = std::move(split.validation);
  corpus.natural_test = generate_base(cfg.sampler, e.natural_test_scenes, e.frames_per_scene,
                                      derive_seed(e.corpus_seed, kTestStream), "natural-test");
  corpus.cc_train = harvest(cfg, derive_seed(e.corpus_seed, kCcTrainStream),
                            static_cast<std::size_t>(e.cc_train_records), "cctrain");
  corpus.cc_test = harvest(cfg, derive_seed(e.corpus_seed, kCcTestStream),
                           static_cast<std::size_t>(e.cc_test_records), "cctest");
  return corpus;
}

TrainingSets build_training_sets(const Corpus& corpus, const RigConfig& cfg, std::uint64_t seed) {
  const ExperimentConfig& e = cfg.experiment;
  TrainingSets sets;
  sets.natural = corpus.base_train;
  sets.cc_enriched = swap_in_corner_cases(corpus.base_train, corpus.cc_train, derive_seed(seed, 1));
  const double target = class_stats(sets.cc_enriched).mean(ClassId::pedestrian);
  sets.enrichment = build_pedestrian_enriched(corpus.base_train, target, e.enrich_tol, cfg.sampler,
                                              derive_seed(seed, 2), 5.0, e.walker_factor);
  sets.pedestrian_enriched = sets.enrichment.dataset;
  return sets;
}

SeedScores run_seed(const Corpus& corpus, const RigConfig& cfg, std::uint64_t seed, const ProgressFn& progress) {
  if (progress) progress("seed " + std::to_string(seed) + ": building training sets");
  const TrainingSets sets = build_training_sets(corpus, cfg, seed);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(seed, 3);
  const std::array<const Dataset*, 3> data = {&sets.natural, &sets.pedestrian_enriched, &sets.cc_enriched};
  std::vector<PerceiverModel> models;
  for (std::size_t m = 0; m < data.size(); ++m) {
    if (progress) progress("seed " + std::to_string(seed) + ": training " + kCompareModels[m]);
    models.push_back(train(*data[m], tc));
  }
  const Dataset safety_critical = dataset_from_records(corpus.cc_test, "safety-critical");
  SeedScores scores = compare_models({&models[0], &models[1], &models[2]}, safety_critical, corpus.natural_test, seed);
  for (std::size_t m = 0; m < data.size(); ++m) {
    scores.pedestrian_mean_per_scene[m] = class_stats(*data[m]).mean(ClassId::pedestrian);
  }
  return scores;
}

CompareReport run_experiment(const Corpus& corpus, const RigConfig& cfg, const ProgressFn& progress) {
  CompareReport report;
  for (std::uint64_t seed : cfg.experiment.seeds) report.seeds.push_back(run_seed(corpus, cfg, seed, progress));
  return report;
}

}  // namespace aeye
