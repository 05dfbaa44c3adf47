#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aeye/config.hpp"
#include "aeye/curation.hpp"
#include "aeye/eval.hpp"

namespace aeye {

/// Everything that stays fixed across experiment seeds.
struct Corpus {
  Dataset base_train;    // base scenes minus the validation hold-out
  Dataset validation;    // held out at generation time, never swapped or enriched
  Dataset natural_test;  // independent scenes from the natural distribution
  std::vector<CornerCaseRecord> cc_train;
  std::vector<CornerCaseRecord> cc_test;
};

/// Generates the base scenes and harvests corner cases from two independent
/// headless campaigns (one for training, one for testing).
Corpus build_corpus(const RigConfig& cfg);

struct TrainingSets {
  Dataset natural;
  Dataset pedestrian_enriched;
  Dataset cc_enriched;
  EnrichmentResult enrichment;
};

TrainingSets build_training_sets(const Corpus& corpus, const RigConfig& cfg, std::uint64_t seed);

using ProgressFn = std::function<void(const std::string&)>;

/// One experiment: build the three training sets, train a model on each with
/// the same training seed, and score all three on both test sets.
SeedScores run_seed(const Corpus& corpus, const RigConfig& cfg, std::uint64_t seed, const ProgressFn& progress = {});

CompareReport run_experiment(const Corpus& corpus, const RigConfig& cfg, const ProgressFn& progress = {});

}  // namespace aeye
