// Command-line entry point: campaign, train, curate, evaluate, serve, replay.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>

#include "aeye/error.hpp"
#include "aeye/experiment.hpp"
#include "aeye/server.hpp"
#include "aeye/session.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aeye;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config document (defaults apply to missing fields)");
  app->add_option("--seed", c.seed, "Override every seed in the config");
  app->add_option("--out", c.out, "Output directory (default: $AEYE_DATA_DIR/<command> or ./aeye-data/<command>)");
}

RigConfig load_rig(const Common& c) {
  RigConfig cfg = c.config.empty() ? default_config() : load_config(c.config);
  if (c.seed) {
    apply_seed(cfg, *c.seed);
    validate(cfg);
  }
  return cfg;
}

fs::path out_dir(const Common& c, const std::string& command) {
  const fs::path dir = c.out.empty() ? default_data_root() / command : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw StorageError("cannot write " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw StorageError("cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), e.what());
  }
}

void progress(const std::string& msg) { std::cerr << msg << "\n"; }

int cmd_campaign(const Common& c, std::optional<double> quality) {
  RigConfig cfg = load_rig(c);
  if (quality) {
    cfg.perception.degradation.quality = *quality;
    validate(cfg);
  }
  const fs::path out = out_dir(c, "campaign");
  const fs::path records = out / "records";
  if (fs::exists(records) && !fs::is_empty(records)) {
    throw StorageError(records.string() + " already holds records; choose an empty --out");
  }
  BackgroundPersister persister(records);
  CampaignOptions options;
  options.keep_records = false;
  options.sink = [&](const CornerCaseRecord& r) { persister.enqueue(r); };
  const CampaignResult result =
      run_headless_campaign(cfg, PerceptionChannel::from_config(cfg.perception), cfg.stop, options);
  persister.flush();

  write_text(out / "campaign_log.json", to_json(result.log).dump(2) + "\n");
  write_text(out / "stats.json", to_json(campaign_stats(result.log)).dump(2) + "\n");
  write_text(out / "commands.json", to_json(CommandLog{cfg.world, result.commands}).dump() + "\n");
  write_text(out / "config.json", to_json(cfg).dump(2) + "\n");
  const CampaignStats st = campaign_stats(result.log);
  std::cout << "driven " << st.distance_km << " km in " << st.time_min << " min, " << st.n_cc << " corner cases";
  if (st.mean_d_cc) std::cout << ", " << *st.mean_d_cc << " km/CC, " << *st.mean_t_cc << " min/CC";
  std::cout << "\nwrote " << out.string() << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& data) {
  const RigConfig cfg = load_rig(c);
  const fs::path out = out_dir(c, "train");
  Dataset ds;
  if (!data.empty()) {
    ds = load_dataset(data);
  } else {
    const ExperimentConfig& e = cfg.experiment;
    progress("generating " + std::to_string(e.base_scenes) + " base scenes");
    ds = hold_out_validation(generate_base(cfg.sampler, e.base_scenes, e.frames_per_scene, e.corpus_seed)).train;
  }
  progress("training on " + std::to_string(ds.frame_count()) + " frames");
  const PerceiverModel model = train(ds, cfg.train);
  save_model(model, out / "model.bin");
  std::cout << "wrote " << (out / "model.bin").string() << "\n";
  return 0;
}

std::vector<CornerCaseRecord> load_records(const fs::path& root) {
  std::vector<CornerCaseRecord> out;
  for (const std::string& id : list_records(root)) out.push_back(load(root, id));
  return out;
}

int cmd_curate(const Common& c, const std::string& records_dir) {
  RigConfig cfg = load_rig(c);
  const fs::path out = out_dir(c, "curate");
  progress("building corpus");
  Corpus corpus = build_corpus(cfg);
  if (!records_dir.empty()) corpus.cc_train = load_records(records_dir);
  const std::uint64_t seed = cfg.experiment.seeds.front();
  const TrainingSets sets = build_training_sets(corpus, cfg, seed);
  const std::vector<std::pair<std::string, const Dataset*>> outputs = {
      {"natural", &sets.natural},
      {"pedestrian_enriched", &sets.pedestrian_enriched},
      {"cc_enriched", &sets.cc_enriched},
      {"validation", &corpus.validation},
      {"natural_test", &corpus.natural_test}};
  json summary = json::object();
  for (const auto& [name, ds] : outputs) {
    save_dataset(*ds, out / name);
    summary[name] = {{"frames", ds->frame_count()},
                     {"corner_case_frames", ds->frame_count(FrameOrigin::corner_case)},
                     {"pedestrian_mean_per_scene", class_stats(*ds).mean(ClassId::pedestrian)}};
  }
  const Dataset safety = dataset_from_records(corpus.cc_test, "safety-critical");
  save_dataset(safety, out / "safety_critical");
  summary["safety_critical"] = {{"frames", safety.frame_count()}};
  summary["enrichment"] = {{"replacements", sets.enrichment.replacements},
                           {"attempts", sets.enrichment.attempts},
                           {"achieved_mean", sets.enrichment.achieved_mean}};
  write_text(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& campaign_log) {
  const RigConfig cfg = load_rig(c);
  const fs::path out = out_dir(c, "evaluate");
  if (!campaign_log.empty()) {
    const CampaignStats st = campaign_stats(campaign_log_from_json(read_json_file(campaign_log)));
    write_text(out / "campaign_stats.json", to_json(st).dump(2) + "\n");
    std::cout << to_json(st).dump(2) << "\n";
    return 0;
  }
  progress("building corpus");
  const Corpus corpus = build_corpus(cfg);
  const CompareReport report = run_experiment(corpus, cfg, progress);
  write_text(out / "report.txt", to_text(report));
  write_text(out / "report.json", to_json(report).dump(2) + "\n");
  std::cout << to_text(report);
  return 0;
}

int cmd_serve(const Common& c) {
  const RigConfig cfg = load_rig(c);
  const fs::path out = out_dir(c, "serve");
  LiveServer server(cfg, PerceptionChannel::from_config(cfg.perception), out / "records");
  std::cout << "listening on ws://" << cfg.live.host << ":" << server.port() << "/" << std::endl;
  server.run(true);
  write_text(out / "campaign_log.json", to_json(server.log()).dump(2) + "\n");
  return 0;
}

int cmd_replay(const Common& c, const std::string& record, const std::string& commands) {
  if (record.empty() == commands.empty()) throw ConfigError("replay", "give exactly one of --record or --commands");
  const fs::path out = out_dir(c, "replay");
  std::vector<ReplayFrame> frames;
  if (!record.empty()) {
    const fs::path p(record);
    frames = replay(load(p.parent_path(), p.filename().string()));
  } else {
    frames = replay(command_log_from_json(read_json_file(commands)));
  }
  std::ofstream f(out / "frames.jsonl", std::ios::binary);
  std::uint64_t seq = 0;
  for (const ReplayFrame& fr : frames) {
    f << encode({++seq, StateFrame{fr.tick, fr.semantic_view, fr.clear_view, fr.speed_kmh, fr.light_phase}}) << "\n";
  }
  if (!f) throw StorageError("cannot write " + (out / "frames.jsonl").string());
  std::cout << frames.size() << " frames written to " << (out / "frames.jsonl").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corner-case rig: scripted and live two-driver sessions, curation and evaluation"};
  app.require_subcommand(1);

  Common common;
  std::optional<double> quality;
  std::string data;
  std::string records_dir;
  std::string campaign_log;
  std::string record;
  std::string commands;

  auto* campaign = app.add_subcommand("campaign", "Run a headless campaign and persist its corner cases");
  add_common(campaign, common);
  campaign->add_option("--quality", quality, "Override perception.quality")->check(CLI::Range(0.0, 1.0));

  auto* train_cmd = app.add_subcommand("train", "Train a perceiver on a dataset directory or fresh base scenes");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", data, "Dataset directory written by `curate`");

  auto* curate = app.add_subcommand("curate", "Build the natural, pedestrian-enriched and CC-enriched datasets");
  add_common(curate, common);
  curate->add_option("--records", records_dir, "Use these corner-case records for training instead of harvesting");

  auto* evaluate = app.add_subcommand("evaluate", "Run the three-way comparison, or summarize a campaign log");
  add_common(evaluate, common);
  evaluate->add_option("--campaign-log", campaign_log, "campaign_log.json to summarize");

  auto* serve = app.add_subcommand("serve", "Host a live two-driver session over WebSocket");
  add_common(serve, common);

  auto* replay_cmd = app.add_subcommand("replay", "Stream a stored corner case or command log as state frames");
  add_common(replay_cmd, common);
  replay_cmd->add_option("--record", record, "Record directory, e.g. out/records/cc-0001");
  replay_cmd->add_option("--commands", commands, "commands.json written by `campaign`");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*campaign) return cmd_campaign(common, quality);
    if (*train_cmd) return cmd_train(common, data);
    if (*curate) return cmd_curate(common, records_dir);
    if (*evaluate) return cmd_evaluate(common, campaign_log);
    if (*serve) return cmd_serve(common);
    if (*replay_cmd) return cmd_replay(common, record, commands);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
