#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aeye/capture.hpp"
#include "aeye/config.hpp"
#include "aeye/eval.hpp"
#include "aeye/perception.hpp"
#include "aeye/world.hpp"

namespace aeye {

/// Rising-edge detector: fires once per contiguous intervention episode and
/// re-arms only after `rearm_ticks` consecutive quiet ticks.
class InterventionGate {
 public:
  explicit InterventionGate(int rearm_ticks = 10) : rearm_ticks_(rearm_ticks) {}

  /// Returns true on the tick that should trigger a capture.
  bool update(bool intervening) noexcept;
  bool armed() const noexcept { return armed_; }

 private:
  int rearm_ticks_;
  bool armed_ = true;
  int quiet_ = 0;
};

/// The semantic driver's view: the degradation channel (seeded per tick) or a
/// trained perceiver applied to the appearance grid.
class PerceptionChannel {
 public:
  explicit PerceptionChannel(DegradationParams params);
  explicit PerceptionChannel(PerceiverModel model);
  /// Loads the model named by the config when the source is a model.
  static PerceptionChannel from_config(const PerceptionSource& source);

  SemanticGrid operator()(const Rendering& rendering, std::uint64_t tick) const;

 private:
  std::optional<DegradationParams> params_;
  std::optional<PerceiverModel> model_;
};

/// Safety-driver commands pass through a fixed-length delay line.
class ReactionDelay {
 public:
  struct Entry {
    ControlCommand cmd;
    std::optional<ClassId> hazard;
  };

  explicit ReactionDelay(int ticks);
  /// Pushes this tick's decision and returns the one made `ticks` ago.
  Entry push(Entry now);

 private:
  std::deque<Entry> line_;
};

using RecordSink = std::function<void(const CornerCaseRecord&)>;

struct CampaignResult {
  CampaignLog log;
  std::vector<CornerCaseRecord> records;
  std::vector<ControlCommand> commands;  // effective command per tick, for replay
};

struct CampaignOptions {
  std::string id_prefix = "cc";
  bool keep_records = true;  // false keeps memory flat for long runs that only need the log
  RecordSink sink;           // called with each record as it is captured
};

/// Scripted two-driver loop. Per tick: render, perceive, both policies,
/// arbitrate, capture on a rising edge, push the frame, step the world.
CampaignResult run_headless_campaign(const RigConfig& cfg, const PerceptionChannel& perception,
                                     const StopCondition& stop, const CampaignOptions& options = {});

/// Writes records on a background thread; persist() errors are rethrown by flush().
class BackgroundPersister {
 public:
  explicit BackgroundPersister(std::filesystem::path root);
  ~BackgroundPersister();
  BackgroundPersister(const BackgroundPersister&) = delete;
  BackgroundPersister& operator=(const BackgroundPersister&) = delete;

  void enqueue(CornerCaseRecord record);
  /// Blocks until the queue is drained.
  void flush();

 private:
  void run();

  std::filesystem::path root_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<CornerCaseRecord> queue_;
  bool stopping_ = false;
  bool busy_ = false;
  std::exception_ptr error_;
  std::thread worker_;
};

/// A recorded world config plus the effective command for every tick.
struct CommandLog {
  WorldConfig world;
  std::vector<ControlCommand> commands;
};

nlohmann::json to_json(const CommandLog& log);
CommandLog command_log_from_json(const nlohmann::json& j);

struct ReplayFrame {
  std::uint64_t tick = 0;
  double timestamp = 0.0;
  SemanticGrid semantic_view;
  AppearanceGrid clear_view;
  double speed_kmh = 0.0;
  std::optional<LightPhase> light_phase;
};

/// Frames of a stored corner case, oldest first; the semantic view is the
/// recorded prediction.
std::vector<ReplayFrame> replay(const CornerCaseRecord& record);

/// Re-simulates a command log; the semantic view is ground truth. The final
/// state is written to `final_state` when given.
std::vector<ReplayFrame> replay(const CommandLog& log, WorldState* final_state = nullptr);

/// Output root: AEYE_DATA_DIR if set, else ./aeye-data.
std::filesystem::path default_data_root();

}  // namespace aeye
