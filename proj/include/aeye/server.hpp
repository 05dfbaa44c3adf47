#pragma once

#include <filesystem>
#include <memory>

#include "aeye/live.hpp"

namespace aeye {

/// WebSocket front end for LiveSession. One text frame carries one wire
/// message. Plain HTTP GETs are answered from live.static_dir when set.
/// Networking, ticking and the session all run on the thread that calls
/// run(); captured records are written by a background persister.
class LiveServer {
 public:
  LiveServer(const RigConfig& cfg, PerceptionChannel perception, std::filesystem::path record_root);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Bound port; differs from the configured one when that was 0.
  unsigned short port() const noexcept;
  /// Serves until stop() is called or SIGINT/SIGTERM arrives when
  /// `handle_signals` is set. Flushes pending records before returning.
  void run(bool handle_signals = false);
  /// Safe to call from any thread.
  void stop();

  /// Final campaign log; valid after run() returns.
  CampaignLog log() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace aeye
