#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "aeye/session.hpp"
#include "aeye/wire.hpp"

namespace aeye {

/// Two-driver session state machine, independent of the transport. The
/// transport feeds it client messages and calls tick() at 10 Hz from the
/// same thread; every call returns the messages to deliver.
class LiveSession {
 public:
  using ClientId = std::uint64_t;

  struct Outgoing {
    ClientId to = 0;
    WireMessage msg;
  };

  enum class Phase { lobby, driving, labeling, paused, ended };

  LiveSession(const RigConfig& cfg, PerceptionChannel perception, RecordSink on_record);

  std::vector<Outgoing> receive(ClientId from, const WireMessage& msg);
  /// Frees the client's role; a session in progress pauses until it is re-claimed.
  std::vector<Outgoing> disconnect(ClientId id);
  /// Advances one tick while driving; otherwise does nothing.
  std::vector<Outgoing> tick();
  std::vector<Outgoing> end(const std::string& reason);

  Phase phase() const noexcept { return phase_; }
  const WorldState& state() const noexcept { return state_; }
  const CampaignLog& log() const noexcept { return log_; }
  std::optional<ClientId> holder(Role role) const noexcept { return roles_[static_cast<std::size_t>(role)]; }

 private:
  struct HeldInput {
    ControlCommand cmd;
    std::uint64_t tick = 0;
  };

  std::optional<Role> role_of(ClientId id) const noexcept;
  ControlCommand current_input(Role role) const noexcept;
  WireMessage message(WireBody body);
  void broadcast(std::vector<Outgoing>& out, const WireBody& body);
  void reject(std::vector<Outgoing>& out, ClientId to, std::string reason);

  RigConfig cfg_;
  World world_;
  PerceptionChannel perception_;
  RecordSink on_record_;
  WorldState state_;
  RollingBuffer buffer_;
  InterventionGate gate_;
  CampaignLog log_;
  Phase phase_ = Phase::lobby;
  bool label_pending_ = false;
  std::optional<CornerCaseRecord> pending_;
  std::array<std::optional<ClientId>, 2> roles_{};
  std::array<std::optional<HeldInput>, 2> inputs_{};
  std::uint64_t hold_ticks_ = 5;
  std::uint64_t seq_ = 0;
  std::size_t n_cc_ = 0;
};

std::string_view phase_name(LiveSession::Phase p) noexcept;

}  // namespace aeye
