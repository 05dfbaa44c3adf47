#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "aeye/arbitration.hpp"
#include "aeye/semantic.hpp"
#include "aeye/world.hpp"

namespace aeye {

inline constexpr const char* kWireSchema = "aeye-wire/1";

enum class Role : std::uint8_t { semantic, safety };

std::string_view role_name(Role r) noexcept;
std::optional<Role> role_from_name(std::string_view name) noexcept;

/// One tick of the simulation as seen by one client. Exactly one of the two
/// views is set, matching the receiving role.
struct StateFrame {
  std::uint64_t tick = 0;
  std::optional<SemanticGrid> semantic_view;
  std::optional<AppearanceGrid> clear_view;
  double speed_kmh = 0.0;
  std::optional<LightPhase> light_phase;
  bool operator==(const StateFrame&) const = default;
};

struct ControlInput {
  Role role = Role::semantic;
  ControlCommand cmd;
  bool operator==(const ControlInput&) const = default;
};

struct InterventionLabel {
  InterventionCause cause = InterventionCause::overlooked_walker;
  std::string comment;
  bool operator==(const InterventionLabel&) const = default;
};

enum class SessionEventKind : std::uint8_t { started, cc_captured, ended, paused, resumed, role_assigned };

std::string_view event_name(SessionEventKind k) noexcept;

struct SessionEvent {
  SessionEventKind kind = SessionEventKind::started;
  std::string record_id;  // cc_captured
  std::string detail;
  bool operator==(const SessionEvent&) const = default;
};

struct RoleClaim {
  Role role = Role::semantic;
  bool operator==(const RoleClaim&) const = default;
};

struct Rejection {
  std::string reason;
  bool operator==(const Rejection&) const = default;
};

using WireBody = std::variant<StateFrame, ControlInput, InterventionLabel, SessionEvent, RoleClaim, Rejection>;

struct WireMessage {
  std::uint64_t seq = 0;
  WireBody body;
  bool operator==(const WireMessage&) const = default;
};

/// One JSON text per message. Appearance values travel as 8-bit RGB, so a
/// decoded clear_view is quantized to multiples of 1/255.
std::string encode(const WireMessage& msg);
/// Throws ProtocolError on malformed input, a wrong schema tag, or
/// out-of-range values.
WireMessage decode(std::string_view text);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace aeye
