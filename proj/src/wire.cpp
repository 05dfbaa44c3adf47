#include "aeye/wire.hpp"

#include <boost/beast/core/detail/base64.hpp>
#include <cmath>

#include "aeye/error.hpp"
#include "json.hpp"
#include "json_codec.hpp"

namespace aeye {

using nlohmann::json;
namespace b64 = boost::beast::detail::base64;

namespace {

constexpr std::array<std::string_view, 6> kEventNames = {"started", "cc_captured", "ended",
                                                         "paused",  "resumed",     "role_assigned"};

// Same overload-set idiom as std::visit examples.
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json grid_json(const SemanticGrid& g) {
  std::string bytes(g.cells().size(), '\0');
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<char>(g.cells()[i]);
  return {{"rows", g.rows()}, {"cols", g.cols()}, {"cells", base64_encode(bytes)}};
}

json appearance_json(const AppearanceGrid& a) {
  const auto values = a.values();
  std::string bytes(values.size(), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    bytes[i] = static_cast<char>(static_cast<std::uint8_t>(std::lround(values[i] * 255.0f)));
  }
  return {{"rows", a.rows()}, {"cols", a.cols()}, {"rgb", base64_encode(bytes)}};
}

std::pair<int, int> shape(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  if (rows < 1 || cols < 1 || rows > 4096 || cols > 4096) throw ProtocolError("grid shape out of range");
  return {rows, cols};
}

SemanticGrid grid_from_json(const json& j) {
  const auto [rows, cols] = shape(j);
  const std::string bytes = base64_decode(j.at("cells").get<std::string>());
  if (bytes.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw ProtocolError("semantic_view: cell count does not match shape");
  }
  try {
    return SemanticGrid::from_bytes(
        rows, cols, {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  } catch (const Error& e) {
    throw ProtocolError(std::string("semantic_view: ") + e.what());
  }
}

AppearanceGrid appearance_from_json(const json& j) {
  const auto [rows, cols] = shape(j);
  const std::string bytes = base64_decode(j.at("rgb").get<std::string>());
  if (bytes.size() != 3 * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw ProtocolError("clear_view: byte count does not match shape");
  }
  std::vector<float> values(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    values[i] = static_cast<float>(static_cast<std::uint8_t>(bytes[i])) / 255.0f;
  }
  return AppearanceGrid(rows, cols, std::move(values));
}

Role role_field(const json& j) {
  const auto role = role_from_name(j.at("role").get<std::string>());
  if (!role) throw ProtocolError("unknown role " + j.at("role").dump());
  return *role;
}

}  // namespace

std::string_view role_name(Role r) noexcept { return r == Role::semantic ? "semantic" : "safety"; }

std::optional<Role> role_from_name(std::string_view name) noexcept {
  if (name == "semantic") return Role::semantic;
  if (name == "safety") return Role::safety;
  return std::nullopt;
}

std::string_view event_name(SessionEventKind k) noexcept { return kEventNames[static_cast<std::size_t>(k)]; }

std::string base64_encode(std::string_view bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64: length is not a multiple of 4");
  std::string out(b64::decoded_size(text.size()), '\0');
  const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  // The decoder stops at the first character outside the alphabet; '=' padding is the only legal stop.
  for (std::size_t i = read; i < text.size(); ++i) {
    if (text[i] != '=' || text.size() - i > 2) throw ProtocolError("base64: invalid character");
  }
  out.resize(written);
  return out;
}

std::string encode(const WireMessage& msg) {
  json j = {{"schema", kWireSchema}, {"seq", msg.seq}};
  std::visit(overloaded{
                 [&](const StateFrame& f) {
                   j["type"] = "state_frame";
                   j["tick"] = f.tick;
                   j["speed_kmh"] = f.speed_kmh;
                   j["light_phase"] = f.light_phase ? json(std::string(phase_name(*f.light_phase))) : json(nullptr);
                   if (f.semantic_view) j["semantic_view"] = grid_json(*f.semantic_view);
                   if (f.clear_view) j["clear_view"] = appearance_json(*f.clear_view);
                 },
                 [&](const ControlInput& c) {
                   j["type"] = "control_input";
                   j["role"] = std::string(role_name(c.role));
                   j["cmd"] = c.cmd;
                 },
                 [&](const InterventionLabel& l) {
                   j["type"] = "intervention_label";
                   j["cause"] = std::string(cause_name(l.cause));
                   j["comment"] = l.comment;
                 },
                 [&](const SessionEvent& e) {
                   j["type"] = "session_event";
                   j["event"] = std::string(event_name(e.kind));
                   if (!e.record_id.empty()) j["record_id"] = e.record_id;
                   if (!e.detail.empty()) j["detail"] = e.detail;
                 },
                 [&](const RoleClaim& r) {
                   j["type"] = "role_claim";
                   j["role"] = std::string(role_name(r.role));
                 },
                 [&](const Rejection& r) {
                   j["type"] = "rejection";
                   j["reason"] = r.reason;
                 },
             },
             msg.body);
  return j.dump();
}

WireMessage decode(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) throw ProtocolError("message is not an object");
    if (j.value("schema", std::string{}) != kWireSchema) throw ProtocolError("schema must be aeye-wire/1");
    WireMessage msg;
    msg.seq = j.at("seq").get<std::uint64_t>();
    const std::string type = j.at("type").get<std::string>();
    if (type == "state_frame") {
      StateFrame f;
      f.tick = j.at("tick").get<std::uint64_t>();
      f.speed_kmh = j.at("speed_kmh").get<double>();
      if (const auto it = j.find("light_phase"); it != j.end() && !it->is_null()) {
        f.light_phase = phase_from_name(it->get<std::string>());
        if (!f.light_phase) throw ProtocolError("unknown light phase " + it->dump());
      }
      if (j.contains("semantic_view")) f.semantic_view = grid_from_json(j.at("semantic_view"));
      if (j.contains("clear_view")) f.clear_view = appearance_from_json(j.at("clear_view"));
      msg.body = std::move(f);
    } else if (type == "control_input") {
      ControlInput c{role_field(j), j.at("cmd").get<ControlCommand>()};
      if (!is_finite(c.cmd) || !in_range(c.cmd)) throw ProtocolError("control_input: command out of range");
      msg.body = c;
    } else if (type == "intervention_label") {
      const auto cause = cause_from_name(j.at("cause").get<std::string>());
      if (!cause) throw ProtocolError("unknown cause " + j.at("cause").dump());
      msg.body = InterventionLabel{*cause, j.value("comment", std::string{})};
    } else if (type == "session_event") {
      const std::string name = j.at("event").get<std::string>();
      std::optional<SessionEventKind> kind;
      for (std::size_t k = 0; k < kEventNames.size(); ++k) {
        if (kEventNames[k] == name) kind = static_cast<SessionEventKind>(k);
      }
      if (!kind) throw ProtocolError("unknown session event " + name);
      msg.body = SessionEvent{*kind, j.value("record_id", std::string{}), j.value("detail", std::string{})};
    } else if (type == "role_claim") {
      msg.body = RoleClaim{role_field(j)};
    } else if (type == "rejection") {
      msg.body = Rejection{j.at("reason").get<std::string>()};
    } else {
      throw ProtocolError("unknown message type " + type);
    }
    return msg;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad field: ") + e.what());
  } catch (const InputError& e) {
    throw ProtocolError(e.what());
  }
}

}  // namespace aeye
