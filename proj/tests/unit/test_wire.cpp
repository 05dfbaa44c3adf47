#include <gtest/gtest.h>

#include <cmath>

#include "aeye/error.hpp"
#include "aeye/rng.hpp"
#include "aeye/wire.hpp"
#include "json.hpp"

using namespace aeye;
using nlohmann::json;

namespace {

SemanticGrid random_grid(Rng& rng, int rows, int cols) {
  SemanticGrid g(rows, cols);
  for (ClassId& c : g.cells()) c = static_cast<ClassId>(rng.below(kNumClasses));
  return g;
}

// Values already on the 1/255 lattice survive the 8-bit wire encoding exactly.
AppearanceGrid lattice_appearance(Rng& rng, int rows, int cols) {
  AppearanceGrid a(rows, cols);
  auto v = [&] { return static_cast<float>(rng.below(256)) / 255.0f; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) a.set(r, c, {v(), v(), v()});
  return a;
}

WireMessage roundtrip(const WireMessage& m) { return decode(encode(m)); }

}  // namespace

TEST(Wire, EveryMessageTypeRoundTrips) {
  Rng rng(1);
  const std::vector<WireMessage> msgs = {
      {1, StateFrame{7, random_grid(rng, 5, 6), std::nullopt, 31.5, LightPhase::red}},
      {2, StateFrame{8, std::nullopt, lattice_appearance(rng, 4, 3), 0.0, std::nullopt}},
      {3, ControlInput{Role::safety, {-0.25, 0.0, 0.8}}},
      {4, InterventionLabel{InterventionCause::boredom, "just testing ä"}},
      {5, SessionEvent{SessionEventKind::cc_captured, "live-0001", ""}},
      {6, SessionEvent{SessionEventKind::paused, "", "safety driver disconnected"}},
      {7, RoleClaim{Role::semantic}},
      {8, Rejection{"role semantic is already claimed"}},
  };
  for (const WireMessage& m : msgs) EXPECT_EQ(roundtrip(m), m) << encode(m);
}

TEST(Wire, AppearanceIsQuantizedToEightBits) {
  AppearanceGrid a(2, 2);
  a.set(0, 0, {0.1234f, 0.5f, 0.999f});
  const WireMessage back = roundtrip({1, StateFrame{0, std::nullopt, a, 0.0, std::nullopt}});
  const Rgb got = std::get<StateFrame>(back.body).clear_view->at(0, 0);
  EXPECT_NEAR(got.r, 0.1234f, 0.5f / 255.0f + 1e-6f);
  EXPECT_NEAR(got.g, 0.5f, 0.5f / 255.0f + 1e-6f);
  EXPECT_NEAR(got.b, 0.999f, 0.5f / 255.0f + 1e-6f);
  EXPECT_FLOAT_EQ(got.r * 255.0f, std::round(got.r * 255.0f));
}

TEST(Wire, EnvelopeCarriesSchemaSeqAndType) {
  const json j = json::parse(encode({42, ControlInput{Role::semantic, {0.0, 0.5, 0.0}}}));
  EXPECT_EQ(j.at("schema"), kWireSchema);
  EXPECT_EQ(j.at("seq"), 42);
  EXPECT_EQ(j.at("type"), "control_input");
  EXPECT_EQ(j.at("role"), "semantic");
}

TEST(Wire, SemanticViewIsBase64OfCellBytes) {
  const SemanticGrid g(1, 3, ClassId::pedestrian);
  const json j = json::parse(encode({1, StateFrame{0, g, std::nullopt, 0.0, std::nullopt}}));
  const std::string cells = base64_decode(j.at("semantic_view").at("cells").get<std::string>());
  EXPECT_EQ(cells, std::string(3, '\x06'));
}

TEST(Wire, ProtocolErrors) {
  const std::string good = encode({1, RoleClaim{Role::safety}});
  json j = json::parse(good);
  EXPECT_THROW(decode("{not json"), ProtocolError);
  EXPECT_THROW(decode("[]"), ProtocolError);

  json bad = j;
  bad["schema"] = "aeye-wire/0";
  EXPECT_THROW(decode(bad.dump()), ProtocolError);
  bad = j;
  bad["type"] = "teleport";
  EXPECT_THROW(decode(bad.dump()), ProtocolError);
  bad = j;
  bad["role"] = "passenger";
  EXPECT_THROW(decode(bad.dump()), ProtocolError);
  bad = j;
  bad.erase("seq");
  EXPECT_THROW(decode(bad.dump()), ProtocolError);

  json input = json::parse(encode({2, ControlInput{Role::safety, {0, 0, 1}}}));
  input["cmd"]["brake"] = 1.5;
  EXPECT_THROW(decode(input.dump()), ProtocolError);

  json frame = json::parse(encode({3, StateFrame{0, SemanticGrid(2, 2), std::nullopt, 0.0, std::nullopt}}));
  frame["semantic_view"]["cells"] = base64_encode(std::string("\x01\x02\x09\x00", 4));
  EXPECT_THROW(decode(frame.dump()), ProtocolError);
  frame["semantic_view"]["cells"] = base64_encode("\x01\x02");
  EXPECT_THROW(decode(frame.dump()), ProtocolError);
  frame["semantic_view"]["cells"] = "@@@";
  EXPECT_THROW(decode(frame.dump()), ProtocolError);
}

TEST(Base64, KnownVectorsAndRoundTrip) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
  EXPECT_EQ(base64_encode("foo"), "Zm9v");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    std::string s(rng.below(50), '\0');
    for (char& c : s) c = static_cast<char>(rng.below(256));
    EXPECT_EQ(base64_decode(base64_encode(s)), s);
  }
  EXPECT_THROW(base64_decode("Zm9"), ProtocolError);
}
