#include <gtest/gtest.h>

#include <fstream>

#include "aeye/capture.hpp"
#include "aeye/error.hpp"
#include "aeye/rng.hpp"
#include "helpers.hpp"

using namespace aeye;
using aeye::test::TempDir;

namespace {

FrameRecord frame(std::uint64_t tick, std::uint64_t seed = 0) {
  Rng rng(seed * 1000 + tick);
  FrameRecord f;
  f.tick_index = tick;
  f.timestamp = static_cast<double>(tick) * 0.1;
  f.truth = SemanticGrid(6, 5);
  f.predicted = SemanticGrid(6, 5);
  f.appearance = AppearanceGrid(6, 5);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 5; ++c) {
      f.truth.set(r, c, static_cast<ClassId>(rng.below(kNumClasses)));
      f.predicted.set(r, c, static_cast<ClassId>(rng.below(kNumClasses)));
      f.appearance.set(r, c, {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()), 0.25f});
    }
  }
  f.ego_speed_kmh = rng.uniform(0.0, 50.0);
  f.effective_cmd = {rng.uniform(-1.0, 1.0), rng.uniform(), rng.uniform()};
  return f;
}

CornerCaseRecord full_record(const std::string& id, std::uint64_t first_tick = 100) {
  RollingBuffer buf;
  for (std::uint64_t t = first_tick; t < first_tick + 30; ++t) buf.push(frame(t, first_tick));
  InterventionEvent ev{0.1 * static_cast<double>(first_tick + 30), 1.234567891234, InterventionCause::overlooked_walker,
                       "ped \"stepped\" out"};
  CornerCaseRecord r = snapshot(buf, ev, id);
  r.km_driven_at_event = 1.234567891234;
  r.ride_duration_min = 2.2;
  return r;
}

}  // namespace

TEST(RollingBuffer, ThirtyPushesFillInOrder) {
  RollingBuffer buf(30);
  for (std::uint64_t t = 1; t <= 30; ++t) buf.push(frame(t));
  EXPECT_EQ(buf.size(), 30u);
  EXPECT_TRUE(buf.full());
  EXPECT_EQ(buf.entries().front().tick_index, 1u);
}

TEST(RollingBuffer, ThirtyFirstPushEvictsOldest) {
  RollingBuffer buf(30);
  for (std::uint64_t t = 1; t <= 31; ++t) buf.push(frame(t));
  EXPECT_EQ(buf.size(), 30u);
  EXPECT_EQ(buf.entries().front().tick_index, 2u);
  EXPECT_EQ(buf.entries().back().tick_index, 31u);
}

TEST(RollingBuffer, NonIncreasingTickIsSequencingError) {
  RollingBuffer buf(5);
  buf.push(frame(4));
  EXPECT_THROW(buf.push(frame(4)), SequencingError);
  EXPECT_THROW(buf.push(frame(3)), SequencingError);
  EXPECT_EQ(buf.size(), 1u);
}

TEST(RollingBuffer, SizeNeverExceedsCapacityOverRandomSequences) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cap = 1 + rng.below(40);
    RollingBuffer buf(cap);
    std::uint64_t tick = 0;
    const int pushes = static_cast<int>(rng.below(120));
    for (int i = 0; i < pushes; ++i) {
      tick += 1 + rng.below(3);
      FrameRecord f;
      f.tick_index = tick;
      buf.push(f);
      ASSERT_LE(buf.size(), cap);
      ASSERT_EQ(buf.size(), std::min<std::size_t>(cap, static_cast<std::size_t>(i + 1)));
    }
    for (std::size_t i = 1; i < buf.size(); ++i) {
      EXPECT_LT(buf.entries()[i - 1].tick_index, buf.entries()[i].tick_index);
    }
  }
}

TEST(Snapshot, FullBufferGivesThirtyFramesAndClears) {
  RollingBuffer buf;
  for (std::uint64_t t = 10; t < 40; ++t) buf.push(frame(t));
  InterventionEvent ev{4.0, 0.02, InterventionCause::overlooked_walker, ""};
  const CornerCaseRecord r = snapshot(buf, ev, "cc-0001");
  EXPECT_EQ(r.frames.size(), 30u);
  EXPECT_EQ(r.event.cause, InterventionCause::overlooked_walker);
  EXPECT_NEAR(r.frames.back().timestamp - r.frames.front().timestamp, 2.9, 1e-9);
  EXPECT_GE(r.event.timestamp, r.frames.back().timestamp);
  EXPECT_TRUE(buf.empty());
  // A cleared buffer restarts its sequence.
  EXPECT_NO_THROW(buf.push(frame(40)));
}

TEST(Snapshot, UnderfullBufferIsCaptureError) {
  RollingBuffer buf;
  for (std::uint64_t t = 0; t < 29; ++t) buf.push(frame(t));
  EXPECT_THROW(snapshot(buf, {}, "x"), CaptureError);
  EXPECT_EQ(buf.size(), 29u);
}

TEST(Snapshot, FiftySnapshotsMakeFifteenHundredFrames) {
  RollingBuffer buf;
  std::size_t frames = 0;
  std::uint64_t tick = 0;
  for (int k = 0; k < 50; ++k) {
    for (int i = 0; i < 30; ++i) {
      FrameRecord f;
      f.tick_index = tick++;
      buf.push(f);
    }
    frames += snapshot(buf, {}, "r" + std::to_string(k)).frames.size();
  }
  EXPECT_EQ(frames, 1500u);
}

TEST(Persist, RoundTripIsExact) {
  TempDir tmp;
  const CornerCaseRecord r = full_record("cc-0001");
  persist(r, tmp.path());
  EXPECT_EQ(load(tmp.path(), "cc-0001"), r);
}

TEST(Persist, ManifestListsBothIds) {
  TempDir tmp;
  persist(full_record("cc-0001", 100), tmp.path());
  persist(full_record("cc-0002", 300), tmp.path());
  EXPECT_EQ(list_records(tmp.path()), (std::vector<std::string>{"cc-0001", "cc-0002"}));
}

TEST(Persist, IdCollisionIsStorageError) {
  TempDir tmp;
  persist(full_record("cc-0001"), tmp.path());
  EXPECT_THROW(persist(full_record("cc-0001", 500), tmp.path()), StorageError);
  EXPECT_THROW(persist(full_record("../escape"), tmp.path()), StorageError);
}

TEST(Persist, TruncatedFrameFileNamesTheFile) {
  TempDir tmp;
  persist(full_record("cc-0001"), tmp.path());
  const auto victim = tmp.path() / "cc-0001" / "frames" / "007.truth.pgm";
  ASSERT_TRUE(std::filesystem::exists(victim));
  std::filesystem::resize_file(victim, std::filesystem::file_size(victim) - 4);
  try {
    load(tmp.path(), "cc-0001");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.file(), victim.string());
  }
}

TEST(Persist, CorruptAppearanceAndManifest) {
  TempDir tmp;
  persist(full_record("cc-0001"), tmp.path());
  const auto app = tmp.path() / "cc-0001" / "frames" / "000.app.bin";
  std::filesystem::resize_file(app, 7);
  EXPECT_THROW(load(tmp.path(), "cc-0001"), FormatError);
  std::ofstream(tmp.path() / "cc-0001" / "manifest.json") << "{not json";
  EXPECT_THROW(load(tmp.path(), "cc-0001"), FormatError);
  EXPECT_THROW(load(tmp.path(), "nope"), FormatError);
}

TEST(Pgm, EncodeDecodeAndRejectBadIds) {
  const FrameRecord f = frame(3);
  EXPECT_EQ(decode_pgm(encode_pgm(f.truth), "t"), f.truth);
  std::string bytes = encode_pgm(f.truth);
  bytes.back() = static_cast<char>(9);
  EXPECT_THROW(decode_pgm(bytes, "t"), FormatError);
  EXPECT_EQ(decode_appearance(encode_appearance(f.appearance), 6, 5, "a"), f.appearance);
}
