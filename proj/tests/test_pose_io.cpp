#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "motionprog/pose_io.hpp"
#include "motionprog/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace motionprog;

namespace {

PoseSequence random_sequence(std::uint64_t seed, std::size_t frames, std::size_t joints) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-50.0, 600.0);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  PoseSequence seq;
  seq.fps = 29.97;
  seq.width = 640;
  seq.height = 480;
  for (std::size_t j = 0; j < joints; ++j) seq.joints.emplace_back(kCocoJoints[j]);
  for (std::size_t t = 0; t < frames; ++t) {
    seq.frames.emplace_back();
    for (std::size_t j = 0; j < joints; ++j) seq.frames.back().push_back({coord(rng), coord(rng), conf(rng)});
  }
  return seq;
}

}  // namespace

TEST(ParseKeypoints, CsvTwoFramesOneJoint) {
  const char* text =
      "frame,joint,x,y,confidence\n"
      "0,nose,0,0,1\n"
      "1,nose,1,1,1\n";
  auto seq = parse_keypoints(text, PoseFormat::kCsv);
  ASSERT_EQ(seq.frame_count(), 2u);
  ASSERT_EQ(seq.joint_count(), 1u);
  EXPECT_EQ(seq.frames[1][0].position(), (Point{1, 1}));
}

TEST(ParseKeypoints, CsvMissingConfidenceDefaultsToOne) {
  auto seq = parse_keypoints("frame,joint,x,y\n0,nose,3,4\n", PoseFormat::kCsv);
  EXPECT_EQ(seq.frames[0][0].confidence, 1.0);
  auto seq2 = parse_keypoints("frame,joint,x,y,confidence\n0,nose,3,4,\n", PoseFormat::kCsv);
  EXPECT_EQ(seq2.frames[0][0].confidence, 1.0);
}

TEST(ParseKeypoints, JsonPairsAcceptedWithDefaultConfidence) {
  auto seq = parse_keypoints(
      R"({"fps":25,"width":100,"height":80,"joints":["nose","left_eye"],"frames":[[[1,2],[3,4,0.5]]]})",
      PoseFormat::kJson);
  EXPECT_EQ(seq.frames[0][0].confidence, 1.0);
  EXPECT_EQ(seq.frames[0][1].confidence, 0.5);
  EXPECT_EQ(seq.fps, 25.0);
  EXPECT_EQ(seq.width, 100);
}

TEST(ParseKeypoints, JsonFrameMissingJointIsStructuralError) {
  EXPECT_THROW(parse_keypoints(R"({"fps":30,"width":512,"height":512,"joints":["nose","left_eye"],
                                  "frames":[[[0,0,1],[1,1,1]],[[0,0,1]]]})",
                               PoseFormat::kJson),
               StructuralError);
}

TEST(ParseKeypoints, CsvFrameMissingJointIsStructuralError) {
  EXPECT_THROW(parse_keypoints("frame,joint,x,y,confidence\n0,nose,0,0,1\n0,left_eye,1,1,1\n"
                               "1,nose,0,0,1\n2,nose,0,0,1\n2,left_eye,0,0,1\n",
                               PoseFormat::kCsv),
               StructuralError);
}

TEST(ParseKeypoints, MalformedInputReportsRecord) {
  try {
    parse_keypoints("frame,joint,x,y,confidence\n0,nose,0,0,1\n1,nose,abc,0,1\n", PoseFormat::kCsv);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.record(), 3u);
  }
  EXPECT_THROW(parse_keypoints("{\"fps\": 30,", PoseFormat::kJson), ParseError);
  EXPECT_THROW(parse_keypoints("x,y\n", PoseFormat::kCsv), ParseError);
}

TEST(ParseKeypoints, FiftyEightFrameSeventeenJointFile) {
  auto seq = random_sequence(3, 58, 17);
  auto parsed = parse_keypoints(serialize_keypoints(seq, PoseFormat::kJson), PoseFormat::kJson);
  EXPECT_EQ(parsed.frame_count(), 58u);
  EXPECT_EQ(parsed.joint_count(), 17u);
  for (std::size_t j = 0; j < 17; ++j) EXPECT_EQ(parsed.joints[j], kCocoJoints[j]);
}

TEST(ParseKeypoints, RoundTripIsIdentityInBothFormats) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto seq = random_sequence(seed, 1 + seed % 7, 1 + seed % 17);
    for (auto format : {PoseFormat::kJson, PoseFormat::kCsv}) {
      const auto text = serialize_keypoints(seq, format);
      const auto parsed = parse_keypoints(text, format);
      EXPECT_EQ(parsed, seq);
      EXPECT_EQ(serialize_keypoints(parsed, format), text);
    }
  }
}

TEST(Normalize, HalvesCoordinates) {
  PoseSequence seq{{"nose"}, {{{100, 300, 1}}, {{2, 4, 1}}}, 30, 1024, 1024};
  auto out = normalize(seq, 512, 512);
  EXPECT_EQ(out.frames[0][0].position(), (Point{50, 150}));
  EXPECT_EQ(out.frames[1][0].position(), (Point{1, 2}));
  EXPECT_EQ(out.width, 512);
}

TEST(Normalize, IdentityAndAnisotropicScale) {
  PoseSequence seq{{"nose"}, {{{320, 240, 1}}}, 30, 640, 480};
  EXPECT_EQ(normalize(seq, 640, 480), seq);
  EXPECT_EQ(normalize(seq, 512, 512).frames[0][0].position(), (Point{256, 256}));
}

TEST(Normalize, CompositionMatchesDirect) {
  auto seq = random_sequence(11, 10, 5);
  auto twice = normalize(normalize(seq, 333, 777), 512, 512);
  auto once = normalize(seq, 512, 512);
  for (std::size_t t = 0; t < seq.frame_count(); ++t)
    for (std::size_t j = 0; j < seq.joint_count(); ++j) {
      EXPECT_NEAR(twice.frames[t][j].x, once.frames[t][j].x, 1e-9 * std::abs(once.frames[t][j].x) + 1e-12);
      EXPECT_NEAR(twice.frames[t][j].y, once.frames[t][j].y, 1e-9 * std::abs(once.frames[t][j].y) + 1e-12);
    }
}

TEST(FillGaps, InterpolatesMidpoint) {
  PoseSequence seq{{"nose"}, {{{0, 0, 1}}, {{9, 9, 0.1}}, {{2, 2, 1}}}, 30, 512, 512};
  auto out = fill_gaps(seq, 0.5);
  EXPECT_EQ(out.frames[1][0].position(), (Point{1, 1}));
  EXPECT_EQ(out.frames[1][0].confidence, 0.5);
}

TEST(FillGaps, AllConfidentIsIdentity) {
  PoseSequence seq{{"nose"}, {{{0, 0, 1}}, {{5, 1, 0.9}}, {{2, 2, 1}}}, 30, 512, 512};
  EXPECT_EQ(fill_gaps(seq, 0.5), seq);
}

TEST(FillGaps, ExtendsEdges) {
  PoseSequence seq{{"nose"}, {{{7, 8, 1}}, {{1, 1, 0.0}}, {{2, 2, 0.2}}}, 30, 512, 512};
  auto out = fill_gaps(seq, 0.3);
  EXPECT_EQ(out.frames[1][0].position(), (Point{7, 8}));
  EXPECT_EQ(out.frames[2][0].position(), (Point{7, 8}));
  PoseSequence lead{{"nose"}, {{{0, 0, 0.0}}, {{3, 4, 1}}}, 30, 512, 512};
  EXPECT_EQ(fill_gaps(lead, 0.3).frames[0][0].position(), (Point{3, 4}));
}

TEST(FillGaps, NoConfidentFramesIsUnrecoverable) {
  PoseSequence seq{{"nose"}, {{{0, 0, 0.1}}, {{1, 1, 0.2}}}, 30, 512, 512};
  EXPECT_THROW(fill_gaps(seq, 0.5), UnrecoverableTrackError);
}

TEST(GenerateSynthetic, ZeroNoiseStationary) {
  SyntheticSpec spec;
  spec.tracks = {{"nose", {StationaryPrimitive{{5, 5}, 10}}}};
  auto seq = generate_synthetic(spec);
  ASSERT_EQ(seq.frame_count(), 10u);
  for (const auto& f : seq.frames) EXPECT_EQ(f[0].position(), (Point{5, 5}));
}

TEST(GenerateSynthetic, DeterministicForSeed) {
  auto f = fixtures::three_primitive_fixture(4, 2.0);
  auto a = serialize_keypoints(generate_synthetic(f.spec), PoseFormat::kCsv);
  auto b = serialize_keypoints(generate_synthetic(f.spec), PoseFormat::kCsv);
  EXPECT_EQ(a, b);
}

TEST(GenerateSynthetic, NoiseHasRequestedSpread) {
  SyntheticSpec spec;
  spec.tracks = {{"nose", {LinePrimitive{{10, 20}, {1.5, -0.5}, 400}}}};
  spec.noise_sigma = 2.0;
  spec.seed = 7;
  auto noisy = generate_synthetic(spec);
  spec.noise_sigma = 0.0;
  auto clean = generate_synthetic(spec);
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < noisy.frame_count(); ++t)
    for (double d : {noisy.frames[t][0].x - clean.frames[t][0].x,
                     noisy.frames[t][0].y - clean.frames[t][0].y}) {
      sum += d;
      sq += d * d;
      ++n;
    }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, 2.0, 0.4);
}

TEST(GenerateSynthetic, RejectsMismatchedTrackLengths) {
  SyntheticSpec spec;
  spec.tracks = {{"a", {StationaryPrimitive{{0, 0}, 5}}}, {"b", {StationaryPrimitive{{0, 0}, 6}}}};
  EXPECT_THROW(generate_synthetic(spec), StructuralError);
  spec.tracks = {{"a", {StationaryPrimitive{{0, 0}, 1}}}};
  EXPECT_THROW(generate_synthetic(spec), StructuralError);
}
