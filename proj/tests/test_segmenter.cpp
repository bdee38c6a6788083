#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "motionprog/segmenter.hpp"
#include "motionprog/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace motionprog;

namespace {

PoseSequence single_joint(const std::vector<Point>& pts) {
  PoseSequence seq;
  seq.joints = {"nose"};
  for (auto p : pts) seq.frames.push_back({{p.x, p.y, 1.0}});
  return seq;
}

PoseSequence random_walk(std::uint64_t seed, int frames, int joints) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 3.0);
  PoseSequence seq;
  for (int j = 0; j < joints; ++j) seq.joints.push_back("j" + std::to_string(j));
  std::vector<Point> at(joints, Point{256, 256});
  for (int t = 0; t < frames; ++t) {
    std::vector<Keypoint> row;
    for (auto& p : at) {
      p = p + Point{step(rng), step(rng)};
      row.push_back({p.x, p.y, 1.0});
    }
    seq.frames.push_back(row);
  }
  return seq;
}

// Cost of frames [a, b): best single-primitive error summed over joints.
double oracle_cost(const PoseSequence& seq, int a, int b) {
  double cost = 0.0;
  for (std::size_t j = 0; j < seq.joint_count(); ++j) {
    std::vector<Point> pts;
    for (int t = a; t < b; ++t) pts.push_back(seq.frames[t][j].position());
    cost += fit_best(pts).error;
  }
  return cost;
}

double naive_program_error(const ConcreteProgram& program, const PoseSequence& seq) {
  double err = 0.0;
  for (std::size_t j = 0; j < program.joints.size(); ++j) {
    int frame = 0;
    for (const auto& prim : program.tracks[j])
      for (const auto& p : execute_primitive(prim)) {
        const auto& k = seq.frames[frame++][j];
        err += (p.x - k.x) * (p.x - k.x) + (p.y - k.y) * (p.y - k.y);
      }
  }
  return err;
}

}  // namespace

TEST(AdaptiveLambda, ConstantKeypointsGiveZero) {
  auto seq = single_joint(std::vector<Point>(40, Point{12.5, 7.0}));
  SegmentationConfig cfg;
  for (std::size_t t = 0; t < 40; ++t) EXPECT_EQ(adaptive_lambda(seq, t, cfg), 0.0);
}

TEST(AdaptiveLambda, QuadraticInScale) {
  auto seq = random_walk(3, 50, 3);
  auto doubled = seq;
  for (auto& row : doubled.frames)
    for (auto& k : row) {
      k.x *= 2;
      k.y *= 2;
    }
  SegmentationConfig cfg;
  for (std::size_t t = 0; t < 50; t += 7) {
    const double a = adaptive_lambda(seq, t, cfg);
    EXPECT_NEAR(adaptive_lambda(doubled, t, cfg), 4 * a, 1e-9 * a);
  }
}

TEST(AdaptiveLambda, UnitSpeedRamp) {
  std::vector<Point> pts;
  for (int t = 0; t < 100; ++t) pts.push_back({static_cast<double>(t), 3.0});
  auto seq = single_joint(pts);
  SegmentationConfig cfg;
  cfg.lambda_coeff = 0.25;
  // variance of {0..30} is (31^2 - 1) / 12 = 80
  for (std::size_t t = 15; t < 85; ++t) EXPECT_NEAR(adaptive_lambda(seq, t, cfg), 80 * 0.25, 1e-9);
  // truncated to {0..15} at the first frame: (16^2 - 1) / 12
  EXPECT_NEAR(adaptive_lambda(seq, 0, cfg), 0.25 * 255.0 / 12.0, 1e-9);
  EXPECT_THROW(adaptive_lambda(seq, 100, cfg), StructuralError);
}

TEST(SegmentationConfig, Validation) {
  SegmentationConfig cfg;
  cfg.lambda_window = 30;
  EXPECT_THROW(validate(cfg), StructuralError);
  cfg = {};
  cfg.min_segment = 1;
  EXPECT_THROW(validate(cfg), StructuralError);
  cfg = {};
  cfg.lambda_coeff = -1;
  EXPECT_THROW(validate(cfg), StructuralError);
  cfg = {};
  cfg.max_segment = 1;
  EXPECT_THROW(validate(cfg), StructuralError);
}

TEST(Segment, MatchesExhaustiveEnumeration) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const int n = 6 + static_cast<int>(seed % 10);
    const auto seq = random_walk(100 + seed, n, 1 + static_cast<int>(seed % 2));
    SegmentationConfig cfg;
    cfg.lambda_coeff = 0.05 * (seed % 4);
    const auto lambda = lambda_profile(seq, cfg);
    double best = std::numeric_limits<double>::infinity();
    // every subset of interior boundaries 2..n-2
    const int interior = n - 3;
    for (unsigned mask = 0; mask < (1u << interior); ++mask) {
      std::vector<int> bounds{0};
      for (int i = 0; i < interior; ++i)
        if (mask & (1u << i)) bounds.push_back(i + 2);
      bounds.push_back(n);
      bool ok = true;
      for (std::size_t k = 0; k + 1 < bounds.size(); ++k) ok = ok && bounds[k + 1] - bounds[k] >= 2;
      if (!ok) continue;
      double total = 0.0;
      for (std::size_t k = 0; k + 1 < bounds.size(); ++k)
        total = total + oracle_cost(seq, bounds[k], bounds[k + 1]) + lambda[bounds[k + 1] - 1];
      best = std::min(best, total);
    }
    EXPECT_EQ(segment_detailed(seq, cfg).objective, best) << "seed " << seed;
  }
}

TEST(Segment, LambdaLimitsOnFortyFrames) {
  auto fixture = fixtures::three_primitive_fixture(5, 2.0);
  auto spec = fixture.spec;
  // trim to 40 frames: first primitive is 20..40 frames, so cut inside
  const auto seq_full = generate_synthetic(spec);
  PoseSequence seq = seq_full;
  seq.frames.resize(40);
  SegmentationConfig huge;
  huge.lambda_coeff = 1e9;
  EXPECT_EQ(segment(seq, huge).segment_count(), 1);
  SegmentationConfig zero;
  zero.lambda_coeff = 0;
  const auto fragmented = segment(seq, zero);
  EXPECT_EQ(fragmented.segment_count(), 20);
  for (std::size_t k = 0; k < fragmented.boundaries.size(); ++k)
    EXPECT_EQ(fragmented.boundaries[k], static_cast<int>(2 * k));
}

TEST(Segment, LineThenArcSplitsAtTheJunction) {
  const LinePrimitive line{{100, 300}, {3, -1}, 30};
  const double radius = 60;
  const Vector v{2.0, 2.5};
  const Point at = fixtures::junction_start(line, v);
  const double speed = norm(v);
  const double start_angle = std::atan2(v.y, v.x) - kPi / 2;
  const Point center = at - radius * Point{std::cos(start_angle), std::sin(start_angle)};
  const CirclePrimitive circle{center, radius, speed / radius, start_angle, 30};
  SyntheticSpec spec;
  spec.tracks = {{"left_wrist", {line, circle}}};
  const auto seq = generate_synthetic(spec);
  SegmentationConfig cfg;
  const auto result = segment_detailed(seq, cfg);
  EXPECT_EQ(result.program.boundaries, (std::vector<int>{0, 30, 60}));

  // brute force over every partition with at most four segments
  const int n = 60;
  const auto lambda = lambda_profile(seq, cfg);
  std::vector<std::vector<double>> cost(n + 1, std::vector<double>(n + 1, 0.0));
  for (int a = 0; a < n; ++a)
    for (int b = a + 2; b <= n; ++b) cost[a][b] = oracle_cost(seq, a, b) + lambda[b - 1];
  double best = cost[0][n];
  std::vector<int> arg{0, n};
  for (int a = 2; a <= n - 2; ++a) {
    if (cost[0][a] + cost[a][n] < best) best = cost[0][a] + cost[a][n], arg = {0, a, n};
    for (int b = a + 2; b <= n - 2; ++b) {
      const double three = cost[0][a] + cost[a][b] + cost[b][n];
      if (three < best) best = three, arg = {0, a, b, n};
      for (int c = b + 2; c <= n - 2; ++c) {
        const double four = cost[0][a] + cost[a][b] + cost[b][c] + cost[c][n];
        if (four < best) best = four, arg = {0, a, b, c, n};
      }
    }
  }
  EXPECT_EQ(arg, (std::vector<int>{0, 30, 60}));
  EXPECT_NEAR(result.objective, best, 1e-9 * best);
}

TEST(Segment, NoiselessFixturesRecoverBoundaries) {
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = fixtures::three_primitive_fixture(seed, 0.0, 2, false);
    const auto seq = generate_synthetic(f.spec);
    const auto program = segment(seq, {});
    ASSERT_EQ(program.segment_count(), 3) << "seed " << seed;
    for (std::size_t k = 0; k < 4; ++k)
      EXPECT_LE(std::abs(program.boundaries[k] - f.boundaries[k]), 1) << "seed " << seed;
    if (program.boundaries == f.boundaries) {
      ++exact;
      EXPECT_LT(program_error(program, seq), 1e-9);
    }
  }
  EXPECT_GE(exact, 16);
}

TEST(Segment, SegmentCountNeverGrowsWithLambda) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto seq = generate_synthetic(fixtures::three_primitive_fixture(seed, 2.0).spec);
    int previous = std::numeric_limits<int>::max();
    for (double coeff : {0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
      SegmentationConfig cfg;
      cfg.lambda_coeff = coeff;
      const int count = segment(seq, cfg).segment_count();
      EXPECT_LE(count, previous) << "seed " << seed << " coeff " << coeff;
      previous = count;
    }
  }
}

TEST(Segment, SharedBoundariesAndDeterminism) {
  const auto seq = generate_synthetic(fixtures::three_primitive_fixture(9, 2.0, 4).spec);
  const auto a = segment(seq, {});
  const auto b = segment(seq, {});
  EXPECT_EQ(dump_json(program_to_json(a)), dump_json(program_to_json(b)));
  for (const auto& track : a.tracks) {
    ASSERT_EQ(track.size(), a.boundaries.size() - 1);
    for (std::size_t k = 0; k < track.size(); ++k)
      EXPECT_EQ(duration(track[k]), a.boundaries[k + 1] - a.boundaries[k]);
  }
}

TEST(Segment, MaxSegmentIsRespected) {
  const auto seq = generate_synthetic(fixtures::three_primitive_fixture(2, 1.0).spec);
  SegmentationConfig cfg;
  cfg.lambda_coeff = 1e9;
  cfg.max_segment = 17;
  const auto p = segment(seq, cfg);
  for (std::size_t k = 0; k + 1 < p.boundaries.size(); ++k) {
    EXPECT_LE(p.boundaries[k + 1] - p.boundaries[k], 17);
    EXPECT_GE(p.boundaries[k + 1] - p.boundaries[k], 2);
  }
}

TEST(Segment, TooShortInput) {
  auto seq = single_joint({{1, 1}});
  EXPECT_THROW(segment(seq, {}), InputTooShortError);
  SegmentationConfig cfg;
  cfg.min_segment = 5;
  EXPECT_THROW(segment(single_joint(std::vector<Point>(4, Point{})), cfg), InputTooShortError);
}

TEST(ProgramError, MatchesNaiveSumAndObjective) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto seq = generate_synthetic(fixtures::three_primitive_fixture(seed, 2.0, 3).spec);
    SegmentationConfig cfg;
    const auto result = segment_detailed(seq, cfg);
    const double err = program_error(result.program, seq);
    const double naive = naive_program_error(result.program, seq);
    EXPECT_NEAR(err, naive, 1e-9 * naive);
    const auto lambda = lambda_profile(seq, cfg);
    double penalty = 0.0;
    for (std::size_t k = 1; k < result.program.boundaries.size(); ++k)
      penalty += lambda[result.program.boundaries[k] - 1];
    EXPECT_NEAR(err, result.objective - penalty, 1e-9 * result.objective);
  }
}

TEST(ProgramError, StationaryProgramOnConstantSequence) {
  auto seq = single_joint(std::vector<Point>(6, Point{4, 5}));
  ConcreteProgram p;
  p.joints = {"nose"};
  p.boundaries = {0, 6};
  p.tracks = {{StationaryPrimitive{{4, 5}, 6}}};
  EXPECT_EQ(program_error(p, seq), 0.0);
  seq.frames.pop_back();
  EXPECT_THROW(program_error(p, seq), StructuralError);
}

TEST(ProgramJson, RoundTripIsByteIdentical) {
  const auto seq = generate_synthetic(fixtures::three_primitive_fixture(4, 2.0, 3).spec);
  const auto program = segment(seq, {});
  const auto text = dump_json(program_to_json(program));
  const auto back = program_from_json(parse_json(text));
  EXPECT_EQ(back.boundaries, program.boundaries);
  EXPECT_EQ(back.tracks, program.tracks);
  EXPECT_EQ(dump_json(program_to_json(back)), text);
}

TEST(ProgramJson, RejectsInconsistentFiles) {
  const auto good = parse_json(
      R"({"version":1,"fps":30,"width":512,"height":512,"joints":["nose"],"boundaries":[0,3],)"
      R"("tracks":{"nose":[{"type":"stationary","point":[1,2],"time":3}]}})");
  EXPECT_NO_THROW(program_from_json(good));
  auto bad_time = good;
  bad_time["tracks"]["nose"][0]["time"] = 4;
  EXPECT_THROW(program_from_json(bad_time), StructuralError);
  auto missing = good;
  missing["joints"] = {"nose", "left_eye"};
  EXPECT_THROW(program_from_json(missing), StructuralError);
  auto version = good;
  version["version"] = 2;
  EXPECT_THROW(program_from_json(version), StructuralError);
}
