#pragma once

// Synthetic fixtures with known ground truth, shared by unit and acceptance
// tests.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "motionprog/motionprog.hpp"

namespace motionprog::fixtures {

enum class PrimitiveKind { kCircle, kLine, kStationary };

// A random single primitive inside a 512x512 frame: circle arcs sweep at
// least 20 degrees, lines move 0.5..5 px/frame, durations are 10..60 frames.
inline ConcretePrimitive random_primitive(std::mt19937_64& rng, PrimitiveKind kind) {
  std::uniform_real_distribution<double> pos(100.0, 400.0);
  std::uniform_int_distribution<int> frames(10, 60);
  const int time = frames(rng);
  switch (kind) {
    case PrimitiveKind::kCircle: {
      std::uniform_real_distribution<double> radius(20.0, 150.0);
      std::uniform_real_distribution<double> sweep_deg(20.0, 300.0);
      std::uniform_real_distribution<double> angle(-kPi, kPi);
      std::bernoulli_distribution ccw(0.5);
      const double sweep = sweep_deg(rng) * kPi / 180.0 * (ccw(rng) ? 1.0 : -1.0);
      return CirclePrimitive{{pos(rng), pos(rng)}, radius(rng), sweep / (time - 1), angle(rng), time};
    }
    case PrimitiveKind::kLine: {
      std::uniform_real_distribution<double> speed(0.5, 5.0);
      std::uniform_real_distribution<double> angle(-kPi, kPi);
      const double s = speed(rng), a = angle(rng);
      return LinePrimitive{{pos(rng), pos(rng)}, {s * std::cos(a), s * std::sin(a)}, time};
    }
    default:
      return StationaryPrimitive{{pos(rng), pos(rng)}, time};
  }
}

inline Point end_point(const ConcretePrimitive& p) { return point_at(p, duration(p) - 1.0); }

// Where the primitive after `prev` starts when it leaves with `velocity`:
// half a step along each primitive. Neither primitive's extension passes
// through the other's boundary frame, so the true boundary is unique.
inline Point junction_start(const ConcretePrimitive& prev, Vector velocity) {
  return point_at(prev, duration(prev) - 0.5) + 0.5 * velocity;
}

struct ThreePrimitiveFixture {
  SyntheticSpec spec;
  std::vector<int> boundaries;  // ground truth, {0, b1, b2, n}
};

// Continuous three-primitive tracks for `joints` joints sharing boundaries.
// Moving primitives turn by at least 60 degrees at each boundary, last
// 20..40 frames and move at 3..6 px/frame; stationary segments (only with
// `allow_stationary`) last exactly 20 frames.
inline ThreePrimitiveFixture three_primitive_fixture(std::uint64_t seed, double sigma,
                                                     int joints = 2,
                                                     bool allow_stationary = true) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(20, 40);
  std::uniform_int_distribution<int> kind_pick(0, allow_stationary ? 2 : 1);
  std::uniform_real_distribution<double> speed(3.0, 6.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ThreePrimitiveFixture f;
  f.spec.noise_sigma = sigma;
  f.spec.seed = seed * 7919 + 17;
  std::vector<PrimitiveKind> kinds;
  std::vector<int> lengths;
  for (int k = 0; k < 3; ++k) {
    PrimitiveKind kind;
    do {
      kind = static_cast<PrimitiveKind>(kind_pick(rng));
    } while (k > 0 && kind == PrimitiveKind::kStationary && kinds.back() == kind);
    kinds.push_back(kind);
    lengths.push_back(kind == PrimitiveKind::kStationary ? 20 : len(rng));
  }
  f.boundaries = {0};
  for (int l : lengths) f.boundaries.push_back(f.boundaries.back() + l);

  static const char* kNames[] = {"left_wrist", "right_wrist", "left_elbow", "right_elbow",
                                 "left_ankle", "right_ankle"};
  for (int j = 0; j < joints; ++j) {
    SyntheticTrack track;
    track.joint = kNames[j % 6];
    double heading = 2.0 * kPi * unit(rng);
    std::optional<ConcretePrimitive> prev;
    for (int k = 0; k < 3; ++k) {
      const int time = lengths[k];
      ConcretePrimitive prim;
      // turn at least 60 degrees between moving primitives
      heading += (unit(rng) < 0.5 ? 1.0 : -1.0) * (kPi / 3.0 + unit(rng) * kPi / 2.0);
      const double v = speed(rng);
      const Vector step = kinds[k] == PrimitiveKind::kStationary
                              ? Vector{}
                              : v * Vector{std::cos(heading), std::sin(heading)};
      const Point at = prev ? junction_start(*prev, step)
                            : Point{200.0 + 60.0 * unit(rng), 200.0 + 60.0 * unit(rng)};
      switch (kinds[k]) {
        case PrimitiveKind::kStationary:
          prim = StationaryPrimitive{at, time};
          break;
        case PrimitiveKind::kLine:
          prim = LinePrimitive{at, {v * std::cos(heading), v * std::sin(heading)}, time};
          break;
        case PrimitiveKind::kCircle: {
          const double radius = 50.0 + 50.0 * unit(rng);
          const double omega = (unit(rng) < 0.5 ? 1.0 : -1.0) * v / radius;
          // centre to the side of the current heading so the arc starts at `at`
          const double start_angle = heading - (omega > 0 ? kPi / 2.0 : -kPi / 2.0);
          const Point center = at - radius * Point{std::cos(start_angle), std::sin(start_angle)};
          prim = CirclePrimitive{center, radius, omega, start_angle, time};
          heading += omega * time;
          break;
        }
      }
      prev = prim;
      track.primitives.push_back(prim);
    }
    f.spec.tracks.push_back(std::move(track));
  }
  return f;
}

struct RepetitionFixture {
  SyntheticSpec spec;
  int body_size = 2;
  int reps = 10;
  int body_frames = 0;  // frames per repetition
};

// Jumping-jack style motion: each wrist swings up along an arc around its
// shoulder and back down, `reps` times; with `pause` a short rest at the
// bottom makes the body three primitives long.
inline RepetitionFixture jumping_jack_fixture(std::uint64_t seed, double sigma, int reps = 10,
                                              bool pause = false) {
  RepetitionFixture f;
  f.reps = reps;
  f.body_size = pause ? 3 : 2;
  f.spec.noise_sigma = sigma;
  f.spec.seed = seed;
  const int swing = 15;
  const int rest = 8;
  const double radius = 90.0;
  const double sweep = 110.0 * kPi / 180.0;
  const double omega = sweep / swing;
  f.body_frames = 2 * swing + (pause ? rest : 0);
  struct Side {
    const char* joint;
    Point shoulder;
    double bottom;  // angle of the lowered arm
    double dir;     // +1 counter-clockwise when raising
  };
  // image y grows downward; lowered arms point down (+y)
  const Side sides[] = {{"left_wrist", {200.0, 200.0}, kPi / 2.0 + 0.35, 1.0},
                        {"right_wrist", {312.0, 200.0}, kPi / 2.0 - 0.35, -1.0}};
  for (const auto& side : sides) {
    SyntheticTrack track;
    track.joint = side.joint;
    // each arc starts half a step past the previous one's last frame, so no
    // primitive's extension passes through its neighbour's boundary frame
    const double top = side.bottom + side.dir * (sweep - 0.5 * omega);
    const double rest_angle = side.bottom + side.dir * 0.25 * omega;
    for (int r = 0; r < reps; ++r) {
      track.primitives.push_back(
          CirclePrimitive{side.shoulder, radius, side.dir * omega, side.bottom, swing});
      track.primitives.push_back(
          CirclePrimitive{side.shoulder, radius, -side.dir * omega, top, swing});
      if (pause) {
        track.primitives.push_back(StationaryPrimitive{
            side.shoulder + radius * Point{std::cos(rest_angle), std::sin(rest_angle)}, rest});
      }
    }
    f.spec.tracks.push_back(std::move(track));
  }
  return f;
}

// DetPrim with the same start/middle/end for every joint.
inline DetPrim uniform_det_prim(std::size_t joints, Point s, Point m, Point e, int time) {
  DetPrim d;
  d.time = time;
  d.points.assign(joints, KeyTriple{s, m, e});
  return d;
}

}  // namespace motionprog::fixtures
