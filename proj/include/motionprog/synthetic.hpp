#pragma once

// Ground-truth trajectories built from known primitives, used as test oracles.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "motionprog/errors.hpp"
#include "motionprog/pose.hpp"
#include "motionprog/primitive.hpp"

namespace motionprog {

struct SyntheticTrack {
  std::string joint;
  std::vector<ConcretePrimitive> primitives;
};

struct SyntheticSpec {
  std::vector<SyntheticTrack> tracks;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double fps = 30.0;
  int width = 512;
  int height = 512;
};

inline void validate(const SyntheticSpec& spec) {
  if (spec.tracks.empty()) throw StructuralError("synthetic spec has no tracks");
  if (!(spec.noise_sigma >= 0.0)) throw StructuralError("noise_sigma must be >= 0");
  long total = -1;
  for (const auto& track : spec.tracks) {
    long frames = 0;
    for (const auto& p : track.primitives) {
      if (!is_valid(p)) throw StructuralError("invalid primitive in track '" + track.joint + "'");
      if (duration(p) < 2) throw StructuralError("synthetic primitives need time >= 2");
      frames += duration(p);
    }
    if (frames == 0) throw StructuralError("track '" + track.joint + "' is empty");
    if (total >= 0 && frames != total)
      throw StructuralError("synthetic tracks have different total durations");
    total = frames;
  }
}

// Executes every track's primitives back to back, then adds i.i.d. Gaussian
// noise per coordinate (frame-major, joints in order, x before y).
inline PoseSequence generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  PoseSequence seq;
  seq.fps = spec.fps;
  seq.width = spec.width;
  seq.height = spec.height;
  for (const auto& track : spec.tracks) seq.joints.push_back(track.joint);

  std::vector<std::vector<Point>> clean(spec.tracks.size());
  for (std::size_t j = 0; j < spec.tracks.size(); ++j)
    for (const auto& p : spec.tracks[j].primitives) {
      auto pts = execute_primitive(p);
      clean[j].insert(clean[j].end(), pts.begin(), pts.end());
    }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
  const std::size_t n = clean.front().size();
  seq.frames.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    seq.frames[t].reserve(spec.tracks.size());
    for (std::size_t j = 0; j < spec.tracks.size(); ++j) {
      Point p = clean[j][t];
      if (spec.noise_sigma > 0.0) {
        p.x += noise(rng);
        p.y += noise(rng);
      }
      seq.frames[t].push_back({p.x, p.y, 1.0});
    }
  }
  validate(seq);
  return seq;
}

// {"fps":..,"width":..,"height":..,"noise_sigma":..,"seed":..,
//  "tracks":[{"joint":name,"primitives":[primitive,..]},..]}
inline SyntheticSpec synthetic_spec_from_json(const Json& j) {
  SyntheticSpec spec;
  if (!j.is_object()) throw StructuralError("synthetic spec must be an object");
  spec.noise_sigma = j.value("noise_sigma", 0.0);
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.fps = j.value("fps", 30.0);
  spec.width = j.value("width", 512);
  spec.height = j.value("height", 512);
  if (!j.contains("tracks") || !j.at("tracks").is_array())
    throw StructuralError("synthetic spec needs a 'tracks' array");
  for (const auto& t : j.at("tracks")) {
    SyntheticTrack track;
    track.joint = get_field<std::string>(t, "joint");
    if (!t.contains("primitives") || !t.at("primitives").is_array())
      throw StructuralError("track needs a 'primitives' array");
    for (const auto& p : t.at("primitives")) track.primitives.push_back(primitive_from_json(p));
    spec.tracks.push_back(std::move(track));
  }
  validate(spec);
  return spec;
}

inline Json synthetic_spec_to_json(const SyntheticSpec& spec) {
  Json j = Json::object();
  j["fps"] = spec.fps;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["noise_sigma"] = spec.noise_sigma;
  j["seed"] = spec.seed;
  Json tracks = Json::array();
  for (const auto& track : spec.tracks) {
    Json prims = Json::array();
    for (const auto& p : track.primitives) prims.push_back(primitive_to_json(p));
    tracks.push_back(Json{{"joint", track.joint}, {"primitives", std::move(prims)}});
  }
  j["tracks"] = std::move(tracks);
  return j;
}

}  // namespace motionprog
