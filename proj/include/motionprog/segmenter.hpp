#pragma once

// Joint segmentation of all keypoint tracks into primitive sequences by
// dynamic programming:
//
//   E[0] = 0,  E[n] = min_{k<n} ( E[k] + fit(k:n) + lambda(n-1) )
//
// where fit(k:n) sums the best single-primitive error of every joint over
// frames [k, n) and lambda is proportional to the local keypoint spread.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionprog/errors.hpp"
#include "motionprog/json_text.hpp"
#include "motionprog/pose.hpp"
#include "motionprog/primitive.hpp"
#include "motionprog/primitive_fit.hpp"

namespace motionprog {

struct SegmentationConfig {
  double lambda_coeff = 0.3;       // multiplier on the windowed covariance trace
  int lambda_window = 31;          // frames, odd
  int min_segment = 2;             // frames
  std::optional<int> max_segment;  // frames; unbounded when empty
};

inline void validate(const SegmentationConfig& cfg) {
  if (!(cfg.lambda_coeff >= 0.0) || !std::isfinite(cfg.lambda_coeff))
    throw StructuralError("lambda_coeff must be finite and >= 0");
  if (cfg.lambda_window < 1 || cfg.lambda_window % 2 == 0)
    throw StructuralError("lambda_window must be a positive odd integer");
  if (cfg.min_segment < 2) throw StructuralError("min_segment must be >= 2");
  if (cfg.max_segment && *cfg.max_segment < cfg.min_segment)
    throw StructuralError("max_segment must be >= min_segment");
}

// Level-2 program: all joints share one boundary set.
struct ConcreteProgram {
  std::vector<std::string> joints;
  std::vector<int> boundaries;                         // 0 = b_0 < b_1 < ... < b_K = frames
  std::vector<std::vector<ConcretePrimitive>> tracks;  // tracks[j][k] covers [b_k, b_k+1)
  double fps = 30.0;
  int width = 512;
  int height = 512;

  std::size_t segment_count() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  int frame_count() const { return boundaries.empty() ? 0 : boundaries.back(); }
};

inline void validate(const ConcreteProgram& program) {
  const auto& b = program.boundaries;
  if (program.joints.empty()) throw StructuralError("program has no joints");
  if (b.size() < 2 || b.front() != 0) throw StructuralError("boundaries must start at 0");
  for (std::size_t k = 1; k < b.size(); ++k)
    if (b[k] <= b[k - 1]) throw StructuralError("boundaries must be strictly increasing");
  if (program.tracks.size() != program.joints.size())
    throw StructuralError("one track per joint required");
  for (std::size_t j = 0; j < program.tracks.size(); ++j) {
    const auto& track = program.tracks[j];
    if (track.size() != b.size() - 1)
      throw StructuralError("track '" + program.joints[j] + "' has the wrong primitive count");
    for (std::size_t k = 0; k < track.size(); ++k) {
      if (!is_valid(track[k])) throw StructuralError("invalid primitive parameters");
      if (duration(track[k]) != b[k + 1] - b[k])
        throw StructuralError("primitive time does not match its segment");
    }
  }
}

// lambda at `frame`: coefficient times the mean over joints of the trace of
// the 2x2 keypoint covariance inside a centred window, truncated at the ends.
inline double adaptive_lambda(const PoseSequence& seq, std::size_t frame,
                              const SegmentationConfig& cfg) {
  const std::size_t n = seq.frame_count();
  if (frame >= n) throw StructuralError("frame outside sequence");
  const std::size_t half = static_cast<std::size_t>(cfg.lambda_window / 2);
  const std::size_t lo = frame >= half ? frame - half : 0;
  const std::size_t hi = std::min(n, frame + half + 1);
  const double count = static_cast<double>(hi - lo);
  double total = 0.0;
  for (std::size_t j = 0; j < seq.joint_count(); ++j) {
    Point mean;
    for (std::size_t t = lo; t < hi; ++t) mean = mean + seq.frames[t][j].position();
    mean = mean / count;
    double trace = 0.0;
    for (std::size_t t = lo; t < hi; ++t)
      trace += squared_distance(seq.frames[t][j].position(), mean);
    total += trace / count;
  }
  return cfg.lambda_coeff * (total / static_cast<double>(seq.joint_count()));
}

inline std::vector<double> lambda_profile(const PoseSequence& seq, const SegmentationConfig& cfg) {
  std::vector<double> out(seq.frame_count());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = adaptive_lambda(seq, t, cfg);
  return out;
}

// Per-joint position tracks, the form the segmenter works on.
inline std::vector<std::vector<Point>> joint_tracks(const PoseSequence& seq) {
  std::vector<std::vector<Point>> out;
  out.reserve(seq.joint_count());
  for (std::size_t j = 0; j < seq.joint_count(); ++j) out.push_back(seq.track(j));
  return out;
}

// fit(begin:end): best-primitive error summed over joints in joint order.
inline double segment_cost(const std::vector<std::vector<Point>>& tracks, std::size_t begin,
                           std::size_t end) {
  double cost = 0.0;
  for (const auto& track : tracks)
    cost += fit_best(std::span<const Point>(track).subspan(begin, end - begin)).error;
  return cost;
}

struct Segmentation {
  ConcreteProgram program;
  double objective = 0.0;  // fit errors plus one lambda per segment
};

inline Segmentation segment_detailed(const PoseSequence& seq, const SegmentationConfig& cfg) {
  validate(seq);
  validate(cfg);
  const std::size_t n = seq.frame_count();
  const auto min_len = static_cast<std::size_t>(cfg.min_segment);
  const std::size_t max_len = cfg.max_segment ? static_cast<std::size_t>(*cfg.max_segment) : n;
  if (n < min_len)
    throw InputTooShortError("sequence of " + std::to_string(n) + " frames is shorter than " +
                             "min_segment " + std::to_string(min_len));

  const auto tracks = joint_tracks(seq);
  const auto lambda = lambda_profile(seq, cfg);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n + 1, kInf);
  std::vector<std::size_t> from(n + 1, 0);
  best[0] = 0.0;
  for (std::size_t end = min_len; end <= n; ++end) {
    const std::size_t first = end > max_len ? end - max_len : 0;
    for (std::size_t k = first; k + min_len <= end; ++k) {
      if (best[k] == kInf) continue;
      const double value = best[k] + segment_cost(tracks, k, end) + lambda[end - 1];
      // strict comparison keeps the smallest k on ties
      if (value < best[end]) {
        best[end] = value;
        from[end] = k;
      }
    }
  }
  if (best[n] == kInf)
    throw InputTooShortError("no segmentation satisfies the segment length bounds");

  std::vector<int> boundaries{static_cast<int>(n)};
  for (std::size_t end = n; end > 0; end = from[end])
    boundaries.push_back(static_cast<int>(from[end]));
  std::reverse(boundaries.begin(), boundaries.end());

  Segmentation result;
  result.objective = best[n];
  auto& program = result.program;
  program.joints = seq.joints;
  program.boundaries = std::move(boundaries);
  program.fps = seq.fps;
  program.width = seq.width;
  program.height = seq.height;
  program.tracks.resize(tracks.size());
  for (std::size_t j = 0; j < tracks.size(); ++j)
    for (std::size_t k = 0; k + 1 < program.boundaries.size(); ++k) {
      const auto b = static_cast<std::size_t>(program.boundaries[k]);
      const auto e = static_cast<std::size_t>(program.boundaries[k + 1]);
      program.tracks[j].push_back(
          fit_best(std::span<const Point>(tracks[j]).subspan(b, e - b)).primitive);
    }
  return result;
}

inline ConcreteProgram segment(const PoseSequence& seq, const SegmentationConfig& cfg) {
  return segment_detailed(seq, cfg).program;
}

// Executes every joint's primitives back to back.
inline PoseSequence execute_program(const ConcreteProgram& program) {
  validate(program);
  PoseSequence seq;
  seq.joints = program.joints;
  seq.fps = program.fps;
  seq.width = program.width;
  seq.height = program.height;
  seq.frames.assign(static_cast<std::size_t>(program.frame_count()), {});
  for (std::size_t t = 0; t < seq.frames.size(); ++t) seq.frames[t].reserve(program.joints.size());
  for (const auto& track : program.tracks) {
    std::size_t t = 0;
    for (const auto& prim : track)
      for (const auto& p : execute_primitive(prim)) seq.frames[t++].push_back({p.x, p.y, 1.0});
  }
  return seq;
}

// Sum over joints and frames of the squared distance between the executed
// program and the observed keypoints.
inline double program_error(const ConcreteProgram& program, const PoseSequence& seq) {
  validate(program);
  if (static_cast<std::size_t>(program.frame_count()) != seq.frame_count())
    throw StructuralError("program and sequence lengths differ");
  if (program.joints != seq.joints) throw StructuralError("program and sequence joints differ");
  double err = 0.0;
  for (std::size_t j = 0; j < program.tracks.size(); ++j) {
    for (std::size_t k = 0; k < program.tracks[j].size(); ++k) {
      const auto& prim = program.tracks[j][k];
      const auto b = static_cast<std::size_t>(program.boundaries[k]);
      for (int t = 0; t < duration(prim); ++t)
        err += squared_distance(point_at(prim, t), seq.frames[b + t][j].position());
    }
  }
  return err;
}

// ---------------------------------------------------------------------------
// program file

inline Json program_to_json(const ConcreteProgram& program) {
  Json j = Json::object();
  j["version"] = 1;
  j["fps"] = program.fps;
  j["width"] = program.width;
  j["height"] = program.height;
  j["joints"] = program.joints;
  j["boundaries"] = program.boundaries;
  Json tracks = Json::object();
  for (std::size_t i = 0; i < program.joints.size(); ++i) {
    Json prims = Json::array();
    for (const auto& p : program.tracks[i]) prims.push_back(primitive_to_json(p));
    tracks[program.joints[i]] = std::move(prims);
  }
  j["tracks"] = std::move(tracks);
  return j;
}

inline ConcreteProgram program_from_json(const Json& j) {
  if (!j.is_object()) throw StructuralError("program file must hold one JSON object");
  if (get_field<int>(j, "version") != 1) throw StructuralError("unsupported program version");
  ConcreteProgram program;
  program.fps = get_field<double>(j, "fps");
  program.width = get_field<int>(j, "width");
  program.height = get_field<int>(j, "height");
  program.boundaries = get_field<std::vector<int>>(j, "boundaries");
  if (!j.contains("tracks") || !j.at("tracks").is_object())
    throw StructuralError("program needs a 'tracks' object");
  const Json& tracks = j.at("tracks");
  if (j.contains("joints")) {
    program.joints = get_field<std::vector<std::string>>(j, "joints");
  } else {
    for (const auto& [name, _] : tracks.items()) program.joints.push_back(name);
  }
  for (const auto& name : program.joints) {
    if (!tracks.contains(name) || !tracks.at(name).is_array())
      throw StructuralError("missing track for joint '" + name + "'");
    std::vector<ConcretePrimitive> prims;
    for (const auto& p : tracks.at(name)) prims.push_back(primitive_from_json(p));
    program.tracks.push_back(std::move(prims));
  }
  if (tracks.size() != program.joints.size())
    throw StructuralError("tracks and joints disagree");
  validate(program);
  return program;
}

}  // namespace motionprog
