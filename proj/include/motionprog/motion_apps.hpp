#pragma once

// Applications driven by motion programs (interpolation, loop unrolling,
// repetition extraction) and the metrics used to evaluate them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "motionprog/abstractor.hpp"
#include "motionprog/errors.hpp"
#include "motionprog/json_text.hpp"
#include "motionprog/pose.hpp"
#include "motionprog/pose_io.hpp"
#include "motionprog/primitive.hpp"
#include "motionprog/segmenter.hpp"

namespace motionprog {

// ---------------------------------------------------------------------------
// interpolation and prediction

// Executes every primitive at 1/factor frame steps. The factor-1 frames keep
// their exact values; the factor-1 sub-steps between two segments lie on the
// chord joining the last pose of one segment and the first of the next.
inline PoseSequence interpolate_poses(const ConcreteProgram& program, int factor) {
  validate(program);
  if (factor < 1) throw StructuralError("interpolation factor must be >= 1");
  PoseSequence out;
  out.joints = program.joints;
  out.fps = program.fps * factor;
  out.width = program.width;
  out.height = program.height;
  const auto frames = static_cast<std::size_t>((program.frame_count() - 1) * factor + 1);
  out.frames.assign(frames, {});
  for (auto& f : out.frames) f.reserve(program.joints.size());
  for (const auto& track : program.tracks) {
    std::size_t t = 0;
    for (std::size_t k = 0; k < track.size(); ++k) {
      const auto dense = execute_primitive_dense(track[k], factor);
      for (const auto& p : dense) out.frames[t++].push_back({p.x, p.y, 1.0});
      if (k + 1 == track.size()) break;
      const Point from = dense.back();
      const Point to = point_at(track[k + 1], 0.0);
      for (int s = 1; s < factor; ++s) {
        const Point p = from + (static_cast<double>(s) / factor) * (to - from);
        out.frames[t++].push_back({p.x, p.y, 1.0});
      }
    }
  }
  return out;
}

inline std::size_t final_loop_index(const AbstractProgram& program) {
  for (std::size_t s = program.statements.size(); s-- > 0;)
    if (std::holds_alternative<ForLoop>(program.statements[s])) return s;
  throw NoLoopError("abstract program contains no loop");
}

// Copy of `program` whose last loop runs `extra_iters` more times.
inline AbstractProgram extend_final_loop(const AbstractProgram& program, int extra_iters) {
  if (extra_iters < 1) throw StructuralError("extra_iters must be >= 1");
  AbstractProgram out = program;
  std::get<ForLoop>(out.statements[final_loop_index(out)]).iter += extra_iters;
  return out;
}

// Poses of the `extra_iters` iterations appended to the final loop. Each
// added iteration uses the generator execute_abstract would use for it, so
// the result is a slice of executing the extended program.
inline PoseSequence extrapolate_poses(const AbstractProgram& program, int extra_iters,
                                      std::uint64_t seed) {
  if (extra_iters < 1) throw StructuralError("extra_iters must be >= 1");
  const std::size_t s = final_loop_index(program);
  const auto& loop = std::get<ForLoop>(program.statements[s]);
  const auto prims = sample_loop_iterations(loop, s, loop.iter, extra_iters, seed);
  return execute_program(
      concretize_all(prims, program.joints, program.fps, program.width, program.height));
}

// ---------------------------------------------------------------------------
// metrics

// Mean Euclidean distance over frames and the selected joints (all joints
// when `joints` is empty).
inline double keypoint_difference(const PoseSequence& a, const PoseSequence& b,
                                  std::span<const std::string> joints = {}) {
  if (a.frame_count() != b.frame_count()) throw StructuralError("frame counts differ");
  if (a.joints != b.joints) throw StructuralError("joint sets differ");
  std::vector<std::size_t> selected;
  if (joints.empty()) {
    for (std::size_t j = 0; j < a.joint_count(); ++j) selected.push_back(j);
  } else {
    for (const auto& name : joints) {
      auto idx = a.joint_index(name);
      if (!idx) throw StructuralError("unknown joint '" + name + "'");
      selected.push_back(*idx);
    }
  }
  if (a.frame_count() == 0 || selected.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < a.frame_count(); ++t)
    for (auto j : selected) total += distance(a.frames[t][j].position(), b.frames[t][j].position());
  return total / static_cast<double>(a.frame_count() * selected.size());
}

// The elbow/wrist joints present in `seq`.
inline std::vector<std::string> arm_joints(const PoseSequence& seq) {
  std::vector<std::string> out;
  for (auto name : kArmJoints)
    if (seq.joint_index(name)) out.emplace_back(name);
  return out;
}

inline double max_adjacent_diff(const PoseSequence& seq) {
  if (seq.frame_count() < 2) throw InputTooShortError("need at least 2 frames");
  double worst = 0.0;
  for (std::size_t t = 1; t < seq.frame_count(); ++t)
    for (std::size_t j = 0; j < seq.joint_count(); ++j)
      worst = std::max(worst,
                       distance(seq.frames[t][j].position(), seq.frames[t - 1][j].position()));
  return worst;
}

// Scalar fields per primitive, time counted once: circle 6, line 5
// (x velocity, x start, slope, intercept, time), stationary 3.
inline std::size_t param_count(const ConcretePrimitive& prim) {
  switch (prim.index()) {
    case 0: return 6;
    case 1: return 5;
    default: return 3;
  }
}

inline std::size_t param_count(const ConcreteProgram& program) {
  std::size_t total = 0;
  for (const auto& track : program.tracks)
    for (const auto& p : track) total += param_count(p);
  return total;
}

inline std::size_t param_count(const PoseSequence& seq) {
  return 2 * seq.joint_count() * seq.frame_count();
}

// ---------------------------------------------------------------------------
// repetitive segments

// Half-open frame interval [start_frame, end_frame).
struct Interval {
  int start_frame = 0;
  int end_frame = 1;
  std::string label;

  int length() const { return end_frame - start_frame; }
};

inline void validate(const Interval& i) {
  if (i.end_frame <= i.start_frame) throw StructuralError("interval must be nonempty");
}

// Intersection over the shorter interval.
inline double iom(const Interval& a, const Interval& b) {
  validate(a);
  validate(b);
  const int overlap =
      std::max(0, std::min(a.end_frame, b.end_frame) - std::max(a.start_frame, b.start_frame));
  return static_cast<double>(overlap) / static_cast<double>(std::min(a.length(), b.length()));
}

struct SegmentMatch {
  std::size_t detected = 0;  // index into SegmentReport::detected
  std::size_t truth = 0;     // index into SegmentReport::truth
  double iom = 0.0;
};

struct SegmentReport {
  std::vector<Interval> detected;
  std::vector<Interval> truth;
  std::vector<SegmentMatch> matches;
  double precision = 1.0;
  double recall = 1.0;
  bool no_detections = false;  // precision is reported as 1 by convention
};

inline constexpr double kIomMatchThreshold = 0.5;

// Greedy one-to-one matching in decreasing IoM order; a pair counts when its
// IoM exceeds 0.5.
inline SegmentReport evaluate_segments(std::vector<Interval> detected, std::vector<Interval> truth) {
  struct Pair {
    double iom;
    std::size_t d, t;
  };
  std::vector<Pair> pairs;
  for (std::size_t d = 0; d < detected.size(); ++d)
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double v = iom(detected[d], truth[t]);
      if (v > kIomMatchThreshold) pairs.push_back({v, d, t});
    }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.iom > b.iom; });
  SegmentReport report;
  std::vector<bool> used_d(detected.size()), used_t(truth.size());
  for (const auto& p : pairs) {
    if (used_d[p.d] || used_t[p.t]) continue;
    used_d[p.d] = used_t[p.t] = true;
    report.matches.push_back({p.d, p.t, p.iom});
  }
  const auto matched = static_cast<double>(report.matches.size());
  report.no_detections = detected.empty();
  report.precision = detected.empty() ? 1.0 : matched / static_cast<double>(detected.size());
  report.recall = truth.empty() ? 1.0 : matched / static_cast<double>(truth.size());
  report.detected = std::move(detected);
  report.truth = std::move(truth);
  return report;
}

// Frame intervals covered by detected loops.
inline std::vector<Interval> loop_intervals(const ConcreteProgram& program,
                                            std::span<const LoopCandidate> candidates) {
  std::vector<Interval> out;
  for (const auto& c : candidates)
    out.push_back({program.boundaries[c.start_stmt], program.boundaries[c.end_stmt],
                   "loop x" + std::to_string(c.iterations())});
  return out;
}

// Annotation file: "start_frame,end_frame,label" with that header line.
inline std::vector<Interval> parse_annotations(std::string_view text) {
  std::vector<Interval> out;
  std::size_t lineno = 0;
  bool header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = detail::trim(
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line.substr(0, 21) != "start_frame,end_frame")
        throw ParseError("expected header 'start_frame,end_frame,label'", lineno);
      header = true;
      continue;
    }
    auto cols = detail::split(line, ',');
    if (cols.size() < 2) throw ParseError("wrong column count", lineno);
    double s = 0, e = 0;
    if (!parse_double(detail::trim(cols[0]), s) || !parse_double(detail::trim(cols[1]), e) ||
        s != std::floor(s) || e != std::floor(e))
      throw ParseError("bad frame number", lineno);
    Interval iv{static_cast<int>(s), static_cast<int>(e), ""};
    if (cols.size() > 2) {
      // labels may contain commas
      auto label_pos = line.find(',', line.find(',') + 1);
      iv.label = std::string(detail::trim(line.substr(label_pos + 1)));
    }
    if (iv.end_frame <= iv.start_frame) throw ParseError("empty interval", lineno);
    out.push_back(std::move(iv));
  }
  if (!header) throw ParseError("missing header", lineno);
  return out;
}

inline std::string serialize_annotations(std::span<const Interval> intervals) {
  std::string out = "start_frame,end_frame,label\n";
  for (const auto& i : intervals)
    out += std::to_string(i.start_frame) + "," + std::to_string(i.end_frame) + "," + i.label + "\n";
  return out;
}

inline Json report_to_json(const SegmentReport& r) {
  auto interval = [](const Interval& i) { return Json::array({i.start_frame, i.end_frame}); };
  Json matches = Json::array();
  for (const auto& m : r.matches)
    matches.push_back(Json{{"detected", interval(r.detected[m.detected])},
                           {"truth", interval(r.truth[m.truth])},
                           {"iom", m.iom}});
  Json detected = Json::array(), truth = Json::array();
  for (const auto& i : r.detected) detected.push_back(interval(i));
  for (const auto& i : r.truth) truth.push_back(interval(i));
  return Json{{"precision", r.precision}, {"recall", r.recall},
              {"no_detections", r.no_detections}, {"detected", detected},
              {"truth", truth}, {"matches", matches}};
}

inline std::string report_to_text(const SegmentReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "detected  truth     iom\n";
  for (const auto& m : r.matches) {
    const auto& d = r.detected[m.detected];
    const auto& t = r.truth[m.truth];
    os << '[' << d.start_frame << ',' << d.end_frame << ")  [" << t.start_frame << ','
       << t.end_frame << ")  " << m.iom << '\n';
  }
  os << "detections " << r.detected.size() << ", ground truth " << r.truth.size() << ", matched "
     << r.matches.size() << '\n';
  os << "precision " << 100.0 * r.precision << "%" << (r.no_detections ? " (no detections)" : "")
     << ", recall " << 100.0 * r.recall << "%\n";
  return os.str();
}

}  // namespace motionprog
