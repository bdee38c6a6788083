#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "motionprog/errors.hpp"
#include "motionprog/json_text.hpp"
#include "motionprog/pose.hpp"

namespace motionprog {

enum class PoseFormat { kJson, kCsv };

// Guesses the format from a file name; anything not ending in .csv is json.
inline PoseFormat pose_format_for_path(std::string_view path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? PoseFormat::kCsv
                                                                     : PoseFormat::kJson;
}

// ---------------------------------------------------------------------------
// pose-json

inline Json pose_to_json(const PoseSequence& seq) {
  Json j = Json::object();
  j["fps"] = seq.fps;
  j["width"] = seq.width;
  j["height"] = seq.height;
  j["joints"] = seq.joints;
  Json frames = Json::array();
  for (const auto& frame : seq.frames) {
    Json row = Json::array();
    for (const auto& kp : frame) row.push_back(Json::array({kp.x, kp.y, kp.confidence}));
    frames.push_back(std::move(row));
  }
  j["frames"] = std::move(frames);
  return j;
}

inline PoseSequence pose_from_json(const Json& j) {
  if (!j.is_object()) throw StructuralError("pose file must hold one JSON object");
  PoseSequence seq;
  seq.fps = get_field<double>(j, "fps");
  seq.width = get_field<int>(j, "width");
  seq.height = get_field<int>(j, "height");
  seq.joints = get_field<std::vector<std::string>>(j, "joints");
  const Json& frames = j.contains("frames") ? j.at("frames") : Json();
  if (!frames.is_array()) throw StructuralError("field 'frames' must be an array");
  seq.frames.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Json& row = frames[t];
    if (!row.is_array()) throw ParseError("frame is not an array", t);
    if (row.size() != seq.joints.size())
      throw StructuralError("frame " + std::to_string(t) + " has " + std::to_string(row.size()) +
                            " keypoints, expected " + std::to_string(seq.joints.size()));
    std::vector<Keypoint> frame;
    frame.reserve(row.size());
    for (const Json& kp : row) {
      if (!kp.is_array() || (kp.size() != 2 && kp.size() != 3))
        throw ParseError("keypoint must be [x, y] or [x, y, confidence]", t);
      for (const Json& v : kp)
        if (!v.is_number()) throw ParseError("keypoint component is not a number", t);
      frame.push_back({kp[0].get<double>(), kp[1].get<double>(),
                       kp.size() == 3 ? kp[2].get<double>() : 1.0});
    }
    seq.frames.push_back(std::move(frame));
  }
  validate(seq);
  return seq;
}

// ---------------------------------------------------------------------------
// csv
//
// An optional leading "# fps=..,width=..,height=.." line carries the sequence
// metadata, which the column layout has no room for.

inline constexpr std::string_view kCsvHeader = "frame,joint,x,y,confidence";

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline void parse_csv_metadata(std::string_view line, std::size_t lineno, PoseSequence& seq) {
  line.remove_prefix(1);
  for (auto item : split(line, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos) continue;
    auto key = trim(item.substr(0, eq));
    auto value = trim(item.substr(eq + 1));
    double v = 0.0;
    if (key != "fps" && key != "width" && key != "height") continue;
    if (!parse_double(value, v)) throw ParseError("bad metadata value for " + std::string(key), lineno);
    if (key == "fps") seq.fps = v;
    if (key == "width") seq.width = static_cast<int>(v);
    if (key == "height") seq.height = static_cast<int>(v);
  }
}

}  // namespace detail

inline std::string pose_to_csv(const PoseSequence& seq) {
  std::string out = "# fps=";
  append_double(out, seq.fps);
  out += ",width=" + std::to_string(seq.width) + ",height=" + std::to_string(seq.height) + "\n";
  out += kCsvHeader;
  out.push_back('\n');
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    for (std::size_t j = 0; j < seq.joints.size(); ++j) {
      const auto& kp = seq.frames[t][j];
      out += std::to_string(t);
      out.push_back(',');
      out += seq.joints[j];
      out.push_back(',');
      append_double(out, kp.x);
      out.push_back(',');
      append_double(out, kp.y);
      out.push_back(',');
      append_double(out, kp.confidence);
      out.push_back('\n');
    }
  }
  return out;
}

inline PoseSequence pose_from_csv(std::string_view text) {
  PoseSequence seq;
  bool header_seen = false;
  bool has_confidence = true;
  std::size_t lineno = 0;
  std::size_t joint_cursor = 0;  // position within the current frame
  bool joints_frozen = false;    // set once frame 1 starts
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!header_seen) detail::parse_csv_metadata(line, lineno, seq);
      continue;
    }
    if (!header_seen) {
      if (line == kCsvHeader) {
        has_confidence = true;
      } else if (line == "frame,joint,x,y") {
        has_confidence = false;
      } else {
        throw ParseError("expected header '" + std::string(kCsvHeader) + "'", lineno);
      }
      header_seen = true;
      continue;
    }
    auto cols = detail::split(line, ',');
    if (cols.size() != (has_confidence ? 5u : 4u) && !(has_confidence && cols.size() == 4))
      throw ParseError("wrong column count", lineno);
    double frame_d = 0.0;
    Keypoint kp;
    if (!parse_double(detail::trim(cols[0]), frame_d) || frame_d < 0 ||
        frame_d != static_cast<double>(static_cast<std::size_t>(frame_d)))
      throw ParseError("bad frame index", lineno);
    if (!parse_double(detail::trim(cols[2]), kp.x) || !parse_double(detail::trim(cols[3]), kp.y))
      throw ParseError("bad coordinate", lineno);
    if (cols.size() == 5 && !detail::trim(cols[4]).empty() &&
        !parse_double(detail::trim(cols[4]), kp.confidence))
      throw ParseError("bad confidence", lineno);
    const auto frame = static_cast<std::size_t>(frame_d);
    const std::string joint(detail::trim(cols[1]));

    if (frame == seq.frames.size()) {
      // a new frame begins; the previous one must be complete
      if (!seq.frames.empty()) {
        joints_frozen = true;
        if (joint_cursor != seq.joints.size())
          throw StructuralError("frame " + std::to_string(frame - 1) + " is missing joints");
      }
      seq.frames.emplace_back();
      joint_cursor = 0;
    } else if (frame + 1 != seq.frames.size()) {
      throw ParseError("rows must be sorted by frame", lineno);
    }
    if (!joints_frozen) {
      if (std::find(seq.joints.begin(), seq.joints.end(), joint) != seq.joints.end())
        throw ParseError("duplicate joint '" + joint + "' in frame 0", lineno);
      seq.joints.push_back(joint);
    } else if (joint_cursor >= seq.joints.size() || seq.joints[joint_cursor] != joint) {
      throw StructuralError("frame " + std::to_string(frame) + " deviates from joint order at '" +
                            joint + "'");
    }
    seq.frames.back().push_back(kp);
    ++joint_cursor;
  }
  if (!header_seen) throw ParseError("missing header", lineno);
  if (!seq.frames.empty() && joint_cursor != seq.joints.size())
    throw StructuralError("last frame is missing joints");
  validate(seq);
  return seq;
}

inline PoseSequence parse_keypoints(std::string_view source, PoseFormat format) {
  return format == PoseFormat::kCsv ? pose_from_csv(source) : pose_from_json(parse_json(source));
}

inline std::string serialize_keypoints(const PoseSequence& seq, PoseFormat format) {
  return format == PoseFormat::kCsv ? pose_to_csv(seq) : dump_json(pose_to_json(seq));
}

// ---------------------------------------------------------------------------
// repair

inline PoseSequence normalize(const PoseSequence& seq, int target_w, int target_h) {
  if (target_w <= 0 || target_h <= 0) throw StructuralError("target size must be positive");
  const double sx = static_cast<double>(target_w) / seq.width;
  const double sy = static_cast<double>(target_h) / seq.height;
  PoseSequence out = seq;
  out.width = target_w;
  out.height = target_h;
  for (auto& frame : out.frames)
    for (auto& kp : frame) {
      kp.x *= sx;
      kp.y *= sy;
    }
  return out;
}

// Replaces keypoints below `conf_threshold` by linear interpolation in time
// between the nearest confident neighbours; gaps at either end copy the
// nearest confident value. Repaired keypoints get confidence = threshold.
inline PoseSequence fill_gaps(const PoseSequence& seq, double conf_threshold) {
  if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0))
    throw StructuralError("confidence threshold must lie in [0,1]");
  PoseSequence out = seq;
  const std::size_t n = seq.frame_count();
  for (std::size_t j = 0; j < seq.joint_count(); ++j) {
    std::vector<std::size_t> good;
    for (std::size_t t = 0; t < n; ++t)
      if (seq.frames[t][j].confidence >= conf_threshold) good.push_back(t);
    if (good.empty())
      throw UnrecoverableTrackError("joint '" + seq.joints[j] + "' has no confident frames");
    std::size_t next = 0;  // index into good of the first confident frame >= t
    for (std::size_t t = 0; t < n; ++t) {
      while (next < good.size() && good[next] < t) ++next;
      if (next < good.size() && good[next] == t) continue;
      Point p;
      if (next == 0) {
        p = seq.frames[good.front()][j].position();
      } else if (next == good.size()) {
        p = seq.frames[good.back()][j].position();
      } else {
        const std::size_t a = good[next - 1];
        const std::size_t b = good[next];
        const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
        const Point pa = seq.frames[a][j].position();
        const Point pb = seq.frames[b][j].position();
        p = pa + w * (pb - pa);
      }
      out.frames[t][j] = {p.x, p.y, conf_threshold};
    }
  }
  return out;
}

}  // namespace motionprog
