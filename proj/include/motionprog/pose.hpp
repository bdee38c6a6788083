#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "motionprog/errors.hpp"
#include "motionprog/geometry.hpp"

namespace motionprog {

// COCO keypoint order emitted by common 2D pose estimators.
inline constexpr std::array<std::string_view, 17> kCocoJoints = {
    "nose",          "left_eye",       "right_eye",   "left_ear",    "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow",  "right_elbow", "left_wrist",
    "right_wrist",   "left_hip",       "right_hip",   "left_knee",   "right_knee",
    "left_ankle",    "right_ankle"};

// Joints reported by the keypoint-difference columns of the interpolation study.
inline constexpr std::array<std::string_view, 4> kArmJoints = {"left_elbow", "left_wrist",
                                                               "right_elbow", "right_wrist"};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 1.0;

  Point position() const { return {x, y}; }
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// Time-aligned 2D keypoint tracks. frames[t][j] is joint j at frame t.
struct PoseSequence {
  std::vector<std::string> joints;
  std::vector<std::vector<Keypoint>> frames;
  double fps = 30.0;
  int width = 512;
  int height = 512;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t joint_count() const { return joints.size(); }

  std::optional<std::size_t> joint_index(std::string_view name) const {
    auto it = std::find(joints.begin(), joints.end(), name);
    if (it == joints.end()) return std::nullopt;
    return static_cast<std::size_t>(it - joints.begin());
  }

  // Positions of one joint over [begin, end).
  std::vector<Point> track(std::size_t joint, std::size_t begin, std::size_t end) const {
    std::vector<Point> out;
    out.reserve(end - begin);
    for (std::size_t t = begin; t < end; ++t) out.push_back(frames[t][joint].position());
    return out;
  }
  std::vector<Point> track(std::size_t joint) const { return track(joint, 0, frames.size()); }

  friend bool operator==(const PoseSequence&, const PoseSequence&) = default;
};

// Throws StructuralError when the sequence breaks a PoseSequence invariant.
inline void validate(const PoseSequence& seq) {
  if (seq.joints.empty()) throw StructuralError("pose sequence declares no joints");
  for (std::size_t i = 0; i < seq.joints.size(); ++i) {
    if (seq.joints[i].empty()) throw StructuralError("empty joint name");
    for (std::size_t k = 0; k < i; ++k)
      if (seq.joints[k] == seq.joints[i])
        throw StructuralError("duplicate joint '" + seq.joints[i] + "'");
  }
  if (seq.frames.empty()) throw StructuralError("pose sequence has no frames");
  if (!(seq.fps > 0.0) || !std::isfinite(seq.fps)) throw StructuralError("fps must be positive");
  if (seq.width <= 0 || seq.height <= 0) throw StructuralError("frame size must be positive");
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const auto& frame = seq.frames[t];
    if (frame.size() != seq.joints.size())
      throw StructuralError("frame " + std::to_string(t) + " has " + std::to_string(frame.size()) +
                            " keypoints, expected " + std::to_string(seq.joints.size()));
    for (const auto& kp : frame) {
      if (!std::isfinite(kp.x) || !std::isfinite(kp.y))
        throw StructuralError("non-finite keypoint at frame " + std::to_string(t));
      if (!(kp.confidence >= 0.0 && kp.confidence <= 1.0))
        throw StructuralError("confidence outside [0,1] at frame " + std::to_string(t));
    }
  }
}

}  // namespace motionprog
