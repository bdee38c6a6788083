#pragma once

// The three concrete motion primitives and their closed-form execution.

#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "motionprog/errors.hpp"
#include "motionprog/geometry.hpp"
#include "motionprog/json_text.hpp"

namespace motionprog {

// center + radius * (cos, sin)(angle_start + angle_velocity * t)
struct CirclePrimitive {
  Point center;
  double radius = 0.0;
  double angle_velocity = 0.0;  // radians per frame
  double angle_start = 0.0;     // radians
  int time = 1;

  Point at(double t) const {
    const double a = angle_start + angle_velocity * t;
    return {center.x + radius * std::cos(a), center.y + radius * std::sin(a)};
  }
  friend bool operator==(const CirclePrimitive&, const CirclePrimitive&) = default;
};

// start + velocity * t. Vertical motion is representable, unlike the
// (x-velocity, slope, intercept) form, which is derived on serialization.
struct LinePrimitive {
  Point start;
  Vector velocity;  // px per frame
  int time = 1;

  Point at(double t) const { return {start.x + velocity.x * t, start.y + velocity.y * t}; }
  friend bool operator==(const LinePrimitive&, const LinePrimitive&) = default;
};

struct StationaryPrimitive {
  Point point;
  int time = 1;

  Point at(double) const { return point; }
  friend bool operator==(const StationaryPrimitive&, const StationaryPrimitive&) = default;
};

using ConcretePrimitive = std::variant<CirclePrimitive, LinePrimitive, StationaryPrimitive>;

inline int duration(const ConcretePrimitive& p) {
  return std::visit([](const auto& v) { return v.time; }, p);
}

inline Point point_at(const ConcretePrimitive& p, double t) {
  return std::visit([t](const auto& v) { return v.at(t); }, p);
}

inline const char* type_name(const ConcretePrimitive& p) {
  switch (p.index()) {
    case 0: return "circle";
    case 1: return "line";
    default: return "stationary";
  }
}

inline bool is_valid(const ConcretePrimitive& p) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if (v.time < 1) return false;
        if constexpr (std::is_same_v<T, CirclePrimitive>) {
          return is_finite(v.center) && std::isfinite(v.radius) && v.radius >= 0.0 &&
                 std::isfinite(v.angle_velocity) && std::isfinite(v.angle_start);
        } else if constexpr (std::is_same_v<T, LinePrimitive>) {
          return is_finite(v.start) && is_finite(v.velocity);
        } else {
          return is_finite(v.point);
        }
      },
      p);
}

// One point per frame, t = 0 .. time-1.
inline std::vector<Point> execute_primitive(const ConcretePrimitive& prim) {
  const int n = duration(prim);
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) out.push_back(point_at(prim, static_cast<double>(t)));
  return out;
}

// Samples t = k / factor for k = 0 .. (time-1)*factor. Every factor-th sample
// is evaluated at the same integer t as execute_primitive, so the coarse grid
// is contained bit for bit.
inline std::vector<Point> execute_primitive_dense(const ConcretePrimitive& prim, int factor) {
  if (factor < 1) throw StructuralError("interpolation factor must be >= 1");
  const int n = duration(prim);
  const int samples = (n - 1) * factor + 1;
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    const double t = k % factor == 0 ? static_cast<double>(k / factor)
                                     : static_cast<double>(k) / static_cast<double>(factor);
    out.push_back(point_at(prim, t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// serialization

inline Json point_to_json(Point p) { return Json::array({p.x, p.y}); }

inline Point point_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw StructuralError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json primitive_to_json(const ConcretePrimitive& prim) {
  Json j = Json::object();
  j["type"] = type_name(prim);
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CirclePrimitive>) {
          j["center"] = point_to_json(v.center);
          j["radius"] = v.radius;
          j["angle_velocity"] = v.angle_velocity;
          j["angle_start"] = v.angle_start;
        } else if constexpr (std::is_same_v<T, LinePrimitive>) {
          j["start"] = point_to_json(v.start);
          j["velocity"] = point_to_json(v.velocity);
          if (v.velocity.x != 0.0) {
            const double slope = v.velocity.y / v.velocity.x;
            j["x_vel"] = v.velocity.x;
            j["x_start"] = v.start.x;
            j["slope"] = slope;
            j["intercept"] = v.start.y - slope * v.start.x;
            j["vertical"] = false;
          } else {
            j["vertical"] = true;
          }
        } else {
          j["point"] = point_to_json(v.point);
        }
        j["time"] = v.time;
      },
      prim);
  return j;
}

inline ConcretePrimitive primitive_from_json(const Json& j) {
  const auto type = get_field<std::string>(j, "type");
  ConcretePrimitive prim;
  if (type == "circle") {
    prim = CirclePrimitive{point_from_json(j.at("center")), get_field<double>(j, "radius"),
                           get_field<double>(j, "angle_velocity"),
                           get_field<double>(j, "angle_start"), get_field<int>(j, "time")};
  } else if (type == "line") {
    if (!j.contains("start") || !j.contains("velocity"))
      throw StructuralError("line primitive needs start and velocity");
    prim = LinePrimitive{point_from_json(j.at("start")), point_from_json(j.at("velocity")),
                         get_field<int>(j, "time")};
  } else if (type == "stationary") {
    if (!j.contains("point")) throw StructuralError("stationary primitive needs point");
    prim = StationaryPrimitive{point_from_json(j.at("point")), get_field<int>(j, "time")};
  } else {
    throw StructuralError("unknown primitive type '" + type + "'");
  }
  if (!is_valid(prim)) throw StructuralError("invalid " + type + " primitive parameters");
  return prim;
}

}  // namespace motionprog
