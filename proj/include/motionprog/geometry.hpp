#pragma once

#include <cmath>

namespace motionprog {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend constexpr Point operator*(Point p, double s) { return {s * p.x, s * p.y}; }
  friend constexpr Point operator/(Point p, double s) { return {p.x / s, p.y / s}; }
  friend constexpr bool operator==(Point, Point) = default;
};

// Displacements share the representation.
using Vector = Point;

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
constexpr double squared_norm(Point p) { return dot(p, p); }
inline double norm(Point p) { return std::hypot(p.x, p.y); }
constexpr double squared_distance(Point a, Point b) { return squared_norm(a - b); }
inline double distance(Point a, Point b) { return norm(a - b); }

inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace motionprog
