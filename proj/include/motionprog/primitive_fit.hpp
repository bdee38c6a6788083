#pragma once

// Least-squares fitting of single primitives to a keypoint track sampled at
// consecutive integer frames 0..n-1.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "motionprog/errors.hpp"
#include "motionprog/geometry.hpp"
#include "motionprog/primitive.hpp"

namespace motionprog {

struct FitResult {
  ConcretePrimitive primitive;
  double error = 0.0;  // summed squared px distance to the executed primitive
};

struct CircleGeometry {
  Point center;
  double radius = 0.0;
  double residual = 0.0;  // sum of squared radial deviations
};

// Fits above this normal-matrix condition number or radius are reported as
// degenerate; such arcs are indistinguishable from lines.
inline constexpr double kMaxCircleCondition = 1e12;
inline constexpr double kMaxCircleRadius = 1e6;

// A more complex primitive must beat a simpler one by more than this to be
// selected; below it the errors are rounding noise.
inline constexpr double kFitTieAbsolute = 1e-9;
inline constexpr double kFitTieRelative = 1e-12;

// Sum of squared distances between `points` and the execution of `prim`.
inline double squared_error(std::span<const Point> points, const ConcretePrimitive& prim) {
  double err = 0.0;
  for (std::size_t t = 0; t < points.size(); ++t)
    err += squared_distance(points[t], point_at(prim, static_cast<double>(t)));
  return err;
}

// Algebraic circle fit on mean-centred coordinates (Kasa normal equations in
// Bullock's form). nullopt on fewer than three points, collinear or
// coincident input, or a radius beyond kMaxCircleRadius.
inline std::optional<CircleGeometry> fit_circle_geometry(std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n < 3) return std::nullopt;
  Point mean;
  for (const auto& p : points) mean = mean + p;
  mean = mean / static_cast<double>(n);

  double suu = 0, suv = 0, svv = 0, suuu = 0, svvv = 0, suvv = 0, svuu = 0;
  for (const auto& p : points) {
    const double u = p.x - mean.x;
    const double v = p.y - mean.y;
    suu += u * u;
    suv += u * v;
    svv += v * v;
    suuu += u * u * u;
    svvv += v * v * v;
    suvv += u * v * v;
    svuu += v * u * u;
  }
  // eigenvalues of [[suu, suv], [suv, svv]]
  const double half_trace = 0.5 * (suu + svv);
  const double disc = std::hypot(0.5 * (suu - svv), suv);
  const double lmax = half_trace + disc;
  const double lmin = half_trace - disc;
  if (!(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > kMaxCircleCondition) return std::nullopt;

  const double det = suu * svv - suv * suv;
  const double bu = 0.5 * (suuu + suvv);
  const double bv = 0.5 * (svvv + svuu);
  const double uc = (bu * svv - bv * suv) / det;
  const double vc = (suu * bv - suv * bu) / det;
  const double radius = std::sqrt(uc * uc + vc * vc + (suu + svv) / static_cast<double>(n));
  if (!std::isfinite(radius) || radius > kMaxCircleRadius) return std::nullopt;

  CircleGeometry g;
  g.center = {mean.x + uc, mean.y + vc};
  g.radius = radius;
  for (const auto& p : points) {
    const double d = distance(p, g.center) - radius;
    g.residual += d * d;
  }
  return g;
}

namespace detail {

// Least-squares line value(t) = intercept + slope * t over t = 0..n-1.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
};

inline LinearFit fit_linear_in_time(std::span<const double> values) {
  const std::size_t n = values.size();
  const double tmean = 0.5 * static_cast<double>(n - 1);
  double vmean = 0.0;
  for (double v : values) vmean += v;
  vmean /= static_cast<double>(n);
  if (n < 2) return {vmean, 0.0};
  double stt = 0.0, stv = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - tmean;
    stt += dt * dt;
    stv += dt * (values[t] - vmean);
  }
  const double slope = stv / stt;
  return {vmean - slope * tmean, slope};
}

// Wraps an angle difference into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace detail

// Two-step circle fit: geometry first, then a linear fit of the unwrapped
// angles of the points projected onto the circle.
inline std::optional<FitResult> fit_circle(std::span<const Point> points) {
  auto geometry = fit_circle_geometry(points);
  if (!geometry) return std::nullopt;
  const std::size_t n = points.size();
  std::vector<double> angles(n);
  double previous = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const Point d = points[t] - geometry->center;
    // a point on the centre has no direction; keep the previous angle
    double a = (d.x == 0.0 && d.y == 0.0) ? previous : std::atan2(d.y, d.x);
    if (t > 0) a = previous + detail::wrap_angle(a - previous);
    angles[t] = a;
    previous = a;
  }
  const auto line = detail::fit_linear_in_time(angles);
  CirclePrimitive c{geometry->center, geometry->radius, line.slope, line.intercept,
                    static_cast<int>(n)};
  FitResult r{c, squared_error(points, c)};
  if (!std::isfinite(r.error)) return std::nullopt;
  return r;
}

inline FitResult fit_line(std::span<const Point> points) {
  if (points.size() < 2) throw InputTooShortError("line fit needs at least 2 points");
  std::vector<double> xs(points.size()), ys(points.size());
  for (std::size_t t = 0; t < points.size(); ++t) {
    xs[t] = points[t].x;
    ys[t] = points[t].y;
  }
  const auto fx = detail::fit_linear_in_time(xs);
  const auto fy = detail::fit_linear_in_time(ys);
  LinePrimitive l{{fx.intercept, fy.intercept}, {fx.slope, fy.slope},
                  static_cast<int>(points.size())};
  return {l, squared_error(points, l)};
}

inline FitResult fit_stationary(std::span<const Point> points) {
  if (points.empty()) throw InputTooShortError("stationary fit needs at least 1 point");
  Point c;
  for (const auto& p : points) c = c + p;
  c = c / static_cast<double>(points.size());
  StationaryPrimitive s{c, static_cast<int>(points.size())};
  return {s, squared_error(points, s)};
}

// Minimum-error primitive. Simpler primitives win ties (stationary, then
// line, then circle).
inline FitResult fit_best(std::span<const Point> points) {
  if (points.size() < 2) throw InputTooShortError("primitive fit needs at least 2 points");
  FitResult best = fit_stationary(points);
  const double tol = kFitTieAbsolute + kFitTieRelative * best.error;
  auto consider = [&](const FitResult& candidate) {
    if (candidate.error < best.error - tol) best = candidate;
  };
  consider(fit_line(points));
  if (auto circle = fit_circle(points)) consider(*circle);
  return best;
}

}  // namespace motionprog
