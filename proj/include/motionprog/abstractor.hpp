#pragma once

// Level-3 programs: start/middle/end summaries of concrete primitives,
// for-loops over Gaussian primitives, and their sampled execution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "motionprog/errors.hpp"
#include "motionprog/geometry.hpp"
#include "motionprog/json_text.hpp"
#include "motionprog/primitive.hpp"
#include "motionprog/primitive_fit.hpp"
#include "motionprog/segmenter.hpp"

namespace motionprog {

struct KeyTriple {
  Point start;
  Point middle;
  Point end;
  friend bool operator==(const KeyTriple&, const KeyTriple&) = default;
};

// Deterministic abstract primitive; points[j] belongs to joint j.
struct DetPrim {
  std::vector<KeyTriple> points;
  int time = 1;
  friend bool operator==(const DetPrim&, const DetPrim&) = default;
};

// Gaussian over the 6J feature vector (per joint: sx sy mx my ex ey) and the
// empirical distribution of durations (duration -> count).
struct ProbPrim {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::map<int, int> durations;

  std::size_t joint_count() const { return static_cast<std::size_t>(mean.size()) / 6; }
  double mean_duration() const {
    double total = 0.0, count = 0.0;
    for (auto [t, c] : durations) {
      total += static_cast<double>(t) * c;
      count += c;
    }
    return total / count;
  }
};

struct ForLoop {
  int iter = 2;
  std::vector<ProbPrim> body;
};

using Statement = std::variant<DetPrim, ForLoop>;

struct AbstractProgram {
  std::vector<std::string> joints;
  double fps = 30.0;
  int width = 512;
  int height = 512;
  std::vector<Statement> statements;
};

struct LoopConfig {
  int max_body = 4;                  // l_max
  int init_window = 8;               // W, in primitives
  double quality_threshold = 150.0;  // tau, px^2
  int min_iterations = 2;
};

// tau default for a given frame size: 150 px^2 at 512x512, scaled with the
// squared image diagonal.
inline double default_quality_threshold(int width, int height) {
  const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
  return 150.0 * (diag / 724.0) * (diag / 724.0);
}

inline void validate(const LoopConfig& cfg) {
  if (cfg.max_body < 1) throw StructuralError("max_body must be >= 1");
  if (cfg.init_window < 2 * cfg.max_body) throw StructuralError("init_window must be >= 2*max_body");
  if (!(cfg.quality_threshold > 0.0)) throw StructuralError("quality threshold must be > 0");
  if (cfg.min_iterations < 2) throw StructuralError("min_iterations must be >= 2");
}

struct LoopCandidate {
  std::size_t start_stmt = 0;  // first covered DetPrim
  std::size_t end_stmt = 0;    // one past the last covered DetPrim
  std::size_t body_size = 1;
  double quality = 0.0;
  std::vector<ProbPrim> body;

  std::size_t iterations() const { return (end_stmt - start_stmt) / body_size; }
};

// ---------------------------------------------------------------------------
// concrete -> abstract

inline int middle_index(int time) { return (time - 1) / 2; }

inline KeyTriple key_triple(const ConcretePrimitive& prim) {
  const int time = duration(prim);
  return {point_at(prim, 0.0), point_at(prim, static_cast<double>(middle_index(time))),
          point_at(prim, static_cast<double>(time - 1))};
}

inline std::vector<DetPrim> to_abstract(const ConcreteProgram& program) {
  validate(program);
  std::vector<DetPrim> out(program.segment_count());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].time = program.boundaries[k + 1] - program.boundaries[k];
    for (const auto& track : program.tracks) out[k].points.push_back(key_triple(track[k]));
  }
  return out;
}

inline Eigen::VectorXd feature_vector(const DetPrim& d) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(6 * d.points.size()));
  for (std::size_t j = 0; j < d.points.size(); ++j) {
    const auto& p = d.points[j];
    v.segment(static_cast<Eigen::Index>(6 * j), 6) << p.start.x, p.start.y, p.middle.x,
        p.middle.y, p.end.x, p.end.y;
  }
  return v;
}

inline DetPrim det_prim_from_feature(const Eigen::VectorXd& v, int time) {
  DetPrim d;
  d.time = time;
  for (Eigen::Index j = 0; j + 5 < v.size(); j += 6)
    d.points.push_back({{v[j], v[j + 1]}, {v[j + 2], v[j + 3]}, {v[j + 4], v[j + 5]}});
  return d;
}

// S_i = { w_j : j mod l = i }, i = 0..l-1.
inline std::vector<std::vector<DetPrim>> group_window(std::span<const DetPrim> window,
                                                      std::size_t l) {
  if (l == 0 || window.size() < l) throw StructuralError("window shorter than loop body");
  std::vector<std::vector<DetPrim>> groups(l);
  for (std::size_t j = 0; j < window.size(); ++j) groups[j % l].push_back(window[j]);
  return groups;
}

// Gaussian with population covariance (divide by n). The mean is accumulated
// as offsets from the first member so identical members give zero covariance
// exactly.
inline ProbPrim fit_prob_prim(std::span<const DetPrim> group) {
  if (group.empty()) throw StructuralError("cannot fit a distribution to an empty group");
  const auto n = static_cast<double>(group.size());
  const Eigen::VectorXd origin = feature_vector(group.front());
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(group.size());
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(origin.size());
  ProbPrim p;
  for (const auto& d : group) {
    if (d.points.size() != group.front().points.size())
      throw StructuralError("group members have different joint counts");
    xs.push_back(feature_vector(d));
    offset += xs.back() - origin;
    ++p.durations[d.time];
  }
  offset /= n;
  p.mean = origin + offset;
  p.covariance = Eigen::MatrixXd::Zero(origin.size(), origin.size());
  for (const auto& x : xs) {
    const Eigen::VectorXd c = (x - origin) - offset;
    p.covariance.noalias() += c * c.transpose();
  }
  p.covariance /= n;
  return p;
}

struct WindowFit {
  double quality = 0.0;  // mean Frobenius norm of the per-slot covariances
  std::vector<ProbPrim> body;
};

inline WindowFit fit_window(std::span<const DetPrim> window, std::size_t l) {
  WindowFit fit;
  for (const auto& group : group_window(window, l)) {
    fit.body.push_back(fit_prob_prim(group));
    fit.quality += fit.body.back().covariance.norm();
  }
  fit.quality /= static_cast<double>(l);
  return fit;
}

// Left-to-right scan for non-overlapping loops. At each anchor the body sizes
// 1..max_body are tried in order on an initial window of the largest multiple
// of l not exceeding init_window (or the primitives left); the first passing
// size is grown one iteration at a time while the recomputed quality stays
// within the threshold.
inline std::vector<LoopCandidate> detect_loops(std::span<const DetPrim> prims,
                                               const LoopConfig& cfg) {
  validate(cfg);
  std::vector<LoopCandidate> out;
  const std::size_t n = prims.size();
  const auto tau = cfg.quality_threshold;
  std::size_t anchor = 0;
  while (anchor < n) {
    bool accepted = false;
    for (std::size_t l = 1; l <= static_cast<std::size_t>(cfg.max_body) && !accepted; ++l) {
      const std::size_t avail = n - anchor;
      std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(cfg.init_window), avail);
      len -= len % l;
      if (len < 2 * l) continue;
      WindowFit fit = fit_window(prims.subspan(anchor, len), l);
      if (fit.quality > tau) continue;
      while (anchor + len + l <= n) {
        WindowFit grown = fit_window(prims.subspan(anchor, len + l), l);
        if (grown.quality > tau) break;
        fit = std::move(grown);
        len += l;
      }
      if (len / l < static_cast<std::size_t>(cfg.min_iterations)) continue;
      out.push_back({anchor, anchor + len, l, fit.quality, std::move(fit.body)});
      anchor += len;
      accepted = true;
    }
    if (!accepted) ++anchor;
  }
  return out;
}

// Replaces each candidate's interval by a ForLoop; other DetPrims pass through.
inline AbstractProgram roll_loops(std::span<const DetPrim> prims,
                                  std::span<const LoopCandidate> candidates) {
  AbstractProgram program;
  std::size_t cursor = 0;
  for (const auto& c : candidates) {
    if (c.start_stmt < cursor) throw StructuralError("loop candidates overlap or are unsorted");
    if (c.end_stmt > prims.size() || c.body_size == 0 || c.end_stmt <= c.start_stmt ||
        (c.end_stmt - c.start_stmt) % c.body_size != 0 || c.body.size() != c.body_size)
      throw StructuralError("malformed loop candidate");
    for (; cursor < c.start_stmt; ++cursor) program.statements.emplace_back(prims[cursor]);
    program.statements.emplace_back(ForLoop{static_cast<int>(c.iterations()), c.body});
    cursor = c.end_stmt;
  }
  for (; cursor < prims.size(); ++cursor) program.statements.emplace_back(prims[cursor]);
  return program;
}

// to_abstract, detect_loops and roll_loops in one step, keeping the
// program's joints and frame metadata.
inline AbstractProgram abstract_program(const ConcreteProgram& program, const LoopConfig& cfg,
                                        std::vector<LoopCandidate>* candidates = nullptr) {
  const auto prims = to_abstract(program);
  auto found = detect_loops(prims, cfg);
  AbstractProgram out = roll_loops(prims, found);
  out.joints = program.joints;
  out.fps = program.fps;
  out.width = program.width;
  out.height = program.height;
  if (candidates) *candidates = std::move(found);
  return out;
}

// Number of DetPrims a program expands to: plain statements plus iter * body.
inline std::size_t primitive_count(const AbstractProgram& program) {
  std::size_t count = 0;
  for (const auto& s : program.statements) {
    if (const auto* loop = std::get_if<ForLoop>(&s))
      count += static_cast<std::size_t>(loop->iter) * loop->body.size();
    else
      ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// sampling and execution

// Draws DetPrims from one ProbPrim using the symmetric square root of its
// covariance.
class ProbPrimSampler {
 public:
  explicit ProbPrimSampler(const ProbPrim& prim) : prim_(&prim) {
    if (prim.durations.empty()) throw StructuralError("probabilistic primitive has no durations");
    for (auto [t, c] : prim.durations) {
      if (t < 1 || c < 1) throw StructuralError("bad duration distribution");
      durations_.insert(durations_.end(), static_cast<std::size_t>(c), t);
    }
    const auto& cov = prim.covariance;
    if (cov.rows() != prim.mean.size() || cov.cols() != prim.mean.size())
      throw StructuralError("covariance shape does not match mean");
    zero_ = cov.isZero(0.0);
    if (zero_) return;
    if (!cov.isApprox(cov.transpose(), 1e-12)) throw NumericError("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()));
    if (eig.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
    const auto& values = eig.eigenvalues();
    const double tol = 1e-9 * std::max(1.0, values.cwiseAbs().maxCoeff());
    if (values.minCoeff() < -tol) throw NumericError("covariance is not positive semidefinite");
    const Eigen::VectorXd root = values.cwiseMax(0.0).cwiseSqrt();
    sqrt_cov_ = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  }

  template <class Rng>
  DetPrim operator()(Rng& rng) const {
    Eigen::VectorXd x = prim_->mean;
    if (!zero_) {
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::VectorXd z(x.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
      x += sqrt_cov_ * z;
    }
    std::uniform_int_distribution<std::size_t> pick(0, durations_.size() - 1);
    return det_prim_from_feature(x, durations_[pick(rng)]);
  }

 private:
  const ProbPrim* prim_;
  std::vector<int> durations_;
  Eigen::MatrixXd sqrt_cov_;
  bool zero_ = false;
};

template <class Rng>
DetPrim sample_det_prim(const ProbPrim& prim, Rng& rng) {
  return ProbPrimSampler(prim)(rng);
}

// Below these, three sampled points are treated as not moving, or as moving
// along a straight line.
inline constexpr double kStationaryTolerance = 1.0;  // px, max distance to centroid, exclusive
inline constexpr double kCollinearTolerance = 0.5;   // px^2, triangle area

// Picks the concrete primitive passing through the start, middle and end
// points of each joint.
inline std::vector<ConcretePrimitive> concretize(const DetPrim& d) {
  if (d.time < 1) throw StructuralError("DetPrim time must be >= 1");
  std::vector<ConcretePrimitive> out;
  out.reserve(d.points.size());
  const double span_t = static_cast<double>(d.time - 1);
  for (const auto& [s, m, e] : d.points) {
    const Point centroid = (s + m + e) / 3.0;
    const double spread =
        std::max({distance(s, centroid), distance(m, centroid), distance(e, centroid)});
    if (d.time == 1 || spread < kStationaryTolerance) {
      out.emplace_back(StationaryPrimitive{centroid, d.time});
      continue;
    }
    const double twice_area = cross(m - s, e - s);
    std::optional<CirclePrimitive> circle;
    if (0.5 * std::abs(twice_area) >= kCollinearTolerance) {
      // circumcentre of s, m, e
      const Point b = m - s;
      const Point c = e - s;
      const double denom = 2.0 * twice_area;
      const Point rel{(c.y * squared_norm(b) - b.y * squared_norm(c)) / denom,
                      (b.x * squared_norm(c) - c.x * squared_norm(b)) / denom};
      const Point center = s + rel;
      const double radius = norm(rel);
      if (std::isfinite(radius) && radius <= kMaxCircleRadius) {
        const double a_start = std::atan2(s.y - center.y, s.x - center.x);
        const double a_end = std::atan2(e.y - center.y, e.x - center.x);
        double sweep = 0.0;
        if (twice_area > 0.0) {  // counter-clockwise s -> m -> e
          sweep = a_end - a_start;
          while (sweep <= 0.0) sweep += 2.0 * kPi;
        } else {
          sweep = a_end - a_start;
          while (sweep >= 0.0) sweep -= 2.0 * kPi;
        }
        circle = CirclePrimitive{center, radius, sweep / span_t, a_start, d.time};
      }
    }
    if (circle) {
      out.emplace_back(*circle);
    } else {
      out.emplace_back(LinePrimitive{s, (e - s) / span_t, d.time});
    }
  }
  return out;
}

// Independent generator per (seed, statement, iteration) so any single loop
// iteration can be reproduced without replaying the ones before it.
inline std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t statement,
                                  std::uint64_t iteration) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return std::mt19937_64(mix(mix(mix(seed) ^ statement) ^ iteration));
}

// DetPrims sampled for iterations [first, first + count) of a loop that
// sits at `statement`.
inline std::vector<DetPrim> sample_loop_iterations(const ForLoop& loop, std::size_t statement,
                                                   int first, int count, std::uint64_t seed) {
  std::vector<ProbPrimSampler> samplers;
  samplers.reserve(loop.body.size());
  for (const auto& p : loop.body) samplers.emplace_back(p);
  std::vector<DetPrim> out;
  for (int i = first; i < first + count; ++i) {
    auto rng = derive_rng(seed, statement, static_cast<std::uint64_t>(i));
    for (const auto& sampler : samplers) out.push_back(sampler(rng));
  }
  return out;
}

// Concrete program from a sequence of DetPrims.
inline ConcreteProgram concretize_all(std::span<const DetPrim> prims,
                                      const std::vector<std::string>& joints, double fps,
                                      int width, int height) {
  ConcreteProgram out;
  out.joints = joints;
  out.fps = fps;
  out.width = width;
  out.height = height;
  out.tracks.resize(joints.size());
  out.boundaries.push_back(0);
  for (const auto& d : prims) {
    if (d.points.size() != joints.size()) throw StructuralError("DetPrim joint count mismatch");
    auto prims_j = concretize(d);
    for (std::size_t j = 0; j < joints.size(); ++j) out.tracks[j].push_back(prims_j[j]);
    out.boundaries.push_back(out.boundaries.back() + d.time);
  }
  return out;
}

// DetPrims are used as-is; every loop iteration samples each body primitive
// afresh. The result is concretized segment by segment.
inline ConcreteProgram execute_abstract(const AbstractProgram& program, std::uint64_t seed) {
  std::vector<DetPrim> prims;
  for (std::size_t s = 0; s < program.statements.size(); ++s) {
    const auto& stmt = program.statements[s];
    if (const auto* d = std::get_if<DetPrim>(&stmt)) {
      prims.push_back(*d);
    } else {
      const auto& loop = std::get<ForLoop>(stmt);
      auto iters = sample_loop_iterations(loop, s, 0, loop.iter, seed);
      prims.insert(prims.end(), iters.begin(), iters.end());
    }
  }
  if (prims.empty()) throw StructuralError("abstract program has no statements");
  return concretize_all(prims, program.joints, program.fps, program.width, program.height);
}

// ---------------------------------------------------------------------------
// abstract program file

inline Json det_prim_to_json(const DetPrim& d) {
  Json start = Json::array(), middle = Json::array(), end = Json::array();
  for (const auto& p : d.points) {
    start.push_back(point_to_json(p.start));
    middle.push_back(point_to_json(p.middle));
    end.push_back(point_to_json(p.end));
  }
  return Json{{"kind", "det"}, {"start", start}, {"middle", middle}, {"end", end}, {"time", d.time}};
}

inline DetPrim det_prim_from_json(const Json& j, std::size_t joints) {
  DetPrim d;
  d.time = get_field<int>(j, "time");
  if (d.time < 1) throw StructuralError("DetPrim time must be >= 1");
  const auto read = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != joints)
      throw StructuralError(std::string("DetPrim field '") + key + "' needs one point per joint");
    return j.at(key);
  };
  const Json& s = read("start");
  const Json& m = read("middle");
  const Json& e = read("end");
  for (std::size_t i = 0; i < joints; ++i)
    d.points.push_back({point_from_json(s[i]), point_from_json(m[i]), point_from_json(e[i])});
  return d;
}

inline Json prob_prim_to_json(const ProbPrim& p) {
  Json mean = Json::array();
  for (Eigen::Index i = 0; i < p.mean.size(); ++i) mean.push_back(p.mean[i]);
  Json cov = Json::array();
  for (Eigen::Index r = 0; r < p.covariance.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < p.covariance.cols(); ++c) row.push_back(p.covariance(r, c));
    cov.push_back(std::move(row));
  }
  Json durations = Json::object();
  for (auto [t, c] : p.durations) durations[std::to_string(t)] = c;
  return Json{{"mean", mean}, {"cov", cov}, {"durations", durations}};
}

inline ProbPrim prob_prim_from_json(const Json& j, std::size_t joints) {
  ProbPrim p;
  const auto mean = get_field<std::vector<double>>(j, "mean");
  const auto cov = get_field<std::vector<std::vector<double>>>(j, "cov");
  const auto dim = 6 * joints;
  if (mean.size() != dim || cov.size() != dim)
    throw StructuralError("ProbPrim dimension must be 6 * joints");
  p.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(dim));
  p.covariance.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < dim; ++r) {
    if (cov[r].size() != dim) throw StructuralError("covariance must be square");
    for (std::size_t c = 0; c < dim; ++c)
      p.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cov[r][c];
  }
  if (!j.contains("durations") || !j.at("durations").is_object() || j.at("durations").empty())
    throw StructuralError("ProbPrim needs a nonempty 'durations' object");
  for (const auto& [key, value] : j.at("durations").items()) {
    int t = 0;
    try {
      std::size_t used = 0;
      t = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw StructuralError("duration key '" + key + "' is not an integer");
    }
    if (t < 1 || !value.is_number_integer() || value.get<int>() < 1)
      throw StructuralError("durations must map positive times to positive counts");
    p.durations[t] = value.get<int>();
  }
  return p;
}

inline Json abstract_to_json(const AbstractProgram& program) {
  Json statements = Json::array();
  for (const auto& s : program.statements) {
    if (const auto* d = std::get_if<DetPrim>(&s)) {
      statements.push_back(det_prim_to_json(*d));
    } else {
      const auto& loop = std::get<ForLoop>(s);
      Json body = Json::array();
      for (const auto& p : loop.body) body.push_back(prob_prim_to_json(p));
      statements.push_back(Json{{"kind", "loop"}, {"iter", loop.iter}, {"body", body}});
    }
  }
  Json j = Json::object();
  j["version"] = 1;
  j["fps"] = program.fps;
  j["width"] = program.width;
  j["height"] = program.height;
  j["joints"] = program.joints;
  j["statements"] = std::move(statements);
  return j;
}

inline AbstractProgram abstract_from_json(const Json& j) {
  if (!j.is_object()) throw StructuralError("abstract program must be a JSON object");
  if (get_field<int>(j, "version") != 1) throw StructuralError("unsupported program version");
  AbstractProgram program;
  program.joints = get_field<std::vector<std::string>>(j, "joints");
  program.fps = j.value("fps", 30.0);
  program.width = j.value("width", 512);
  program.height = j.value("height", 512);
  if (!j.contains("statements") || !j.at("statements").is_array())
    throw StructuralError("abstract program needs a 'statements' array");
  const std::size_t joints = program.joints.size();
  for (const auto& s : j.at("statements")) {
    const auto kind = get_field<std::string>(s, "kind");
    if (kind == "det") {
      program.statements.emplace_back(det_prim_from_json(s, joints));
    } else if (kind == "loop") {
      ForLoop loop;
      loop.iter = get_field<int>(s, "iter");
      if (loop.iter < 1) throw StructuralError("loop iter must be >= 1");
      if (!s.contains("body") || !s.at("body").is_array() || s.at("body").empty())
        throw StructuralError("loop body must be a nonempty array");
      for (const auto& p : s.at("body")) loop.body.push_back(prob_prim_from_json(p, joints));
      program.statements.emplace_back(std::move(loop));
    } else {
      throw StructuralError("unknown statement kind '" + kind + "'");
    }
  }
  return program;
}

}  // namespace motionprog
