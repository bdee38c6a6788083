#pragma once

// Local HTTP service holding editing sessions: a pose upload is turned into
// concrete and abstract programs, loops can be resized, and the result is
// re-executed on demand. Reads see immutable snapshots; writes to one session
// are serialized.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

// Eigen first: <resolv.h>, pulled in by httplib, defines a `_res` macro
// that clashes with Eigen's parameter names.
#include "motionprog/motionprog.hpp"

#include <httplib.h>

namespace motionprog::service {

struct EditRecord {
  std::size_t loop = 0;
  int old_iter = 0;
  int new_iter = 0;
  std::uint64_t seed = 0;
};

struct SessionSnapshot {
  std::string id;
  PoseSequence source;
  SegmentationConfig segmentation;
  LoopConfig loops;
  ConcreteProgram concrete;
  AbstractProgram abstract;
  std::vector<EditRecord> history;
};

// Program invariants a session must satisfy after every request; empty when
// all hold.
inline std::vector<std::string> check_invariants(const SessionSnapshot& s) {
  std::vector<std::string> violations;
  try {
    validate(s.concrete);
  } catch (const Error& e) {
    violations.emplace_back(std::string("concrete: ") + e.what());
  }
  if (s.abstract.joints != s.concrete.joints)
    violations.emplace_back("abstract and concrete joints differ");
  std::size_t stmt = 0;
  for (const auto& st : s.abstract.statements) {
    const std::string where = "statement " + std::to_string(stmt++) + ": ";
    if (const auto* d = std::get_if<DetPrim>(&st)) {
      if (d->time < 1) violations.push_back(where + "time < 1");
      if (d->points.size() != s.abstract.joints.size())
        violations.push_back(where + "joint count mismatch");
      continue;
    }
    const auto& loop = std::get<ForLoop>(st);
    if (loop.iter < 1) violations.push_back(where + "iter < 1");
    if (loop.body.empty()) violations.push_back(where + "empty loop body");
    for (const auto& p : loop.body) {
      try {
        ProbPrimSampler check(p);
      } catch (const Error& e) {
        violations.push_back(where + e.what());
      }
    }
  }
  if (primitive_count(s.abstract) != s.concrete.segment_count())
    violations.emplace_back("loop arithmetic: abstract expands to " +
                            std::to_string(primitive_count(s.abstract)) + " primitives, concrete has " +
                            std::to_string(s.concrete.segment_count()) + " segments");
  return violations;
}

// 64-bit FNV-1a, stable across platforms and runs.
inline std::uint64_t stable_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed used when a request does not name one.
inline std::uint64_t derived_seed(const SessionSnapshot& s) {
  return stable_hash(s.id + "#" + std::to_string(s.history.size()));
}

class SessionStore {
 public:
  using SnapshotPtr = std::shared_ptr<const SessionSnapshot>;

  explicit SessionStore(std::optional<std::filesystem::path> persist_dir = std::nullopt)
      : persist_dir_(std::move(persist_dir)), ids_(std::random_device{}()) {
    if (persist_dir_) std::filesystem::create_directories(*persist_dir_);
  }

  SnapshotPtr create(PoseSequence source, const SegmentationConfig& seg, const LoopConfig& loops) {
    auto snap = std::make_shared<SessionSnapshot>();
    snap->source = std::move(source);
    snap->segmentation = seg;
    snap->loops = loops;
    snap->concrete = segment(snap->source, seg);
    snap->abstract = abstract_program(snap->concrete, loops);
    auto session = std::make_shared<Session>();
    {
      std::unique_lock lock(mu_);
      do {
        snap->id = next_id();
      } while (sessions_.count(snap->id) != 0);
      session->snapshot = snap;
      sessions_.emplace(snap->id, session);
    }
    persist(*snap);
    return snap;
  }

  SnapshotPtr get(const std::string& id) const {
    auto session = find(id);
    if (!session) return nullptr;
    std::lock_guard lock(session->pointer_mu);
    return session->snapshot;
  }

  // Applies `edit` to a copy of the current snapshot and publishes the copy.
  // If `edit` throws, the session is left untouched. nullptr for unknown ids.
  SnapshotPtr update(const std::string& id, const std::function<void(SessionSnapshot&)>& edit) {
    auto session = find(id);
    if (!session) return nullptr;
    std::lock_guard writer(session->write_mu);
    SnapshotPtr current;
    {
      std::lock_guard lock(session->pointer_mu);
      current = session->snapshot;
    }
    auto next = std::make_shared<SessionSnapshot>(*current);
    edit(*next);
    {
      std::lock_guard lock(session->pointer_mu);
      session->snapshot = next;
    }
    persist(*next);
    return next;
  }

  bool erase(const std::string& id) {
    std::unique_lock lock(mu_);
    return sessions_.erase(id) != 0;
  }

 private:
  struct Session {
    std::mutex write_mu;
    mutable std::mutex pointer_mu;
    SnapshotPtr snapshot;
  };

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::string next_id() {
    std::ostringstream os;
    os << std::hex << ids_();
    return os.str();
  }

  void persist(const SessionSnapshot& s) const {
    if (!persist_dir_) return;
    std::ofstream(*persist_dir_ / (s.id + ".concrete.json")) << dump_json(program_to_json(s.concrete));
    std::ofstream(*persist_dir_ / (s.id + ".abstract.json")) << dump_json(abstract_to_json(s.abstract));
  }

  std::optional<std::filesystem::path> persist_dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 ids_;
};

namespace detail {

inline void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(dump_json(body), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& code,
                       const std::string& message) {
  send_json(res, status, Json{{"error", Json{{"code", code}, {"message", message}}}});
}

inline Json loop_summary(const SessionSnapshot& s) {
  Json loops = Json::array();
  std::size_t index = 0;
  for (const auto& st : s.abstract.statements)
    if (const auto* loop = std::get_if<ForLoop>(&st)) {
      double body_time = 0.0;
      for (const auto& p : loop->body) body_time += p.mean_duration();
      loops.push_back(Json{{"index", index++}, {"iter", loop->iter},
                           {"body_size", loop->body.size()}, {"mean_body_duration", body_time}});
    }
  return loops;
}

inline Json session_body(const SessionSnapshot& s) {
  return Json{{"id", s.id},
              {"concrete", program_to_json(s.concrete)},
              {"abstract", abstract_to_json(s.abstract)},
              {"loops", loop_summary(s)}};
}

template <class T>
std::optional<T> query_number(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  double v = 0.0;
  if (!parse_double(req.get_param_value(key), v))
    throw StructuralError(std::string("query parameter '") + key + "' is not a number");
  return static_cast<T>(v);
}

}  // namespace detail

class MotionService {
 public:
  explicit MotionService(std::optional<std::filesystem::path> persist_dir = std::nullopt)
      : store_(std::move(persist_dir)) {
    routes();
  }

  httplib::Server& server() { return server_; }
  SessionStore& store() { return store_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Maps library errors onto status codes: bad input is the client's fault,
  // anything else is reported as an internal failure.
  static httplib::Server::Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const ParseError& e) {
        detail::send_error(res, 400, "parse_error", e.what());
      } catch (const StructuralError& e) {
        detail::send_error(res, 400, "invalid_request", e.what());
      } catch (const NoLoopError& e) {
        detail::send_error(res, 404, "not_found", e.what());
      } catch (const InputTooShortError& e) {
        detail::send_error(res, 422, "input_too_short", e.what());
      } catch (const Error& e) {
        detail::send_error(res, 422, "unprocessable", e.what());
      } catch (const nlohmann::json::exception& e) {
        detail::send_error(res, 400, "invalid_request", e.what());
      } catch (const std::exception& e) {
        detail::send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Expose-Headers", "X-Motionprog-Seed"}});
    server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });

    server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const bool csv = req.get_header_value("Content-Type").find("csv") != std::string::npos;
      auto pose = parse_keypoints(req.body, csv ? PoseFormat::kCsv : PoseFormat::kJson);
      SegmentationConfig seg;
      if (auto v = detail::query_number<double>(req, "lambda_coeff")) seg.lambda_coeff = *v;
      if (auto v = detail::query_number<int>(req, "lambda_window")) seg.lambda_window = *v;
      if (auto v = detail::query_number<int>(req, "min_segment")) seg.min_segment = *v;
      if (auto v = detail::query_number<int>(req, "max_segment")) seg.max_segment = *v;
      LoopConfig loops;
      loops.quality_threshold = default_quality_threshold(pose.width, pose.height);
      if (auto v = detail::query_number<double>(req, "tau")) loops.quality_threshold = *v;
      if (auto v = detail::query_number<int>(req, "max_body")) {
        loops.max_body = *v;
        loops.init_window = 2 * *v;
      }
      if (auto v = detail::query_number<int>(req, "min_iters")) loops.min_iterations = *v;
      validate(seg);
      validate(loops);
      auto snap = store_.create(std::move(pose), seg, loops);
      detail::send_json(res, 201, detail::session_body(*snap));
    }));

    server_.Get(R"(/sessions/([^/]+)/program)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto snap = store_.get(req.matches[1]);
                  if (!snap) return detail::send_error(res, 404, "not_found", "unknown session");
                  const auto level =
                      req.has_param("level") ? req.get_param_value("level") : "concrete";
                  if (level == "concrete")
                    return detail::send_json(res, 200, program_to_json(snap->concrete));
                  if (level == "abstract")
                    return detail::send_json(res, 200, abstract_to_json(snap->abstract));
                  detail::send_error(res, 400, "invalid_request",
                                     "level must be 'concrete' or 'abstract'");
                }));

    server_.Patch(R"(/sessions/([^/]+)/loops/(\d+))",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                    const Json body = parse_json(req.body);
                    if (!body.is_object() || !body.contains("iter") ||
                        !body.at("iter").is_number_integer())
                      throw StructuralError("body must be {\"iter\": <integer>}");
                    const int iter = body.at("iter").get<int>();
                    if (iter < 1) throw StructuralError("iter must be >= 1");
                    const auto index = std::stoul(req.matches[2]);
                    std::optional<std::uint64_t> seed;
                    if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
                    auto snap = store_.update(req.matches[1], [&](SessionSnapshot& s) {
                      std::size_t seen = 0;
                      ForLoop* target = nullptr;
                      for (auto& st : s.abstract.statements)
                        if (auto* loop = std::get_if<ForLoop>(&st); loop && seen++ == index)
                          target = loop;
                      if (!target) throw NoLoopError("no loop with index " + std::to_string(index));
                      const std::uint64_t used = seed ? *seed : derived_seed(s);
                      s.history.push_back({index, target->iter, iter, used});
                      target->iter = iter;
                      s.concrete = execute_abstract(s.abstract, used);
                    });
                    if (!snap) return detail::send_error(res, 404, "not_found", "unknown session");
                    Json out = detail::session_body(*snap);
                    out["seed"] = snap->history.back().seed;
                    detail::send_json(res, 200, out);
                  }));

    server_.Post(R"(/sessions/([^/]+)/execute)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto snap = store_.get(req.matches[1]);
                   if (!snap) return detail::send_error(res, 404, "not_found", "unknown session");
                   const Json body = req.body.empty() ? Json::object() : parse_json(req.body);
                   if (!body.is_object()) throw StructuralError("body must be an object");
                   const int factor = body.value("factor", 1);
                   if (factor < 1) throw StructuralError("factor must be >= 1");
                   const std::uint64_t seed =
                       body.contains("seed") ? body.at("seed").get<std::uint64_t>()
                                             : derived_seed(*snap);
                   auto poses = interpolate_poses(execute_abstract(snap->abstract, seed), factor);
                   res.set_header("X-Motionprog-Seed", std::to_string(seed));
                   res.status = 200;
                   res.set_content(serialize_keypoints(poses, PoseFormat::kJson),
                                   "application/json");
                 }));

    server_.Get(R"(/sessions/([^/]+)/validate)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto snap = store_.get(req.matches[1]);
                  if (!snap) return detail::send_error(res, 404, "not_found", "unknown session");
                  const auto violations = check_invariants(*snap);
                  detail::send_json(res, 200,
                                    Json{{"ok", violations.empty()},
                                         {"edits", snap->history.size()},
                                         {"violations", violations}});
                }));

    server_.Delete(R"(/sessions/([^/]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                     if (!store_.erase(req.matches[1]))
                       return detail::send_error(res, 404, "not_found", "unknown session");
                     res.status = 204;
                   }));
  }

  SessionStore store_;
  httplib::Server server_;
};

}  // namespace motionprog::service
