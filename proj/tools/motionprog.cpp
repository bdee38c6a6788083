// motionprog: command-line front end for fitting, loop synthesis,
// interpolation, prediction, evaluation, synthetic data and the HTTP service.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "motionprog/service.hpp"

namespace fs = std::filesystem;
using namespace motionprog;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Writes through a temporary file so a failed run leaves no partial output.
void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out.flush()) throw Error("cannot write '" + path + "'");
  }
  fs::rename(tmp, target);
}

PoseFormat resolve_format(const std::string& flag, const std::string& path) {
  if (flag == "json") return PoseFormat::kJson;
  if (flag == "csv") return PoseFormat::kCsv;
  if (!flag.empty()) throw StructuralError("--format must be json or csv");
  return pose_format_for_path(path);
}

PoseSequence read_poses(const std::string& path, const std::string& format) {
  return parse_keypoints(read_file(path), resolve_format(format, path));
}

// Statistics go to stdout unless the program itself is written there.
std::ostream& stats_stream(const std::string& out) {
  return out.empty() || out == "-" ? std::cerr : std::cout;
}

struct Options {
  std::string input, input2, out, format, truth, report, persist, host = "127.0.0.1";
  double lambda_coeff = SegmentationConfig{}.lambda_coeff;
  int lambda_window = SegmentationConfig{}.lambda_window;
  int min_segment = SegmentationConfig{}.min_segment;
  std::optional<int> max_segment;
  std::optional<double> tau;
  int max_body = LoopConfig{}.max_body;
  int min_iters = LoopConfig{}.min_iterations;
  int factor = 2;
  int iters = 1;
  std::uint64_t seed = 0;
  std::optional<double> fill_gaps;
  std::optional<double> noise;
  int port = 8080;
};

SegmentationConfig segmentation_config(const Options& o) {
  SegmentationConfig cfg;
  cfg.lambda_coeff = o.lambda_coeff;
  cfg.lambda_window = o.lambda_window;
  cfg.min_segment = o.min_segment;
  cfg.max_segment = o.max_segment;
  validate(cfg);
  return cfg;
}

LoopConfig loop_config(const Options& o, int width, int height) {
  LoopConfig cfg;
  cfg.max_body = o.max_body;
  cfg.init_window = 2 * o.max_body;
  cfg.quality_threshold = o.tau ? *o.tau : default_quality_threshold(width, height);
  cfg.min_iterations = o.min_iters;
  validate(cfg);
  return cfg;
}

void add_segmentation_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--lambda-coeff", o.lambda_coeff, "multiplier on the windowed keypoint covariance");
  cmd->add_option("--lambda-window", o.lambda_window, "covariance window in frames (odd)");
  cmd->add_option("--min-segment", o.min_segment, "shortest segment in frames");
  cmd->add_option("--max-segment", o.max_segment, "longest segment in frames");
}

void add_loop_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--tau", o.tau, "loop quality threshold in px^2 (default scales with frame size)");
  cmd->add_option("--max-body", o.max_body, "largest loop body size");
  cmd->add_option("--min-iters", o.min_iters, "fewest loop iterations");
}

int cmd_fit(const Options& o) {
  auto seq = read_poses(o.input, o.format);
  if (o.fill_gaps) seq = fill_gaps(seq, *o.fill_gaps);
  const auto program = segment(seq, segmentation_config(o));
  const std::string text = dump_json(program_to_json(program));
  write_output(o.out, text);
  auto& os = stats_stream(o.out);
  os << "segments " << program.segment_count() << '\n'
     << "program_error " << format_double(program_error(program, seq)) << '\n'
     << "param_count " << param_count(program) << " (raw " << param_count(seq) << ")\n";
  return 0;
}

int cmd_loops(const Options& o) {
  const auto program = program_from_json(parse_json(read_file(o.input)));
  std::vector<LoopCandidate> found;
  const auto abstract =
      abstract_program(program, loop_config(o, program.width, program.height), &found);
  std::optional<SegmentReport> report;
  if (!o.truth.empty())
    report = evaluate_segments(loop_intervals(program, found), parse_annotations(read_file(o.truth)));
  const std::string text = dump_json(abstract_to_json(abstract));
  write_output(o.out, text);
  if (report && !o.report.empty()) write_output(o.report, dump_json(report_to_json(*report)));
  auto& os = stats_stream(o.out);
  os << "loops " << found.size() << '\n';
  for (const auto& c : found)
    os << "  primitives [" << c.start_stmt << ',' << c.end_stmt << ") frames ["
       << program.boundaries[c.start_stmt] << ',' << program.boundaries[c.end_stmt] << ") body "
       << c.body_size << " iter " << c.iterations() << " quality " << format_double(c.quality)
       << '\n';
  os << "statements " << abstract.statements.size() << '\n';
  if (report) os << report_to_text(*report);
  return 0;
}

int cmd_interp(const Options& o) {
  const auto program = program_from_json(parse_json(read_file(o.input)));
  const auto poses = interpolate_poses(program, o.factor);
  write_output(o.out, serialize_keypoints(poses, resolve_format(o.format, o.out)));
  stats_stream(o.out) << "frames " << poses.frame_count() << '\n';
  return 0;
}

int cmd_predict(const Options& o) {
  const auto abstract = abstract_from_json(parse_json(read_file(o.input)));
  const auto poses = extrapolate_poses(abstract, o.iters, o.seed);
  write_output(o.out, serialize_keypoints(poses, resolve_format(o.format, o.out)));
  stats_stream(o.out) << "frames " << poses.frame_count() << '\n';
  return 0;
}

// A concrete program file is executed; anything else is read as poses.
PoseSequence read_poses_or_program(const std::string& path, const std::string& format) {
  const auto text = read_file(path);
  if (resolve_format(format, path) == PoseFormat::kJson) {
    const auto j = parse_json(text);
    if (j.is_object() && j.contains("boundaries")) return execute_program(program_from_json(j));
    return pose_from_json(j);
  }
  return parse_keypoints(text, PoseFormat::kCsv);
}

int cmd_eval(const Options& o) {
  const auto reference = read_poses(o.input, o.format);
  const auto candidate = read_poses_or_program(o.input2, o.format);
  Json report = Json::object();
  const auto arm = arm_joints(reference);
  if (!arm.empty()) report["kd_arm"] = keypoint_difference(reference, candidate, arm);
  report["kd_all"] = keypoint_difference(reference, candidate);
  report["max_adjacent_diff_reference"] = max_adjacent_diff(reference);
  report["max_adjacent_diff_candidate"] = max_adjacent_diff(candidate);
  report["param_count_reference"] = param_count(reference);
  if (!o.out.empty()) write_output(o.out, dump_json(report));
  for (const auto& [key, value] : report.items()) {
    std::cout << key << ' ';
    if (value.is_number_float())
      std::cout << format_double(value.get<double>());
    else
      std::cout << value.dump();
    std::cout << '\n';
  }
  return 0;
}

int cmd_synth(const Options& o) {
  auto spec = synthetic_spec_from_json(parse_json(read_file(o.input)));
  if (o.noise) spec.noise_sigma = *o.noise;
  if (o.seed != 0) spec.seed = o.seed;
  const auto poses = generate_synthetic(spec);
  write_output(o.out, serialize_keypoints(poses, resolve_format(o.format, o.out)));
  stats_stream(o.out) << "frames " << poses.frame_count() << '\n';
  return 0;
}

int cmd_serve(const Options& o) {
  std::optional<fs::path> persist;
  if (!o.persist.empty()) persist = o.persist;
  service::MotionService svc(persist);
  std::cerr << "motionprog: serving on http://" << o.host << ':' << o.port << '\n';
  if (!svc.listen(o.host, o.port)) throw Error("cannot listen on port " + std::to_string(o.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion programs from pose sequences"};
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "segment a pose file into a concrete program");
  fit->add_option("input", o.input, "pose file (.json or .csv)")->required();
  add_segmentation_flags(fit, o);
  fit->add_option("--fill-gaps", o.fill_gaps, "repair keypoints below this confidence first");

  auto* loops = app.add_subcommand("loops", "synthesize loops from a concrete program");
  loops->add_option("input", o.input, "concrete program file")->required();
  add_loop_flags(loops, o);
  loops->add_option("--truth", o.truth, "ground-truth intervals (start_frame,end_frame,label)");
  loops->add_option("--report", o.report, "where to write the evaluation report (json)");

  auto* interp = app.add_subcommand("interp", "execute a concrete program at a finer time step");
  interp->add_option("input", o.input, "concrete program file")->required();
  interp->add_option("--factor", o.factor, "sub-steps per frame")->check(CLI::PositiveNumber);

  auto* predict = app.add_subcommand("predict", "unroll the final loop of an abstract program");
  predict->add_option("input", o.input, "abstract program file")->required();
  predict->add_option("--iters", o.iters, "extra iterations")->check(CLI::PositiveNumber);
  predict->add_option("--seed", o.seed, "sampling seed");

  auto* eval = app.add_subcommand("eval", "keypoint difference, smoothness and parameter counts");
  eval->add_option("reference", o.input, "reference pose file")->required();
  eval->add_option("candidate", o.input2, "pose file or concrete program")->required();

  auto* synth = app.add_subcommand("synth", "generate poses from a primitive specification");
  synth->add_option("input", o.input, "synthetic spec (json)")->required();
  synth->add_option("--seed", o.seed, "noise seed (overrides the spec when nonzero)");
  synth->add_option("--noise", o.noise, "noise sigma in px (overrides the spec)");

  auto* serve = app.add_subcommand("serve", "run the HTTP editing service");
  serve->add_option("--port", o.port, "port to listen on");
  serve->add_option("--host", o.host, "address to bind");
  serve->add_option("--persist", o.persist, "directory for session snapshots");

  for (auto* cmd : {fit, loops, interp, predict, eval, synth}) {
    cmd->add_option("--out", o.out, "output file (default stdout)");
    cmd->add_option("--format", o.format, "pose format: json or csv (default from file name)");
  }

  CLI11_PARSE(app, argc, argv);
  try {
    if (fit->parsed()) return cmd_fit(o);
    if (loops->parsed()) return cmd_loops(o);
    if (interp->parsed()) return cmd_interp(o);
    if (predict->parsed()) return cmd_predict(o);
    if (eval->parsed()) return cmd_eval(o);
    if (synth->parsed()) return cmd_synth(o);
    if (serve->parsed()) return cmd_serve(o);
  } catch (const ParseError& e) {
    std::cerr << "motionprog: parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "motionprog: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
