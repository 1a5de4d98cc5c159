#include "fuseflow/cli.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>

#include "fuseflow/config.hpp"
#include "fuseflow/error.hpp"
#include "fuseflow/eval.hpp"
#include "fuseflow/fusion.hpp"
#include "fuseflow/io.hpp"
#include "fuseflow/synth.hpp"

namespace fuseflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(int frame) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", frame);
  return buf;
}

std::pair<int, int> parse_range(const std::string& text) {
  static const std::regex pattern(R"((\d+)(?:\.\.(\d+))?)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw CLI::ValidationError("--frame-range", "expected a..b");
  const int a = std::stoi(m[1]);
  const int b = m[2].matched ? std::stoi(m[2]) : a;
  if (b < a) throw CLI::ValidationError("--frame-range", "end precedes start");
  return {a, b};
}

fs::path output_for(const fs::path& out, int frame, bool multiple) {
  if (!multiple) return out;
  fs::path p = out;
  p.replace_filename(out.stem().string() + "_" + frame_name(frame) + out.extension().string());
  return p;
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

double time_ms(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

struct Options {
  fs::path scene, rig, out, config, frames, cloud, report;
  int frame_count = 1;
  std::string format = "pgm";
  std::string range;
  bool no_mf = false, no_dc = false, no_sa = false, ascii = false;
  std::string cameras = "1,2,4,8";
  int reps = 5, warmup = 1, workers = 0, frame = -1;
};

int cmd_synth(const Options& o, std::ostream& out) {
  const synth::SceneSpec scene = load_scene(o.scene);
  const synth::RigSpec rig_spec = load_rig(o.rig);
  const std::vector<CameraModel> rig = synth::make_rig(rig_spec);
  if (o.frame_count < 1) throw ConfigError("--frames must be >= 1");

  fs::create_directories(o.out);
  RigConfig config;
  config.cameras = rig;
  write_json(o.out / "config.json", to_json(config));
  write_json(o.out / "scene.json", to_json(scene));
  const std::string ext = o.format == "raw" ? ".raw" : ".pgm";
  for (int t = 0; t < o.frame_count; ++t) {
    const fs::path dir = o.out / frame_name(t);
    fs::create_directories(dir);
    for (const auto& cam : rig) {
      const synth::RenderedFrame r = synth::render_depth(scene, cam, t);
      io::write_depth_frame(r.observed, dir / ("cam" + std::to_string(cam.id) + ext));
      io::write_depth_frame(r.truth, dir / ("cam" + std::to_string(cam.id) + ".gt" + ext));
    }
  }
  out << "wrote " << o.frame_count << " frame(s) for " << rig.size() << " camera(s) to " << o.out.string() << "\n";
  return kOk;
}

RigConfig config_with_ablation(const Options& o) {
  RigConfig config = load_config(o.config);
  if (o.no_mf) config.params.ablation.measurement_confidence = false;
  if (o.no_dc) config.params.ablation.distance_consistency = false;
  if (o.no_sa) config.params.ablation.spatial_aggregation = false;
  return config;
}

int cmd_fuse(const Options& o, std::ostream& out) {
  const RigConfig config = config_with_ablation(o);
  const auto frames = list_frames(o.frames);
  if (frames.empty()) throw IoError(IoError::Kind::kOpen, "no frames found under " + o.frames.string());

  int first = frames.begin()->first;
  int last = frames.rbegin()->first;
  if (!o.range.empty()) std::tie(first, last) = parse_range(o.range);

  std::vector<int> selected;
  for (int t = first; t <= last; ++t) {
    if (!frames.count(t)) throw IoError(IoError::Kind::kOpen, "frame " + std::to_string(t) + " not found");
    selected.push_back(t);
  }

  const io::PlyMeta base{0, param_hash(config), ablation_label(config.params.ablation)};
  for (int t : selected) {
    const auto depth = load_frame_set(frames.at(t));
    FuseStats stats;
    const FusedCloud cloud = fuse_frame(config.cameras, depth, config.params, t, &stats);
    io::PlyMeta meta = base;
    meta.frame_index = t;
    const fs::path path = output_for(o.out, t, selected.size() > 1);
    io::write_ply(cloud, path, o.ascii ? io::PlyMode::kAscii : io::PlyMode::kBinary, meta);
    out << "frame " << t << ": " << stats.input_points << " gated points -> " << cloud.points.size()
        << " fused points -> " << path.string() << "\n";
  }
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RigConfig config = load_config(o.config);
  const io::PlyCloud ply = io::read_ply(o.cloud);
  if (!ply.meta) throw ConfigError(o.cloud.string() + ": missing fuseflow metadata comment");
  if (ply.meta->param_hash != param_hash(config))
    throw ConfigError(o.cloud.string() + " was produced with a different configuration than " + o.config.string());

  const auto frames = list_frames(o.frames);
  const int t = ply.meta->frame_index;
  if (!frames.count(t)) throw IoError(IoError::Kind::kOpen, "frame " + std::to_string(t) + " not found");
  const auto depth = load_frame_set(frames.at(t));
  const McReport report = mc_error(ply.cloud, depth, config.cameras, config.eval);

  json j = to_json(report);
  j["frame"] = t;
  j["cloud_points"] = ply.cloud.points.size();
  j["ablation"] = ply.meta->ablation;
  write_json(o.report, j);
  if (report.has_data)
    out << "E_MC = " << report.e_mc << " mm over " << report.sample_size << " points\n";
  else
    out << "no data: cloud has no point seen by any camera\n";
  return kOk;
}

std::vector<int> parse_counts(const std::string& text) {
  std::vector<int> counts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      counts.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--cameras", "expected a comma-separated list of integers");
    }
  }
  return counts;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const RigConfig config = load_config(o.config);
  const synth::SceneSpec scene = load_scene(o.scene);
  BenchParams bp;
  bp.camera_counts = parse_counts(o.cameras);
  bp.repetitions = o.reps;
  bp.warmup = o.warmup;
  bp.workers = o.workers;

  RigFactory factory;
  if (!o.rig.empty()) {
    const synth::RigSpec spec = load_rig(o.rig);
    factory = [spec](int n) {
      synth::RigSpec s = spec;
      s.count = n;
      return synth::make_rig(s);
    };
  } else {
    const CameraModel cam = config.cameras.front();
    factory = [cam](int n) { return replicate_camera(cam, n); };
  }
  const BenchReport report = bench_scaling(factory, scene, config.params, bp);
  write_json(o.report, to_json(report));
  for (const auto& s : report.samples)
    out << s.cameras << " cam: " << s.mean_ms << " ms (" << s.fps << " FPS)\n";
  out << "fit: " << report.fit.intercept << " + " << report.fit.slope << " * N ms, R^2 = " << report.fit.r_squared
      << "\n";
  return kOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  RigConfig config = load_config(o.config);
  const auto frames = list_frames(o.frames);
  if (frames.empty()) throw IoError(IoError::Kind::kOpen, "no frames found under " + o.frames.string());
  const int t = o.frame >= 0 ? o.frame : frames.begin()->first;
  if (!frames.count(t)) throw IoError(IoError::Kind::kOpen, "frame " + std::to_string(t) + " not found");
  const auto depth = load_frame_set(frames.at(t));

  const std::vector<std::pair<std::string, Ablation>> variants{
      {"no-mf", {false, true, true}},
      {"no-dc", {true, false, true}},
      {"no-sa", {true, true, false}},
      {"full", {true, true, true}},
  };
  json rows = json::array();
  for (const auto& [name, ablation] : variants) {
    PipelineParams params = config.params;
    params.ablation = ablation;
    FusedCloud cloud;
    FuseStats stats;
    const double ms = time_ms([&] { cloud = fuse_frame(config.cameras, depth, params, t, &stats); });
    const McReport mc = mc_error(cloud, depth, config.cameras, config.eval);
    rows.push_back({{"variant", name},
                    {"e_mc_mm", mc.has_data ? json(mc.e_mc) : json(nullptr)},
                    {"fused_points", cloud.points.size()},
                    {"frame_ms", ms},
                    {"fps", 1000.0 / ms},
                    {"stats", to_json(stats)}});
    out << name << ": E_MC = " << (mc.has_data ? std::to_string(mc.e_mc) : "n/a") << " mm, " << ms << " ms, "
        << cloud.points.size() << " points\n";
  }
  write_json(o.report, {{"frame", t}, {"variants", rows}});
  return kOk;
}

}  // namespace

fs::path frame_dir(const fs::path& root, int frame) { return root / frame_name(frame); }

std::map<int, fs::path> list_frames(const fs::path& root) {
  std::map<int, fs::path> out;
  if (!fs::is_directory(root)) throw IoError(IoError::Kind::kOpen, "not a directory: " + root.string());
  static const std::regex numeric(R"(\d+)");
  bool flat = false;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && std::regex_match(name, numeric)) out[std::stoi(name)] = entry.path();
    if (entry.is_regular_file() && name.rfind("cam", 0) == 0) flat = true;
  }
  if (out.empty() && flat) out[0] = root;
  return out;
}

std::vector<DepthFrame> load_frame_set(const fs::path& dir) {
  static const std::regex pattern(R"(cam(\d+)\.(pgm|raw))");
  std::map<int, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !std::regex_match(name, m, pattern)) continue;
    const int id = std::stoi(m[1]);
    if (files.count(id)) throw ConfigError("camera " + std::to_string(id) + " has more than one frame in " + dir.string());
    files[id] = entry.path();
  }
  std::vector<DepthFrame> frames;
  for (const auto& [id, path] : files) frames.push_back(io::read_depth_frame(path, id));
  return frames;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fuseflow: frame-wise multi-camera depth fusion"};
  app.require_subcommand(1);
  Options o;

  auto* synth_cmd = app.add_subcommand("synth", "render synthetic depth frames and ground truth");
  synth_cmd->add_option("--scene", o.scene, "scene spec JSON")->required();
  synth_cmd->add_option("--rig", o.rig, "rig spec JSON")->required();
  synth_cmd->add_option("--out", o.out, "output directory")->required();
  synth_cmd->add_option("--frames", o.frame_count, "number of frames");
  synth_cmd->add_option("--format", o.format, "depth encoding")->check(CLI::IsMember({"pgm", "raw"}));

  auto* fuse_cmd = app.add_subcommand("fuse", "fuse depth frames into point clouds");
  fuse_cmd->add_option("--config", o.config, "rig config JSON")->required();
  fuse_cmd->add_option("--frames", o.frames, "frame directory")->required();
  fuse_cmd->add_option("--out", o.out, "output PLY")->required();
  fuse_cmd->add_option("--frame-range", o.range, "inclusive frame range a..b");
  fuse_cmd->add_flag("--no-mf", o.no_mf, "drop measurement confidence from the weights");
  fuse_cmd->add_flag("--no-dc", o.no_dc, "disable 3D distance consistency");
  fuse_cmd->add_flag("--no-sa", o.no_sa, "disable spatial-hash aggregation (point-wise fusion)");
  fuse_cmd->add_flag("--ascii", o.ascii, "write ASCII PLY instead of binary");

  auto* eval_cmd = app.add_subcommand("eval", "multi-camera depth consistency error of a fused cloud");
  eval_cmd->add_option("--config", o.config, "rig config JSON")->required();
  eval_cmd->add_option("--frames", o.frames, "frame directory")->required();
  eval_cmd->add_option("--cloud", o.cloud, "fused PLY")->required();
  eval_cmd->add_option("--report", o.report, "report JSON")->required();

  auto* bench_cmd = app.add_subcommand("bench", "camera-count scaling benchmark");
  bench_cmd->add_option("--config", o.config, "rig config JSON")->required();
  bench_cmd->add_option("--scene", o.scene, "scene spec JSON")->required();
  bench_cmd->add_option("--cameras", o.cameras, "comma-separated camera counts");
  bench_cmd->add_option("--reps", o.reps, "timed repetitions per count");
  bench_cmd->add_option("--warmup", o.warmup, "discarded warmup runs per count");
  bench_cmd->add_option("--workers", o.workers, "worker threads (0 = default)");
  bench_cmd->add_option("--rig", o.rig, "rig spec JSON; default replicates the first config camera");
  bench_cmd->add_option("--report", o.report, "report JSON")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "run the full pipeline and its three ablations");
  ablate_cmd->add_option("--config", o.config, "rig config JSON")->required();
  ablate_cmd->add_option("--frames", o.frames, "frame directory")->required();
  ablate_cmd->add_option("--frame", o.frame, "frame index (default: first)");
  ablate_cmd->add_option("--report", o.report, "report JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(o, out);
    if (fuse_cmd->parsed()) return cmd_fuse(o, out);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
    if (bench_cmd->parsed()) return cmd_bench(o, out);
    if (ablate_cmd->parsed()) return cmd_ablate(o, out);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ConfigError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  }
  return kUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace fuseflow::cli
