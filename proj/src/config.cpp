#include "fuseflow/config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "fuseflow/error.hpp"
#include "fuseflow/io.hpp"

namespace fuseflow {

using nlohmann::json;

namespace {

// Field accessor that tracks the JSON path for error messages.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j_.items())
      if (!allowed.count(key)) throw ConfigError(field(key), "unknown key");
  }

  bool has(const char* key) const { return j_.contains(key); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& at(const char* key) const {
    if (!j_.contains(key)) throw ConfigError(field(key), "missing");
    return j_.at(key);
  }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const char* key, std::int64_t fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true/false");
    return v.get<bool>();
  }

  std::string string(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vec(const char* key) const {
    const json& v = at(key);
    if (!v.is_array() || v.size() != N)
      throw ConfigError(field(key), "expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key), "expected numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  Reader child(const char* key) const { return Reader(at(key), field(key)); }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
};

// Re-reports validation errors raised by `fn` under the config path `prefix`.
template <typename Fn>
auto nested(const std::string& prefix, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw e.nested(prefix);
  }
}

template <typename Fn>
auto in_file(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

CameraModel parse_camera(const Reader& r, int fallback_id) {
  r.allow({"id", "fx", "fy", "cx", "cy", "width", "height", "rotation", "translation"});
  CameraModel cam;
  cam.id = static_cast<int>(r.integer("id", fallback_id));
  cam.fx = r.number("fx");
  cam.fy = r.number("fy");
  cam.cx = r.number("cx");
  cam.cy = r.number("cy");
  cam.width = static_cast<int>(r.integer("width"));
  cam.height = static_cast<int>(r.integer("height"));
  const auto rot = r.vec<9>("rotation");
  for (int i = 0; i < 9; ++i) cam.pose.rotation(i / 3, i % 3) = rot[i];
  cam.pose.translation = r.vec<3>("translation");
  nested(r.path(), [&] { cam.validate(); });
  return cam;
}

synth::Intrinsics parse_intrinsics(const Reader& r) {
  r.allow({"fx", "fy", "cx", "cy", "width", "height"});
  return {r.number("fx"), r.number("fy"), r.number("cx"), r.number("cy"), static_cast<int>(r.integer("width")),
          static_cast<int>(r.integer("height"))};
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json load_json(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace

nlohmann::json camera_to_json(const CameraModel& cam) {
  json rot = json::array();
  for (int i = 0; i < 9; ++i) rot.push_back(cam.pose.rotation(i / 3, i % 3));
  return {{"id", cam.id},         {"fx", cam.fx},         {"fy", cam.fy},   {"cx", cam.cx},
          {"cy", cam.cy},         {"width", cam.width},   {"height", cam.height},
          {"rotation", rot},      {"translation", vec_json(cam.pose.translation)}};
}

RigConfig parse_config(const json& j) {
  const Reader root(j, "");
  root.allow({"cameras", "params"});
  RigConfig config;

  const json& cams = root.at("cameras");
  if (!cams.is_array() || cams.empty()) throw ConfigError("cameras", "expected a non-empty array");
  std::set<int> ids;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const CameraModel cam = parse_camera(Reader(cams[i], "cameras[" + std::to_string(i) + "]"), static_cast<int>(i));
    if (!ids.insert(cam.id).second) throw ConfigError("cameras[" + std::to_string(i) + "].id", "duplicate id");
    config.cameras.push_back(cam);
  }
  const int n = static_cast<int>(config.cameras.size());

  if (!root.has("params")) {
    nested("params", [&] { config.params.validate(n); });
    return config;
  }
  const Reader p = root.child("params");
  p.allow({"confidence", "consistency", "grid", "tau", "median_filter", "ablation", "eval"});
  PipelineParams& pp = config.params;

  if (p.has("confidence")) {
    const Reader r = p.child("confidence");
    r.allow({"alpha", "beta", "gamma", "delta", "window"});
    auto& c = pp.confidence;
    c.alpha = r.number("alpha", c.alpha);
    c.beta = r.number("beta", c.beta);
    c.gamma = r.number("gamma", c.gamma);
    c.delta = r.number("delta", c.delta);
    c.window = static_cast<int>(r.integer("window", c.window));
    nested("params", [&] { c.validate(); });
  }
  if (p.has("consistency")) {
    const Reader r = p.child("consistency");
    r.allow({"sigma", "k_cams", "occlusion_margin"});
    auto& c = pp.consistency;
    c.sigma = r.number("sigma", c.sigma);
    c.k_cams = static_cast<int>(r.integer("k_cams", c.k_cams));
    c.occlusion_margin = r.number("occlusion_margin", c.occlusion_margin);
    nested("params", [&] { c.validate(n); });
  }
  if (p.has("grid")) {
    const Reader r = p.child("grid");
    r.allow({"coarse_cell", "fine_cell", "dense_threshold"});
    auto& g = pp.grid;
    g.coarse_cell = r.number("coarse_cell", g.coarse_cell);
    g.fine_cell = r.number("fine_cell", g.fine_cell);
    g.dense_threshold = static_cast<int>(r.integer("dense_threshold", g.dense_threshold));
    nested("params", [&] { g.validate(); });
  }
  pp.tau = p.number("tau", pp.tau);
  if (!(pp.tau >= 0.0 && pp.tau < 1.0)) throw ConfigError("params.tau", "must lie in [0, 1)");
  pp.median_filter = p.boolean("median_filter", pp.median_filter);
  if (p.has("ablation")) {
    const Reader r = p.child("ablation");
    r.allow({"mf", "dc", "sa"});
    pp.ablation.measurement_confidence = r.boolean("mf", true);
    pp.ablation.distance_consistency = r.boolean("dc", true);
    pp.ablation.spatial_aggregation = r.boolean("sa", true);
  }
  if (p.has("eval")) {
    const Reader r = p.child("eval");
    r.allow({"seed", "sample_size", "occlusion_margin"});
    const std::int64_t seed = r.integer("seed");
    const std::int64_t size = r.integer("sample_size", static_cast<std::int64_t>(config.eval.sample_size));
    if (seed < 0) throw ConfigError("params.eval.seed", "must be >= 0");
    if (size < 0) throw ConfigError("params.eval.sample_size", "must be >= 0");
    config.eval.seed = static_cast<std::uint64_t>(seed);
    config.eval.sample_size = static_cast<std::size_t>(size);
    config.eval.occlusion_margin = r.number("occlusion_margin", pp.consistency.occlusion_margin);
    if (!(config.eval.occlusion_margin >= 0.0)) throw ConfigError("params.eval.occlusion_margin", "must be >= 0");
  } else {
    config.eval.occlusion_margin = pp.consistency.occlusion_margin;
  }
  nested("params", [&] { pp.validate(n); });
  return config;
}

RigConfig load_config(const std::filesystem::path& path) {
  return in_file(path, [&] { return parse_config(load_json(path)); });
}

json to_json(const RigConfig& config) {
  json cams = json::array();
  for (const auto& c : config.cameras) cams.push_back(camera_to_json(c));
  const auto& p = config.params;
  json params = {
      {"confidence",
       {{"alpha", p.confidence.alpha},
        {"beta", p.confidence.beta},
        {"gamma", p.confidence.gamma},
        {"delta", p.confidence.delta},
        {"window", p.confidence.window}}},
      {"consistency", {{"sigma", p.consistency.sigma}, {"k_cams", p.consistency.k_cams}}},
      {"grid",
       {{"coarse_cell", p.grid.coarse_cell},
        {"fine_cell", p.grid.fine_cell},
        {"dense_threshold", p.grid.dense_threshold}}},
      {"tau", p.tau},
      {"median_filter", p.median_filter},
      {"ablation",
       {{"mf", p.ablation.measurement_confidence},
        {"dc", p.ablation.distance_consistency},
        {"sa", p.ablation.spatial_aggregation}}},
      {"eval",
       {{"seed", config.eval.seed},
        {"sample_size", config.eval.sample_size},
        {"occlusion_margin", config.eval.occlusion_margin}}}};
  // JSON has no infinity; an absent margin means "no occlusion test".
  if (std::isfinite(p.consistency.occlusion_margin))
    params["consistency"]["occlusion_margin"] = p.consistency.occlusion_margin;
  return {{"cameras", cams}, {"params", params}};
}

std::uint64_t param_hash(const RigConfig& config) {
  json j = to_json(config);
  j["params"].erase("ablation");
  j["params"].erase("eval");
  return fnv1a(j.dump());
}

std::string ablation_label(const Ablation& a) {
  std::string label;
  if (!a.measurement_confidence) label += "no-mf,";
  if (!a.distance_consistency) label += "no-dc,";
  if (!a.spatial_aggregation) label += "no-sa,";
  if (label.empty()) return "full";
  label.pop_back();
  return label;
}

synth::SceneSpec parse_scene(const json& j) {
  const Reader root(j, "scene");
  root.allow({"primitives", "noise_sigma", "dropout_rate", "seed"});
  synth::SceneSpec scene;
  const json& prims = root.at("primitives");
  if (!prims.is_array()) throw ConfigError("scene.primitives", "expected an array");
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const Reader r(prims[i], "scene.primitives[" + std::to_string(i) + "]");
    const std::string type = r.string("type");
    synth::Primitive prim;
    if (type == "plane") {
      r.allow({"type", "point", "normal", "motion"});
      prim = synth::Primitive::plane(r.vec<3>("point"), r.vec<3>("normal"));
      if (!(r.vec<3>("normal").norm() > 0.0)) throw ConfigError(r.field("normal"), "must be non-zero");
    } else if (type == "sphere") {
      r.allow({"type", "center", "radius", "motion"});
      prim = synth::Primitive::sphere(r.vec<3>("center"), r.number("radius"));
    } else if (type == "box") {
      r.allow({"type", "min", "max", "motion"});
      prim = synth::Primitive::box(r.vec<3>("min"), r.vec<3>("max"));
    } else {
      throw ConfigError(r.field("type"), "unknown primitive \"" + type + "\"");
    }
    if (r.has("motion")) prim.motion = r.vec<3>("motion");
    scene.primitives.push_back(prim);
  }
  scene.noise_sigma = root.number("noise_sigma", 0.0);
  scene.dropout_rate = root.number("dropout_rate", 0.0);
  const std::int64_t seed = root.integer("seed", 1);
  if (seed < 0) throw ConfigError("scene.seed", "must be >= 0");
  scene.seed = static_cast<std::uint64_t>(seed);
  scene.validate();
  return scene;
}

synth::SceneSpec load_scene(const std::filesystem::path& path) {
  return in_file(path, [&] { return parse_scene(load_json(path)); });
}

json to_json(const synth::SceneSpec& scene) {
  json prims = json::array();
  for (const auto& p : scene.primitives) {
    json o;
    switch (p.kind) {
      case synth::Primitive::Kind::kPlane:
        o = {{"type", "plane"}, {"point", vec_json(p.anchor)}, {"normal", vec_json(p.normal)}};
        break;
      case synth::Primitive::Kind::kSphere:
        o = {{"type", "sphere"}, {"center", vec_json(p.anchor)}, {"radius", p.radius}};
        break;
      case synth::Primitive::Kind::kBox:
        o = {{"type", "box"}, {"min", vec_json(p.anchor)}, {"max", vec_json(p.extent)}};
        break;
    }
    if (!p.motion.isZero()) o["motion"] = vec_json(p.motion);
    prims.push_back(o);
  }
  return {{"primitives", prims},
          {"noise_sigma", scene.noise_sigma},
          {"dropout_rate", scene.dropout_rate},
          {"seed", scene.seed}};
}

synth::RigSpec parse_rig(const json& j) {
  const Reader root(j, "rig");
  synth::RigSpec rig;
  const std::string layout = root.string("layout");
  if (layout == "custom") {
    root.allow({"layout", "cameras"});
    rig.layout = synth::RigSpec::Layout::kCustom;
    const json& cams = root.at("cameras");
    if (!cams.is_array()) throw ConfigError("rig.cameras", "expected an array");
    for (std::size_t i = 0; i < cams.size(); ++i)
      rig.custom.push_back(parse_camera(Reader(cams[i], "rig.cameras[" + std::to_string(i) + "]"),
                                        static_cast<int>(i)));
  } else if (layout == "ring" || layout == "arc") {
    root.allow({"layout", "count", "radius", "elevation", "arc_degrees", "target", "intrinsics"});
    rig.layout = layout == "ring" ? synth::RigSpec::Layout::kRing : synth::RigSpec::Layout::kArc;
    rig.count = static_cast<int>(root.integer("count"));
    rig.radius = root.number("radius");
    rig.elevation = root.number("elevation", 0.0);
    rig.arc_degrees = root.number("arc_degrees", rig.arc_degrees);
    if (root.has("target")) rig.target = root.vec<3>("target");
    rig.intrinsics = parse_intrinsics(root.child("intrinsics"));
  } else {
    throw ConfigError("rig.layout", "expected ring, arc or custom");
  }
  rig.validate();
  return rig;
}

synth::RigSpec load_rig(const std::filesystem::path& path) {
  return in_file(path, [&] { return parse_rig(load_json(path)); });
}

json to_json(const McReport& r) {
  json per_camera = json::array();
  for (const auto& c : r.per_camera)
    per_camera.push_back(
        {{"camera_id", c.camera_id}, {"observations", c.observations}, {"mean_abs_residual_mm", c.mean_abs_residual}});
  return {{"has_data", r.has_data},
          {"e_mc_mm", r.has_data ? json(r.e_mc) : json(nullptr)},
          {"requested", r.requested},
          {"sample_size", r.sample_size},
          {"excluded_unseen", r.excluded_unseen},
          {"seed", r.seed},
          {"per_camera", per_camera}};
}

json to_json(const BenchReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples)
    samples.push_back({{"cameras", s.cameras},
                       {"input_points", s.input_points},
                       {"output_points", s.output_points},
                       {"mean_ms", s.mean_ms},
                       {"min_ms", s.min_ms},
                       {"fps", s.fps}});
  return {{"samples", samples},
          {"fit",
           {{"intercept_ms", r.fit.intercept},
            {"slope_ms_per_camera", r.fit.slope},
            {"r_squared", r.fit.r_squared},
            {"residual_rms_ms", r.fit.residual_rms}}},
          {"repetitions", r.repetitions},
          {"warmup", r.warmup},
          {"workers", r.workers}};
}

json to_json(const FuseStats& s) {
  return {{"input_points", s.input_points},     {"leaf_cells", s.leaf_cells},
          {"fused_candidates", s.fused_candidates}, {"output_points", s.output_points},
          {"confidence_ms", s.confidence_ms},   {"pointgen_ms", s.pointgen_ms},
          {"grid_ms", s.grid_ms},               {"fusion_ms", s.fusion_ms}};
}

}  // namespace fuseflow
