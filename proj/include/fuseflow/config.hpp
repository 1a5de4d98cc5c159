#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "fuseflow/eval.hpp"
#include "fuseflow/fusion.hpp"
#include "fuseflow/synth.hpp"

namespace fuseflow {

// Cameras plus every pipeline and evaluation parameter. Loading validates all
// invariants and rejects unknown keys; errors name the offending field.
struct RigConfig {
  std::vector<CameraModel> cameras;
  PipelineParams params;
  McParams eval;
};

RigConfig parse_config(const nlohmann::json& j);
RigConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RigConfig& config);

synth::SceneSpec parse_scene(const nlohmann::json& j);
synth::SceneSpec load_scene(const std::filesystem::path& path);
nlohmann::json to_json(const synth::SceneSpec& scene);

synth::RigSpec parse_rig(const nlohmann::json& j);
synth::RigSpec load_rig(const std::filesystem::path& path);

nlohmann::json camera_to_json(const CameraModel& cam);
nlohmann::json to_json(const McReport& report);
nlohmann::json to_json(const BenchReport& report);
nlohmann::json to_json(const FuseStats& stats);

// FNV-1a over the canonical JSON of the cameras and the parameters that
// shape a fused cloud (ablation switches and eval settings excluded).
std::uint64_t param_hash(const RigConfig& config);

std::string ablation_label(const Ablation& a);

}  // namespace fuseflow
