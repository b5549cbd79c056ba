#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "posesynth/core.hpp"
#include "posesynth/mocap_prep.hpp"

namespace posesynth {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;

/// Outcome of a command: exit code plus the one-line summary printed on stdout.
struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::ordered_json summary;
};

/// Maps a library error to an exit code: malformed or inconsistent inputs are
/// validation failures, everything else is a runtime failure.
int exit_code_for(const Error& e);

struct GenCorpusOptions {
  std::filesystem::path out;  // corpus directory (manifest + images/)
  int count = 100;
  int canvas = 220;
  std::uint64_t seed = 1;
  double occlusion = 0.0;
  std::filesystem::path skeleton;  // optional descriptor; default skeleton when empty
  std::filesystem::path mocap_out;  // optional MoCap file to write alongside
  int mocap_count = 50;
};
CommandResult run_gen_test_corpus(const GenCorpusOptions& o);

struct SynthOptions {
  std::filesystem::path corpus;  // corpus manifest
  std::filesystem::path mocap;   // MoCap pose file
  std::filesystem::path out;     // output directory
  std::filesystem::path cameras;  // optional camera file; otherwise sampled per pose
  std::filesystem::path clusters;  // optional cluster model for class ids
  SynthConfig config;
  int cameras_per_pose = 1;
  AngleRange azimuth{0.0, 360.0};
  AngleRange elevation{-45.0, 45.0};
  double distance = 5000.0;
  double focal = 1100.0;
  double subsample_mm = 0.0;  // 0 keeps every pose
  SubsampleRule subsample_rule = SubsampleRule::MaxJoint;
  bool mirror_corpus = false;
  int workers = 1;
  int bound_joints = 4;
  bool keep_intermediates = false;
  bool resume = false;
  double max_failure_fraction = 0.01;
};
CommandResult run_synth(const SynthOptions& o);

struct ClusterOptions {
  std::filesystem::path poses;  // synth manifest or MoCap file
  std::filesystem::path out;
  std::filesystem::path skeleton;  // for MoCap input; default skeleton when empty
  int k = 16;
  std::uint64_t seed = 1;
  int workers = 1;
  int max_iterations = 100;
  double tolerance = 1e-4;
  int canvas = 220;      // framing used when the input is MoCap
  double margin = 10.0;
};
CommandResult run_cluster(const ClusterOptions& o);

struct EvalOptions {
  std::filesystem::path predictions;
  std::filesystem::path ground_truth;
  std::filesystem::path out;  // CSV report
  std::filesystem::path skeleton;
  std::size_t stride = 1;
  std::string label = "eval";
};
CommandResult run_eval(const EvalOptions& o);

struct MirrorOptions {
  std::filesystem::path corpus;
  std::filesystem::path out;
};
CommandResult run_mirror(const MirrorOptions& o);

struct ValidateOptions {
  std::filesystem::path corpus;
  std::filesystem::path synth;
  std::filesystem::path skeleton;
  bool check_images = true;
  double tolerance_px = 1e-3;
};
CommandResult run_validate(const ValidateOptions& o);

struct PreviewOptions {
  std::filesystem::path synth;  // synth manifest produced with keep_intermediates
  std::string id;
  std::filesystem::path out;
  std::filesystem::path corpus;  // defaults to the corpus recorded by synth
};
CommandResult run_preview(const PreviewOptions& o);

}  // namespace posesynth
