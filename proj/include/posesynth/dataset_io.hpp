#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posesynth/clustering.hpp"
#include "posesynth/core.hpp"
#include "posesynth/evaluation.hpp"
#include "posesynth/retrieval.hpp"

namespace posesynth {

// Every structured file is line-delimited JSON: a header object carrying
// "schema": "<name>/<version>" followed by one record per line. The skeleton
// descriptor is a single JSON object.

inline constexpr const char* kSkeletonSchema = "posesynth.skeleton/1";
inline constexpr const char* kCorpusSchema = "posesynth.corpus/1";
inline constexpr const char* kMocapSchema = "posesynth.mocap/1";
inline constexpr const char* kCamerasSchema = "posesynth.cameras/1";
inline constexpr const char* kSynthSchema = "posesynth.synth/1";
inline constexpr const char* kClustersSchema = "posesynth.clusters/1";
inline constexpr const char* kPosesSchema = "posesynth.poses/1";
inline constexpr const char* kMatchesSchema = "posesynth.matches/1";

struct CorpusRecord {
  std::string id;
  std::string image;  // relative to the manifest's directory
  Pose2D pose;
  bool operator==(const CorpusRecord&) const = default;
};

struct CorpusManifest {
  std::string skeleton;  // relative to the manifest's directory; empty = default skeleton
  std::vector<CorpusRecord> records;
  bool operator==(const CorpusManifest&) const = default;
};

struct MocapRecord {
  std::string id;
  Pose3D pose;
  bool operator==(const MocapRecord&) const = default;
};

struct SynthRecord {
  std::string id;
  std::string image;
  Pose3D pose3d;  // oriented, torso-centered, mm
  Pose2D pose2d;  // canvas px
  Camera camera;
  std::optional<int> class_id;
  std::vector<std::string> source_ids;  // one per retrieved match
  bool operator==(const SynthRecord&) const = default;
};

struct SynthManifest {
  std::string skeleton;
  int canvas = 220;
  double margin = 10.0;
  std::vector<SynthRecord> records;
  bool operator==(const SynthManifest&) const = default;
};

struct ClusterModel {
  std::string skeleton;
  std::uint64_t seed = 0;
  double objective = 0.0;
  int iterations = 0;
  std::vector<PoseClass> classes;
};

// Skeleton descriptor.
Skeleton read_skeleton(const std::filesystem::path& path);
void write_skeleton(const std::filesystem::path& path, const Skeleton& s);
/// Loads `ref` relative to `base_dir`; an empty reference is the default skeleton.
Skeleton resolve_skeleton(const std::filesystem::path& base_dir, const std::string& ref);

CorpusManifest read_corpus_manifest(const std::filesystem::path& path);
void write_corpus_manifest(const std::filesystem::path& path, const CorpusManifest& m);

std::vector<MocapRecord> read_mocap(const std::filesystem::path& path);
void write_mocap(const std::filesystem::path& path, const std::vector<MocapRecord>& poses);

std::vector<Camera> read_cameras(const std::filesystem::path& path);
void write_cameras(const std::filesystem::path& path, const std::vector<Camera>& cams);

SynthManifest read_synth_manifest(const std::filesystem::path& path);
void write_synth_manifest(const std::filesystem::path& path, const SynthManifest& m);
/// Single-line encodings used by the per-worker shard files.
std::string synth_record_line(const SynthRecord& r);
SynthRecord parse_synth_record_line(const std::string& line);

ClusterModel read_cluster_model(const std::filesystem::path& path);
void write_cluster_model(const std::filesystem::path& path, const ClusterModel& m);

/// Prediction / ground-truth pose lists for evaluation. Also accepts a synth
/// manifest, whose records carry both poses.
std::vector<PoseSample> read_pose_samples(const std::filesystem::path& path);
void write_pose_samples(const std::filesystem::path& path, const std::vector<PoseSample>& samples);

std::vector<Match> read_matches(const std::filesystem::path& path);
void write_matches(const std::filesystem::path& path, const std::vector<Match>& matches);

/// Loads every image of a corpus manifest (paths relative to the manifest).
std::vector<AnnotatedImage> load_corpus(const std::filesystem::path& manifest_path, const CorpusManifest& m);

/// Writes images under `dir/images` and the manifest at `dir/manifest`.
void save_corpus(const std::filesystem::path& dir, const std::vector<AnnotatedImage>& corpus,
                 const std::string& skeleton_ref);

/// Problems found in a corpus manifest (duplicate ids, missing files, pose
/// length, out-of-image joints). Empty when valid.
std::vector<std::string> validate_corpus(const std::filesystem::path& manifest_path, const Skeleton& s,
                                         bool check_images = true);

/// Records whose stored pose2d does not match re-projection of pose3d.
std::vector<std::string> validate_synth(const SynthManifest& m, const Skeleton& s, double tol_px = 1e-3);

// Mirroring.
std::string mirror_id(const std::string& id);
AnnotatedImage mirror_image(const AnnotatedImage& a, const Skeleton& s);
/// Pose flip x' = width - 1 - x with left/right joints exchanged.
Pose2D mirror_pose(const Pose2D& p, int width, const Skeleton& s);
/// Originals followed by their mirrored copies.
std::vector<AnnotatedImage> mirror_corpus(const std::vector<AnnotatedImage>& corpus, const Skeleton& s);

}  // namespace posesynth
