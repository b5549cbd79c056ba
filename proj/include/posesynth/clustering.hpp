#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posesynth/core.hpp"
#include "posesynth/mocap_prep.hpp"

namespace posesynth {

struct PoseClass {
  int id = 0;
  Pose3D centroid3d;  // mm, oriented and torso-centered
  Pose2D centroid2d;  // canvas pixels
  int member_count = 0;
};

struct KMeansOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-4;
  int workers = 1;
};

struct ClusterResult {
  std::vector<PoseClass> classes;
  std::vector<int> assignment;       // class id per input pose
  std::vector<double> objective_history;  // sum of squared distances after each update
  double objective = 0.0;
  int iterations = 0;
  bool fixed_point = false;  // true when the last assignment pass changed nothing
};

/// One clustering input: the oriented 3D pose and its canvas 2D pose.
struct ClusterSample {
  Pose3D pose3d;
  Pose2D pose2d;
};

/// Lloyd's k-means with k-means++ seeding in the flattened 3n-dim joint space.
/// Results are identical for any worker count. Empty clusters are re-seeded
/// from the point farthest from its centroid.
ClusterResult cluster_poses(std::span<const ClusterSample> samples, int k, std::uint64_t seed,
                            const KMeansOptions& opts = {});

/// Throws unless every pose has its torso center at the origin (within tol mm).
void require_centered(std::span<const ClusterSample> samples, const Skeleton& s, double tol = 1e-6);

struct Hypothesis {
  int class_id = 0;
  double score = 0.0;
  const PoseClass* pose_class = nullptr;
};

/// Centroids of the highest-scoring class (lowest id on ties).
std::pair<Pose3D, Pose2D> decode_top_class(std::span<const double> scores, std::span<const PoseClass> classes);

/// The k best classes by non-increasing score, stable on ties.
std::vector<Hypothesis> top_k_hypotheses(std::span<const double> scores, std::span<const PoseClass> classes, int k);

/// Stand-in scorer: exp(-d^2 / tau^2), d the mean per-joint distance to each
/// class centroid.
std::vector<double> baseline_scores(const Pose3D& pose, std::span<const PoseClass> classes, double tau_mm);
std::vector<double> baseline_scores(const Pose2D& pose, std::span<const PoseClass> classes, double tau_px);

}  // namespace posesynth
