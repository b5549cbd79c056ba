#pragma once

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posesynth/core.hpp"

namespace posesynth {

enum class AlignMode { Rigid, Similarity };

/// Mean joint distance after moving both torso centers to the origin.
double mpjpe_abs(const Pose3D& pred, const Pose3D& gt, const Skeleton& s);

/// Closed-form least-squares alignment of pred onto gt (no reflections).
struct Alignment {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();
};
Alignment align_poses(const Pose3D& pred, const Pose3D& gt, AlignMode mode);

/// Mean joint distance after align_poses. Throws Degenerate for collinear gt.
double mpjpe_aligned(const Pose3D& pred, const Pose3D& gt, AlignMode mode);

/// Joint groups reported for 2D error, in column order.
inline constexpr std::array<const char*, 7> kJointGroups = {"feet", "knees", "hips", "hands",
                                                             "elbows", "shoulders", "head"};

/// Group index per joint from its name, -1 when the name matches no group.
std::vector<int> joint_groups(const Skeleton& s);

struct PixelError {
  double mean = 0.0;
  std::array<double, kJointGroups.size()> groups{};  // NaN for groups with no evaluated joint
};

/// Mean 2D distance over joints visible in both poses, plus per-group means.
PixelError pixel_error(const Pose2D& pred, const Pose2D& gt, const Skeleton& s);

struct PoseSample {
  std::string id;
  Pose3D pose3d;
  std::optional<Pose2D> pose2d;
};

struct SampleErrors {
  std::string id;
  double abs_mm = 0.0;
  double rigid_mm = 0.0;
  double similarity_mm = 0.0;
  std::optional<PixelError> px;
};

struct EvalReport {
  std::string label;
  std::size_t joint_count = 0;
  std::vector<SampleErrors> samples;
  double mean_abs_mm = 0.0;
  double mean_rigid_mm = 0.0;
  double mean_similarity_mm = 0.0;
  std::optional<double> mean_px;
};

/// Evaluates every `stride`-th ground-truth sample (in file order) against
/// the prediction with the same id. Throws MissingPrediction naming absent ids.
EvalReport run_protocol(std::span<const PoseSample> predictions, std::span<const PoseSample> ground_truth,
                        std::size_t stride, const std::string& label, const Skeleton& s);

/// CSV with header: id,abs_mm,rigid_mm,similarity_mm,px,px_feet,...,px_head
void write_report_csv(std::ostream& os, const EvalReport& report);

}  // namespace posesynth
