#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "posesynth/core.hpp"
#include "posesynth/mocap_prep.hpp"

namespace posesynth {

/// Distances below this many pixels are clamped when forming 1/d weights.
inline constexpr double kWeightDistanceFloor = 1.0;
/// Segments shorter than this cannot anchor an alignment.
inline constexpr double kMinSegmentLength = 1e-6;

/// Per-joint weights conditioned on a query joint; zero at the query joint
/// and at excluded joints, summing to one.
struct JointWeights {
  int joint = 0;
  std::vector<double> weights;
};

/// One retrieved candidate for a query joint.
struct Match {
  std::string source_id;
  std::size_t source_index = 0;  // position in the corpus the match came from
  Pose2D aligned_pose;           // transform applied to the corpus pose
  Transform2D transform;         // corpus image -> query canvas
  double distance = 0.0;
  int joint = 0;
  int anchor = 0;  // farthest connected joint used for alignment
};

/// Similarity transform T with T(q_j) = p_j and T(q_i) = p_i.
Transform2D alignment_transform(const Pose2D& p, const Pose2D& q, int j, int i);

/// w_k = 1 / max(|p_k - p_j|, floor) over visible k != j, normalized.
JointWeights joint_weights(const Pose2D& p, int j);

/// Same rule restricted to joints where `mask` is true.
JointWeights joint_weights(const Pose2D& p, int j, const std::vector<bool>& mask);

struct ConditionedDistance {
  double distance = 0.0;
  Transform2D transform;
  int anchor = 0;
};

/// Weighted residual between p and q after aligning q onto p about joint j
/// and its farthest connected neighbor in p. Joints hidden in either pose are
/// dropped and the weights renormalized over the rest.
ConditionedDistance conditioned_distance(const Pose2D& p, const Pose2D& q, int j, const Skeleton& s);

/// As above with the anchor joint supplied by the caller.
ConditionedDistance conditioned_distance_about(const Pose2D& p, const Pose2D& q, int j, int anchor);

/// True when q can be aligned onto p about (j, anchor): both joints visible in
/// both poses and both segments longer than kMinSegmentLength.
bool alignable(const Pose2D& p, const Pose2D& q, int j, int anchor);

/// Reference exhaustive search, one match per visible query joint in
/// ascending joint order. Ties go to the lowest corpus index.
std::vector<Match> retrieve_matches(const QueryPose& qp, std::span<const AnnotatedImage> corpus,
                                    const Skeleton& s);

/// Immutable accelerated search over a fixed corpus. Each candidate gets a
/// cheap lower bound on its conditioned distance from the query's most heavily
/// weighted joints; only candidates whose bound does not exceed the running
/// best are scored exactly, with the same routine as retrieve_matches, so
/// winners are identical.
class RetrievalIndex {
 public:
  RetrievalIndex(std::vector<std::string> ids, std::vector<Pose2D> poses, int bound_joints = 4);
  static RetrievalIndex build(std::span<const AnnotatedImage> corpus, int bound_joints = 4);

  std::vector<Match> query(const QueryPose& qp, const Skeleton& s) const;
  /// Best match for a single query joint; throws NoCandidate.
  Match query_joint(const Pose2D& p, int j, const Skeleton& s) const;

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t e) const { return ids_[e]; }
  const Pose2D& pose(std::size_t e) const { return poses_[e]; }

  /// Number of exact distance evaluations performed by the last query on
  /// this thread; diagnostics only.
  static std::size_t last_exact_evaluations();

 private:
  std::vector<std::string> ids_;
  std::vector<Pose2D> poses_;
  std::size_t joints_ = 0;
  // Structure-of-arrays copies of the corpus: entry e, joint k at [k * N + e].
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<unsigned char> vis_;
  int bound_joints_ = 4;
};

}  // namespace posesynth
