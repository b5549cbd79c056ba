#pragma once

#include <optional>
#include <span>
#include <vector>

#include "posesynth/blending.hpp"
#include "posesynth/core.hpp"
#include "posesynth/mocap_prep.hpp"
#include "posesynth/mosaic.hpp"
#include "posesynth/retrieval.hpp"

namespace posesynth {

/// Everything produced while synthesizing one (pose, camera) pair.
struct Synthesis {
  OrientedPose oriented;
  QueryPose query;
  std::vector<Match> matches;
  std::vector<WarpedCandidate> candidates;
  std::vector<ProbabilityMap> maps;
  IndexMap index;
  RgbImage mosaic;
  RgbImage image;  // final blended image
};

/// orient -> project -> normalize -> retrieve -> warp -> probability maps ->
/// index map -> blend. `index` must be built from `corpus`.
Synthesis synthesize(const Pose3D& pose, const Camera& camera, const Skeleton& s, const RetrievalIndex& index,
                     std::span<const AnnotatedImage> corpus, const SynthConfig& cfg);

/// Same, starting from an already-framed query pose.
Synthesis synthesize_query(const QueryPose& qp, const Skeleton& s, const RetrievalIndex& index,
                           std::span<const AnnotatedImage> corpus, const SynthConfig& cfg);

/// The query's skeleton drawn over `img` (joints as discs, visible bones as lines).
RgbImage draw_overlay(const RgbImage& img, const Pose2D& pose, const Skeleton& s);

}  // namespace posesynth
