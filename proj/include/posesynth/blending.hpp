#pragma once

#include <span>
#include <vector>

#include "posesynth/core.hpp"
#include "posesynth/mocap_prep.hpp"
#include "posesynth/mosaic.hpp"

namespace posesynth {

/// Per-pixel candidate weights, pixel-major: weight of candidate j at (x, y)
/// is `values[(y * width + x) * count + j]`.
struct BlendWeights {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<double> values;

  double operator()(int x, int y, int j) const {
    return values[(static_cast<std::size_t>(y) * width + x) * count + j];
  }
};

/// Distance in pixels from `pixel` to the nearest segment joining two visible
/// connected joints (falls back to the nearest visible joint).
double distance_to_pose(const Vec2& pixel, const Pose2D& pose, const Skeleton& s);

/// Odd side length of the histogram window: clamp(s_min + alpha * d) rounded
/// to the nearest odd integer within [s_min, s_max].
int region_side(double distance, const BlendConfig& cfg);
int region_size(const Vec2& pixel, const QueryPose& qp, const Skeleton& s, const BlendConfig& cfg);

/// Distance-to-pose for every pixel of a width x height canvas.
Raster<double> pose_distance_field(const QueryPose& qp, const Skeleton& s, int width, int height);

/// Normalized histogram of index-map labels inside each pixel's window,
/// clipped to the canvas. Uses one summed-area table per candidate.
BlendWeights blend_weights(const IndexMap& im, const QueryPose& qp, const Skeleton& s,
                           const BlendConfig& cfg, int count);

/// Direct window scan; reference for blend_weights.
BlendWeights blend_weights_naive(const IndexMap& im, const QueryPose& qp, const Skeleton& s,
                                 const BlendConfig& cfg, int count);

/// Per-channel weighted sum of the candidates, rounded once at the end.
RgbImage blend(std::span<const WarpedCandidate> candidates, const BlendWeights& weights);

}  // namespace posesynth
