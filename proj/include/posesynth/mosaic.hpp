#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "posesynth/core.hpp"
#include "posesynth/mocap_prep.hpp"
#include "posesynth/retrieval.hpp"

namespace posesynth {

/// A corpus image resampled onto the synthesis canvas.
struct WarpedCandidate {
  /// Bilinear samples; pixels whose source falls outside the image carry the
  /// sample at the clamped (nearest in-bounds) source coordinate.
  RgbImage image;
  /// 1 where all four bilinear taps are inside the source image.
  Raster<std::uint8_t> valid;
  Pose2D aligned_pose;
  Match match;
};

struct ProbabilityMap {
  Raster<double> values;  // in [0, 1]
};

/// Zero-based candidate index per pixel.
struct IndexMap {
  Raster<int> indices;
};

using Triangle = std::array<int, 3>;

/// Inverse-mapping bilinear resample of `src` through `t` onto a square
/// canvas. Taps with zero weight are ignored, so integer source coordinates
/// on the last row/column stay valid.
WarpedCandidate warp_image(const AnnotatedImage& src, const Transform2D& t, int canvas);

/// warp_image with the match's transform, carrying the match along.
WarpedCandidate warp_candidate(const AnnotatedImage& src, const Match& m, int canvas);

/// Delaunay triangulation of a small point set. Exact duplicates collapse onto
/// their first occurrence; cocircular groups are fanned. Triangles are
/// returned with positive orientation ((b - a) x (c - a) > 0).
/// Throws Degenerate for fewer than 3 distinct or all-collinear points.
std::vector<Triangle> delaunay(std::span<const Vec2> points);

/// Barycentric interpolation of per-vertex values over `triangles`, sampled
/// at pixel centers with a top-left ownership rule on shared edges. Pixels
/// outside the triangulation take the value at the nearest point of its
/// boundary.
Raster<double> rasterize_barycentric(std::span<const Vec2> points, std::span<const double> values,
                                     std::span<const Triangle> triangles, int width, int height);

/// Per-vertex affinity exp(-|p_k - q'_k|^2 / sigma^2) interpolated over the
/// Delaunay triangulation of the candidate's aligned joints; zero where the
/// candidate is invalid.
ProbabilityMap probability_map(const WarpedCandidate& cand, const QueryPose& qp, double sigma);

/// Per-pixel argmax over maps with ties to the lower index. Where every map is
/// zero the candidate with the smallest distance wins.
IndexMap index_map(std::span<const ProbabilityMap> maps, std::span<const double> distances);

/// Copy-paste mosaic: each pixel from the candidate named by the index map.
RgbImage compose_mosaic(std::span<const WarpedCandidate> candidates, const IndexMap& im);

}  // namespace posesynth
