#include "posesynth/blending.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace posesynth {

double distance_to_pose(const Vec2& pixel, const Pose2D& pose, const Skeleton& s) {
  double best = std::numeric_limits<double>::infinity();
  bool any_segment = false;
  for (const auto& [a, b] : s.edges) {
    if (!pose.visible[a] || !pose.visible[b]) continue;
    any_segment = true;
    const Vec2& pa = pose.joints[a];
    const Vec2 ab = pose.joints[b] - pa;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((pixel - pa).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (pixel - (pa + t * ab)).norm());
  }
  if (!any_segment) {
    for (std::size_t k = 0; k < pose.size(); ++k)
      if (pose.visible[k]) best = std::min(best, (pixel - pose.joints[k]).norm());
  }
  return best;
}

int region_side(double distance, const BlendConfig& cfg) {
  const double x = std::clamp(cfg.s_min + cfg.alpha * distance, cfg.s_min, cfg.s_max);
  int side = 2 * static_cast<int>(std::floor(x / 2.0)) + 1;
  if (side > cfg.s_max) side -= 2;
  return std::max(side, 1);
}

int region_size(const Vec2& pixel, const QueryPose& qp, const Skeleton& s, const BlendConfig& cfg) {
  check_blend_config(cfg);
  return region_side(distance_to_pose(pixel, qp.pose2d, s), cfg);
}

Raster<double> pose_distance_field(const QueryPose& qp, const Skeleton& s, int width, int height) {
  Raster<double> out(width, height, 0.0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out(x, y) = distance_to_pose(Vec2(x, y), qp.pose2d, s);
  return out;
}

namespace {

void check_inputs(const IndexMap& im, int count) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "candidate count must be >= 1");
  for (int v : im.indices.values)
    if (v < 0 || v >= count) throw Error(ErrorKind::InvalidArgument, "index map entry out of range");
}

struct Window {
  int x0, x1, y0, y1;  // inclusive, clipped
};

Window window_at(int x, int y, int side, int w, int h) {
  const int half = side / 2;
  return {std::max(0, x - half), std::min(w - 1, x + half), std::max(0, y - half), std::min(h - 1, y + half)};
}

}  // namespace

BlendWeights blend_weights(const IndexMap& im, const QueryPose& qp, const Skeleton& s,
                           const BlendConfig& cfg, int count) {
  check_blend_config(cfg);
  check_inputs(im, count);
  const int w = im.indices.width, h = im.indices.height;
  const std::size_t sw = static_cast<std::size_t>(w) + 1;
  const std::size_t plane = sw * (static_cast<std::size_t>(h) + 1);

  // sat[j][(y + 1) * sw + (x + 1)] counts label j over [0, x] x [0, y].
  std::vector<int> sat(plane * count, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int label = im.indices(x, y);
      for (int j = 0; j < count; ++j) {
        int* t = &sat[j * plane];
        const std::size_t i = (y + 1) * sw + (x + 1);
        t[i] = t[i - 1] + t[i - sw] - t[i - sw - 1] + (label == j ? 1 : 0);
      }
    }
  }

  BlendWeights out;
  out.width = w;
  out.height = h;
  out.count = count;
  out.values.assign(static_cast<std::size_t>(w) * h * count, 0.0);
  const Raster<double> dist = pose_distance_field(qp, s, w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Window r = window_at(x, y, region_side(dist(x, y), cfg), w, h);
      const double area = static_cast<double>(r.x1 - r.x0 + 1) * (r.y1 - r.y0 + 1);
      double* dst = &out.values[(static_cast<std::size_t>(y) * w + x) * count];
      for (int j = 0; j < count; ++j) {
        const int* t = &sat[j * plane];
        const int n = t[(r.y1 + 1) * sw + (r.x1 + 1)] - t[r.y0 * sw + (r.x1 + 1)] -
                      t[(r.y1 + 1) * sw + r.x0] + t[r.y0 * sw + r.x0];
        dst[j] = n / area;
      }
    }
  }
  return out;
}

BlendWeights blend_weights_naive(const IndexMap& im, const QueryPose& qp, const Skeleton& s,
                                 const BlendConfig& cfg, int count) {
  check_blend_config(cfg);
  check_inputs(im, count);
  const int w = im.indices.width, h = im.indices.height;
  BlendWeights out;
  out.width = w;
  out.height = h;
  out.count = count;
  out.values.assign(static_cast<std::size_t>(w) * h * count, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int side = region_size(Vec2(x, y), qp, s, cfg);
      const Window r = window_at(x, y, side, w, h);
      std::vector<int> hist(count, 0);
      int total = 0;
      for (int yy = r.y0; yy <= r.y1; ++yy)
        for (int xx = r.x0; xx <= r.x1; ++xx) {
          ++hist[im.indices(xx, yy)];
          ++total;
        }
      for (int j = 0; j < count; ++j)
        out.values[(static_cast<std::size_t>(y) * w + x) * count + j] = static_cast<double>(hist[j]) / total;
    }
  }
  return out;
}

RgbImage blend(std::span<const WarpedCandidate> candidates, const BlendWeights& weights) {
  if (static_cast<int>(candidates.size()) != weights.count)
    throw Error(ErrorKind::InvalidArgument, "weights do not match candidate count");
  const int w = weights.width, h = weights.height;
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int j = 0; j < weights.count; ++j) {
        const double wj = weights(x, y, j);
        if (wj == 0.0) continue;
        const std::uint8_t* px = candidates[j].image.at(x, y);
        for (int ch = 0; ch < 3; ++ch) acc[ch] += wj * px[ch];
      }
      std::uint8_t* dst = out.at(x, y);
      for (int ch = 0; ch < 3; ++ch)
        dst[ch] = static_cast<std::uint8_t>(std::clamp(std::floor(acc[ch] + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace posesynth
