#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>

#include "posesynth/core.hpp"
#include "posesynth/random.hpp"

namespace testsupport {

using namespace posesynth;

inline Pose2D random_pose2d(Rng& rng, std::size_t n, double lo = 20.0, double hi = 200.0, double hide = 0.0) {
  std::vector<Vec2> pts;
  std::vector<bool> vis;
  for (std::size_t k = 0; k < n; ++k) {
    pts.emplace_back(rng.uniform(lo, hi), rng.uniform(lo, hi));
    vis.push_back(rng.unit() >= hide);
  }
  return Pose2D(std::move(pts), std::move(vis));
}

inline Pose3D random_pose3d(Rng& rng, std::size_t n, double spread = 500.0) {
  Pose3D p;
  for (std::size_t k = 0; k < n; ++k)
    p.joints.emplace_back(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread));
  return p;
}

/// Chain skeleton 0 - 1 - ... - (n-1).
inline Skeleton chain_skeleton(int n) {
  Skeleton s;
  for (int k = 0; k < n; ++k) s.joints.push_back("j" + std::to_string(k));
  for (int k = 0; k + 1 < n; ++k) s.edges.push_back({k, k + 1});
  s.torso_joints = {0};
  return s;
}

/// Straight-line conditioned distance written with complex arithmetic:
/// anchor i = farthest visible neighbor of j in p, T(z) = a z + b pinning
/// q_j -> p_j and q_i -> p_i, weights 1/max(d, 1) per pose over joints
/// visible in both, sum (w_p + w_q) |p_k - T(q_k)|.
inline double oracle_distance(const Pose2D& p, const Pose2D& q, int j, const Skeleton& s, int* anchor_out = nullptr) {
  using C = std::complex<double>;
  auto z = [](const Vec2& v) { return C(v.x(), v.y()); };
  int i = -1;
  double far = -1.0;
  for (const auto& [a, b] : s.edges) {
    const int k = a == j ? b : (b == j ? a : -1);
    if (k < 0 || !p.visible[k]) continue;
    const double d = std::abs(z(p.joints[k]) - z(p.joints[j]));
    if (d > far || (d == far && k < i)) {
      far = d;
      i = k;
    }
  }
  if (anchor_out) *anchor_out = i;
  const C a = (z(p.joints[i]) - z(p.joints[j])) / (z(q.joints[i]) - z(q.joints[j]));
  const C b = z(p.joints[j]) - a * z(q.joints[j]);
  std::vector<double> wp(p.size(), 0.0), wq(p.size(), 0.0);
  double sp = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (static_cast<int>(k) == j || !p.visible[k] || !q.visible[k]) continue;
    wp[k] = 1.0 / std::max(std::abs(z(p.joints[k]) - z(p.joints[j])), 1.0);
    wq[k] = 1.0 / std::max(std::abs(z(q.joints[k]) - z(q.joints[j])), 1.0);
    sp += wp[k];
    sq += wq[k];
  }
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (wp[k] == 0.0) continue;
    d += (wp[k] / sp + wq[k] / sq) * std::abs(z(p.joints[k]) - (a * z(q.joints[k]) + b));
  }
  return d;
}

/// Grid search over ZYZ Euler angles minimizing the summed squared error of
/// centered poses (translation is optimal at the centroids), refined on a
/// shrinking grid around the incumbent.
inline double grid_rigid_error(const Pose3D& pred, const Pose3D& gt) {
  Vec3 mp = Vec3::Zero(), mg = Vec3::Zero();
  for (std::size_t k = 0; k < pred.size(); ++k) {
    mp += pred.joints[k];
    mg += gt.joints[k];
  }
  mp /= pred.size();
  mg /= gt.size();
  auto rot = [](double a, double b, double c) {
    return (Eigen::AngleAxisd(a, Vec3::UnitZ()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
            Eigen::AngleAxisd(c, Vec3::UnitZ()))
        .toRotationMatrix();
  };
  auto sse = [&](const Eigen::Matrix3d& r) {
    double e = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) e += (r * (pred.joints[k] - mp) - (gt.joints[k] - mg)).squaredNorm();
    return e;
  };
  const double deg = std::numbers::pi / 180.0;
  double best = 1e300, ba = 0, bb = 0, bc = 0;
  for (double a = -180; a < 180; a += 5)
    for (double b = 0; b <= 180; b += 5)
      for (double c = -180; c < 180; c += 5) {
        const double e = sse(rot(a * deg, b * deg, c * deg));
        if (e < best) best = e, ba = a, bb = b, bc = c;
      }
  for (double step : {1.0, 0.2, 0.04}) {
    const double ca = ba, cb = bb, cc = bc;
    for (double a = ca - 5 * step; a <= ca + 5 * step; a += step)
      for (double b = cb - 5 * step; b <= cb + 5 * step; b += step)
        for (double c = cc - 5 * step; c <= cc + 5 * step; c += step) {
          const double e = sse(rot(a * deg, b * deg, c * deg));
          if (e < best) best = e, ba = a, bb = b, bc = c;
        }
  }
  const Eigen::Matrix3d r = rot(ba * deg, bb * deg, bc * deg);
  double d = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) d += (r * (pred.joints[k] - mp) - (gt.joints[k] - mg)).norm();
  return d / pred.size();
}

}  // namespace testsupport
