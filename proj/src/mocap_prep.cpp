#include "posesynth/mocap_prep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "posesynth/random.hpp"

namespace posesynth {

std::vector<std::size_t> subsample_poses(std::span<const Pose3D> poses, double min_dist,
                                         SubsampleRule rule) {
  if (!(min_dist > 0.0)) throw Error(ErrorKind::InvalidArgument, "min_dist must be > 0");
  std::vector<std::size_t> kept;
  for (std::size_t b = 0; b < poses.size(); ++b) {
    const Pose3D& pb = poses[b];
    bool keep = true;
    for (std::size_t a : kept) {
      const Pose3D& pa = poses[a];
      if (pa.size() != pb.size())
        throw Error(ErrorKind::JointCountMismatch, "poses differ in joint count");
      double agg = 0.0;
      for (std::size_t k = 0; k < pb.size(); ++k) {
        const double d = (pa.joints[k] - pb.joints[k]).norm();
        agg = rule == SubsampleRule::MaxJoint ? std::max(agg, d) : agg + d;
      }
      if (rule == SubsampleRule::MeanJoint && pb.size() > 0) agg /= static_cast<double>(pb.size());
      if (agg < min_dist) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(b);
  }
  return kept;
}

std::vector<Camera> sample_virtual_cameras(int count, AngleRange azimuth, AngleRange elevation,
                                           double distance, double focal, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "camera count must be >= 1");
  if (azimuth.lo > azimuth.hi || elevation.lo > elevation.hi)
    throw Error(ErrorKind::InvalidRange, "empty angle range");
  if (elevation.lo < -90.0 || elevation.hi > 90.0)
    throw Error(ErrorKind::InvalidRange, "elevation range exceeds [-90, 90]");

  Rng rng(seed);
  std::vector<Camera> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Camera c;
    // unit() is in [0, 1): half-open on azimuth, and elevation's upper end is
    // reachable only through the degenerate range.
    c.azimuth = azimuth.lo + (azimuth.hi - azimuth.lo) * rng.unit();
    c.elevation = elevation.lo + (elevation.hi - elevation.lo) * rng.unit();
    c.distance = distance;
    c.focal = focal;
    check_camera(c);
    out.push_back(c);
  }
  return out;
}

Eigen::Matrix3d camera_rotation(const Camera& cam) {
  constexpr double deg = std::numbers::pi / 180.0;
  const Eigen::Matrix3d yaw = Eigen::AngleAxisd(-cam.azimuth * deg, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d pitch = Eigen::AngleAxisd(cam.elevation * deg, Eigen::Vector3d::UnitX()).toRotationMatrix();
  return pitch * yaw;
}

OrientedPose orient_and_center(const Pose3D& p, const Camera& cam, const Skeleton& s) {
  if (p.size() != s.size()) throw Error(ErrorKind::JointCountMismatch, "pose/skeleton size mismatch");
  check_camera(cam);
  const Vec3 center = torso_center(p, s);
  const Eigen::Matrix3d r = camera_rotation(cam);
  OrientedPose out;
  out.camera = cam;
  out.pose3d.joints.reserve(p.size());
  for (const auto& j : p.joints) out.pose3d.joints.push_back(r * (j - center));
  // Re-center to absorb rounding from the rotation.
  const Vec3 residual = torso_center(out.pose3d, s);
  for (auto& j : out.pose3d.joints) j -= residual;
  return out;
}

Pose2D project(const OrientedPose& op, const Vec2& principal_point) {
  check_camera(op.camera);
  std::vector<Vec2> pts;
  pts.reserve(op.pose3d.size());
  for (std::size_t k = 0; k < op.pose3d.size(); ++k) {
    const Vec3& j = op.pose3d.joints[k];
    const double depth = j.z() + op.camera.distance;
    if (!(depth > 0.0))
      throw Error(ErrorKind::BehindCamera, "joint " + std::to_string(k) + " is behind the camera");
    pts.emplace_back(op.camera.focal * j.x() / depth + principal_point.x(),
                     op.camera.focal * j.y() / depth + principal_point.y());
  }
  return Pose2D(std::move(pts));
}

QueryPose normalize_crop(const Pose2D& p2d, int canvas, double margin) {
  if (canvas <= 0 || !(margin >= 0.0) || 2.0 * margin >= canvas)
    throw Error(ErrorKind::InvalidArgument, "invalid canvas/margin");
  if (p2d.visible_count() < 2) throw Error(ErrorKind::DegeneratePose, "fewer than 2 visible joints");
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (std::size_t k = 0; k < p2d.size(); ++k) {
    if (!p2d.visible[k]) continue;
    lo = lo.cwiseMin(p2d.joints[k]);
    hi = hi.cwiseMax(p2d.joints[k]);
  }
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 1e-9)) throw Error(ErrorKind::DegeneratePose, "visible joints coincide");

  QueryPose q;
  q.crop.rotation = 0.0;
  q.crop.scale = (canvas - 2.0 * margin) / extent;
  const Vec2 box_center = 0.5 * (lo + hi);
  const Vec2 canvas_center = Vec2::Constant(0.5 * canvas);
  q.crop.translation = canvas_center - q.crop.scale * box_center;
  q.pose2d = q.crop.apply(p2d);
  return q;
}

QueryPose make_query(const Pose3D& p, const Camera& cam, const Skeleton& s, int canvas,
                     double margin) {
  return normalize_crop(project(orient_and_center(p, cam, s)), canvas, margin);
}

}  // namespace posesynth
