#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "posesynth/core.hpp"

namespace posesynth {

/// 3D pose in camera coordinates (x right, y down, z forward) with the torso
/// center at the origin.
struct OrientedPose {
  Pose3D pose3d;
  Camera camera;
};

/// 2D query pose framed on the synthesis canvas; `crop` maps raw projection
/// coordinates to canvas pixels.
struct QueryPose {
  Pose2D pose2d;
  Transform2D crop;
};

enum class SubsampleRule {
  MaxJoint,   // keep if some joint moved at least min_dist
  MeanJoint,  // keep if the average joint displacement is at least min_dist
};

/// Greedy first-come subsampling; returns kept indices in input order.
std::vector<std::size_t> subsample_poses(std::span<const Pose3D> poses, double min_dist,
                                         SubsampleRule rule = SubsampleRule::MaxJoint);

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform-in-angle camera sampling. Azimuth is drawn from [lo, hi) and
/// elevation from [lo, hi]; degenerate ranges yield the single value.
std::vector<Camera> sample_virtual_cameras(int count, AngleRange azimuth, AngleRange elevation,
                                           double distance, double focal, std::uint64_t seed);

/// World-to-camera rotation. Azimuth turns about the vertical (y) axis,
/// elevation tilts the camera above the horizon.
Eigen::Matrix3d camera_rotation(const Camera& cam);

OrientedPose orient_and_center(const Pose3D& p, const Camera& cam, const Skeleton& s);

/// Pinhole projection; every joint must satisfy z + distance > 0.
Pose2D project(const OrientedPose& op, const Vec2& principal_point = Vec2::Zero());

/// Scales and centers the visible joints' bounding box into the canvas so its
/// longer side spans canvas - 2 * margin. No rotation.
QueryPose normalize_crop(const Pose2D& p2d, int canvas, double margin);

/// orient -> project -> normalize in one call.
QueryPose make_query(const Pose3D& p, const Camera& cam, const Skeleton& s, int canvas,
                     double margin);

}  // namespace posesynth
