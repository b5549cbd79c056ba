#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "posesynth/core.hpp"
#include "posesynth/dataset_io.hpp"

namespace posesynth {

/// Random articulated 3D pose in mm (y down), torso roughly upright, limbs
/// pointing in random directions. Bone lengths are picked from joint names.
Pose3D random_pose3d(const Skeleton& s, std::uint64_t seed);

/// Anti-aliased filled capsule: coverage min(1, max(0, r + 0.5 - d)) where d
/// is the pixel-center distance to segment ab.
void draw_capsule(RgbImage& img, const Vec2& a, const Vec2& b, double radius,
                  const std::array<std::uint8_t, 3>& color);

/// Textured background, one colored capsule per skeleton edge and a disc on
/// the root joint. Joint positions are the capsule endpoints.
RgbImage render_stick_figure(const Pose2D& pose, const Skeleton& s, int width, int height,
                             std::uint64_t seed);

/// `count` rendered figures with exact annotations, ids "stick_00000", ...
/// Each joint is independently marked hidden with `occlusion_prob` (it is
/// still drawn). Deterministic given the seed.
std::vector<AnnotatedImage> generate_stick_corpus(int count, const Skeleton& s, int canvas,
                                                  std::uint64_t seed, double occlusion_prob = 0.0);

/// Stand-in MoCap poses with ids "mocap_00000", ...
std::vector<MocapRecord> generate_mocap(int count, const Skeleton& s, std::uint64_t seed);

}  // namespace posesynth
