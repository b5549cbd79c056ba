#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "../support.hpp"
#include "posesynth/evaluation.hpp"

using namespace posesynth;

namespace {

Eigen::Matrix3d random_rotation(Rng& rng) {
  const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
  return Eigen::AngleAxisd(rng.uniform(-std::numbers::pi, std::numbers::pi), axis).toRotationMatrix();
}

Pose3D transform(const Pose3D& p, const Eigen::Matrix3d& r, double s, const Vec3& t) {
  Pose3D out = p;
  for (auto& j : out.joints) j = s * r * j + t;
  return out;
}

double mean_dist(const Pose3D& a, const Pose3D& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a.joints[k] - b.joints[k]).norm();
  return d / a.size();
}

}  // namespace

TEST_CASE("mpjpe_abs") {
  const Skeleton s = default_skeleton();
  Rng rng(1);
  const Pose3D gt = testsupport::random_pose3d(rng, 13);
  CHECK(mpjpe_abs(gt, gt, s) == 0.0);
  CHECK(mpjpe_abs(transform(gt, Eigen::Matrix3d::Identity(), 1, Vec3(10, 0, 0)), gt, s) < 1e-9);

  // 90 degrees about the vertical axis, direct formula after centering.
  const Eigen::Matrix3d r = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY()).toRotationMatrix();
  const Pose3D pred = transform(gt, r, 1, Vec3::Zero());
  const Vec3 cp = torso_center(pred, s), cg = torso_center(gt, s);
  double expect = 0.0;
  for (std::size_t k = 0; k < 13; ++k) expect += ((pred.joints[k] - cp) - (gt.joints[k] - cg)).norm();
  CHECK(mpjpe_abs(pred, gt, s) == doctest::Approx(expect / 13));

  Pose3D short_pose = gt;
  short_pose.joints.pop_back();
  CHECK_THROWS_AS(mpjpe_abs(short_pose, gt, s), Error);
}

TEST_CASE("mpjpe_aligned") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const Pose3D gt = testsupport::random_pose3d(rng, 13);
    const Pose3D pred = transform(gt, random_rotation(rng), 1.0, Vec3(rng.uniform(-1e3, 1e3), 0, rng.uniform(-1e3, 1e3)));
    CHECK(mpjpe_aligned(pred, gt, AlignMode::Rigid) < 1e-6);
    CHECK(mpjpe_aligned(pred, gt, AlignMode::Similarity) < 1e-6);
  }
  const Pose3D gt = testsupport::random_pose3d(rng, 13);
  const Pose3D twice = transform(gt, Eigen::Matrix3d::Identity(), 2.0, Vec3::Zero());
  CHECK(mpjpe_aligned(twice, gt, AlignMode::Similarity) < 1e-6);
  CHECK(mpjpe_aligned(twice, gt, AlignMode::Rigid) > 1.0);

  // Reflection is excluded: a mirrored pose cannot be aligned to zero.
  Pose3D mirrored = gt;
  for (auto& j : mirrored.joints) j.x() = -j.x();
  CHECK(mpjpe_aligned(mirrored, gt, AlignMode::Rigid) > 1.0);

  Pose3D line;
  for (int k = 0; k < 13; ++k) line.joints.emplace_back(k * 10.0, 0, 0);
  CHECK_THROWS_AS(mpjpe_aligned(gt, line, AlignMode::Rigid), Error);
}

TEST_CASE("rigid alignment agrees with a grid-search oracle") {
  Rng rng(3);
  for (int t = 0; t < 3; ++t) {
    const Pose3D gt = testsupport::random_pose3d(rng, 13, 400);
    Pose3D pred = transform(gt, random_rotation(rng), 1.0, Vec3(100, -50, 20));
    for (auto& j : pred.joints) j += Vec3(rng.normal(), rng.normal(), rng.normal()) * 30.0;
    CHECK(std::abs(mpjpe_aligned(pred, gt, AlignMode::Rigid) - testsupport::grid_rigid_error(pred, gt)) < 2.0);
  }
}

TEST_CASE("alignment never increases the summed squared error") {
  const Skeleton s = default_skeleton();
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const Pose3D gt = testsupport::random_pose3d(rng, 13);
    const Pose3D pred = testsupport::random_pose3d(rng, 13);
    auto sse = [&](AlignMode m) {
      const Alignment a = align_poses(pred, gt, m);
      double e = 0.0;
      for (std::size_t k = 0; k < 13; ++k) e += (a.scale * a.rotation * pred.joints[k] + a.translation - gt.joints[k]).squaredNorm();
      return e;
    };
    const Vec3 cp = torso_center(pred, s), cg = torso_center(gt, s);
    double centered = 0.0;
    for (std::size_t k = 0; k < 13; ++k) centered += ((pred.joints[k] - cp) - (gt.joints[k] - cg)).squaredNorm();
    CHECK(sse(AlignMode::Rigid) <= centered * (1 + 1e-12));
    CHECK(sse(AlignMode::Similarity) <= sse(AlignMode::Rigid) * (1 + 1e-12));
    CHECK(mpjpe_aligned(pred, gt, AlignMode::Rigid) <= mpjpe_abs(pred, gt, s) + 1e-9);
    CHECK(mpjpe_aligned(pred, gt, AlignMode::Similarity) <= mpjpe_abs(pred, gt, s) + 1e-9);
  }
}

TEST_CASE("pixel_error") {
  const Skeleton s = default_skeleton();
  Rng rng(5);
  const Pose2D gt = testsupport::random_pose2d(rng, 13);
  CHECK(pixel_error(gt, gt, s).mean == 0.0);
  Pose2D off = gt;
  for (auto& j : off.joints) j += Vec2(3, 4);
  CHECK(pixel_error(off, gt, s).mean == doctest::Approx(5.0));

  Pose2D feet = gt;
  feet.joints[11] += Vec2(10, 0);
  feet.joints[12] += Vec2(0, -10);
  const PixelError pe = pixel_error(feet, gt, s);
  CHECK(pe.groups[0] == doctest::Approx(10.0));
  for (std::size_t g = 1; g < kJointGroups.size(); ++g) CHECK(pe.groups[g] == 0.0);
  CHECK(pe.mean == doctest::Approx(20.0 / 13.0));
}

TEST_CASE("run_protocol") {
  const Skeleton s = default_skeleton();
  Rng rng(6);
  std::vector<PoseSample> gt;
  for (int i = 0; i < 6400; ++i) gt.push_back({"f" + std::to_string(i), testsupport::random_pose3d(rng, 13), std::nullopt});
  const EvalReport p1 = run_protocol(gt, gt, 64, "P1", s);
  CHECK(p1.samples.size() == 100);
  CHECK(p1.mean_abs_mm == 0.0);
  CHECK(p1.mean_rigid_mm < 1e-9);
  CHECK(!p1.mean_px);
  const std::vector<PoseSample> few(gt.begin(), gt.begin() + 10);
  CHECK(run_protocol(few, few, 1, "P2", s).samples.size() == 10);

  std::vector<PoseSample> missing(gt.begin() + 1, gt.begin() + 10);
  try {
    run_protocol(missing, few, 1, "P2", s);
    FAIL("expected MissingPrediction");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingPrediction);
    CHECK(std::string(e.what()).find("f0") != std::string::npos);
  }

  // Known displacement: every joint 10 mm off along x except the torso,
  // which re-centering shifts back.
  std::vector<PoseSample> pred = few;
  for (auto& p : pred) p.pose3d.joints[0] += Vec3(130, 0, 0);
  const EvalReport d = run_protocol(pred, few, 1, "shift", s);
  CHECK(d.mean_abs_mm == doctest::Approx(10.0));

  std::ostringstream csv;
  write_report_csv(csv, d);
  const std::string text = csv.str();
  CHECK(text.rfind("id,abs_mm,rigid_mm,similarity_mm,px,px_feet,px_knees,px_hips,px_hands,px_elbows,px_shoulders,px_head\n", 0) == 0);
  CHECK(text.find("f3,10.000000,") != std::string::npos);
}
