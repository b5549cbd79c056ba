#include "posesynth/stick_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <queue>

#include <Eigen/Geometry>

#include "posesynth/mocap_prep.hpp"
#include "posesynth/random.hpp"

namespace posesynth {

namespace {

bool has(const std::string& name, const char* key) { return name.find(key) != std::string::npos; }

double side_of(const std::string& name) {
  if (name.rfind("l_", 0) == 0 || name.rfind("left", 0) == 0) return 1.0;
  if (name.rfind("r_", 0) == 0 || name.rfind("right", 0) == 0) return -1.0;
  return 0.0;
}

Vec3 random_direction(Rng& rng) {
  for (;;) {
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    if (v.norm() > 1e-6) return v.normalized();
  }
}

Vec3 jitter(Rng& rng, double sd) { return Vec3(rng.normal(), rng.normal(), rng.normal()) * sd; }

/// Offset from parent to child joint, chosen from the child's name.
Vec3 bone(const std::string& child, Rng& rng) {
  const double side = side_of(child);
  if (has(child, "shoulder")) return Vec3(side * 180.0, 250.0, 0.0) + jitter(rng, 12.0);
  if (has(child, "hip")) return Vec3(-side * 70.0, 500.0, 0.0) + jitter(rng, 15.0);
  if (has(child, "elbow")) return random_direction(rng) * 280.0;
  if (has(child, "wrist")) return random_direction(rng) * 250.0;
  if (has(child, "knee")) return (Vec3(0, 1, 0) + 0.7 * jitter(rng, 1.0)).normalized() * 430.0;
  if (has(child, "ankle")) return (Vec3(0, 1, 0) + 0.5 * jitter(rng, 1.0)).normalized() * 420.0;
  return random_direction(rng) * 250.0;
}

std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); }

std::array<std::uint8_t, 3> random_color(Rng& rng) {
  return {static_cast<std::uint8_t>(40 + rng.below(216)), static_cast<std::uint8_t>(40 + rng.below(216)),
          static_cast<std::uint8_t>(40 + rng.below(216))};
}

void paint_background(RgbImage& img, Rng& rng) {
  std::array<double, 3> base;
  for (double& b : base) b = rng.uniform(30.0, 200.0);
  struct Wave {
    double kx, ky, phase, amp;
    int channel;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 4; ++i) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double freq = rng.uniform(0.02, 0.15);
    waves.push_back({freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi),
                     rng.uniform(10.0, 35.0), static_cast<int>(rng.below(3))});
  }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      std::array<double, 3> c = base;
      for (const auto& w : waves) c[w.channel] += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
      const double grain = rng.uniform(-6.0, 6.0);
      std::uint8_t* px = img.at(x, y);
      for (int ch = 0; ch < 3; ++ch) px[ch] = to_u8(c[ch] + grain);
    }
}

}  // namespace

Pose3D random_pose3d(const Skeleton& s, std::uint64_t seed) {
  Rng rng(seed);
  Pose3D p;
  p.joints.assign(s.size(), Vec3::Zero());
  std::vector<bool> placed(s.size(), false);
  std::queue<int> frontier;
  frontier.push(s.root);
  placed[s.root] = true;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : s.neighbors(u)) {
      if (placed[v]) continue;
      p.joints[v] = p.joints[u] + bone(s.joints[v], rng);
      placed[v] = true;
      frontier.push(v);
    }
  }
  const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix();
  for (auto& j : p.joints) j = r * j;
  return p;
}

void draw_capsule(RgbImage& img, const Vec2& a, const Vec2& b, double radius,
                  const std::array<std::uint8_t, 3>& color) {
  const Vec2 lo = a.cwiseMin(b).array() - radius - 1.0;
  const Vec2 hi = a.cwiseMax(b).array() + radius + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(lo.x())));
  const int y0 = std::max(0, static_cast<int>(std::floor(lo.y())));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(hi.x())));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(hi.y())));
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p(x, y);
      const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const double d = (p - (a + t * ab)).norm();
      const double cov = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      if (cov <= 0.0) continue;
      std::uint8_t* px = img.at(x, y);
      for (int ch = 0; ch < 3; ++ch) px[ch] = to_u8(px[ch] * (1.0 - cov) + color[ch] * cov);
    }
}

RgbImage render_stick_figure(const Pose2D& pose, const Skeleton& s, int width, int height, std::uint64_t seed) {
  if (pose.size() != s.size()) throw Error(ErrorKind::JointCountMismatch, "pose/skeleton size mismatch");
  Rng rng(seed);
  RgbImage img(width, height);
  paint_background(img, rng);
  const double scale = std::min(width, height) / 220.0;
  const double radius = rng.uniform(4.0, 7.0) * scale;
  for (const auto& [a, b] : s.edges) draw_capsule(img, pose.joints[a], pose.joints[b], radius, random_color(rng));
  draw_capsule(img, pose.joints[s.root], pose.joints[s.root], radius * 1.8, random_color(rng));
  return img;
}

std::vector<AnnotatedImage> generate_stick_corpus(int count, const Skeleton& s, int canvas, std::uint64_t seed,
                                                  double occlusion_prob) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "count must be >= 1");
  std::vector<AnnotatedImage> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "stick_%05d", i);
    Rng rng(derive_seed(seed, id));
    const Pose3D p3 = random_pose3d(s, rng.next());
    Camera cam;
    cam.azimuth = rng.uniform(0.0, 360.0);
    cam.elevation = rng.uniform(-30.0, 30.0);
    const double margin = rng.uniform(0.05, 0.2) * canvas;
    QueryPose q = make_query(p3, cam, s, canvas, margin);
    const double room = std::max(0.0, margin - 0.04 * canvas);
    const Vec2 shift(rng.uniform(-room, room), rng.uniform(-room, room));
    // Annotations live on a 1/256 px grid so mirroring is exact.
    for (auto& j : q.pose2d.joints) j = ((j + shift) * 256.0).array().round() / 256.0;
    if (occlusion_prob > 0.0) {
      for (std::size_t k = 0; k < s.size(); ++k) q.pose2d.visible[k] = rng.unit() >= occlusion_prob;
      if (q.pose2d.visible_count() < 2) std::fill(q.pose2d.visible.begin(), q.pose2d.visible.end(), true);
    }
    RgbImage img = render_stick_figure(q.pose2d, s, canvas, canvas, rng.next());
    out.push_back({id, std::move(img), std::move(q.pose2d)});
  }
  return out;
}

std::vector<MocapRecord> generate_mocap(int count, const Skeleton& s, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "count must be >= 1");
  std::vector<MocapRecord> out;
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "mocap_%05d", i);
    out.push_back({id, random_pose3d(s, derive_seed(seed, id))});
  }
  return out;
}

}  // namespace posesynth
