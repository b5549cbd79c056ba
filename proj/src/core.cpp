#include "posesynth/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace posesynth {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NoVisibleNeighbor: return "NoVisibleNeighbor";
    case ErrorKind::DegenerateSegment: return "DegenerateSegment";
    case ErrorKind::AllOccluded: return "AllOccluded";
    case ErrorKind::NoCandidate: return "NoCandidate";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::DegeneratePose: return "DegeneratePose";
    case ErrorKind::BehindCamera: return "BehindCamera";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::TooFewPoses: return "TooFewPoses";
    case ErrorKind::JointCountMismatch: return "JointCountMismatch";
    case ErrorKind::MissingPrediction: return "MissingPrediction";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Skeleton

int Skeleton::index_of(const std::string& name) const {
  auto it = std::find(joints.begin(), joints.end(), name);
  return it == joints.end() ? -1 : static_cast<int>(it - joints.begin());
}

std::vector<int> Skeleton::neighbors(int j) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges) {
    if (a == j) out.push_back(b);
    if (b == j) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> Skeleton::mirror_permutation() const {
  std::vector<int> perm(joints.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (const auto& [l, r] : left_right_pairs) {
    perm[l] = r;
    perm[r] = l;
  }
  return perm;
}

Skeleton default_skeleton() {
  Skeleton s;
  s.joints = {"head",       "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
              "l_wrist",    "r_wrist",    "l_hip",      "r_hip",   "l_knee",
              "r_knee",     "l_ankle",    "r_ankle"};
  s.edges = {{0, 1}, {0, 2}, {1, 3}, {3, 5}, {2, 4}, {4, 6},
             {1, 7}, {2, 8}, {7, 9}, {9, 11}, {8, 10}, {10, 12}};
  s.left_right_pairs = {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}};
  s.torso_joints = {1, 2, 7, 8};
  s.root = 0;
  return s;
}

std::vector<std::string> validate_skeleton(const Skeleton& s) {
  std::vector<std::string> out;
  const int n = static_cast<int>(s.joints.size());
  if (n == 0) {
    out.emplace_back("skeleton has no joints");
    return out;
  }
  if (std::set<std::string>(s.joints.begin(), s.joints.end()).size() != s.joints.size())
    out.emplace_back("joint names not unique");

  auto in_range = [n](int i) { return i >= 0 && i < n; };
  bool indices_ok = in_range(s.root);
  for (const auto& [a, b] : s.edges) indices_ok = indices_ok && in_range(a) && in_range(b);
  for (const auto& [a, b] : s.left_right_pairs) indices_ok = indices_ok && in_range(a) && in_range(b);
  for (int t : s.torso_joints) indices_ok = indices_ok && in_range(t);
  if (!indices_ok) out.emplace_back("index out of range");

  // Tree check via union-find; only meaningful when every edge index is valid.
  bool edge_indices_ok = true;
  for (const auto& [a, b] : s.edges) edge_indices_ok = edge_indices_ok && in_range(a) && in_range(b);
  if (edge_indices_ok) {
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    bool tree = static_cast<int>(s.edges.size()) == n - 1;
    for (const auto& [a, b] : s.edges) {
      const int ra = find(a), rb = find(b);
      if (ra == rb) {
        tree = false;
        break;
      }
      parent[ra] = rb;
    }
    if (!tree) out.emplace_back("edges do not form a tree");
  }

  std::set<int> seen;
  bool disjoint = true;
  for (const auto& [l, r] : s.left_right_pairs) {
    if (l == r || !seen.insert(l).second || !seen.insert(r).second) disjoint = false;
  }
  if (!disjoint) out.emplace_back("left/right pairs not disjoint");

  if (s.torso_joints.empty()) out.emplace_back("torso_joints is empty");
  return out;
}

// ---------------------------------------------------------------------------
// Poses

Pose2D::Pose2D(std::vector<Vec2> pts) : joints(std::move(pts)), visible(joints.size(), true) {}

Pose2D::Pose2D(std::vector<Vec2> pts, std::vector<bool> vis)
    : joints(std::move(pts)), visible(std::move(vis)) {
  if (joints.size() != visible.size())
    throw Error(ErrorKind::JointCountMismatch, "visibility length differs from joint count");
}

std::size_t Pose2D::visible_count() const {
  return static_cast<std::size_t>(std::count(visible.begin(), visible.end(), true));
}

Vec3 torso_center(const Pose3D& p, const Skeleton& s) {
  if (s.torso_joints.empty()) throw Error(ErrorKind::InvalidArgument, "skeleton has no torso joints");
  Vec3 c = Vec3::Zero();
  for (int t : s.torso_joints) c += p.joints.at(t);
  return c / static_cast<double>(s.torso_joints.size());
}

void check_camera(const Camera& c) {
  if (!(c.elevation >= -90.0 && c.elevation <= 90.0))
    throw Error(ErrorKind::InvalidRange, "camera elevation outside [-90, 90]");
  if (!(c.distance > 0.0)) throw Error(ErrorKind::InvalidArgument, "camera distance must be > 0");
  if (!(c.focal > 0.0)) throw Error(ErrorKind::InvalidArgument, "camera focal must be > 0");
}

// ---------------------------------------------------------------------------
// Transform2D

Vec2 Transform2D::apply(const Vec2& x) const {
  const double c = scale * std::cos(rotation);
  const double s = scale * std::sin(rotation);
  return {c * x.x() - s * x.y() + translation.x(), s * x.x() + c * x.y() + translation.y()};
}

Pose2D Transform2D::apply(const Pose2D& p) const {
  const double c = scale * std::cos(rotation);
  const double s = scale * std::sin(rotation);
  Pose2D out = p;
  for (auto& j : out.joints)
    j = Vec2(c * j.x() - s * j.y() + translation.x(), s * j.x() + c * j.y() + translation.y());
  return out;
}

Transform2D Transform2D::compose(const Transform2D& other) const {
  Transform2D t;
  t.rotation = rotation + other.rotation;
  t.scale = scale * other.scale;
  t.translation = apply(other.translation);
  return t;
}

Transform2D Transform2D::inverse() const {
  Transform2D t;
  t.rotation = -rotation;
  t.scale = 1.0 / scale;
  const double c = std::cos(-rotation) / scale;
  const double s = std::sin(-rotation) / scale;
  t.translation = {-(c * translation.x() - s * translation.y()),
                   -(s * translation.x() + c * translation.y())};
  return t;
}

int farthest_connected_joint(const Skeleton& s, const Pose2D& p, int j) {
  if (j < 0 || j >= static_cast<int>(s.size()) || p.size() != s.size())
    throw Error(ErrorKind::InvalidArgument, "joint index or pose size does not match skeleton");
  int best = -1;
  double best_d = -1.0;
  for (int k : s.neighbors(j)) {
    if (!p.visible[k]) continue;
    const double d = (p.joints[k] - p.joints[j]).norm();
    if (d > best_d) {
      best_d = d;
      best = k;
    }
  }
  if (best < 0)
    throw Error(ErrorKind::NoVisibleNeighbor, "joint " + std::to_string(j) + " has no visible neighbor");
  return best;
}

void check_blend_config(const BlendConfig& cfg) {
  if (!(cfg.s_min >= 1.0 && cfg.s_min <= cfg.s_max))
    throw Error(ErrorKind::InvalidArgument, "blend config requires 1 <= s_min <= s_max");
  if (!(cfg.alpha >= 0.0)) throw Error(ErrorKind::InvalidArgument, "blend alpha must be >= 0");
}

void check_synth_config(const SynthConfig& cfg) {
  if (cfg.canvas <= 0) throw Error(ErrorKind::InvalidArgument, "canvas must be > 0");
  if (!(cfg.sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be > 0");
  if (!(cfg.margin >= 0.0 && 2.0 * cfg.margin < cfg.canvas))
    throw Error(ErrorKind::InvalidArgument, "margin must lie in [0, canvas/2)");
  check_blend_config(cfg.blend);
}

}  // namespace posesynth
