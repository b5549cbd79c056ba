#include "posesynth/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace posesynth {

namespace {

thread_local std::size_t g_exact_evaluations = 0;

void require_joint(const Pose2D& p, int j) {
  if (j < 0 || static_cast<std::size_t>(j) >= p.size())
    throw Error(ErrorKind::InvalidArgument, "joint index out of range");
}

}  // namespace

Transform2D alignment_transform(const Pose2D& p, const Pose2D& q, int j, int i) {
  require_joint(p, j);
  require_joint(p, i);
  if (q.size() != p.size()) throw Error(ErrorKind::JointCountMismatch, "poses differ in joint count");
  const Vec2 dp = p.joints[i] - p.joints[j];
  const Vec2 dq = q.joints[i] - q.joints[j];
  const double lq2 = dq.squaredNorm();
  if (std::sqrt(lq2) < kMinSegmentLength || dp.norm() < kMinSegmentLength)
    throw Error(ErrorKind::DegenerateSegment,
                "segment " + std::to_string(j) + "-" + std::to_string(i) + " is degenerate");
  // Complex ratio dp / dq gives the rotation and scale in one step.
  const double re = (dp.x() * dq.x() + dp.y() * dq.y()) / lq2;
  const double im = (dp.y() * dq.x() - dp.x() * dq.y()) / lq2;
  Transform2D t;
  t.scale = std::hypot(re, im);
  t.rotation = std::atan2(im, re);
  t.translation = Vec2::Zero();
  t.translation = p.joints[j] - t.apply(q.joints[j]);
  return t;
}

JointWeights joint_weights(const Pose2D& p, int j) { return joint_weights(p, j, p.visible); }

JointWeights joint_weights(const Pose2D& p, int j, const std::vector<bool>& mask) {
  require_joint(p, j);
  if (!p.visible[j]) throw Error(ErrorKind::InvalidArgument, "query joint is not visible");
  JointWeights w;
  w.joint = j;
  w.weights.assign(p.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (static_cast<int>(k) == j || !mask[k] || !p.visible[k]) continue;
    const double d = (p.joints[k] - p.joints[j]).norm();
    w.weights[k] = 1.0 / std::max(d, kWeightDistanceFloor);
    total += w.weights[k];
  }
  if (total == 0.0)
    throw Error(ErrorKind::AllOccluded, "no visible joint other than " + std::to_string(j));
  for (auto& x : w.weights) x /= total;
  return w;
}

bool alignable(const Pose2D& p, const Pose2D& q, int j, int anchor) {
  if (!p.visible[j] || !p.visible[anchor] || !q.visible[j] || !q.visible[anchor]) return false;
  return (q.joints[anchor] - q.joints[j]).norm() >= kMinSegmentLength &&
         (p.joints[anchor] - p.joints[j]).norm() >= kMinSegmentLength;
}

ConditionedDistance conditioned_distance_about(const Pose2D& p, const Pose2D& q, int j, int anchor) {
  if (q.size() != p.size()) throw Error(ErrorKind::JointCountMismatch, "poses differ in joint count");
  require_joint(p, j);
  require_joint(p, anchor);
  if (!p.visible[j] || !p.visible[anchor] || !q.visible[j] || !q.visible[anchor])
    throw Error(ErrorKind::InvalidArgument, "alignment joints must be visible in both poses");
  ++g_exact_evaluations;

  ConditionedDistance out;
  out.anchor = anchor;
  out.transform = alignment_transform(p, q, j, anchor);

  std::vector<bool> mutual(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) mutual[k] = p.visible[k] && q.visible[k];
  const JointWeights wp = joint_weights(p, j, mutual);
  const JointWeights wq = joint_weights(q, j, mutual);

  const Pose2D aligned = out.transform.apply(q);
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!mutual[k]) continue;
    sum += (wp.weights[k] + wq.weights[k]) * (p.joints[k] - aligned.joints[k]).norm();
  }
  out.distance = sum;
  return out;
}

ConditionedDistance conditioned_distance(const Pose2D& p, const Pose2D& q, int j, const Skeleton& s) {
  return conditioned_distance_about(p, q, j, farthest_connected_joint(s, p, j));
}

namespace {

Match make_match(const std::string& id, std::size_t index, const Pose2D& q, int j,
                 const ConditionedDistance& cd) {
  Match m;
  m.source_id = id;
  m.source_index = index;
  m.aligned_pose = cd.transform.apply(q);
  m.transform = cd.transform;
  m.distance = cd.distance;
  m.joint = j;
  m.anchor = cd.anchor;
  return m;
}

int anchor_or_throw(const Skeleton& s, const Pose2D& p, int j) {
  try {
    return farthest_connected_joint(s, p, j);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoVisibleNeighbor) throw;
    throw Error(ErrorKind::NoCandidate, "joint " + std::to_string(j) + ": " + e.what());
  }
}

}  // namespace

std::vector<Match> retrieve_matches(const QueryPose& qp, std::span<const AnnotatedImage> corpus,
                                    const Skeleton& s) {
  if (corpus.empty()) throw Error(ErrorKind::InvalidArgument, "empty corpus");
  const Pose2D& p = qp.pose2d;
  if (p.size() != s.size()) throw Error(ErrorKind::JointCountMismatch, "query/skeleton size mismatch");
  std::vector<Match> out;
  for (int j = 0; j < static_cast<int>(p.size()); ++j) {
    if (!p.visible[j]) continue;
    const int anchor = anchor_or_throw(s, p, j);
    std::size_t best = corpus.size();
    ConditionedDistance best_cd;
    for (std::size_t e = 0; e < corpus.size(); ++e) {
      const Pose2D& q = corpus[e].pose;
      if (q.size() != p.size())
        throw Error(ErrorKind::JointCountMismatch, "corpus entry " + corpus[e].id + " has wrong joint count");
      if (!alignable(p, q, j, anchor)) continue;
      const ConditionedDistance cd = conditioned_distance_about(p, q, j, anchor);
      if (best == corpus.size() || cd.distance < best_cd.distance) {
        best = e;
        best_cd = cd;
      }
    }
    if (best == corpus.size())
      throw Error(ErrorKind::NoCandidate, "no corpus entry can be aligned about joint " + std::to_string(j));
    out.push_back(make_match(corpus[best].id, best, corpus[best].pose, j, best_cd));
  }
  return out;
}

// ---------------------------------------------------------------------------
// RetrievalIndex

RetrievalIndex::RetrievalIndex(std::vector<std::string> ids, std::vector<Pose2D> poses, int bound_joints)
    : ids_(std::move(ids)), poses_(std::move(poses)), bound_joints_(std::max(bound_joints, 1)) {
  if (poses_.empty()) throw Error(ErrorKind::InvalidArgument, "cannot index an empty corpus");
  if (ids_.size() != poses_.size()) throw Error(ErrorKind::InvalidArgument, "ids/poses length mismatch");
  joints_ = poses_.front().size();
  const std::size_t n = poses_.size();
  xs_.resize(joints_ * n);
  ys_.resize(joints_ * n);
  vis_.resize(joints_ * n);
  for (std::size_t e = 0; e < n; ++e) {
    if (poses_[e].size() != joints_)
      throw Error(ErrorKind::JointCountMismatch, "corpus entry " + ids_[e] + " has wrong joint count");
    for (std::size_t k = 0; k < joints_; ++k) {
      xs_[k * n + e] = poses_[e].joints[k].x();
      ys_[k * n + e] = poses_[e].joints[k].y();
      vis_[k * n + e] = poses_[e].visible[k] ? 1 : 0;
    }
  }
}

RetrievalIndex RetrievalIndex::build(std::span<const AnnotatedImage> corpus, int bound_joints) {
  std::vector<std::string> ids;
  std::vector<Pose2D> poses;
  ids.reserve(corpus.size());
  poses.reserve(corpus.size());
  for (const auto& a : corpus) {
    ids.push_back(a.id);
    poses.push_back(a.pose);
  }
  return RetrievalIndex(std::move(ids), std::move(poses), bound_joints);
}

std::size_t RetrievalIndex::last_exact_evaluations() { return g_exact_evaluations; }

Match RetrievalIndex::query_joint(const Pose2D& p, int j, const Skeleton& s) const {
  const std::size_t n = poses_.size();
  const int anchor = anchor_or_throw(s, p, j);
  if ((p.joints[anchor] - p.joints[j]).norm() < kMinSegmentLength)
    throw Error(ErrorKind::NoCandidate, "query segment about joint " + std::to_string(j) + " is degenerate");

  // Unnormalized query weights over every visible joint. Renormalizing over a
  // subset only increases them, so dividing by the full total gives a bound.
  std::vector<double> u(joints_, 0.0);
  double u_total = 0.0;
  for (std::size_t k = 0; k < joints_; ++k) {
    if (static_cast<int>(k) == j || !p.visible[k]) continue;
    u[k] = 1.0 / std::max((p.joints[k] - p.joints[j]).norm(), kWeightDistanceFloor);
    u_total += u[k];
  }
  std::vector<std::size_t> heavy;
  for (std::size_t k = 0; k < joints_; ++k)
    if (u[k] > 0.0) heavy.push_back(k);
  std::stable_sort(heavy.begin(), heavy.end(), [&u](std::size_t a, std::size_t b) { return u[a] > u[b]; });
  if (heavy.size() > static_cast<std::size_t>(bound_joints_)) heavy.resize(bound_joints_);

  const double pjx = p.joints[j].x(), pjy = p.joints[j].y();
  const double dpx = p.joints[anchor].x() - pjx, dpy = p.joints[anchor].y() - pjy;
  const double* xj = &xs_[static_cast<std::size_t>(j) * n];
  const double* yj = &ys_[static_cast<std::size_t>(j) * n];
  const double* xi = &xs_[static_cast<std::size_t>(anchor) * n];
  const double* yi = &ys_[static_cast<std::size_t>(anchor) * n];
  const unsigned char* vj = &vis_[static_cast<std::size_t>(j) * n];
  const unsigned char* vi = &vis_[static_cast<std::size_t>(anchor) * n];

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> bound(n, kInf);  // +inf marks entries that cannot be aligned
  std::size_t seed_entry = n;
  for (std::size_t e = 0; e < n; ++e) {
    if (!vj[e] || !vi[e]) continue;
    const double dqx = xi[e] - xj[e], dqy = yi[e] - yj[e];
    const double lq2 = dqx * dqx + dqy * dqy;
    if (std::sqrt(lq2) < kMinSegmentLength) continue;
    const double re = (dpx * dqx + dpy * dqy) / lq2;
    const double im = (dpy * dqx - dpx * dqy) / lq2;
    double lb = 0.0;
    for (std::size_t k : heavy) {
      const std::size_t idx = k * n + e;
      if (!vis_[idx]) continue;
      const double qx = xs_[idx] - xj[e], qy = ys_[idx] - yj[e];
      const double ax = pjx + re * qx - im * qy;
      const double ay = pjy + im * qx + re * qy;
      lb += u[k] * std::hypot(p.joints[k].x() - ax, p.joints[k].y() - ay);
    }
    bound[e] = lb / u_total;
    if (seed_entry == n || bound[e] < bound[seed_entry]) seed_entry = e;
  }
  if (seed_entry == n)
    throw Error(ErrorKind::NoCandidate, "no corpus entry can be aligned about joint " + std::to_string(j));

  // The bound and the exact score round differently; the slack keeps the
  // pruning conservative.
  auto prunable = [](double lb, double best) { return lb > best * (1.0 + 1e-9) + 1e-9; };

  std::size_t best = seed_entry;
  ConditionedDistance best_cd = conditioned_distance_about(p, poses_[seed_entry], j, anchor);
  for (std::size_t e = 0; e < n; ++e) {
    if (e == seed_entry || bound[e] == kInf || prunable(bound[e], best_cd.distance)) continue;
    const ConditionedDistance cd = conditioned_distance_about(p, poses_[e], j, anchor);
    if (cd.distance < best_cd.distance || (cd.distance == best_cd.distance && e < best)) {
      best = e;
      best_cd = cd;
    }
  }
  return make_match(ids_[best], best, poses_[best], j, best_cd);
}

std::vector<Match> RetrievalIndex::query(const QueryPose& qp, const Skeleton& s) const {
  const Pose2D& p = qp.pose2d;
  if (p.size() != s.size() || p.size() != joints_)
    throw Error(ErrorKind::JointCountMismatch, "query/skeleton/corpus size mismatch");
  g_exact_evaluations = 0;
  std::vector<Match> out;
  for (int j = 0; j < static_cast<int>(p.size()); ++j) {
    if (!p.visible[j]) continue;
    out.push_back(query_joint(p, j, s));
  }
  return out;
}

}  // namespace posesynth
