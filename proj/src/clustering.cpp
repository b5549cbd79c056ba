#include "posesynth/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "posesynth/parallel.hpp"
#include "posesynth/random.hpp"

namespace posesynth {

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

}  // namespace

void require_centered(std::span<const ClusterSample> samples, const Skeleton& s, double tol) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (torso_center(samples[i].pose3d, s).norm() > tol)
      throw Error(ErrorKind::InvalidArgument, "pose " + std::to_string(i) + " is not torso-centered");
  }
}

ClusterResult cluster_poses(std::span<const ClusterSample> samples, int k, std::uint64_t seed,
                            const KMeansOptions& opts) {
  const std::size_t n = samples.size();
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw Error(ErrorKind::TooFewPoses, "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " poses");
  const std::size_t joints = samples[0].pose3d.size();
  const std::size_t dim = 3 * joints;
  std::vector<double> data(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].pose3d.size() != joints || samples[i].pose2d.size() != joints)
      throw Error(ErrorKind::JointCountMismatch, "sample " + std::to_string(i) + " has wrong joint count");
    for (std::size_t j = 0; j < joints; ++j)
      for (int c = 0; c < 3; ++c) data[i * dim + 3 * j + c] = samples[i].pose3d.joints[j][c];
  }
  auto row = [&](std::size_t i) { return &data[i * dim]; };
  const std::size_t kk = static_cast<std::size_t>(k);

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<double> centers(kk * dim);
  std::vector<char> chosen(n, 0);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  for (std::size_t c = 0; c < kk; ++c) {
    std::size_t pick = first;
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += d2[i];
      if (total > 0.0) {
        const double r = rng.unit() * total;
        double cum = 0.0;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (d2[i] <= 0.0) continue;
          cum += d2[i];
          pick = i;
          if (cum > r) break;
        }
      } else {
        pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
      }
    }
    chosen[pick] = 1;
    std::copy(row(pick), row(pick) + dim, &centers[c * dim]);
    parallel_for(n, opts.workers, [&](std::size_t i) {
      d2[i] = std::min(d2[i], sq_dist(row(i), &centers[c * dim], dim));
    });
  }

  ClusterResult res;
  res.assignment.assign(n, -1);
  std::vector<int> next(n);
  std::vector<double> point_cost(n);

  auto assign = [&](std::vector<int>& out) {
    parallel_for(n, opts.workers, [&](std::size_t i) {
      int best = 0;
      double best_d = sq_dist(row(i), &centers[0], dim);
      for (std::size_t c = 1; c < kk; ++c) {
        const double d = sq_dist(row(i), &centers[c * dim], dim);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      out[i] = best;
      point_cost[i] = best_d;
    });
  };

  for (int iter = 1; iter <= std::max(opts.max_iterations, 1); ++iter) {
    assign(next);
    const bool changed = next != res.assignment;
    if (!changed) {
      res.fixed_point = true;
      break;
    }
    res.assignment = next;

    // Re-seed empty clusters from the worst-served point of a cluster that
    // can spare one.
    std::vector<int> counts(kk, 0);
    for (int a : res.assignment) ++counts[a];
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] > 0) continue;
      std::size_t worst = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[res.assignment[i]] <= 1) continue;
        if (worst == n || point_cost[i] > point_cost[worst]) worst = i;
      }
      --counts[res.assignment[worst]];
      res.assignment[worst] = static_cast<int>(c);
      counts[c] = 1;
      point_cost[worst] = 0.0;
      std::copy(row(worst), row(worst) + dim, &centers[c * dim]);
    }

    // Update: each cluster sums its members in index order.
    std::vector<std::vector<std::size_t>> members(kk);
    for (std::size_t i = 0; i < n; ++i) members[res.assignment[i]].push_back(i);
    parallel_for(kk, opts.workers, [&](std::size_t c) {
      double* ctr = &centers[c * dim];
      std::fill(ctr, ctr + dim, 0.0);
      for (std::size_t i : members[c])
        for (std::size_t d = 0; d < dim; ++d) ctr[d] += row(i)[d];
      for (std::size_t d = 0; d < dim; ++d) ctr[d] /= static_cast<double>(members[c].size());
    });

    parallel_for(n, opts.workers, [&](std::size_t i) {
      point_cost[i] = sq_dist(row(i), &centers[res.assignment[i] * dim], dim);
    });
    double objective = 0.0;
    for (double v : point_cost) objective += v;
    res.iterations = iter;
    const double prev = res.objective_history.empty() ? std::numeric_limits<double>::infinity()
                                                      : res.objective_history.back();
    res.objective_history.push_back(objective);
    res.objective = objective;
    if (objective == 0.0) break;
    if (std::isfinite(prev) && prev - objective <= opts.relative_tolerance * prev) break;
  }
  if (!res.fixed_point) {
    assign(next);
    res.fixed_point = next == res.assignment;
  }

  res.classes.resize(kk);
  for (std::size_t c = 0; c < kk; ++c) {
    PoseClass& pc = res.classes[c];
    pc.id = static_cast<int>(c);
    pc.centroid3d.joints.resize(joints);
    for (std::size_t j = 0; j < joints; ++j)
      pc.centroid3d.joints[j] = Vec3(centers[c * dim + 3 * j], centers[c * dim + 3 * j + 1], centers[c * dim + 3 * j + 2]);
    pc.centroid2d.joints.assign(joints, Vec2::Zero());
    pc.centroid2d.visible.assign(joints, false);
  }
  std::vector<std::vector<int>> vis_count(kk, std::vector<int>(joints, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const int c = res.assignment[i];
    ++res.classes[c].member_count;
    for (std::size_t j = 0; j < joints; ++j) {
      if (!samples[i].pose2d.visible[j]) continue;
      res.classes[c].centroid2d.joints[j] += samples[i].pose2d.joints[j];
      ++vis_count[c][j];
    }
  }
  for (std::size_t c = 0; c < kk; ++c)
    for (std::size_t j = 0; j < joints; ++j)
      if (vis_count[c][j] > 0) {
        res.classes[c].centroid2d.joints[j] /= static_cast<double>(vis_count[c][j]);
        res.classes[c].centroid2d.visible[j] = true;
      }
  return res;
}

std::pair<Pose3D, Pose2D> decode_top_class(std::span<const double> scores, std::span<const PoseClass> classes) {
  if (scores.size() != classes.size() || classes.empty())
    throw Error(ErrorKind::InvalidArgument, "scores must have one entry per class");
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return {classes[best].centroid3d, classes[best].centroid2d};
}

std::vector<Hypothesis> top_k_hypotheses(std::span<const double> scores, std::span<const PoseClass> classes, int k) {
  if (scores.size() != classes.size())
    throw Error(ErrorKind::InvalidArgument, "scores must have one entry per class");
  if (k < 0 || static_cast<std::size_t>(k) > classes.size())
    throw Error(ErrorKind::InvalidArgument, "k exceeds the number of classes");
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Hypothesis> out;
  for (int r = 0; r < k; ++r) out.push_back({classes[order[r]].id, scores[order[r]], &classes[order[r]]});
  return out;
}

std::vector<double> baseline_scores(const Pose3D& pose, std::span<const PoseClass> classes, double tau_mm) {
  if (classes.empty()) throw Error(ErrorKind::InvalidArgument, "no classes");
  std::vector<double> out;
  out.reserve(classes.size());
  for (const auto& c : classes) {
    if (c.centroid3d.size() != pose.size()) throw Error(ErrorKind::JointCountMismatch, "pose/class size mismatch");
    double d = 0.0;
    for (std::size_t j = 0; j < pose.size(); ++j) d += (pose.joints[j] - c.centroid3d.joints[j]).norm();
    d /= static_cast<double>(pose.size());
    out.push_back(std::exp(-d * d / (tau_mm * tau_mm)));
  }
  return out;
}

std::vector<double> baseline_scores(const Pose2D& pose, std::span<const PoseClass> classes, double tau_px) {
  if (classes.empty()) throw Error(ErrorKind::InvalidArgument, "no classes");
  std::vector<double> out;
  out.reserve(classes.size());
  for (const auto& c : classes) {
    if (c.centroid2d.size() != pose.size()) throw Error(ErrorKind::JointCountMismatch, "pose/class size mismatch");
    double d = 0.0;
    int used = 0;
    for (std::size_t j = 0; j < pose.size(); ++j) {
      if (!pose.visible[j] || !c.centroid2d.visible[j]) continue;
      d += (pose.joints[j] - c.centroid2d.joints[j]).norm();
      ++used;
    }
    d = used > 0 ? d / used : std::numeric_limits<double>::infinity();
    out.push_back(std::exp(-d * d / (tau_px * tau_px)));
  }
  return out;
}

}  // namespace posesynth
