#include "posesynth/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <unordered_map>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace posesynth {

namespace {

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b || a == 0)
    throw Error(ErrorKind::JointCountMismatch, std::to_string(a) + " vs " + std::to_string(b) + " joints");
}

Eigen::Matrix3Xd as_matrix(const Pose3D& p) {
  Eigen::Matrix3Xd m(3, p.size());
  for (std::size_t k = 0; k < p.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = p.joints[k];
  return m;
}

double mean_distance(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b) {
  return (a - b).colwise().norm().mean();
}

bool collinear(const Eigen::Matrix3Xd& centered) {
  const Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(centered);
  const auto sv = svd.singularValues();
  return !(sv(0) > 0.0) || sv(1) <= 1e-9 * sv(0);
}

}  // namespace

double mpjpe_abs(const Pose3D& pred, const Pose3D& gt, const Skeleton& s) {
  require_same_size(pred.size(), gt.size());
  require_same_size(pred.size(), s.size());
  const Vec3 cp = torso_center(pred, s), cg = torso_center(gt, s);
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) sum += ((pred.joints[k] - cp) - (gt.joints[k] - cg)).norm();
  return sum / static_cast<double>(pred.size());
}

Alignment align_poses(const Pose3D& pred, const Pose3D& gt, AlignMode mode) {
  require_same_size(pred.size(), gt.size());
  const Eigen::Matrix3Xd x = as_matrix(pred), y = as_matrix(gt);
  const Vec3 mx = x.rowwise().mean(), my = y.rowwise().mean();
  const Eigen::Matrix3Xd xc = x.colwise() - mx, yc = y.colwise() - my;
  if (pred.size() < 3 || collinear(yc) || collinear(xc))
    throw Error(ErrorKind::Degenerate, "alignment needs 3 non-collinear joints");

  const Eigen::Matrix3d cov = yc * xc.transpose() / static_cast<double>(pred.size());
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sign = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sign(2) = -1.0;

  Alignment a;
  a.rotation = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  if (mode == AlignMode::Similarity) {
    const double var_x = xc.squaredNorm() / static_cast<double>(pred.size());
    a.scale = svd.singularValues().dot(sign) / var_x;
  }
  a.translation = my - a.scale * a.rotation * mx;
  return a;
}

double mpjpe_aligned(const Pose3D& pred, const Pose3D& gt, AlignMode mode) {
  const Alignment a = align_poses(pred, gt, mode);
  const Eigen::Matrix3Xd moved = (a.scale * a.rotation * as_matrix(pred)).colwise() + a.translation;
  return mean_distance(moved, as_matrix(gt));
}

std::vector<int> joint_groups(const Skeleton& s) {
  static const std::vector<std::pair<const char*, int>> keys = {
      {"ankle", 0}, {"foot", 0}, {"knee", 1}, {"hip", 2}, {"wrist", 3}, {"hand", 3},
      {"elbow", 4}, {"shoulder", 5}, {"head", 6}, {"neck", 6}, {"nose", 6}};
  std::vector<int> out(s.size(), -1);
  for (std::size_t k = 0; k < s.size(); ++k)
    for (const auto& [key, group] : keys)
      if (s.joints[k].find(key) != std::string::npos) {
        out[k] = group;
        break;
      }
  return out;
}

PixelError pixel_error(const Pose2D& pred, const Pose2D& gt, const Skeleton& s) {
  require_same_size(pred.size(), gt.size());
  require_same_size(pred.size(), s.size());
  const std::vector<int> groups = joint_groups(s);
  PixelError out;
  std::array<double, kJointGroups.size()> sums{};
  std::array<int, kJointGroups.size()> counts{};
  double total = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!pred.visible[k] || !gt.visible[k]) continue;
    const double d = (pred.joints[k] - gt.joints[k]).norm();
    total += d;
    ++used;
    if (groups[k] >= 0) {
      sums[groups[k]] += d;
      ++counts[groups[k]];
    }
  }
  if (used == 0) throw Error(ErrorKind::InvalidArgument, "no joint visible in both poses");
  out.mean = total / used;
  for (std::size_t g = 0; g < kJointGroups.size(); ++g)
    out.groups[g] = counts[g] > 0 ? sums[g] / counts[g] : std::numeric_limits<double>::quiet_NaN();
  return out;
}

EvalReport run_protocol(std::span<const PoseSample> predictions, std::span<const PoseSample> ground_truth,
                        std::size_t stride, const std::string& label, const Skeleton& s) {
  if (stride == 0) throw Error(ErrorKind::InvalidArgument, "stride must be >= 1");
  std::unordered_map<std::string, const PoseSample*> by_id;
  for (const auto& p : predictions) by_id.emplace(p.id, &p);

  std::vector<const PoseSample*> evaluated;
  std::string missing;
  for (std::size_t i = 0; i < ground_truth.size(); i += stride) {
    evaluated.push_back(&ground_truth[i]);
    if (!by_id.count(ground_truth[i].id)) missing += (missing.empty() ? "" : ",") + ground_truth[i].id;
  }
  if (!missing.empty()) throw Error(ErrorKind::MissingPrediction, missing);

  EvalReport rep;
  rep.label = label;
  rep.joint_count = s.size();
  double px_sum = 0.0;
  std::size_t px_n = 0;
  for (const PoseSample* g : evaluated) {
    const PoseSample& p = *by_id.at(g->id);
    SampleErrors e;
    e.id = g->id;
    e.abs_mm = mpjpe_abs(p.pose3d, g->pose3d, s);
    e.rigid_mm = mpjpe_aligned(p.pose3d, g->pose3d, AlignMode::Rigid);
    e.similarity_mm = mpjpe_aligned(p.pose3d, g->pose3d, AlignMode::Similarity);
    if (p.pose2d && g->pose2d) {
      e.px = pixel_error(*p.pose2d, *g->pose2d, s);
      px_sum += e.px->mean;
      ++px_n;
    }
    rep.mean_abs_mm += e.abs_mm;
    rep.mean_rigid_mm += e.rigid_mm;
    rep.mean_similarity_mm += e.similarity_mm;
    rep.samples.push_back(std::move(e));
  }
  if (!rep.samples.empty()) {
    const double n = static_cast<double>(rep.samples.size());
    rep.mean_abs_mm /= n;
    rep.mean_rigid_mm /= n;
    rep.mean_similarity_mm /= n;
  }
  if (px_n > 0) rep.mean_px = px_sum / static_cast<double>(px_n);
  return rep;
}

void write_report_csv(std::ostream& os, const EvalReport& report) {
  os << "id,abs_mm,rigid_mm,similarity_mm,px";
  for (const char* g : kJointGroups) os << ",px_" << g;
  os << '\n';
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << std::fixed << std::setprecision(6);
  for (const auto& e : report.samples) {
    os << e.id << ',' << e.abs_mm << ',' << e.rigid_mm << ',' << e.similarity_mm << ',';
    if (e.px) os << e.px->mean;
    for (double g : e.px ? e.px->groups : std::array<double, kJointGroups.size()>{}) {
      os << ',';
      if (e.px && !std::isnan(g)) os << g;
    }
    os << '\n';
  }
  os.flags(old_flags);
  os.precision(old_prec);
}

}  // namespace posesynth
