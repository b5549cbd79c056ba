// Acceptance checks, one PASS/FAIL line per criterion. Usage: acceptance [work_dir]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <Eigen/Geometry>

#include "../support.hpp"
#include "posesynth/blending.hpp"
#include "posesynth/clustering.hpp"
#include "posesynth/commands.hpp"
#include "posesynth/dataset_io.hpp"
#include "posesynth/evaluation.hpp"
#include "posesynth/mocap_prep.hpp"
#include "posesynth/mosaic.hpp"
#include "posesynth/pipeline.hpp"
#include "posesynth/retrieval.hpp"
#include "posesynth/stick_corpus.hpp"

using namespace posesynth;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kSelfHullFraction = 0.99;
constexpr int kSelfLsb = 1;
constexpr double kSelfSeconds = 5.0;
constexpr double kPinTol = 1e-6;
constexpr double kVertexTol = 1e-6;
constexpr double kBarycenterTol = 1e-6;
constexpr double kUnityTol = 1e-6;
constexpr double kRigidZeroMm = 1e-6;
constexpr double kGridOracleMm = 2.0;
constexpr double kE2eSeconds = 120.0;
constexpr double kReprojPx = 1e-3;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
  return Eigen::AngleAxisd(rng.uniform(-std::numbers::pi, std::numbers::pi), axis).toRotationMatrix();
}

Camera random_camera(Rng& rng) { return {rng.uniform(0, 360), rng.uniform(-45, 45), 5000, 1100}; }

double cross(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
}

/// Pixel centers inside the convex hull (gift wrapping) of the pose.
std::vector<std::pair<int, int>> hull_pixels(const Pose2D& p, int canvas) {
  std::vector<Vec2> pts = p.joints;
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  std::vector<Vec2> hull;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t base = hull.size();
    for (const auto& q : pts) {
      while (hull.size() >= base + 2 && cross(hull[hull.size() - 2], hull.back(), q) <= 0) hull.pop_back();
      hull.push_back(q);
    }
    hull.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < canvas; ++y)
    for (int x = 0; x < canvas; ++x) {
      bool inside = true;
      for (std::size_t k = 0; k < hull.size() && inside; ++k)
        inside = cross(hull[k], hull[(k + 1) % hull.size()], Vec2(x, y)) >= 0;
      if (inside) out.emplace_back(x, y);
    }
  return out;
}

Outcome self_synthesis() {
  const Skeleton s = default_skeleton();
  SynthConfig cfg;
  std::vector<AnnotatedImage> corpus = generate_stick_corpus(100, s, cfg.canvas, 21);
  const Pose3D pose = generate_mocap(1, s, 21)[0].pose;
  const Camera cam{75, 15, 5000, 1100};
  const QueryPose q = make_query(pose, cam, s, cfg.canvas, cfg.margin);
  corpus.insert(corpus.begin() + 37, {"self", render_stick_figure(q.pose2d, s, cfg.canvas, cfg.canvas, 5), q.pose2d});

  const auto t0 = Clock::now();
  const RetrievalIndex index = RetrievalIndex::build(corpus);
  const Synthesis out = synthesize(pose, cam, s, index, corpus, cfg);
  const double secs = seconds_since(t0);

  Outcome o;
  int self_matches = 0;
  double worst = 0.0;
  for (const auto& m : out.matches) {
    self_matches += m.source_id == "self";
    worst = std::max(worst, m.distance);
  }
  const auto hull = hull_pixels(q.pose2d, cfg.canvas);
  std::size_t good = 0;
  for (const auto& [x, y] : hull) {
    bool ok = true;
    for (int c = 0; c < 3; ++c) ok &= std::abs(out.image.at(x, y)[c] - corpus[37].pixels.at(x, y)[c]) <= kSelfLsb;
    good += ok;
  }
  const double frac = hull.empty() ? 0.0 : static_cast<double>(good) / hull.size();
  o.pass = self_matches == static_cast<int>(s.size()) && worst == 0.0 && frac >= kSelfHullFraction &&
           secs < kSelfSeconds;
  o.detail = fmt("%d/%zu joints retrieve the source, max D_j=%g, hull match %.4f of %zu px, %.2fs", self_matches,
                 s.size(), worst, frac, hull.size(), secs);
  return o;
}

Outcome oracle_equivalence() {
  const Skeleton s = default_skeleton();
  const auto corpus = generate_stick_corpus(500, s, 220, 22);
  const RetrievalIndex index = RetrievalIndex::build(corpus);
  Rng rng(22);
  int mismatches = 0, oracle_mismatches = 0, joints = 0;
  for (int t = 0; t < 200; ++t) {
    const Pose3D pose = generate_mocap(1, s, rng.next())[0].pose;
    const QueryPose q = make_query(pose, random_camera(rng), s, 220, 10);
    const auto fast = index.query(q, s);
    const auto brute = retrieve_matches(q, corpus, s);
    if (fast.size() != brute.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t k = 0; k < fast.size(); ++k) {
      ++joints;
      mismatches += fast[k].source_index != brute[k].source_index || fast[k].distance != brute[k].distance;
      // Independent straight-line scan.
      const int j = brute[k].joint;
      double best = 1e300;
      for (const auto& c : corpus) best = std::min(best, testsupport::oracle_distance(q.pose2d, c.pose, j, s));
      const double got = testsupport::oracle_distance(q.pose2d, corpus[brute[k].source_index].pose, j, s);
      oracle_mismatches += got > best + 1e-9 * std::max(1.0, best);
    }
  }
  Outcome o;
  o.pass = mismatches == 0 && oracle_mismatches == 0 && joints == 200 * static_cast<int>(s.size());
  o.detail = fmt("200 queries x 500 entries: %d index/scan mismatches, %d scan/oracle mismatches over %d joints",
                 mismatches, oracle_mismatches, joints);
  return o;
}

Outcome distance_properties() {
  const Skeleton s = default_skeleton();
  Rng rng(23);
  double self_max = 0.0, sim_max = 0.0, pin_max = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Pose2D p = testsupport::random_pose2d(rng, s.size());
    const int j = static_cast<int>(rng.below(s.size()));
    self_max = std::max(self_max, conditioned_distance(p, p, j, s).distance);

    const Transform2D sim{rng.uniform(-3, 3), rng.uniform(0.3, 3.0), Vec2(rng.uniform(-200, 200), rng.uniform(-200, 200))};
    sim_max = std::max(sim_max, conditioned_distance(p, sim.apply(p), j, s).distance);

    const Pose2D q = testsupport::random_pose2d(rng, s.size());
    const int i = farthest_connected_joint(s, p, j);
    const Transform2D a = alignment_transform(p, q, j, i);
    pin_max = std::max({pin_max, (a.apply(q.joints[j]) - p.joints[j]).norm(), (a.apply(q.joints[i]) - p.joints[i]).norm()});
  }
  Outcome o;
  o.pass = self_max == 0.0 && sim_max < 1e-6 && pin_max < kPinTol;
  o.detail = fmt("1000 trials: max D_j(p,p)=%g, max D_j(p,sim(p))=%g, max pin error %g px", self_max, sim_max, pin_max);
  return o;
}

Outcome probability_maps() {
  Rng rng(24);
  const double sigma = 15.0;
  double vertex_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::vector<Vec2> pts;
    for (int k = 0; k < 13; ++k) pts.emplace_back(static_cast<double>(20 + rng.below(180)), static_cast<double>(20 + rng.below(180)));
    AnnotatedImage src{"src", RgbImage(220, 220), Pose2D(pts)};
    const WarpedCandidate cand = warp_image(src, Transform2D::identity(), 220);
    QueryPose qp;
    qp.pose2d = cand.aligned_pose;
    for (auto& j : qp.pose2d.joints) j += Vec2(rng.normal(), rng.normal()) * 12.0;
    const ProbabilityMap pm = probability_map(cand, qp, sigma);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double d2 = (pts[k] - qp.pose2d.joints[k]).squaredNorm();
      bool shared = false;  // duplicated positions carry more than one value
      for (std::size_t m = 0; m < pts.size(); ++m) shared |= m != k && pts[m] == pts[k];
      if (!shared)
        vertex_err = std::max(vertex_err, std::abs(pm.values(static_cast<int>(pts[k].x()), static_cast<int>(pts[k].y())) -
                                                   std::exp(-d2 / (sigma * sigma))));
    }
  }

  const std::vector<Vec2> tri = {{0, 0}, {30, 0}, {0, 30}};
  const std::vector<double> vals = {1.0, 0.5, 0.25};
  const Raster<double> r = rasterize_barycentric(tri, vals, std::vector<Triangle>{{0, 1, 2}}, 40, 40);
  const double barycenter = r(10, 10);
  const double expected = (1.0 + 0.5 + 0.25) / 3.0;

  int violations = 0;
  for (int set = 0; set < 50; ++set) {
    const int n = 3 + static_cast<int>(rng.below(10));
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(rng.uniform(0, 220), rng.uniform(0, 220));
    for (const auto& t : delaunay(pts)) {
      const Vec2 &a = pts[t[0]], &b = pts[t[1]], &c = pts[t[2]];
      const double d = 2 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) + c.x() * (a.y() - b.y()));
      const Vec2 center((a.squaredNorm() * (b.y() - c.y()) + b.squaredNorm() * (c.y() - a.y()) + c.squaredNorm() * (a.y() - b.y())) / d,
                        (a.squaredNorm() * (c.x() - b.x()) + b.squaredNorm() * (a.x() - c.x()) + c.squaredNorm() * (b.x() - a.x())) / d);
      const double rad = (a - center).norm();
      for (int k = 0; k < n; ++k)
        if (k != t[0] && k != t[1] && k != t[2]) violations += (pts[k] - center).norm() < rad - 1e-9 * std::max(1.0, rad);
    }
  }
  Outcome o;
  o.pass = vertex_err < kVertexTol && std::abs(barycenter - expected) < kBarycenterTol && violations == 0;
  o.detail = fmt("max vertex error %g, barycenter %.6f (expect %.6f), %d circumcircle violations in 50 sets", vertex_err,
                 barycenter, expected, violations);
  return o;
}

Outcome blending() {
  const Skeleton s = default_skeleton();
  SynthConfig cfg;
  const auto corpus = generate_stick_corpus(150, s, cfg.canvas, 25, 0.1);
  const RetrievalIndex index = RetrievalIndex::build(corpus);
  const auto mocap = generate_mocap(20, s, 25);
  Rng rng(25);
  double unity_err = 0.0;
  int onehot_bad = 0, convex_bad = 0;
  for (const auto& m : mocap) {
    const Synthesis syn = synthesize(m.pose, random_camera(rng), s, index, corpus, cfg);
    const int n = static_cast<int>(syn.candidates.size());
    const BlendWeights w = blend_weights(syn.index, syn.query, s, cfg.blend, n);
    for (int y = 0; y < cfg.canvas; ++y)
      for (int x = 0; x < cfg.canvas; ++x) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += w(x, y, j);
        unity_err = std::max(unity_err, std::abs(sum - 1.0));
        for (int c = 0; c < 3; ++c) {
          int lo = 255, hi = 0;
          for (int j = 0; j < n; ++j)
            if (w(x, y, j) > 0) {
              lo = std::min<int>(lo, syn.candidates[j].image.at(x, y)[c]);
              hi = std::max<int>(hi, syn.candidates[j].image.at(x, y)[c]);
            }
          const int v = syn.image.at(x, y)[c];
          convex_bad += v < lo || v > hi;
        }
      }
    BlendWeights onehot = w;
    std::fill(onehot.values.begin(), onehot.values.end(), 0.0);
    for (int y = 0; y < cfg.canvas; ++y)
      for (int x = 0; x < cfg.canvas; ++x)
        onehot.values[(static_cast<std::size_t>(y) * cfg.canvas + x) * n + syn.index.indices(x, y)] = 1.0;
    onehot_bad += !(blend(syn.candidates, onehot) == compose_mosaic(syn.candidates, syn.index));
  }
  Outcome o;
  o.pass = unity_err <= kUnityTol && onehot_bad == 0 && convex_bad == 0;
  o.detail = fmt("20 syntheses: max |sum w - 1| = %g, one-hot mismatches %d, convex-bound violations %d", unity_err,
                 onehot_bad, convex_bad);
  return o;
}

Outcome metrics() {
  const Skeleton s = default_skeleton();
  Rng rng(26);
  double rigid_max = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Pose3D gt = testsupport::random_pose3d(rng, s.size());
    Pose3D pred = gt;
    const Eigen::Matrix3d r = random_rotation(rng);
    const Vec3 tr(rng.uniform(-2000, 2000), rng.uniform(-2000, 2000), rng.uniform(-2000, 2000));
    for (auto& j : pred.joints) j = r * j + tr;
    rigid_max = std::max(rigid_max, mpjpe_aligned(pred, gt, AlignMode::Rigid));
  }
  const Pose3D gt = testsupport::random_pose3d(rng, s.size());
  Pose3D scaled = gt;
  for (auto& j : scaled.joints) j *= 1.5;
  const double sim_scaled = mpjpe_aligned(scaled, gt, AlignMode::Similarity);
  const double rigid_scaled = mpjpe_aligned(scaled, gt, AlignMode::Rigid);

  int order_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const Pose3D a = testsupport::random_pose3d(rng, s.size());
    const Pose3D b = testsupport::random_pose3d(rng, s.size());
    const double abs = mpjpe_abs(a, b, s);
    order_bad += mpjpe_aligned(a, b, AlignMode::Rigid) > abs + 1e-9 || mpjpe_aligned(a, b, AlignMode::Similarity) > abs + 1e-9;
  }

  double grid_max = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Pose3D g = testsupport::random_pose3d(rng, s.size(), 400);
    Pose3D pred = g;
    const Eigen::Matrix3d r = random_rotation(rng);
    for (auto& j : pred.joints) j = r * j + Vec3(100, -50, 20) + Vec3(rng.normal(), rng.normal(), rng.normal()) * 30.0;
    grid_max = std::max(grid_max, std::abs(mpjpe_aligned(pred, g, AlignMode::Rigid) - testsupport::grid_rigid_error(pred, g)));
  }
  Outcome o;
  o.pass = rigid_max < kRigidZeroMm && sim_scaled < kRigidZeroMm && rigid_scaled > 0.0 && order_bad == 0 &&
           grid_max < kGridOracleMm;
  o.detail = fmt("rigid copies max %g mm; scale 1.5: similarity %g, rigid %.3f mm; aligned>abs in %d/1000; grid oracle max diff %.4f mm",
                 rigid_max, sim_scaled, rigid_scaled, order_bad, grid_max);
  return o;
}

Outcome clustering(const fs::path& work) {
  const Skeleton s = default_skeleton();
  Rng rng(27);
  std::vector<ClusterSample> samples;
  for (const auto& m : generate_mocap(500, s, 27)) {
    const OrientedPose op = orient_and_center(m.pose, Camera{}, s);
    samples.push_back({op.pose3d, normalize_crop(project(op), 220, 10).pose2d});
  }
  const ClusterResult r = cluster_poses(samples, 24, 3);
  int increases = 0;
  for (std::size_t i = 1; i < r.objective_history.size(); ++i)
    increases += r.objective_history[i] > r.objective_history[i - 1];

  const Pose3D a = testsupport::random_pose3d(rng, s.size(), 200);
  std::vector<ClusterSample> bundles;
  for (int i = 0; i < 100; ++i) {
    Pose3D p = a;
    for (auto& j : p.joints) j += Vec3(i % 2 ? 500.0 : 0.0, 0, 0) + Vec3(rng.normal(), rng.normal(), rng.normal()) / std::sqrt(3.0);
    bundles.push_back({p, Pose2D(std::vector<Vec2>(s.size(), Vec2(1, 1)))});
  }
  const ClusterResult b = cluster_poses(bundles, 2, 4);
  int misassigned = 0;
  for (std::size_t i = 0; i < bundles.size(); ++i) misassigned += b.assignment[i] != b.assignment[i % 2];
  misassigned += b.assignment[0] == b.assignment[1] ? 100 : 0;

  write_mocap(work / "cluster_mocap", generate_mocap(2000, s, 28));
  ClusterOptions co;
  co.poses = work / "cluster_mocap";
  co.k = 32;
  co.seed = 5;
  co.out = work / "clusters_w1";
  const int rc1 = run_cluster(co).exit_code;
  co.workers = 8;
  co.out = work / "clusters_w8";
  const int rc8 = run_cluster(co).exit_code;
  const bool identical = rc1 == 0 && rc8 == 0 && slurp(work / "clusters_w1") == slurp(work / "clusters_w8");

  Outcome o;
  o.pass = increases == 0 && misassigned == 0 && identical;
  o.detail = fmt("%zu iterations with %d objective increases; two-bundle misassignments %d; 1 vs 8 workers model files %s",
                 r.objective_history.size(), increases, misassigned, identical ? "identical" : "differ");
  return o;
}

Outcome end_to_end(const fs::path& work) {
  GenCorpusOptions gen;
  gen.out = work / "corpus";
  gen.count = 100;
  gen.canvas = 220;
  gen.seed = 8;
  gen.mocap_out = work / "mocap";
  gen.mocap_count = 50;
  Outcome o;
  if (run_gen_test_corpus(gen).exit_code != kExitOk) return {false, "gen-test-corpus failed"};

  SynthOptions so;
  so.corpus = work / "corpus" / "manifest";
  so.mocap = work / "mocap";
  so.cameras_per_pose = 2;
  so.workers = 4;
  so.out = work / "synth_a";
  const auto t0 = Clock::now();
  const int rc = run_synth(so).exit_code;
  const double secs = seconds_since(t0);
  so.out = work / "synth_b";
  const int rc2 = run_synth(so).exit_code;
  if (rc != kExitOk || rc2 != kExitOk) return {false, "synth failed"};

  const SynthManifest m = read_synth_manifest(work / "synth_a" / "manifest");
  const auto bad = validate_synth(m, default_skeleton(), kReprojPx);
  bool identical = slurp(work / "synth_a" / "manifest") == slurp(work / "synth_b" / "manifest");
  for (const auto& r : m.records) identical &= slurp(work / "synth_a" / r.image) == slurp(work / "synth_b" / r.image);
  o.pass = m.records.size() == 100 && secs < kE2eSeconds && bad.empty() && identical;
  o.detail = fmt("%zu records in %.1fs on 4 workers, %zu reprojection failures, re-run %s", m.records.size(), secs,
                 bad.size(), identical ? "byte-identical" : "differs");
  return o;
}

Outcome mirroring(const fs::path& work) {
  const Skeleton s = default_skeleton();
  const fs::path manifest = work / "corpus" / "manifest";
  if (!fs::exists(manifest)) {
    GenCorpusOptions gen;
    gen.out = work / "corpus";
    run_gen_test_corpus(gen);
  }
  MirrorOptions mo{manifest, work / "mirrored"};
  const int rc = run_mirror(mo).exit_code;
  const CorpusManifest orig = read_corpus_manifest(manifest);
  const CorpusManifest doubled = read_corpus_manifest(work / "mirrored" / "manifest");

  const auto corpus = load_corpus(manifest, orig);
  int pose_bad = 0, image_bad = 0;
  for (const auto& a : corpus) {
    const AnnotatedImage twice = mirror_image(mirror_image(a, s), s);
    pose_bad += !(twice.pose == a.pose) || twice.id != a.id;
    image_bad += !(twice.pixels == a.pixels);
  }
  Outcome o;
  o.pass = rc == kExitOk && doubled.records.size() == 2 * orig.records.size() && pose_bad == 0 && image_bad == 0;
  o.detail = fmt("%zu -> %zu records; double mirror: %d pose and %d image mismatches", orig.records.size(),
                 doubled.records.size(), pose_bad, image_bad);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "posesynth_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"self-synthesis fidelity", self_synthesis},
      {"accelerated retrieval equals exhaustive scan", oracle_equivalence},
      {"conditioned distance and alignment properties", distance_properties},
      {"probability maps and triangulation", probability_maps},
      {"blending weights and output", blending},
      {"pose error metrics", metrics},
      {"clustering", [&] { return clustering(work); }},
      {"end-to-end desk-scale synthesis", [&] { return end_to_end(work); }},
      {"mirroring", [&] { return mirroring(work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
