#include "posesynth/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "posesynth/clustering.hpp"
#include "posesynth/dataset_io.hpp"
#include "posesynth/evaluation.hpp"
#include "posesynth/image_io.hpp"
#include "posesynth/pipeline.hpp"
#include "posesynth/random.hpp"
#include "posesynth/stick_corpus.hpp"

namespace posesynth {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::mutex g_log_mutex;

void log(const std::string& msg) {
  std::lock_guard lock(g_log_mutex);
  std::cerr << msg << '\n';
}

Skeleton load_skeleton_or_default(const fs::path& p) {
  if (p.empty()) return default_skeleton();
  Skeleton s = read_skeleton(p);
  const auto problems = validate_skeleton(s);
  if (!problems.empty()) throw Error(ErrorKind::InvalidArgument, "skeleton: " + problems.front());
  return s;
}

/// Skeleton referenced by a corpus manifest, copied next to `out_dir` when it
/// is not the default. Returns the reference to store in the new manifest.
std::string carry_skeleton(const fs::path& manifest, const std::string& ref, const fs::path& out_dir) {
  if (ref.empty()) return {};
  write_skeleton(out_dir / "skeleton.json", resolve_skeleton(manifest.parent_path(), ref));
  return "skeleton.json";
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
  std::string line;
  std::getline(in, line);
  return line;
}

struct SynthItem {
  std::string id;
  std::size_t pose;  // index into the MoCap list
  Camera camera;
};

int nearest_class(const Pose3D& p, const std::vector<PoseClass>& classes) {
  int best = -1;
  double best_d = 0.0;
  for (const auto& c : classes) {
    if (c.centroid3d.size() != p.size()) throw Error(ErrorKind::JointCountMismatch, "cluster model joint count");
    double d = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) d += (p.joints[k] - c.centroid3d.joints[k]).squaredNorm();
    if (best < 0 || d < best_d) {
      best = c.id;
      best_d = d;
    }
  }
  return best;
}

/// Lines from every shard whose record parses; a crash can leave a truncated
/// last line, which is dropped.
std::map<std::string, std::string> read_shards(const fs::path& dir) {
  std::map<std::string, std::string> by_id;
  if (!fs::exists(dir)) return by_id;
  std::vector<fs::path> shards;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("manifest.part.", 0) == 0) shards.push_back(e.path());
  std::sort(shards.begin(), shards.end());
  for (const auto& shard : shards) {
    std::ifstream in(shard);
    std::string line;
    while (std::getline(in, line)) {
      try {
        const SynthRecord r = parse_synth_record_line(line);
        by_id.emplace(r.id, line);
      } catch (const Error&) {
      }
    }
  }
  return by_id;
}

void remove_shards(const fs::path& dir) {
  if (!fs::exists(dir)) return;
  std::vector<fs::path> shards;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("manifest.part.", 0) == 0) shards.push_back(e.path());
  for (const auto& p : shards) fs::remove(p);
}

ojson config_json(const SynthOptions& o) {
  const SynthConfig& c = o.config;
  return ojson{{"corpus", fs::absolute(o.corpus).lexically_normal().string()},
               {"mirror_corpus", o.mirror_corpus},
               {"canvas", c.canvas},
               {"margin", c.margin},
               {"sigma", c.sigma},
               {"s_min", c.blend.s_min},
               {"s_max", c.blend.s_max},
               {"alpha", c.blend.alpha},
               {"seed", c.seed},
               {"bound_joints", o.bound_joints}};
}

}  // namespace

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ParseError:
    case ErrorKind::SchemaMismatch:
    case ErrorKind::MissingPrediction:
    case ErrorKind::JointCountMismatch:
    case ErrorKind::UnknownId:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidRange:
      return kExitInvalid;
    default:
      return kExitRuntime;
  }
}

// ---------------------------------------------------------------------------

CommandResult run_gen_test_corpus(const GenCorpusOptions& o) {
  const Skeleton s = load_skeleton_or_default(o.skeleton);
  std::string ref;
  if (!o.skeleton.empty()) {
    fs::create_directories(o.out);
    write_skeleton(o.out / "skeleton.json", s);
    ref = "skeleton.json";
  }
  log("rendering " + std::to_string(o.count) + " stick figures");
  const auto corpus = generate_stick_corpus(o.count, s, o.canvas, o.seed, o.occlusion);
  save_corpus(o.out, corpus, ref);
  CommandResult r;
  r.summary = {{"command", "gen-test-corpus"}, {"images", corpus.size()}, {"manifest", (o.out / "manifest").string()}};
  if (!o.mocap_out.empty()) {
    write_mocap(o.mocap_out, generate_mocap(o.mocap_count, s, o.seed));
    r.summary["mocap_poses"] = o.mocap_count;
    r.summary["mocap"] = o.mocap_out.string();
  }
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_synth(const SynthOptions& o) {
  check_synth_config(o.config);
  if (o.workers < 1) throw Error(ErrorKind::InvalidArgument, "workers must be >= 1");
  if (o.cameras_per_pose < 1) throw Error(ErrorKind::InvalidArgument, "cameras per pose must be >= 1");

  const CorpusManifest cm = read_corpus_manifest(o.corpus);
  const Skeleton s = resolve_skeleton(o.corpus.parent_path(), cm.skeleton);
  std::vector<AnnotatedImage> corpus = load_corpus(o.corpus, cm);
  if (corpus.empty()) throw Error(ErrorKind::InvalidArgument, "corpus is empty");
  if (o.mirror_corpus) corpus = mirror_corpus(corpus, s);
  const RetrievalIndex index = RetrievalIndex::build(corpus, o.bound_joints);
  log("corpus: " + std::to_string(corpus.size()) + " images");

  const std::vector<MocapRecord> mocap = read_mocap(o.mocap);
  for (const auto& m : mocap)
    if (m.pose.size() != s.size())
      throw Error(ErrorKind::JointCountMismatch, "mocap pose " + m.id + " does not match the skeleton");
  std::vector<std::size_t> kept(mocap.size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  if (o.subsample_mm > 0.0) {
    std::vector<Pose3D> poses;
    for (const auto& m : mocap) poses.push_back(m.pose);
    kept = subsample_poses(poses, o.subsample_mm, o.subsample_rule);
  }

  std::optional<std::vector<PoseClass>> classes;
  if (!o.clusters.empty()) classes = read_cluster_model(o.clusters).classes;

  std::vector<SynthItem> items;
  std::vector<Camera> fixed;
  if (!o.cameras.empty()) fixed = read_cameras(o.cameras);
  for (std::size_t i : kept) {
    const std::string& pid = mocap[i].id;
    const std::vector<Camera> cams =
        !fixed.empty() ? fixed
                       : sample_virtual_cameras(o.cameras_per_pose, o.azimuth, o.elevation, o.distance, o.focal,
                                                derive_seed(o.config.seed, pid));
    for (std::size_t c = 0; c < cams.size(); ++c) items.push_back({pid + "_c" + std::to_string(c), i, cams[c]});
  }
  std::unordered_map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!order.emplace(items[i].id, i).second) throw Error(ErrorKind::InvalidArgument, "duplicate item id " + items[i].id);

  fs::create_directories(o.out / "images");
  if (o.keep_intermediates) fs::create_directories(o.out / "intermediates");
  {
    std::ofstream cfg(o.out / "run.json", std::ios::trunc);
    cfg << config_json(o).dump(2) << '\n';
  }

  std::map<std::string, std::string> done;
  if (o.resume) {
    done = read_shards(o.out);
    // Records already merged by an earlier, completed run.
    if (fs::exists(o.out / "manifest")) {
      try {
        for (const auto& r : read_synth_manifest(o.out / "manifest").records) done.emplace(r.id, synth_record_line(r));
      } catch (const Error&) {
      }
    }
    for (auto it = done.begin(); it != done.end();) {
      const bool known = order.count(it->first) && fs::exists(o.out / "images" / (it->first + ".png"));
      it = known ? std::next(it) : done.erase(it);
    }
    log("resuming: " + std::to_string(done.size()) + " items already done");
  }
  remove_shards(o.out);

  const std::size_t nworkers = std::min<std::size_t>(o.workers, std::max<std::size_t>(items.size(), 1));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::atomic<std::size_t> failed{0};
  std::vector<std::string> failures;
  std::mutex failures_mutex;
  std::exception_ptr fatal;
  const auto start = std::chrono::steady_clock::now();

  auto worker = [&](std::size_t w) {
    std::ofstream shard(o.out / ("manifest.part." + std::to_string(w)), std::ios::app);
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      const SynthItem& item = items[i];
      if (done.count(item.id)) {
        ++finished;
        continue;
      }
      try {
        const MocapRecord& m = mocap[item.pose];
        const Synthesis syn = synthesize(m.pose, item.camera, s, index, corpus, o.config);
        SynthRecord rec;
        rec.id = item.id;
        rec.image = "images/" + item.id + ".png";
        rec.pose3d = syn.oriented.pose3d;
        rec.pose2d = syn.query.pose2d;
        rec.camera = item.camera;
        if (classes) rec.class_id = nearest_class(rec.pose3d, *classes);
        for (const auto& match : syn.matches) rec.source_ids.push_back(match.source_id);
        write_png(o.out / rec.image, syn.image);
        if (o.keep_intermediates) write_matches(o.out / "intermediates" / (item.id + ".matches"), syn.matches);
        shard << synth_record_line(rec) << '\n';
        shard.flush();
      } catch (const Error& e) {
        ++failed;
        std::lock_guard lock(failures_mutex);
        failures.push_back(item.id);
        log("item " + item.id + " failed: " + e.what());
      } catch (...) {
        std::lock_guard lock(failures_mutex);
        if (!fatal) fatal = std::current_exception();
        next.store(items.size());
        return;
      }
      const std::size_t f = ++finished;
      if (items.size() >= 10 && f % (items.size() / 10) == 0)
        log("synth: " + std::to_string(f) + "/" + std::to_string(items.size()));
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < nworkers; ++w) pool.emplace_back(worker, w);
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  // Merge: resumed records plus every shard, deduplicated, in item order.
  std::map<std::string, std::string> lines = read_shards(o.out);
  for (auto& [id, line] : done) lines.emplace(id, line);
  std::vector<std::pair<std::size_t, std::string>> ordered;
  for (auto& [id, line] : lines) ordered.emplace_back(order.at(id), std::move(line));
  std::sort(ordered.begin(), ordered.end());
  SynthManifest sm;
  sm.skeleton = carry_skeleton(o.corpus, cm.skeleton, o.out);
  sm.canvas = o.config.canvas;
  sm.margin = o.config.margin;
  for (const auto& [pos, line] : ordered) sm.records.push_back(parse_synth_record_line(line));
  write_synth_manifest(o.out / "manifest", sm);
  remove_shards(o.out);

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CommandResult r;
  std::sort(failures.begin(), failures.end());
  r.summary = {{"command", "synth"},   {"items", items.size()},   {"records", sm.records.size()},
               {"failed", failed.load()}, {"resumed", done.size()}, {"workers", nworkers},
               {"seconds", secs},       {"manifest", (o.out / "manifest").string()}};
  if (static_cast<double>(failed.load()) > o.max_failure_fraction * static_cast<double>(items.size())) {
    r.exit_code = kExitRuntime;
    r.summary["failed_ids"] = failures;
  }
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_cluster(const ClusterOptions& o) {
  std::vector<ClusterSample> samples;
  Skeleton s;
  std::string skeleton_ref;
  if (first_line(o.poses).find(kSynthSchema) != std::string::npos) {
    const SynthManifest sm = read_synth_manifest(o.poses);
    s = resolve_skeleton(o.poses.parent_path(), sm.skeleton);
    for (const auto& r : sm.records) samples.push_back({r.pose3d, r.pose2d});
  } else {
    s = load_skeleton_or_default(o.skeleton);
    const Camera front;
    for (const auto& m : read_mocap(o.poses)) {
      const OrientedPose op = orient_and_center(m.pose, front, s);
      samples.push_back({op.pose3d, normalize_crop(project(op), o.canvas, o.margin).pose2d});
    }
  }
  if (!o.skeleton.empty()) skeleton_ref = fs::absolute(o.skeleton).string();
  require_centered(samples, s, 1e-6);

  KMeansOptions opts;
  opts.max_iterations = o.max_iterations;
  opts.relative_tolerance = o.tolerance;
  opts.workers = o.workers;
  log("clustering " + std::to_string(samples.size()) + " poses into " + std::to_string(o.k) + " classes");
  const ClusterResult cr = cluster_poses(samples, o.k, o.seed, opts);

  ClusterModel m;
  m.skeleton = skeleton_ref;
  m.seed = o.seed;
  m.objective = cr.objective;
  m.iterations = cr.iterations;
  m.classes = cr.classes;
  write_cluster_model(o.out, m);

  std::vector<int> sizes;
  for (const auto& c : cr.classes) sizes.push_back(c.member_count);
  CommandResult r;
  r.summary = {{"command", "cluster"},        {"poses", samples.size()},  {"k", o.k},
               {"objective", cr.objective},   {"iterations", cr.iterations}, {"fixed_point", cr.fixed_point},
               {"sizes", sizes},              {"model", o.out.string()}};
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_eval(const EvalOptions& o) {
  const Skeleton s = load_skeleton_or_default(o.skeleton);
  const auto pred = read_pose_samples(o.predictions);
  const auto gt = read_pose_samples(o.ground_truth);
  const EvalReport rep = run_protocol(pred, gt, o.stride, o.label, s);
  if (!o.out.empty()) {
    if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
    std::ofstream csv(o.out, std::ios::trunc);
    if (!csv) throw Error(ErrorKind::Io, "cannot write " + o.out.string());
    write_report_csv(csv, rep);
  }
  CommandResult r;
  r.summary = {{"command", "eval"},
               {"label", rep.label},
               {"evaluated", rep.samples.size()},
               {"joints", rep.joint_count},
               {"abs_mm", rep.mean_abs_mm},
               {"rigid_mm", rep.mean_rigid_mm},
               {"similarity_mm", rep.mean_similarity_mm}};
  r.summary["px"] = rep.mean_px ? ojson(*rep.mean_px) : ojson(nullptr);
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_mirror(const MirrorOptions& o) {
  const CorpusManifest cm = read_corpus_manifest(o.corpus);
  const Skeleton s = resolve_skeleton(o.corpus.parent_path(), cm.skeleton);
  const auto corpus = load_corpus(o.corpus, cm);
  const auto doubled = mirror_corpus(corpus, s);
  fs::create_directories(o.out);
  save_corpus(o.out, doubled, carry_skeleton(o.corpus, cm.skeleton, o.out));
  CommandResult r;
  r.summary = {{"command", "mirror"}, {"input", corpus.size()}, {"output", doubled.size()},
               {"manifest", (o.out / "manifest").string()}};
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_validate(const ValidateOptions& o) {
  if (o.corpus.empty() && o.synth.empty() && o.skeleton.empty())
    throw Error(ErrorKind::InvalidArgument, "nothing to validate");
  std::vector<std::string> problems;
  if (!o.skeleton.empty())
    for (auto& p : validate_skeleton(read_skeleton(o.skeleton))) problems.push_back("skeleton: " + p);
  std::size_t corpus_records = 0, synth_records = 0;
  if (!o.corpus.empty()) {
    const CorpusManifest cm = read_corpus_manifest(o.corpus);
    corpus_records = cm.records.size();
    const Skeleton s = resolve_skeleton(o.corpus.parent_path(), cm.skeleton);
    for (auto& p : validate_corpus(o.corpus, s, o.check_images)) problems.push_back("corpus: " + p);
  }
  if (!o.synth.empty()) {
    const SynthManifest sm = read_synth_manifest(o.synth);
    synth_records = sm.records.size();
    const Skeleton s = resolve_skeleton(o.synth.parent_path(), sm.skeleton);
    for (auto& p : validate_synth(sm, s, o.tolerance_px)) problems.push_back("synth: " + p);
    std::set<std::string> ids;
    for (const auto& rec : sm.records) {
      if (!ids.insert(rec.id).second) problems.push_back("synth: " + rec.id + ": duplicate id");
      if (!fs::exists(o.synth.parent_path() / rec.image)) problems.push_back("synth: " + rec.id + ": missing image");
    }
  }
  for (const auto& p : problems) log(p);
  CommandResult r;
  r.exit_code = problems.empty() ? kExitOk : kExitInvalid;
  r.summary = {{"command", "validate"},
               {"corpus_records", corpus_records},
               {"synth_records", synth_records},
               {"problems", problems.size()},
               {"valid", problems.empty()}};
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_preview(const PreviewOptions& o) {
  const SynthManifest sm = read_synth_manifest(o.synth);
  const fs::path dir = o.synth.parent_path();
  const auto it = std::find_if(sm.records.begin(), sm.records.end(), [&](const SynthRecord& r) { return r.id == o.id; });
  if (it == sm.records.end()) throw Error(ErrorKind::UnknownId, o.id);
  const fs::path matches_path = dir / "intermediates" / (o.id + ".matches");
  if (!fs::exists(matches_path))
    throw Error(ErrorKind::Io, "no intermediates for " + o.id + "; rerun synth with --keep-intermediates");

  std::ifstream run_in(dir / "run.json");
  if (!run_in) throw Error(ErrorKind::Io, "missing " + (dir / "run.json").string());
  nlohmann::json run;
  try {
    run = nlohmann::json::parse(run_in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, "run.json: " + std::string(e.what()));
  }
  SynthConfig cfg;
  cfg.canvas = run.at("canvas").get<int>();
  cfg.margin = run.at("margin").get<double>();
  cfg.sigma = run.at("sigma").get<double>();
  cfg.blend = {run.at("s_min").get<double>(), run.at("s_max").get<double>(), run.at("alpha").get<double>()};
  const fs::path corpus_path = o.corpus.empty() ? fs::path(run.at("corpus").get<std::string>()) : o.corpus;

  const CorpusManifest cm = read_corpus_manifest(corpus_path);
  const Skeleton s = resolve_skeleton(corpus_path.parent_path(), cm.skeleton);
  std::vector<AnnotatedImage> corpus = load_corpus(corpus_path, cm);
  if (run.value("mirror_corpus", false)) corpus = mirror_corpus(corpus, s);

  const std::vector<Match> matches = read_matches(matches_path);
  QueryPose qp;
  qp.pose2d = it->pose2d;
  std::vector<WarpedCandidate> cands;
  std::vector<ProbabilityMap> maps;
  std::vector<double> distances;
  for (const auto& m : matches) {
    if (m.source_index >= corpus.size() || corpus[m.source_index].id != m.source_id)
      throw Error(ErrorKind::UnknownId, "corpus entry " + m.source_id + " not found at its recorded position");
    cands.push_back(warp_candidate(corpus[m.source_index], m, cfg.canvas));
    maps.push_back(probability_map(cands.back(), qp, cfg.sigma));
    distances.push_back(m.distance);
  }
  const IndexMap im = index_map(maps, distances);
  const RgbImage mosaic = compose_mosaic(cands, im);
  const RgbImage final_image = blend(cands, blend_weights(im, qp, s, cfg.blend, static_cast<int>(cands.size())));

  fs::create_directories(o.out);
  std::vector<std::string> files;
  for (std::size_t j = 0; j < maps.size(); ++j) {
    const std::string name = "prob_" + std::to_string(j) + "_" + s.joints[matches[j].joint] + ".png";
    write_gray_png(o.out / name, maps[j].values);
    files.push_back(name);
  }
  write_indexed_png(o.out / "index_map.png", im.indices, label_palette(static_cast<int>(cands.size())));
  write_png(o.out / "mosaic.png", mosaic);
  write_png(o.out / "overlay.png", draw_overlay(final_image, qp.pose2d, s));
  files.insert(files.end(), {"index_map.png", "mosaic.png", "overlay.png"});

  CommandResult r;
  r.summary = {{"command", "preview"}, {"id", o.id}, {"candidates", cands.size()}, {"files", files},
               {"matches_stored_image", final_image == read_png(dir / it->image)}};
  return r;
}

}  // namespace posesynth
