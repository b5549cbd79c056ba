#include "posesynth/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "posesynth/image_io.hpp"
#include "posesynth/mocap_prep.hpp"

namespace posesynth {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// --- value encodings -------------------------------------------------------

ojson encode(const Pose2D& p) {
  ojson a = ojson::array();
  for (const auto& j : p.joints) a.push_back({j.x(), j.y()});
  return a;
}

ojson encode_vis(const Pose2D& p) {
  ojson a = ojson::array();
  for (bool v : p.visible) a.push_back(v);
  return a;
}

ojson encode(const Pose3D& p) {
  ojson a = ojson::array();
  for (const auto& j : p.joints) a.push_back({j.x(), j.y(), j.z()});
  return a;
}

ojson encode(const Camera& c) {
  return ojson{{"azimuth", c.azimuth}, {"elevation", c.elevation}, {"distance", c.distance}, {"focal", c.focal}};
}

ojson encode(const Transform2D& t) {
  return ojson{{"rotation", t.rotation}, {"scale", t.scale}, {"tx", t.translation.x()}, {"ty", t.translation.y()}};
}

Pose2D decode_pose2d(const json& pts, const json* vis) {
  std::vector<Vec2> joints;
  for (const auto& p : pts.get_ref<const json::array_t&>()) {
    if (p.size() != 2) throw Error(ErrorKind::ParseError, "2D joint needs 2 coordinates");
    joints.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  }
  if (!vis) return Pose2D(std::move(joints));
  std::vector<bool> v;
  for (const auto& b : vis->get_ref<const json::array_t&>()) v.push_back(b.get<bool>());
  if (v.size() != joints.size()) throw Error(ErrorKind::ParseError, "visibility length differs from joint count");
  return Pose2D(std::move(joints), std::move(v));
}

Pose3D decode_pose3d(const json& pts) {
  Pose3D p;
  for (const auto& j : pts.get_ref<const json::array_t&>()) {
    if (j.size() != 3) throw Error(ErrorKind::ParseError, "3D joint needs 3 coordinates");
    p.joints.emplace_back(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
  }
  return p;
}

Camera decode_camera(const json& j) {
  Camera c;
  c.azimuth = j.at("azimuth").get<double>();
  c.elevation = j.at("elevation").get<double>();
  c.distance = j.at("distance").get<double>();
  c.focal = j.at("focal").get<double>();
  return c;
}

Transform2D decode_transform(const json& j) {
  Transform2D t;
  t.rotation = j.at("rotation").get<double>();
  t.scale = j.at("scale").get<double>();
  t.translation = Vec2(j.at("tx").get<double>(), j.at("ty").get<double>());
  return t;
}

// --- line-delimited files -------------------------------------------------

struct JsonLines {
  json header;
  std::vector<std::pair<std::size_t, json>> records;  // (line number, record)
};

JsonLines read_jsonl(const fs::path& path, const std::string& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  JsonLines out;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      const std::string where = have_header ? "record " + std::to_string(out.records.size()) : "header";
      throw Error(ErrorKind::ParseError,
                  path.string() + ": " + where + " (line " + std::to_string(lineno) + "): " + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string())
        throw Error(ErrorKind::SchemaMismatch, path.string() + ": missing schema header");
      if (j["schema"].get<std::string>() != schema)
        throw Error(ErrorKind::SchemaMismatch,
                    path.string() + ": expected " + schema + ", found " + j["schema"].get<std::string>());
      out.header = std::move(j);
      have_header = true;
      continue;
    }
    out.records.emplace_back(lineno, std::move(j));
  }
  if (!have_header) throw Error(ErrorKind::ParseError, path.string() + ": empty file");
  return out;
}

/// Runs `fn` on every record, converting decode failures into ParseError
/// with the record's position.
template <typename Fn>
void for_each_record(const fs::path& path, const JsonLines& jl, Fn&& fn) {
  for (std::size_t i = 0; i < jl.records.size(); ++i) {
    const auto& [lineno, rec] = jl.records[i];
    try {
      fn(rec);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, path.string() + ": record " + std::to_string(i) + " (line " +
                                             std::to_string(lineno) + "): " + e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ParseError && e.kind() != ErrorKind::JointCountMismatch) throw;
      throw Error(ErrorKind::ParseError, path.string() + ": record " + std::to_string(i) + " (line " +
                                             std::to_string(lineno) + "): " + e.what());
    }
  }
}

void write_lines(const fs::path& path, const ojson& header, const std::vector<std::string>& lines) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << header.dump() << '\n';
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

ojson synth_record_json(const SynthRecord& r) {
  ojson j{{"id", r.id},
          {"image", r.image},
          {"pose3d", encode(r.pose3d)},
          {"pose2d", encode(r.pose2d)},
          {"visible", encode_vis(r.pose2d)},
          {"camera", encode(r.camera)}};
  j["class_id"] = r.class_id ? ojson(*r.class_id) : ojson(nullptr);
  j["source_ids"] = r.source_ids;
  return j;
}

SynthRecord decode_synth_record(const json& j) {
  SynthRecord r;
  r.id = j.at("id").get<std::string>();
  r.image = j.at("image").get<std::string>();
  r.pose3d = decode_pose3d(j.at("pose3d"));
  r.pose2d = decode_pose2d(j.at("pose2d"), j.contains("visible") ? &j.at("visible") : nullptr);
  r.camera = decode_camera(j.at("camera"));
  if (j.contains("class_id") && !j.at("class_id").is_null()) r.class_id = j.at("class_id").get<int>();
  r.source_ids = j.at("source_ids").get<std::vector<std::string>>();
  return r;
}

}  // namespace

// --- skeleton --------------------------------------------------------------

Skeleton read_skeleton(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    const json j = json::parse(in);
    if (j.contains("schema") && j.at("schema").get<std::string>() != kSkeletonSchema)
      throw Error(ErrorKind::SchemaMismatch, path.string() + ": unexpected schema " + j.at("schema").get<std::string>());
    Skeleton s;
    s.joints = j.at("joints").get<std::vector<std::string>>();
    s.edges = j.at("edges").get<std::vector<std::pair<int, int>>>();
    s.left_right_pairs = j.at("left_right_pairs").get<std::vector<std::pair<int, int>>>();
    s.torso_joints = j.at("torso_joints").get<std::vector<int>>();
    s.root = j.at("root").get<int>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

void write_skeleton(const fs::path& path, const Skeleton& s) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  ojson j{{"schema", kSkeletonSchema},
          {"joints", s.joints},
          {"edges", s.edges},
          {"left_right_pairs", s.left_right_pairs},
          {"torso_joints", s.torso_joints},
          {"root", s.root}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Skeleton resolve_skeleton(const fs::path& base_dir, const std::string& ref) {
  if (ref.empty()) return default_skeleton();
  const fs::path p = fs::path(ref).is_absolute() ? fs::path(ref) : base_dir / ref;
  return read_skeleton(p);
}

// --- corpus manifest ---------------------------------------------------------

CorpusManifest read_corpus_manifest(const fs::path& path) {
  const JsonLines jl = read_jsonl(path, kCorpusSchema);
  CorpusManifest m;
  m.skeleton = jl.header.value("skeleton", std::string());
  for_each_record(path, jl, [&](const json& j) {
    CorpusRecord r;
    r.id = j.at("id").get<std::string>();
    r.image = j.at("image").get<std::string>();
    r.pose = decode_pose2d(j.at("pose2d"), &j.at("visible"));
    m.records.push_back(std::move(r));
  });
  return m;
}

void write_corpus_manifest(const fs::path& path, const CorpusManifest& m) {
  std::vector<std::string> lines;
  for (const auto& r : m.records) {
    ojson j{{"id", r.id}, {"image", r.image}, {"pose2d", encode(r.pose)}, {"visible", encode_vis(r.pose)}};
    lines.push_back(j.dump());
  }
  write_lines(path, ojson{{"schema", kCorpusSchema}, {"skeleton", m.skeleton}}, lines);
}

// --- mocap -----------------------------------------------------------------

std::vector<MocapRecord> read_mocap(const fs::path& path) {
  const JsonLines jl = read_jsonl(path, kMocapSchema);
  std::vector<MocapRecord> out;
  for_each_record(path, jl, [&](const json& j) {
    out.push_back({j.at("id").get<std::string>(), decode_pose3d(j.at("joints3d_mm"))});
  });
  return out;
}

void write_mocap(const fs::path& path, const std::vector<MocapRecord>& poses) {
  std::vector<std::string> lines;
  for (const auto& r : poses) lines.push_back(ojson{{"id", r.id}, {"joints3d_mm", encode(r.pose)}}.dump());
  write_lines(path, ojson{{"schema", kMocapSchema}}, lines);
}

// --- cameras ---------------------------------------------------------------

std::vector<Camera> read_cameras(const fs::path& path) {
  const JsonLines jl = read_jsonl(path, kCamerasSchema);
  std::vector<Camera> out;
  for_each_record(path, jl, [&](const json& j) { out.push_back(decode_camera(j)); });
  return out;
}

void write_cameras(const fs::path& path, const std::vector<Camera>& cams) {
  std::vector<std::string> lines;
  for (const auto& c : cams) lines.push_back(encode(c).dump());
  write_lines(path, ojson{{"schema", kCamerasSchema}}, lines);
}

// --- synth manifest ----------------------------------------------------------

std::string synth_record_line(const SynthRecord& r) { return synth_record_json(r).dump(); }

SynthRecord parse_synth_record_line(const std::string& line) {
  try {
    return decode_synth_record(json::parse(line));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("synth record: ") + e.what());
  }
}

SynthManifest read_synth_manifest(const fs::path& path) {
  const JsonLines jl = read_jsonl(path, kSynthSchema);
  SynthManifest m;
  try {
    m.skeleton = jl.header.value("skeleton", std::string());
    m.canvas = jl.header.at("canvas").get<int>();
    m.margin = jl.header.at("margin").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": header: " + e.what());
  }
  for_each_record(path, jl, [&](const json& j) { m.records.push_back(decode_synth_record(j)); });
  return m;
}

void write_synth_manifest(const fs::path& path, const SynthManifest& m) {
  std::vector<std::string> lines;
  for (const auto& r : m.records) lines.push_back(synth_record_line(r));
  write_lines(path,
              ojson{{"schema", kSynthSchema}, {"skeleton", m.skeleton}, {"canvas", m.canvas}, {"margin", m.margin}},
              lines);
}

// --- cluster model -----------------------------------------------------------

ClusterModel read_cluster_model(const fs::path& path) {
  const JsonLines jl = read_jsonl(path, kClustersSchema);
  ClusterModel m;
  std::size_t k = 0;
  try {
    m.skeleton = jl.header.value("skeleton", std::string());
    m.seed = jl.header.at("seed").get<std::uint64_t>();
    m.objective = jl.header.at("objective").get<double>();
    m.iterations = jl.header.at("iterations").get<int>();
    k = jl.header.at("k").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": header: " + e.what());
  }
  for_each_record(path, jl, [&](const json& j) {
    PoseClass c;
    c.id = j.at("id").get<int>();
    c.member_count = j.at("member_count").get<int>();
    c.centroid3d = decode_pose3d(j.at("centroid3d"));
    c.centroid2d = decode_pose2d(j.at("centroid2d"), &j.at("visible"));
    m.classes.push_back(std::move(c));
  });
  if (m.classes.size() != k)
    throw Error(ErrorKind::ParseError, path.string() + ": header says k=" + std::to_string(k) + " but file has " +
                                           std::to_string(m.classes.size()) + " classes");
  return m;
}

void write_cluster_model(const fs::path& path, const ClusterModel& m) {
  std::vector<std::string> lines;
  for (const auto& c : m.classes) {
    lines.push_back(ojson{{"id", c.id},
                          {"member_count", c.member_count},
                          {"centroid3d", encode(c.centroid3d)},
                          {"centroid2d", encode(c.centroid2d)},
                          {"visible", encode_vis(c.centroid2d)}}
                        .dump());
  }
  write_lines(path,
              ojson{{"schema", kClustersSchema},
                    {"k", m.classes.size()},
                    {"skeleton", m.skeleton},
                    {"seed", m.seed},
                    {"objective", m.objective},
                    {"iterations", m.iterations}},
              lines);
}

// --- pose samples ------------------------------------------------------------

std::vector<PoseSample> read_pose_samples(const fs::path& path) {
  {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::string first;
    while (std::getline(in, first) && first.find_first_not_of(" \t\r") == std::string::npos) {
    }
    if (first.find(kSynthSchema) != std::string::npos) {
      std::vector<PoseSample> out;
      for (auto& r : read_synth_manifest(path).records) out.push_back({r.id, std::move(r.pose3d), std::move(r.pose2d)});
      return out;
    }
  }
  const JsonLines jl = read_jsonl(path, kPosesSchema);
  std::vector<PoseSample> out;
  for_each_record(path, jl, [&](const json& j) {
    PoseSample s;
    s.id = j.at("id").get<std::string>();
    s.pose3d = decode_pose3d(j.at("pose3d"));
    if (j.contains("pose2d") && !j.at("pose2d").is_null())
      s.pose2d = decode_pose2d(j.at("pose2d"), j.contains("visible") ? &j.at("visible") : nullptr);
    out.push_back(std::move(s));
  });
  return out;
}

void write_pose_samples(const fs::path& path, const std::vector<PoseSample>& samples) {
  std::vector<std::string> lines;
  for (const auto& s : samples) {
    ojson j{{"id", s.id}, {"pose3d", encode(s.pose3d)}};
    if (s.pose2d) {
      j["pose2d"] = encode(*s.pose2d);
      j["visible"] = encode_vis(*s.pose2d);
    }
    lines.push_back(j.dump());
  }
  write_lines(path, ojson{{"schema", kPosesSchema}}, lines);
}

// --- matches -----------------------------------------------------------------

std::vector<Match> read_matches(const fs::path& path) {
  const JsonLines jl = read_jsonl(path, kMatchesSchema);
  std::vector<Match> out;
  for_each_record(path, jl, [&](const json& j) {
    Match m;
    m.source_id = j.at("source_id").get<std::string>();
    m.source_index = j.at("source_index").get<std::size_t>();
    m.joint = j.at("joint").get<int>();
    m.anchor = j.at("anchor").get<int>();
    m.distance = j.at("distance").get<double>();
    m.transform = decode_transform(j.at("transform"));
    m.aligned_pose = decode_pose2d(j.at("aligned_pose"), &j.at("visible"));
    out.push_back(std::move(m));
  });
  return out;
}

void write_matches(const fs::path& path, const std::vector<Match>& matches) {
  std::vector<std::string> lines;
  for (const auto& m : matches) {
    lines.push_back(ojson{{"source_id", m.source_id},
                          {"source_index", m.source_index},
                          {"joint", m.joint},
                          {"anchor", m.anchor},
                          {"distance", m.distance},
                          {"transform", encode(m.transform)},
                          {"aligned_pose", encode(m.aligned_pose)},
                          {"visible", encode_vis(m.aligned_pose)}}
                        .dump());
  }
  write_lines(path, ojson{{"schema", kMatchesSchema}}, lines);
}

// --- corpus on disk ----------------------------------------------------------

std::vector<AnnotatedImage> load_corpus(const fs::path& manifest_path, const CorpusManifest& m) {
  const fs::path base = manifest_path.parent_path();
  std::vector<AnnotatedImage> out;
  out.reserve(m.records.size());
  for (const auto& r : m.records) out.push_back({r.id, read_png(base / r.image), r.pose});
  return out;
}

void save_corpus(const fs::path& dir, const std::vector<AnnotatedImage>& corpus, const std::string& skeleton_ref) {
  fs::create_directories(dir / "images");
  CorpusManifest m;
  m.skeleton = skeleton_ref;
  for (const auto& a : corpus) {
    const std::string rel = "images/" + a.id + ".png";
    write_png(dir / rel, a.pixels);
    m.records.push_back({a.id, rel, a.pose});
  }
  write_corpus_manifest(dir / "manifest", m);
}

std::vector<std::string> validate_corpus(const fs::path& manifest_path, const Skeleton& s, bool check_images) {
  std::vector<std::string> out;
  const CorpusManifest m = read_corpus_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::set<std::string> ids;
  for (const auto& r : m.records) {
    if (!ids.insert(r.id).second) out.push_back(r.id + ": duplicate id");
    if (r.pose.size() != s.size()) {
      out.push_back(r.id + ": pose has " + std::to_string(r.pose.size()) + " joints, skeleton has " +
                    std::to_string(s.size()));
      continue;
    }
    const fs::path img = base / r.image;
    if (!fs::exists(img)) {
      out.push_back(r.id + ": missing image " + img.string());
      continue;
    }
    if (!check_images) continue;
    const RgbImage pixels = read_png(img);
    for (std::size_t k = 0; k < r.pose.size(); ++k) {
      if (!r.pose.visible[k]) continue;
      const Vec2& p = r.pose.joints[k];
      if (!(p.x() >= 0 && p.x() < pixels.width && p.y() >= 0 && p.y() < pixels.height))
        out.push_back(r.id + ": visible joint " + s.joints[k] + " outside the image");
    }
  }
  return out;
}

std::vector<std::string> validate_synth(const SynthManifest& m, const Skeleton& s, double tol_px) {
  std::vector<std::string> out;
  for (const auto& r : m.records) {
    try {
      const Pose2D reproj = normalize_crop(project(OrientedPose{r.pose3d, r.camera}), m.canvas, m.margin).pose2d;
      if (reproj.size() != r.pose2d.size() || r.pose3d.size() != s.size()) {
        out.push_back(r.id + ": joint count mismatch");
        continue;
      }
      double worst = 0.0;
      for (std::size_t k = 0; k < reproj.size(); ++k) worst = std::max(worst, (reproj.joints[k] - r.pose2d.joints[k]).norm());
      if (worst > tol_px) out.push_back(r.id + ": reprojection error " + std::to_string(worst) + " px");
    } catch (const Error& e) {
      out.push_back(r.id + ": " + e.what());
    }
  }
  return out;
}

// --- mirroring ---------------------------------------------------------------

std::string mirror_id(const std::string& id) {
  static const std::string suffix = "~mirror";
  if (id.size() > suffix.size() && id.compare(id.size() - suffix.size(), suffix.size(), suffix) == 0)
    return id.substr(0, id.size() - suffix.size());
  return id + suffix;
}

Pose2D mirror_pose(const Pose2D& p, int width, const Skeleton& s) {
  if (p.size() != s.size()) throw Error(ErrorKind::JointCountMismatch, "pose/skeleton size mismatch");
  const std::vector<int> perm = s.mirror_permutation();
  Pose2D out = p;
  for (std::size_t k = 0; k < p.size(); ++k) {
    out.joints[perm[k]] = Vec2(width - 1 - p.joints[k].x(), p.joints[k].y());
    out.visible[perm[k]] = p.visible[k];
  }
  return out;
}

AnnotatedImage mirror_image(const AnnotatedImage& a, const Skeleton& s) {
  if (s.left_right_pairs.empty()) throw Error(ErrorKind::InvalidArgument, "skeleton has no left/right pairs");
  AnnotatedImage out;
  out.id = mirror_id(a.id);
  out.pixels = RgbImage(a.pixels.width, a.pixels.height);
  for (int y = 0; y < a.pixels.height; ++y)
    for (int x = 0; x < a.pixels.width; ++x) {
      const std::uint8_t* src = a.pixels.at(a.pixels.width - 1 - x, y);
      std::copy(src, src + 3, out.pixels.at(x, y));
    }
  out.pose = mirror_pose(a.pose, a.pixels.width, s);
  return out;
}

std::vector<AnnotatedImage> mirror_corpus(const std::vector<AnnotatedImage>& corpus, const Skeleton& s) {
  std::vector<AnnotatedImage> out = corpus;
  out.reserve(corpus.size() * 2);
  for (const auto& a : corpus) out.push_back(mirror_image(a, s));
  return out;
}

}  // namespace posesynth
