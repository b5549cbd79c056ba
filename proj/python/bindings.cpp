#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "posesynth/clustering.hpp"
#include "posesynth/commands.hpp"
#include "posesynth/dataset_io.hpp"
#include "posesynth/evaluation.hpp"
#include "posesynth/mocap_prep.hpp"
#include "posesynth/pipeline.hpp"
#include "posesynth/retrieval.hpp"
#include "posesynth/stick_corpus.hpp"

namespace py = pybind11;
using namespace posesynth;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

Pose2D to_pose2d(const F64& a, std::optional<std::vector<bool>> visible) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw Error(ErrorKind::InvalidArgument, "pose2d must have shape (n, 2)");
  std::vector<Vec2> pts;
  for (py::ssize_t k = 0; k < a.shape(0); ++k) pts.emplace_back(a.at(k, 0), a.at(k, 1));
  if (!visible) return Pose2D(std::move(pts));
  return Pose2D(std::move(pts), std::move(*visible));
}

Pose3D to_pose3d(const F64& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw Error(ErrorKind::InvalidArgument, "pose3d must have shape (n, 3)");
  Pose3D p;
  for (py::ssize_t k = 0; k < a.shape(0); ++k) p.joints.emplace_back(a.at(k, 0), a.at(k, 1), a.at(k, 2));
  return p;
}

py::array_t<double> from_pose2d(const Pose2D& p) {
  py::array_t<double> out({static_cast<py::ssize_t>(p.size()), py::ssize_t{2}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t k = 0; k < p.size(); ++k) {
    v(k, 0) = p.joints[k].x();
    v(k, 1) = p.joints[k].y();
  }
  return out;
}

py::array_t<double> from_pose3d(const Pose3D& p) {
  py::array_t<double> out({static_cast<py::ssize_t>(p.size()), py::ssize_t{3}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t k = 0; k < p.size(); ++k)
    for (int c = 0; c < 3; ++c) v(k, c) = p.joints[k][c];
  return out;
}

py::array_t<std::uint8_t> from_image(const RgbImage& img) {
  py::array_t<std::uint8_t> out({py::ssize_t{img.height}, py::ssize_t{img.width}, py::ssize_t{3}});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

py::dict transform_dict(const Transform2D& t) {
  py::dict d;
  d["rotation"] = t.rotation;
  d["scale"] = t.scale;
  d["translation"] = py::make_tuple(t.translation.x(), t.translation.y());
  return d;
}

py::object to_python(const CommandResult& r) {
  nlohmann::ordered_json summary = r.summary;
  summary["exit_code"] = r.exit_code;
  return py::module_::import("json").attr("loads")(summary.dump());
}

AlignMode parse_mode(const std::string& mode) {
  if (mode == "rigid") return AlignMode::Rigid;
  if (mode == "similarity") return AlignMode::Similarity;
  throw Error(ErrorKind::InvalidArgument, "mode must be 'rigid' or 'similarity'");
}

/// A loaded corpus plus its retrieval index.
class Synthesizer {
 public:
  Synthesizer(std::vector<AnnotatedImage> corpus, Skeleton s, int bound_joints)
      : corpus_(std::move(corpus)), skeleton_(std::move(s)), index_(RetrievalIndex::build(corpus_, bound_joints)) {}

  static Synthesizer from_manifest(const std::filesystem::path& manifest, int bound_joints) {
    const CorpusManifest m = read_corpus_manifest(manifest);
    return Synthesizer(load_corpus(manifest, m), resolve_skeleton(manifest.parent_path(), m.skeleton), bound_joints);
  }

  py::dict synthesize(const F64& pose3d, const Camera& cam, const SynthConfig& cfg) const {
    Synthesis syn;
    {
      py::gil_scoped_release release;
      syn = posesynth::synthesize(to_pose3d(pose3d), cam, skeleton_, index_, corpus_, cfg);
    }
    py::dict d;
    d["image"] = from_image(syn.image);
    d["mosaic"] = from_image(syn.mosaic);
    d["pose2d"] = from_pose2d(syn.query.pose2d);
    d["pose3d"] = from_pose3d(syn.oriented.pose3d);
    py::list ids, dist;
    for (const auto& m : syn.matches) {
      ids.append(m.source_id);
      dist.append(m.distance);
    }
    d["source_ids"] = ids;
    d["distances"] = dist;
    py::array_t<int> labels({py::ssize_t{syn.index.indices.height}, py::ssize_t{syn.index.indices.width}});
    std::copy(syn.index.indices.values.begin(), syn.index.indices.values.end(), labels.mutable_data());
    d["index_map"] = labels;
    return d;
  }

  std::size_t size() const { return corpus_.size(); }
  const Skeleton& skeleton() const { return skeleton_; }

 private:
  std::vector<AnnotatedImage> corpus_;
  Skeleton skeleton_;
  RetrievalIndex index_;
};

}  // namespace

PYBIND11_MODULE(_posesynth, m) {
  m.doc() = "Pose-conditioned image synthesis";

  static py::exception<Error> error(m, "PosesynthError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Skeleton>(m, "Skeleton")
      .def_readonly("joints", &Skeleton::joints)
      .def_readonly("edges", &Skeleton::edges)
      .def_readonly("left_right_pairs", &Skeleton::left_right_pairs)
      .def_readonly("torso_joints", &Skeleton::torso_joints)
      .def_readonly("root", &Skeleton::root)
      .def("__len__", &Skeleton::size)
      .def("index_of", &Skeleton::index_of);
  m.def("default_skeleton", &default_skeleton);
  m.def("read_skeleton", &read_skeleton, py::arg("path"));

  py::class_<Camera>(m, "Camera")
      .def(py::init([](double az, double el, double dist, double focal) { return Camera{az, el, dist, focal}; }),
           py::arg("azimuth") = 0.0, py::arg("elevation") = 0.0, py::arg("distance") = 5000.0,
           py::arg("focal") = 1100.0)
      .def_readwrite("azimuth", &Camera::azimuth)
      .def_readwrite("elevation", &Camera::elevation)
      .def_readwrite("distance", &Camera::distance)
      .def_readwrite("focal", &Camera::focal)
      .def("__repr__", [](const Camera& c) {
        return "Camera(azimuth=" + std::to_string(c.azimuth) + ", elevation=" + std::to_string(c.elevation) + ")";
      });

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init([](int canvas, double margin, double sigma, double s_min, double s_max, double alpha,
                       std::uint64_t seed) {
             SynthConfig c;
             c.canvas = canvas;
             c.margin = margin;
             c.sigma = sigma;
             c.blend = {s_min, s_max, alpha};
             c.seed = seed;
             check_synth_config(c);
             return c;
           }),
           py::arg("canvas") = 220, py::arg("margin") = 10.0, py::arg("sigma") = 15.0, py::arg("s_min") = 3.0,
           py::arg("s_max") = 21.0, py::arg("alpha") = 0.2, py::arg("seed") = 0)
      .def_readonly("canvas", &SynthConfig::canvas)
      .def_readonly("margin", &SynthConfig::margin)
      .def_readonly("sigma", &SynthConfig::sigma);

  m.def(
      "sample_cameras",
      [](int count, std::pair<double, double> az, std::pair<double, double> el, double distance, double focal,
         std::uint64_t seed) {
        return sample_virtual_cameras(count, {az.first, az.second}, {el.first, el.second}, distance, focal, seed);
      },
      py::arg("count"), py::arg("azimuth") = std::pair{0.0, 360.0}, py::arg("elevation") = std::pair{-45.0, 45.0},
      py::arg("distance") = 5000.0, py::arg("focal") = 1100.0, py::arg("seed") = 0);

  m.def(
      "make_query",
      [](const F64& pose3d, const Camera& cam, int canvas, double margin) {
        const QueryPose q = make_query(to_pose3d(pose3d), cam, default_skeleton(), canvas, margin);
        return py::make_tuple(from_pose2d(q.pose2d), transform_dict(q.crop));
      },
      py::arg("pose3d"), py::arg("camera"), py::arg("canvas") = 220, py::arg("margin") = 10.0,
      "Orient, project and frame a 3D pose; returns (pose2d, crop).");

  m.def(
      "conditioned_distance",
      [](const F64& p, const F64& q, int joint, std::optional<std::vector<bool>> p_visible,
         std::optional<std::vector<bool>> q_visible) {
        const ConditionedDistance d =
            conditioned_distance(to_pose2d(p, p_visible), to_pose2d(q, q_visible), joint, default_skeleton());
        py::dict out;
        out["distance"] = d.distance;
        out["anchor"] = d.anchor;
        out["transform"] = transform_dict(d.transform);
        return out;
      },
      py::arg("p"), py::arg("q"), py::arg("joint"), py::arg("p_visible") = py::none(),
      py::arg("q_visible") = py::none());

  m.def(
      "mpjpe_abs", [](const F64& pred, const F64& gt) { return mpjpe_abs(to_pose3d(pred), to_pose3d(gt), default_skeleton()); },
      py::arg("pred"), py::arg("gt"));
  m.def(
      "mpjpe_aligned",
      [](const F64& pred, const F64& gt, const std::string& mode) {
        return mpjpe_aligned(to_pose3d(pred), to_pose3d(gt), parse_mode(mode));
      },
      py::arg("pred"), py::arg("gt"), py::arg("mode") = "rigid");

  m.def(
      "cluster_poses",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& poses, int k, std::uint64_t seed,
         int workers) {
        if (poses.ndim() != 3 || poses.shape(2) != 3)
          throw Error(ErrorKind::InvalidArgument, "poses must have shape (N, n, 3)");
        std::vector<ClusterSample> samples;
        const auto v = poses.unchecked<3>();
        for (py::ssize_t i = 0; i < poses.shape(0); ++i) {
          ClusterSample cs;
          for (py::ssize_t j = 0; j < poses.shape(1); ++j) {
            cs.pose3d.joints.emplace_back(v(i, j, 0), v(i, j, 1), v(i, j, 2));
            cs.pose2d.joints.emplace_back(v(i, j, 0), v(i, j, 1));
          }
          cs.pose2d.visible.assign(cs.pose2d.joints.size(), true);
          samples.push_back(std::move(cs));
        }
        KMeansOptions opts;
        opts.workers = workers;
        ClusterResult r;
        {
          py::gil_scoped_release release;
          r = cluster_poses(samples, k, seed, opts);
        }
        py::dict out;
        out["assignment"] = r.assignment;
        out["objective"] = r.objective;
        out["objective_history"] = r.objective_history;
        out["iterations"] = r.iterations;
        py::list centroids, counts;
        for (const auto& c : r.classes) {
          centroids.append(from_pose3d(c.centroid3d));
          counts.append(c.member_count);
        }
        out["centroids"] = centroids;
        out["member_counts"] = counts;
        return out;
      },
      py::arg("poses"), py::arg("k"), py::arg("seed") = 1, py::arg("workers") = 1);

  m.def(
      "random_pose3d", [](std::uint64_t seed) { return from_pose3d(random_pose3d(default_skeleton(), seed)); },
      py::arg("seed"));
  m.def(
      "mirror_pose",
      [](const F64& pose, int width) { return from_pose2d(mirror_pose(to_pose2d(pose, std::nullopt), width, default_skeleton())); },
      py::arg("pose2d"), py::arg("width"));

  py::class_<Synthesizer>(m, "Synthesizer")
      .def_static("from_manifest", &Synthesizer::from_manifest, py::arg("manifest"), py::arg("bound_joints") = 4)
      .def_static(
          "from_stick_corpus",
          [](int count, int canvas, std::uint64_t seed, double occlusion) {
            const Skeleton s = default_skeleton();
            return Synthesizer(generate_stick_corpus(count, s, canvas, seed, occlusion), s, 4);
          },
          py::arg("count"), py::arg("canvas") = 220, py::arg("seed") = 1, py::arg("occlusion") = 0.0)
      .def("synthesize", &Synthesizer::synthesize, py::arg("pose3d"), py::arg("camera"),
           py::arg("config") = SynthConfig{})
      .def("__len__", &Synthesizer::size)
      .def_property_readonly("skeleton", &Synthesizer::skeleton);

  // Command layer: keyword arguments mirror the CLI flags.
  m.def(
      "gen_test_corpus",
      [](const std::filesystem::path& out, int count, int canvas, std::uint64_t seed, double occlusion,
         const std::filesystem::path& mocap_out, int mocap_count) {
        GenCorpusOptions o;
        o.out = out;
        o.count = count;
        o.canvas = canvas;
        o.seed = seed;
        o.occlusion = occlusion;
        o.mocap_out = mocap_out;
        o.mocap_count = mocap_count;
        return to_python(run_gen_test_corpus(o));
      },
      py::arg("out"), py::arg("count") = 100, py::arg("canvas") = 220, py::arg("seed") = 1, py::arg("occlusion") = 0.0,
      py::arg("mocap_out") = std::filesystem::path(), py::arg("mocap_count") = 50);
  m.def(
      "synth",
      [](const std::filesystem::path& corpus, const std::filesystem::path& mocap, const std::filesystem::path& out,
         int cameras_per_pose, int workers, const SynthConfig& config, bool mirror_corpus, bool keep_intermediates,
         bool resume) {
        SynthOptions o;
        o.corpus = corpus;
        o.mocap = mocap;
        o.out = out;
        o.cameras_per_pose = cameras_per_pose;
        o.workers = workers;
        o.config = config;
        o.mirror_corpus = mirror_corpus;
        o.keep_intermediates = keep_intermediates;
        o.resume = resume;
        CommandResult r;
        {
          py::gil_scoped_release release;
          r = run_synth(o);
        }
        return to_python(r);
      },
      py::arg("corpus"), py::arg("mocap"), py::arg("out"), py::arg("cameras_per_pose") = 1, py::arg("workers") = 1,
      py::arg("config") = SynthConfig{}, py::arg("mirror_corpus") = false, py::arg("keep_intermediates") = false,
      py::arg("resume") = false);
  m.def(
      "cluster",
      [](const std::filesystem::path& poses, const std::filesystem::path& out, int k, std::uint64_t seed, int workers) {
        ClusterOptions o;
        o.poses = poses;
        o.out = out;
        o.k = k;
        o.seed = seed;
        o.workers = workers;
        return to_python(run_cluster(o));
      },
      py::arg("poses"), py::arg("out"), py::arg("k") = 16, py::arg("seed") = 1, py::arg("workers") = 1);
  m.def(
      "evaluate",
      [](const std::filesystem::path& pred, const std::filesystem::path& gt, const std::filesystem::path& out,
         std::size_t stride) {
        EvalOptions o;
        o.predictions = pred;
        o.ground_truth = gt;
        o.out = out;
        o.stride = stride;
        return to_python(run_eval(o));
      },
      py::arg("pred"), py::arg("gt"), py::arg("out") = std::filesystem::path(), py::arg("stride") = 1);
  m.def(
      "mirror",
      [](const std::filesystem::path& corpus, const std::filesystem::path& out) {
        return to_python(run_mirror(MirrorOptions{corpus, out}));
      },
      py::arg("corpus"), py::arg("out"));
  m.def(
      "validate",
      [](const std::filesystem::path& corpus, const std::filesystem::path& synth, bool check_images) {
        ValidateOptions o;
        o.corpus = corpus;
        o.synth = synth;
        o.check_images = check_images;
        return to_python(run_validate(o));
      },
      py::arg("corpus") = std::filesystem::path(), py::arg("synth") = std::filesystem::path(),
      py::arg("check_images") = true);
  m.def(
      "preview",
      [](const std::filesystem::path& synth, const std::string& id, const std::filesystem::path& out) {
        PreviewOptions o;
        o.synth = synth;
        o.id = id;
        o.out = out;
        return to_python(run_preview(o));
      },
      py::arg("synth"), py::arg("id"), py::arg("out"));
}
