#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "posesynth/commands.hpp"

using namespace posesynth;

namespace {

void add_synth_config(CLI::App* cmd, SynthConfig& c) {
  cmd->add_option("--canvas", c.canvas, "Canvas side in pixels")->capture_default_str();
  cmd->add_option("--margin", c.margin, "Crop margin in pixels")->capture_default_str();
  cmd->add_option("--sigma", c.sigma, "Probability-map bandwidth in pixels")->capture_default_str();
  cmd->add_option("--s-min", c.blend.s_min, "Smallest blending window side")->capture_default_str();
  cmd->add_option("--s-max", c.blend.s_max, "Largest blending window side")->capture_default_str();
  cmd->add_option("--alpha", c.blend.alpha, "Window growth per pixel of distance to the pose")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Global seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-conditioned image synthesis from 2D annotated images and 3D MoCap"};
  app.set_config("--config", "", "TOML/INI file with option values; flags override it");
  app.require_subcommand(1);

  GenCorpusOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-test-corpus", "Render a synthetic stick-figure corpus");
  gen_cmd->add_option("--out", gen.out, "Corpus directory")->required();
  gen_cmd->add_option("--count", gen.count, "Number of images")->capture_default_str();
  gen_cmd->add_option("--canvas", gen.canvas, "Image side in pixels")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--occlusion", gen.occlusion, "Probability of marking a joint hidden")->capture_default_str();
  gen_cmd->add_option("--skeleton", gen.skeleton, "Skeleton descriptor (default 13 joints)");
  gen_cmd->add_option("--mocap-out", gen.mocap_out, "Also write random MoCap poses here");
  gen_cmd->add_option("--mocap-count", gen.mocap_count)->capture_default_str();

  SynthOptions synth;
  std::string rule = "max";
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize images for MoCap poses");
  synth_cmd->add_option("--corpus", synth.corpus, "Corpus manifest")->required();
  synth_cmd->add_option("--mocap", synth.mocap, "MoCap pose file")->required();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--cameras", synth.cameras, "Camera file applied to every pose");
  synth_cmd->add_option("--clusters", synth.clusters, "Cluster model used to fill class ids");
  synth_cmd->add_option("--cameras-per-pose", synth.cameras_per_pose)->capture_default_str();
  synth_cmd->add_option("--azimuth-min", synth.azimuth.lo)->capture_default_str();
  synth_cmd->add_option("--azimuth-max", synth.azimuth.hi)->capture_default_str();
  synth_cmd->add_option("--elevation-min", synth.elevation.lo)->capture_default_str();
  synth_cmd->add_option("--elevation-max", synth.elevation.hi)->capture_default_str();
  synth_cmd->add_option("--distance", synth.distance, "Camera distance in mm")->capture_default_str();
  synth_cmd->add_option("--focal", synth.focal, "Focal length in pixels")->capture_default_str();
  synth_cmd->add_option("--subsample-mm", synth.subsample_mm, "Drop near-duplicate poses (0 = keep all)")
      ->capture_default_str();
  synth_cmd->add_option("--subsample-rule", rule, "max or mean joint displacement")
      ->check(CLI::IsMember({"max", "mean"}))
      ->capture_default_str();
  synth_cmd->add_flag("--mirror-corpus", synth.mirror_corpus, "Add mirrored copies of the corpus");
  synth_cmd->add_option("--workers", synth.workers)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--bound-joints", synth.bound_joints, "Joints used by the retrieval lower bound")
      ->capture_default_str();
  synth_cmd->add_flag("--keep-intermediates", synth.keep_intermediates, "Store match lists for preview");
  synth_cmd->add_flag("--resume", synth.resume, "Keep items finished by an interrupted run");
  synth_cmd->add_option("--max-failure-fraction", synth.max_failure_fraction)->capture_default_str();
  add_synth_config(synth_cmd, synth.config);

  ClusterOptions cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster oriented 3D poses into pose classes");
  cluster_cmd->add_option("--poses", cluster.poses, "Synth manifest or MoCap file")->required();
  cluster_cmd->add_option("--out", cluster.out, "Cluster model file")->required();
  cluster_cmd->add_option("--skeleton", cluster.skeleton);
  cluster_cmd->add_option("-k,--classes", cluster.k)->capture_default_str();
  cluster_cmd->add_option("--seed", cluster.seed)->capture_default_str();
  cluster_cmd->add_option("--workers", cluster.workers)->capture_default_str()->check(CLI::PositiveNumber);
  cluster_cmd->add_option("--max-iterations", cluster.max_iterations)->capture_default_str();
  cluster_cmd->add_option("--tolerance", cluster.tolerance, "Relative objective change to stop at")
      ->capture_default_str();
  cluster_cmd->add_option("--canvas", cluster.canvas)->capture_default_str();
  cluster_cmd->add_option("--margin", cluster.margin)->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "3D and 2D pose errors");
  eval_cmd->add_option("--pred", eval.predictions, "Predicted poses")->required();
  eval_cmd->add_option("--gt", eval.ground_truth, "Ground-truth poses")->required();
  eval_cmd->add_option("--out", eval.out, "CSV report");
  eval_cmd->add_option("--skeleton", eval.skeleton);
  eval_cmd->add_option("--stride", eval.stride, "Evaluate every n-th ground-truth sample")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--label", eval.label)->capture_default_str();

  MirrorOptions mirror;
  auto* mirror_cmd = app.add_subcommand("mirror", "Double a corpus with horizontally flipped copies");
  mirror_cmd->add_option("--corpus", mirror.corpus, "Corpus manifest")->required();
  mirror_cmd->add_option("--out", mirror.out, "Output corpus directory")->required();

  ValidateOptions validate;
  bool skip_images = false;
  auto* validate_cmd = app.add_subcommand("validate", "Check manifests and skeleton descriptors");
  validate_cmd->add_option("--corpus", validate.corpus, "Corpus manifest");
  validate_cmd->add_option("--synth", validate.synth, "Synth manifest");
  validate_cmd->add_option("--skeleton", validate.skeleton, "Skeleton descriptor");
  validate_cmd->add_flag("--skip-images", skip_images, "Do not decode corpus images");
  validate_cmd->add_option("--tolerance", validate.tolerance_px, "Reprojection tolerance in pixels")
      ->capture_default_str();

  PreviewOptions preview;
  auto* preview_cmd = app.add_subcommand("preview", "Diagnostic PNGs for one synthesized item");
  preview_cmd->add_option("--synth", preview.synth, "Synth manifest")->required();
  preview_cmd->add_option("--id", preview.id, "Record id")->required();
  preview_cmd->add_option("--out", preview.out, "Output directory")->required();
  preview_cmd->add_option("--corpus", preview.corpus, "Corpus manifest (default: the one used by synth)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  CLI::App* chosen = app.get_subcommands().front();
  CommandResult result;
  try {
    if (chosen == gen_cmd) {
      result = run_gen_test_corpus(gen);
    } else if (chosen == synth_cmd) {
      synth.subsample_rule = rule == "mean" ? SubsampleRule::MeanJoint : SubsampleRule::MaxJoint;
      result = run_synth(synth);
    } else if (chosen == cluster_cmd) {
      result = run_cluster(cluster);
    } else if (chosen == eval_cmd) {
      result = run_eval(eval);
    } else if (chosen == mirror_cmd) {
      result = run_mirror(mirror);
    } else if (chosen == validate_cmd) {
      validate.check_images = !skip_images;
      result = run_validate(validate);
    } else {
      result = run_preview(preview);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    result.exit_code = exit_code_for(e);
    result.summary = {{"command", chosen->get_name()}, {"error", e.what()}};
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    result.exit_code = kExitRuntime;
    result.summary = {{"command", chosen->get_name()}, {"error", e.what()}};
  }
  result.summary["exit_code"] = result.exit_code;
  std::cout << result.summary.dump() << std::endl;
  return result.exit_code;
}
