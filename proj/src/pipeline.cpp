#include "posesynth/pipeline.hpp"

#include "posesynth/stick_corpus.hpp"

namespace posesynth {

Synthesis synthesize_query(const QueryPose& qp, const Skeleton& s, const RetrievalIndex& index,
                           std::span<const AnnotatedImage> corpus, const SynthConfig& cfg) {
  check_synth_config(cfg);
  if (index.size() != corpus.size()) throw Error(ErrorKind::InvalidArgument, "index was built from another corpus");
  Synthesis out;
  out.query = qp;
  out.matches = index.query(qp, s);
  if (out.matches.empty()) throw Error(ErrorKind::AllOccluded, "query has no visible joint");

  std::vector<double> distances;
  for (const Match& m : out.matches) {
    out.candidates.push_back(warp_candidate(corpus[m.source_index], m, cfg.canvas));
    out.maps.push_back(probability_map(out.candidates.back(), qp, cfg.sigma));
    distances.push_back(m.distance);
  }
  out.index = index_map(out.maps, distances);
  out.mosaic = compose_mosaic(out.candidates, out.index);
  const BlendWeights w =
      blend_weights(out.index, qp, s, cfg.blend, static_cast<int>(out.candidates.size()));
  out.image = blend(out.candidates, w);
  return out;
}

Synthesis synthesize(const Pose3D& pose, const Camera& camera, const Skeleton& s, const RetrievalIndex& index,
                     std::span<const AnnotatedImage> corpus, const SynthConfig& cfg) {
  check_synth_config(cfg);
  OrientedPose oriented = orient_and_center(pose, camera, s);
  const QueryPose qp = normalize_crop(project(oriented), cfg.canvas, cfg.margin);
  Synthesis out = synthesize_query(qp, s, index, corpus, cfg);
  out.oriented = std::move(oriented);
  return out;
}

RgbImage draw_overlay(const RgbImage& img, const Pose2D& pose, const Skeleton& s) {
  RgbImage out = img;
  for (const auto& [a, b] : s.edges)
    if (pose.visible[a] && pose.visible[b]) draw_capsule(out, pose.joints[a], pose.joints[b], 0.8, {255, 255, 0});
  for (std::size_t k = 0; k < pose.size(); ++k)
    if (pose.visible[k]) draw_capsule(out, pose.joints[k], pose.joints[k], 2.0, {255, 0, 0});
  return out;
}

}  // namespace posesynth
