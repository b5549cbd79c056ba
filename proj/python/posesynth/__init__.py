"""Pose-conditioned image synthesis from 2D annotated images and 3D MoCap."""

from ._posesynth import (
    Camera,
    PosesynthError,
    Skeleton,
    SynthConfig,
    Synthesizer,
    cluster,
    cluster_poses,
    conditioned_distance,
    default_skeleton,
    evaluate,
    gen_test_corpus,
    make_query,
    mirror,
    mirror_pose,
    mpjpe_abs,
    mpjpe_aligned,
    preview,
    random_pose3d,
    read_skeleton,
    sample_cameras,
    synth,
    validate,
)

__all__ = [
    "Camera",
    "PosesynthError",
    "Skeleton",
    "SynthConfig",
    "Synthesizer",
    "cluster",
    "cluster_poses",
    "conditioned_distance",
    "default_skeleton",
    "evaluate",
    "gen_test_corpus",
    "make_query",
    "mirror",
    "mirror_pose",
    "mpjpe_abs",
    "mpjpe_aligned",
    "preview",
    "random_pose3d",
    "read_skeleton",
    "sample_cameras",
    "synth",
    "validate",
]
