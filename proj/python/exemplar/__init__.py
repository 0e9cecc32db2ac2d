"""Python surface of the exemplar pretraining toolkit.

Re-exports the native module built from python/bindings.cpp. Build it with
CMake (target `_exemplar`) and put its directory on PYTHONPATH, or install
the wheel if one was produced.
"""

from _exemplar import (  # noqa: F401
    AugmentationPipeline,
    Box,
    MemoryQueue,
    PipelineMode,
    SimilarityMap,
    augment,
    categorize_fp,
    confidence_interval,
    cross_entropy_loss,
    default_reconstructor_spec,
    exemplar_loss,
    infonce_loss,
    iou,
    l2_normalize,
    landmark_error,
    linear_probe,
    make_synthetic_dataset,
    make_two_views,
    momentum_update,
    pipeline_stage,
    psnr,
)

__all__ = [
    "AugmentationPipeline",
    "Box",
    "MemoryQueue",
    "PipelineMode",
    "SimilarityMap",
    "augment",
    "categorize_fp",
    "confidence_interval",
    "cross_entropy_loss",
    "default_reconstructor_spec",
    "exemplar_loss",
    "infonce_loss",
    "iou",
    "l2_normalize",
    "landmark_error",
    "linear_probe",
    "make_synthetic_dataset",
    "make_two_views",
    "momentum_update",
    "pipeline_stage",
    "psnr",
]
