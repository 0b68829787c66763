"""Template-guided post-hoc explanations for small image classifiers."""

__version__ = "0.1.0"

from .attribution import (
    grad_cam,
    integrated_attributions,
    integrated_gradients,
    mean_reference_image,
    normalize_importance,
    read_importance,
    saliency_map,
    write_importance,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import ManifestRow, load_samples, read_manifest, split, write_manifest
from .errors import CheckpointError, DataError, NumericError, ParseError
from .metrics import (
    EvalReport,
    auprc,
    auroc,
    bootstrap_se,
    classification_metrics,
    dsc,
    explanation_quality,
    iou,
    pr_curve,
    roc_curve,
    select_cutoff,
)
from .nn import (
    ConvBlockSpec,
    ConvNet,
    ForwardCache,
    ModelConfig,
    backward,
    bilinear_upsample,
    forward,
)
from .phantom import PhantomSpec, canonical_annotation, generate_phantoms
from .template import (
    TemplateSpec,
    build_template,
    dilate,
    extract_focus,
    guide,
    hflip,
    union,
)
from .training import TrainConfig, predict_proba, train, weighted_ce_loss

__all__ = [
    "ConvBlockSpec",
    "ConvNet",
    "CheckpointError",
    "DataError",
    "EvalReport",
    "ForwardCache",
    "ManifestRow",
    "ModelConfig",
    "NumericError",
    "ParseError",
    "PhantomSpec",
    "TemplateSpec",
    "TrainConfig",
    "auprc",
    "auroc",
    "backward",
    "bilinear_upsample",
    "bootstrap_se",
    "build_template",
    "canonical_annotation",
    "classification_metrics",
    "dilate",
    "dsc",
    "explanation_quality",
    "extract_focus",
    "forward",
    "generate_phantoms",
    "grad_cam",
    "guide",
    "hflip",
    "integrated_attributions",
    "integrated_gradients",
    "iou",
    "load_checkpoint",
    "load_samples",
    "mean_reference_image",
    "normalize_importance",
    "pr_curve",
    "predict_proba",
    "read_importance",
    "read_manifest",
    "roc_curve",
    "saliency_map",
    "save_checkpoint",
    "select_cutoff",
    "split",
    "train",
    "union",
    "weighted_ce_loss",
    "write_importance",
    "write_manifest",
]
