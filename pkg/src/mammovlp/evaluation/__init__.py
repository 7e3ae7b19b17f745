"""Label schemes, macro-F1 metrics, folds, and the ablation harness."""

from .ablation import BASELINE_ARM, VLM_ARM, AblationResult, AblationRow, run_ablation
from .folds import FoldAssignment, kfold_split
from .metrics import (
    MetricReport,
    f1_scores,
    fold_std,
    macro_f1,
    summarize_folds,
    zero_support_classes,
)
from .schemes import (
    EXCLUDED,
    FIVE_CLASS,
    SCHEMES,
    THREE_CLASS,
    VALID_BIRADS,
    ClassScheme,
    identity_scheme,
    map_label,
    validate_birads,
)

__all__ = [
    "BASELINE_ARM",
    "VLM_ARM",
    "AblationResult",
    "AblationRow",
    "ClassScheme",
    "EXCLUDED",
    "FIVE_CLASS",
    "FoldAssignment",
    "MetricReport",
    "SCHEMES",
    "THREE_CLASS",
    "VALID_BIRADS",
    "f1_scores",
    "fold_std",
    "identity_scheme",
    "kfold_split",
    "macro_f1",
    "map_label",
    "run_ablation",
    "summarize_folds",
    "validate_birads",
    "zero_support_classes",
]
