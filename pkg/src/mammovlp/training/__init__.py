"""Pretraining and fine-tuning stages."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ALL, FinetuneConfig, PretrainConfig
from .finetune import (
    FinetuneResult,
    ImageClassifier,
    attach_head,
    build_vision_encoder,
    finetune,
    predict,
    sample_budget,
    targets_for_samples,
)
from .pretrain import (
    PretrainExample,
    PretrainResult,
    TrainingLog,
    build_pretrain_model,
    embed_pairs,
    load_pretrained_model,
    pretrain,
    retrieval_top1,
)

__all__ = [
    "ALL",
    "Checkpoint",
    "FinetuneConfig",
    "FinetuneResult",
    "ImageClassifier",
    "PretrainConfig",
    "PretrainExample",
    "PretrainResult",
    "TrainingLog",
    "attach_head",
    "build_pretrain_model",
    "build_vision_encoder",
    "embed_pairs",
    "finetune",
    "load_checkpoint",
    "load_pretrained_model",
    "predict",
    "pretrain",
    "retrieval_top1",
    "sample_budget",
    "save_checkpoint",
    "targets_for_samples",
]
