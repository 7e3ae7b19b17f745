"""Vision-encoder fine-tuning with a fresh classification head.

The text encoder and fusion model are dropped; the vision backbone (from
a pretraining checkpoint or freshly initialized) gets a linear head and
trains with cross-entropy under a sample budget. The model returned is
the epoch with the best validation macro-F1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch
from torch import nn

from ..encoders import VISION_ENCODERS, VisionEncoderBase, validate_image
from ..errors import BudgetError, ConfigError, ContractError
from ..evaluation.metrics import MetricReport
from ..evaluation.schemes import EXCLUDED, ClassScheme
from ..seeding import derive_seed, rng_for
from .checkpoint import Checkpoint
from .config import ALL, FinetuneConfig, PretrainConfig

logger = logging.getLogger(__name__)


class ImageClassifier(nn.Module):
    def __init__(self, backbone: VisionEncoderBase, num_classes: int):
        super().__init__()
        self.backbone = backbone
        self.num_classes = num_classes
        self.head = nn.Linear(backbone.output_width, num_classes)

    @property
    def resolution(self) -> tuple[int, int]:
        return self.backbone.resolution

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone(images))


def build_vision_encoder(config: PretrainConfig, seed_tag: str = "backbone-init") -> VisionEncoderBase:
    """Freshly initialized backbone matching a pretraining configuration."""
    torch.manual_seed(derive_seed(config.seed, seed_tag))
    return VISION_ENCODERS[config.vision_arch](
        resolution=config.resolution, in_channels=1, output_width=config.vision_width)


def attach_head(source: Checkpoint | VisionEncoderBase, num_classes: int,
                seed: int = 0) -> ImageClassifier:
    """Backbone + fresh linear head; never mutates checkpoint weights."""
    if num_classes < 2:
        raise ConfigError(f"classification needs at least 2 classes, got {num_classes}")
    if isinstance(source, Checkpoint):
        if source.kind != "pretrain":
            raise ConfigError(f"cannot attach a head to a {source.kind!r} checkpoint")
        config = PretrainConfig.from_dict(source.config)
        backbone = build_vision_encoder(config)
        prefix = "vision."
        backbone_state = {
            key[len(prefix):]: torch.as_tensor(value)
            for key, value in source.state.items() if key.startswith(prefix)
        }
        backbone.load_state_dict(backbone_state)
    else:
        backbone = source
    torch.manual_seed(derive_seed(seed, "head-init"))
    return ImageClassifier(backbone, num_classes)


def targets_for_samples(samples: Sequence, scheme: ClassScheme,
                        label_of: Callable = lambda s: s.birads) -> np.ndarray:
    """Scheme-mapped class targets; excluded labels must be filtered upstream."""
    targets = []
    for sample in samples:
        mapped = scheme.map(label_of(sample))
        if mapped is EXCLUDED:
            raise ContractError(
                f"sample with excluded label {label_of(sample)} reached fine-tuning "
                f"under scheme {scheme.name}; filter it upstream")
        targets.append(mapped)
    return np.asarray(targets, dtype=np.int64)


def sample_budget(samples: Sequence, n: int | str, *, seed: int = 0,
                  patient_of: Callable = lambda s: s.patient_id,
                  class_of: Callable = lambda s: s.birads) -> list:
    """Patient-level budget selection, stratified and nested across budgets.

    Whole patients enter (in a deficit-round-robin order over their
    dominant class) until the image budget is met or minimally exceeded.
    The walk order is independent of ``n``, so for a fixed seed the
    subset for a smaller budget is contained in every larger one.
    """
    samples = list(samples)
    if n == ALL or n == len(samples):
        return samples
    if not isinstance(n, int) or n < 1:
        raise BudgetError(f"budget must be a positive count or '{ALL}', got {n!r}")
    if n > len(samples):
        raise BudgetError(f"budget {n} exceeds the {len(samples)} available samples")

    by_patient: dict[str, list] = {}
    for sample in samples:
        by_patient.setdefault(str(patient_of(sample)), []).append(sample)

    def dominant(patient: str):
        counts: dict = {}
        for s in by_patient[patient]:
            counts[class_of(s)] = counts.get(class_of(s), 0) + 1
        return max(sorted(counts), key=lambda c: counts[c])

    by_class: dict = {}
    for patient in sorted(by_patient):
        by_class.setdefault(dominant(patient), []).append(patient)
    rng = rng_for(seed, "budget-order")
    class_totals = {}
    for cls in sorted(by_class):
        rng.shuffle(by_class[cls])
        class_totals[cls] = sum(len(by_patient[p]) for p in by_class[cls])

    taken = {cls: 0 for cls in by_class}
    cursors = {cls: 0 for cls in by_class}
    chosen: set[str] = set()
    selected_images = 0
    while selected_images < n:
        # class with the largest remaining deficit against its share
        candidates = [cls for cls in sorted(by_class) if cursors[cls] < len(by_class[cls])]
        if not candidates:
            break
        cls = min(candidates, key=lambda c: (taken[c] / class_totals[c], c))
        patient = by_class[cls][cursors[cls]]
        cursors[cls] += 1
        chosen.add(patient)
        block = len(by_patient[patient])
        taken[cls] += block
        selected_images += block
    return [s for s in samples if str(patient_of(s)) in chosen]


@dataclass
class FinetuneResult:
    model: ImageClassifier
    best_epoch: int
    best_val_macro_f1: float | None
    epoch_records: list[dict] = field(default_factory=list)


def _stack(images: Sequence[np.ndarray], indices, resolution) -> torch.Tensor:
    arrays = [validate_image(images[i], resolution) for i in indices]
    return torch.from_numpy(np.ascontiguousarray(np.stack(arrays).transpose(0, 3, 1, 2)))


def predict(classifier: ImageClassifier, images: Sequence[np.ndarray],
            batch_size: int = 64) -> np.ndarray:
    """Class predictions in eval mode."""
    classifier.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            chunk = list(range(start, min(start + batch_size, len(images))))
            logits = classifier(_stack(images, chunk, classifier.resolution))
            outputs.append(logits.argmax(dim=1).numpy())
    return np.concatenate(outputs) if outputs else np.zeros(0, dtype=np.int64)


def _patient_val_split(groups: Sequence[str], fraction: float, seed: int):
    if fraction <= 0.0:
        return list(range(len(groups))), []
    patients: dict[str, list[int]] = {}
    for i, g in enumerate(groups):
        patients.setdefault(str(g), []).append(i)
    names = sorted(patients)
    rng = rng_for(seed, "ft-validation-split")
    rng.shuffle(names)
    target = max(1, int(round(fraction * len(groups))))
    val: list[int] = []
    for name in names:
        if len(val) >= target or len(val) + len(patients[name]) >= len(groups):
            break
        val.extend(patients[name])
    val_set = set(val)
    train = [i for i in range(len(groups)) if i not in val_set]
    return train, sorted(val)


def finetune(classifier: ImageClassifier, images: Sequence[np.ndarray],
             targets: np.ndarray, groups: Sequence[str],
             config: FinetuneConfig) -> FinetuneResult:
    """Cross-entropy training; selects the best validation macro-F1 epoch.

    With ``validation_fraction`` 0 there is nothing to select on and the
    final-epoch model is returned.
    """
    config.validate()
    targets = np.asarray(targets, dtype=np.int64)
    if len(images) != len(targets) or len(images) != len(groups):
        raise ContractError("images, targets, and groups must align")
    if targets.size and targets.max() >= classifier.num_classes:
        raise ContractError(
            f"target {int(targets.max())} outside the {classifier.num_classes}-class head")

    train_idx, val_idx = _patient_val_split(groups, config.validation_fraction, config.seed)
    if not train_idx:
        raise ConfigError("no training samples left after the validation split")

    parameters = classifier.head.parameters() if config.freeze_backbone \
        else classifier.parameters()
    optimizer = torch.optim.AdamW(
        parameters, lr=config.learning_rate, weight_decay=config.weight_decay)

    best: tuple[float, int, dict] | None = None
    records: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        classifier.train()
        order = rng_for(config.seed, "ft-shuffle", epoch).permutation(len(train_idx))
        epoch_loss = 0.0
        seen = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_idx[i] for i in order[start:start + config.batch_size]]
            logits = classifier(_stack(images, batch, classifier.resolution))
            loss = nn.functional.cross_entropy(
                logits, torch.from_numpy(targets[batch]))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss) * len(batch)
            seen += len(batch)
        record = {"epoch": epoch, "train_loss": epoch_loss / max(seen, 1)}
        if val_idx:
            val_preds = predict(classifier, [images[i] for i in val_idx], config.batch_size)
            report = MetricReport.from_predictions(
                val_preds, targets[val_idx], classifier.num_classes, scheme=config.scheme)
            record["val_macro_f1"] = report.macro_f1
            if best is None or report.macro_f1 > best[0]:
                best = (report.macro_f1, epoch,
                        {k: v.detach().clone() for k, v in classifier.state_dict().items()})
        records.append(record)

    if best is not None:
        classifier.load_state_dict(best[2])
        return FinetuneResult(model=classifier, best_epoch=best[1],
                              best_val_macro_f1=best[0], epoch_records=records)
    return FinetuneResult(model=classifier, best_epoch=config.epochs,
                          best_val_macro_f1=None, epoch_records=records)
