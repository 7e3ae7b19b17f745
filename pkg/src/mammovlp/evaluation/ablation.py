"""Shifted-budget comparison: pretrained arm at n vs baseline at n+offset.

For every budget, both arms fine-tune and evaluate across all k folds;
the table reports mean and population std of macro-F1 per arm, plus
learning-curve data. Cells are independent, so a parallel runner could
execute them concurrently; this implementation runs them sequentially
and is deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from typing import TYPE_CHECKING

from ..errors import ConfigError
from ..seeding import derive_seed
from .folds import kfold_split
from .metrics import MetricReport, summarize_folds
from .schemes import ClassScheme

if TYPE_CHECKING:  # real imports happen inside run_ablation (layer cycle)
    from ..training.checkpoint import Checkpoint
    from ..training.config import FinetuneConfig

ALL = "all"  # mirrors training.config.ALL without importing it at load time

logger = logging.getLogger(__name__)

VLM_ARM = "vlm"
BASELINE_ARM = "baseline"


@dataclass
class AblationRow:
    vlm_budget: int | str
    baseline_budget: int | str
    vlm: dict
    baseline: dict


@dataclass
class AblationResult:
    scheme: str
    offset: int
    folds: int
    rows: list[AblationRow]
    reports: list[MetricReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "offset": self.offset,
            "folds": self.folds,
            "rows": [
                {
                    "vlm_budget": row.vlm_budget,
                    "baseline_budget": row.baseline_budget,
                    "vlm": row.vlm,
                    "baseline": row.baseline,
                }
                for row in self.rows
            ],
            "reports": [report.to_dict() for report in self.reports],
        }

    def to_text_table(self) -> str:
        header = ["VLM n", "Baseline n", "VLM macro-F1", "Baseline macro-F1"]
        lines = [header]
        for row in self.rows:
            lines.append([
                str(row.vlm_budget),
                str(row.baseline_budget),
                f"{row.vlm['mean_macro_f1']:.3f}±{row.vlm['std_macro_f1']:.3f}",
                f"{row.baseline['mean_macro_f1']:.3f}±{row.baseline['std_macro_f1']:.3f}",
            ])
        widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
        rendered = []
        for line in lines:
            rendered.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip())
        rendered.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(rendered) + "\n"

    def to_summary_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["vlm_budget", "baseline_budget",
                         "vlm_mean", "vlm_std", "baseline_mean", "baseline_std"])
        for row in self.rows:
            writer.writerow([
                row.vlm_budget, row.baseline_budget,
                f"{row.vlm['mean_macro_f1']:.6f}", f"{row.vlm['std_macro_f1']:.6f}",
                f"{row.baseline['mean_macro_f1']:.6f}", f"{row.baseline['std_macro_f1']:.6f}",
            ])
        return buffer.getvalue()

    def to_learning_curve_csv(self) -> str:
        """Budget vs macro-F1 per arm, one row per (arm, budget)."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["arm", "budget", "mean_macro_f1", "std_macro_f1"])
        for row in self.rows:
            writer.writerow([VLM_ARM, row.vlm_budget,
                             f"{row.vlm['mean_macro_f1']:.6f}", f"{row.vlm['std_macro_f1']:.6f}"])
            writer.writerow([BASELINE_ARM, row.baseline_budget,
                             f"{row.baseline['mean_macro_f1']:.6f}",
                             f"{row.baseline['std_macro_f1']:.6f}"])
        return buffer.getvalue()

    def write(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "ablation.json").write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
        (out_dir / "ablation_table.txt").write_text(self.to_text_table(), encoding="utf-8")
        (out_dir / "ablation_summary.csv").write_text(self.to_summary_csv(), encoding="utf-8")
        (out_dir / "learning_curve.csv").write_text(self.to_learning_curve_csv(), encoding="utf-8")


def run_ablation(samples: Sequence, image_of: Callable[[object], np.ndarray],
                 budgets: Sequence[int | str], pretrain_checkpoint: "Checkpoint",
                 scheme: ClassScheme, finetune_config: "FinetuneConfig", *,
                 baseline_checkpoint: "Checkpoint | None" = None,
                 offset: int = 2000, k: int = 4, seed: int = 0) -> AblationResult:
    """Fold x budget x arm grid, reported like a shifted-budget table.

    ``samples`` must already be filtered to labels the scheme keeps.
    The baseline arm starts from ``baseline_checkpoint`` when given,
    otherwise from a freshly initialized backbone. Cell seeds depend only
    on (seed, fold, budget), so with offset 0 and a shared checkpoint
    both arms run identically.
    """
    from ..training.config import PretrainConfig
    from ..training.finetune import (
        attach_head,
        build_vision_encoder,
        finetune,
        predict,
        sample_budget,
        targets_for_samples,
    )

    if pretrain_checkpoint is None:
        raise ConfigError("ablation requires a pretraining checkpoint for the VLM arm")
    samples = list(samples)
    all_targets = targets_for_samples(samples, scheme)
    target_of = {id(s): int(t) for s, t in zip(samples, all_targets)}
    class_of = lambda s: target_of[id(s)]  # noqa: E731

    assignment = kfold_split(
        samples, k, seed=derive_seed(seed, "ablation-folds"), class_of=class_of)
    splits = [assignment.split(samples, fold) for fold in range(k)]
    min_pool = min(len(train_pool) for train_pool, _ in splits)

    budget_pairs: list[tuple[int | str, int | str]] = []
    for budget in budgets:
        if budget == ALL:
            budget_pairs.append((ALL, ALL))
        else:
            shifted = budget + offset
            budget_pairs.append((budget, shifted if shifted <= min_pool else ALL))

    def make_classifier(arm: str, fold: int, budget, cell_seed: int):
        if arm == VLM_ARM:
            return attach_head(pretrain_checkpoint, scheme.num_classes, seed=cell_seed)
        if baseline_checkpoint is not None:
            return attach_head(baseline_checkpoint, scheme.num_classes, seed=cell_seed)
        config = PretrainConfig.from_dict(pretrain_checkpoint.config)
        config.seed = derive_seed(seed, "scratch-backbone", fold, str(budget))
        backbone = build_vision_encoder(config)
        return attach_head(backbone, scheme.num_classes, seed=cell_seed)

    def run_cell(arm: str, fold: int, budget, train_pool, test_images, test_targets):
        subset = sample_budget(
            train_pool, budget, seed=derive_seed(seed, "budget-walk", fold),
            class_of=class_of)
        cell_seed = derive_seed(seed, "cell", fold, str(budget))
        classifier = make_classifier(arm, fold, budget, cell_seed)
        cell_config = replace(finetune_config, budget=budget, seed=cell_seed,
                              scheme=scheme.name)
        result = finetune(
            classifier,
            [image_of(s) for s in subset],
            np.asarray([class_of(s) for s in subset], dtype=np.int64),
            [s.patient_id for s in subset],
            cell_config)
        predictions = predict(result.model, test_images, cell_config.batch_size)
        report = MetricReport.from_predictions(
            predictions, test_targets, scheme.num_classes, scheme=scheme.name,
            fold_index=fold, budget=budget, arm=arm)
        logger.info("fold %d %s arm, budget %s: macro-F1 %.4f",
                    fold, arm, budget, report.macro_f1)
        return report

    reports: list[MetricReport] = []
    for fold, (train_pool, test) in enumerate(splits):
        test_images = [image_of(s) for s in test]
        test_targets = np.asarray([class_of(s) for s in test], dtype=np.int64)
        for vlm_budget, baseline_budget in budget_pairs:
            reports.append(run_cell(
                VLM_ARM, fold, vlm_budget, train_pool, test_images, test_targets))
            reports.append(run_cell(
                BASELINE_ARM, fold, baseline_budget, train_pool, test_images, test_targets))

    rows = []
    for vlm_budget, baseline_budget in budget_pairs:
        vlm_reports = [r for r in reports if r.arm == VLM_ARM and r.budget == vlm_budget]
        baseline_reports = [r for r in reports
                            if r.arm == BASELINE_ARM and r.budget == baseline_budget]
        rows.append(AblationRow(
            vlm_budget=vlm_budget,
            baseline_budget=baseline_budget,
            vlm=summarize_folds(vlm_reports),
            baseline=summarize_folds(baseline_reports),
        ))
    return AblationResult(
        scheme=scheme.name, offset=offset, folds=k, rows=rows, reports=reports)
