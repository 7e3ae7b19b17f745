"""Labeled-sample manifests and the curation rules applied to them.

The on-disk format is a CSV with header
``image_path,patient_id,view,birads,density,dataset`` (UTF-8, LF). A
JSON-lines reader accepts the same fields as an alternate input format.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DataValidationError
from ..evaluation.schemes import VALID_BIRADS
from ..seeding import rng_for

logger = logging.getLogger(__name__)

ALLOWED_VIEWS = ("LCC", "LMLO", "RCC", "RMLO")
CSV_HEADER = ["image_path", "patient_id", "view", "birads", "density", "dataset"]


@dataclass(frozen=True)
class LabeledSample:
    image_path: str
    patient_id: str
    view: str
    birads: int
    density: str = ""
    dataset: str = ""


@dataclass
class Manifest:
    samples: list[LabeledSample]
    name: str = ""

    def class_counts(self) -> dict[int, int]:
        return dict(sorted(Counter(s.birads for s in self.samples).items()))

    def patients(self) -> list[str]:
        return sorted({s.patient_id for s in self.samples})

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def _validate_row(row: dict, row_number: int, seen_paths: set) -> tuple[LabeledSample | None, list[tuple[int, str]]]:
    problems: list[tuple[int, str]] = []
    path = (row.get("image_path") or "").strip()
    patient = (row.get("patient_id") or "").strip()
    view = (row.get("view") or "").strip()
    birads_raw = (row.get("birads") or "").strip()
    if not path:
        problems.append((row_number, "empty image_path"))
    elif path in seen_paths:
        problems.append((row_number, f"duplicate image path '{path}'"))
    if not patient:
        problems.append((row_number, "empty patient_id"))
    if view not in ALLOWED_VIEWS:
        problems.append((row_number, f"unknown view token '{view}'"))
    birads = None
    try:
        birads = int(birads_raw)
    except ValueError:
        problems.append((row_number, f"non-integer BI-RADS value '{birads_raw}'"))
    if birads is not None and birads not in VALID_BIRADS:
        problems.append((row_number, f"invalid BI-RADS value {birads}"))
    if problems:
        return None, problems
    seen_paths.add(path)
    return LabeledSample(
        image_path=path,
        patient_id=patient,
        view=view,
        birads=birads,
        density=(row.get("density") or "").strip(),
        dataset=(row.get("dataset") or "").strip(),
    ), []


def load_manifest(path: str | Path) -> Manifest:
    """Parse and validate a manifest; all row errors are reported together."""
    path = Path(path)
    rows: list[dict]
    if path.suffix == ".jsonl":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append(json.loads(line))
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != CSV_HEADER:
                raise DataValidationError(
                    f"manifest header must be {','.join(CSV_HEADER)}, got {reader.fieldnames}"
                )
            rows = list(reader)

    samples: list[LabeledSample] = []
    errors: list[tuple[int, str]] = []
    seen_paths: set[str] = set()
    for i, row in enumerate(rows, start=2):  # row 1 is the header
        sample, problems = _validate_row({k: str(v) for k, v in row.items()}, i, seen_paths)
        if problems:
            errors.extend(problems)
        else:
            samples.append(sample)
    if errors:
        raise DataValidationError(f"{len(errors)} invalid manifest row(s) in {path}", errors)
    return Manifest(samples=samples, name=path.stem)


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    """CSV with LF endings; ``write . load`` is the identity on valid files."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in manifest.samples:
        writer.writerow([s.image_path, s.patient_id, s.view, s.birads, s.density, s.dataset])
    Path(path).write_text(buffer.getvalue(), encoding="utf-8")


def filter_views(manifest: Manifest) -> tuple[Manifest, dict[str, int]]:
    """Drop samples outside the four laterality+view tokens.

    Loading already enforces the view vocabulary, so this matters for
    manifests built in memory from wider sources.
    """
    kept = [s for s in manifest.samples if s.view in ALLOWED_VIEWS]
    removed = Counter(s.view for s in manifest.samples if s.view not in ALLOWED_VIEWS)
    if removed:
        logger.info("filter_views removed %d sample(s): %s", sum(removed.values()), dict(removed))
    return Manifest(samples=kept, name=manifest.name), dict(removed)


def cap_class_counts(manifest: Manifest, cap: int = 25000,
                     capped_labels: frozenset = frozenset({1, 2}), *,
                     seed: int = 0, patient_coherent: bool = False) -> Manifest:
    """Down-sample over-represented classes to exactly ``cap`` images.

    Uniform seeded selection per capped label; all other labels pass
    through untouched and the original manifest order is preserved. With
    ``patient_coherent`` the selection walks whole patients and tops up
    with a partial patient only when needed to land exactly on the cap.
    """
    keep_indices: set[int] = set()
    by_label: dict[int, list[int]] = {}
    for idx, sample in enumerate(manifest.samples):
        by_label.setdefault(sample.birads, []).append(idx)

    for label, indices in by_label.items():
        if label not in capped_labels or len(indices) <= cap:
            keep_indices.update(indices)
            continue
        rng = rng_for(seed, "class-cap", label)
        if patient_coherent:
            patients: dict[str, list[int]] = {}
            for idx in indices:
                patients.setdefault(manifest.samples[idx].patient_id, []).append(idx)
            order = sorted(patients)
            rng.shuffle(order)
            chosen: list[int] = []
            for patient in order:
                remaining = cap - len(chosen)
                if remaining <= 0:
                    break
                block = patients[patient]
                chosen.extend(block if len(block) <= remaining else block[:remaining])
            keep_indices.update(chosen)
        else:
            chosen = rng.choice(len(indices), size=cap, replace=False)
            keep_indices.update(indices[int(i)] for i in chosen)

    kept = [s for idx, s in enumerate(manifest.samples) if idx in keep_indices]
    return Manifest(samples=kept, name=manifest.name)
