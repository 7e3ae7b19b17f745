"""Patient-level k-fold assignment.

Folds partition patients, never images, so no patient can appear on both
sides of a train/test boundary. Assignment walks patients grouped by
their dominant class with a single rotating cursor, which keeps fold
sizes within one patient of each other while spreading classes evenly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

from ..errors import SplitError
from ..seeding import rng_for


@dataclass
class FoldAssignment:
    k: int
    fold_of_patient: dict[str, int]

    def patients_in_fold(self, fold: int) -> list[str]:
        return sorted(p for p, f in self.fold_of_patient.items() if f == fold)

    def fold_sizes(self) -> list[int]:
        counts = Counter(self.fold_of_patient.values())
        return [counts.get(f, 0) for f in range(self.k)]

    def split(self, samples: Sequence, fold: int,
              patient_of: Callable = lambda s: s.patient_id):
        """(train, test) sample lists for one held-out fold."""
        train, test = [], []
        for sample in samples:
            if self.fold_of_patient[patient_of(sample)] == fold:
                test.append(sample)
            else:
                train.append(sample)
        return train, test


def kfold_split(samples: Sequence, k: int = 4, *, seed: int = 0,
                patient_of: Callable = lambda s: s.patient_id,
                class_of: Callable | None = None) -> FoldAssignment:
    """Deterministic, approximately class-stratified patient partition."""
    by_patient: dict[str, list] = {}
    for sample in samples:
        by_patient.setdefault(str(patient_of(sample)), []).append(sample)
    patients = sorted(by_patient)
    if len(patients) < k:
        raise SplitError(f"need at least {k} distinct patients, got {len(patients)}")

    def dominant_class(patient: str):
        if class_of is None:
            return 0
        counts = Counter(class_of(s) for s in by_patient[patient])
        # majority class; ties break on the smaller class value
        return max(sorted(counts), key=lambda c: counts[c])

    strata: dict = {}
    for patient in patients:
        strata.setdefault(dominant_class(patient), []).append(patient)

    rng = rng_for(seed, "kfold")
    ordered: list[str] = []
    for stratum in sorted(strata):
        members = strata[stratum]
        rng.shuffle(members)
        ordered.extend(members)

    return FoldAssignment(k=k, fold_of_patient={p: i % k for i, p in enumerate(ordered)})
