"""BI-RADS label schemes.

Raw labels run 0..6. The 5-class scheme merges 6 into the class of 5 and
drops 3; the 3-class scheme additionally merges {1,2} and {4,5,6} into
benign/suspicious groups with 0 (incomplete) on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class _Excluded:
    """Sentinel for labels a scheme drops from training and evaluation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EXCLUDED"


EXCLUDED = _Excluded()

VALID_BIRADS = frozenset(range(7))


def validate_birads(value: int) -> int:
    value = int(value)
    if value not in VALID_BIRADS:
        raise ValueError(f"BI-RADS label must be one of 0..6, got {value}")
    return value


@dataclass(frozen=True)
class ClassScheme:
    """Total mapping from raw labels to class indices (or EXCLUDED)."""

    name: str
    mapping: dict
    num_classes: int
    class_names: tuple = field(default=())

    def map(self, label: int):
        if label not in self.mapping:
            raise ValueError(f"label {label} outside scheme '{self.name}' domain")
        return self.mapping[label]

    def kept_labels(self) -> list:
        return [raw for raw, cls in self.mapping.items() if cls is not EXCLUDED]


FIVE_CLASS = ClassScheme(
    name="FIVE",
    mapping={1: 0, 2: 1, 0: 2, 4: 3, 5: 4, 6: 4, 3: EXCLUDED},
    num_classes=5,
    class_names=("birads1", "birads2", "birads0", "birads4", "birads5+6"),
)

THREE_CLASS = ClassScheme(
    name="THREE",
    mapping={1: 0, 2: 0, 0: 1, 4: 2, 5: 2, 6: 2, 3: EXCLUDED},
    num_classes=3,
    class_names=("benign", "incomplete", "suspicious"),
)

SCHEMES = {scheme.name: scheme for scheme in (FIVE_CLASS, THREE_CLASS)}


def identity_scheme(num_classes: int, name: str | None = None) -> ClassScheme:
    """Pass-through scheme for synthetic tasks whose labels are already
    class indices."""
    return ClassScheme(
        name=name or f"IDENTITY{num_classes}",
        mapping={i: i for i in range(num_classes)},
        num_classes=num_classes,
        class_names=tuple(f"class{i}" for i in range(num_classes)),
    )


def map_label(label: int, scheme: ClassScheme):
    """Scheme lookup; total on the scheme's domain."""
    return scheme.map(label)
