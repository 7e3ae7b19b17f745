"""Image-text pair records and their on-disk layout.

Extraction output is a directory of 8-bit grayscale PNGs plus
``pairs.jsonl`` ({pair_id, image_file, caption, source, page, ocr_flag})
and ``rejects.jsonl`` ({figure_ref, reason}).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from ..errors import ContractError
from .pdfreader import Box


@dataclass
class ExtractedFigure:
    pixels: np.ndarray  # (H, W) uint8
    page: int
    box: Box
    source: str  # document id
    figure_id: str


@dataclass
class CaptionRecord:
    text: str
    page: int
    box: Box | None = None
    ocr_flag: bool = False

    def __post_init__(self):
        self.text = " ".join(self.text.split())
        if not self.text:
            raise ContractError("caption text is empty after whitespace normalization")


@dataclass
class ImageTextPair:
    pair_id: str
    caption: str
    source: str
    page: int
    ocr_flag: bool = False
    image_file: str | None = None
    figure: ExtractedFigure | None = field(default=None, repr=False)

    def to_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "image_file": self.image_file,
            "caption": self.caption,
            "source": self.source,
            "page": self.page,
            "ocr_flag": self.ocr_flag,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ImageTextPair":
        return cls(
            pair_id=record["pair_id"],
            caption=record["caption"],
            source=record.get("source", ""),
            page=int(record.get("page", 0)),
            ocr_flag=bool(record.get("ocr_flag", False)),
            image_file=record.get("image_file"),
        )


@dataclass
class RejectRecord:
    figure_ref: str
    reason: str

    def to_record(self) -> dict:
        return {"figure_ref": self.figure_ref, "reason": self.reason}


def expand_shared_captions(caption: CaptionRecord,
                           figures: list[ExtractedFigure]) -> list[ImageTextPair]:
    """One pair per figure sharing a caption, each with a distinct id."""
    if not figures:
        raise ContractError("a caption must describe at least one figure")
    pairs = []
    for figure in figures:
        pairs.append(ImageTextPair(
            pair_id=figure.figure_id,
            caption=caption.text,
            source=figure.source,
            page=figure.page,
            ocr_flag=caption.ocr_flag,
            figure=figure,
        ))
    return pairs


def write_pairs(pairs: list[ImageTextPair], rejects: list[RejectRecord],
                out_dir: str | Path) -> tuple[Path, Path]:
    """Persist pairs (PNG images + pairs.jsonl) and rejects.jsonl.

    Output order is sorted by pair id so parallel extraction stays
    byte-reproducible.
    """
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    pairs_path = out_dir / "pairs.jsonl"
    rejects_path = out_dir / "rejects.jsonl"
    with open(pairs_path, "w", encoding="utf-8") as fh:
        for pair in sorted(pairs, key=lambda p: p.pair_id):
            if pair.figure is not None:
                pair.image_file = f"images/{pair.pair_id}.png"
                ok = cv2.imwrite(str(out_dir / pair.image_file), pair.figure.pixels)
                if not ok:
                    raise ContractError(f"failed to write image for pair {pair.pair_id}")
            fh.write(json.dumps(pair.to_record(), sort_keys=True) + "\n")
    with open(rejects_path, "w", encoding="utf-8") as fh:
        for reject in sorted(rejects, key=lambda r: r.figure_ref):
            fh.write(json.dumps(reject.to_record(), sort_keys=True) + "\n")
    return pairs_path, rejects_path


def read_pairs(pairs_path: str | Path) -> list[ImageTextPair]:
    pairs = []
    with open(pairs_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                pairs.append(ImageTextPair.from_record(json.loads(line)))
    return pairs
