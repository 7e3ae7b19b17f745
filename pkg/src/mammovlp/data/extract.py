"""Figure-caption pairing over parsed page layouts.

Each figure is matched to the nearest qualifying caption block below or
beside it within a profile-defined radius. Atlases differ in layout, so
the matching knobs (caption prefixes, radius, OCR usage) live in named
profiles. Figures that find no caption go to a rejects list; nothing is
silently dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from ..errors import ExtractionError
from .pairs import CaptionRecord, ExtractedFigure, ImageTextPair, RejectRecord, expand_shared_captions
from .pdfreader import Box, PageLayout, read_page_layouts


class OcrAdapter(Protocol):
    """External text-recovery tool behind a process/mock boundary."""

    def recognize(self, image: np.ndarray) -> str: ...


@dataclass(frozen=True)
class LayoutProfile:
    name: str
    caption_prefixes: tuple[str, ...] = (r"Figure\s+\d+", r"FIG\.?\s*\d+", r"Fig\.?\s*\d+")
    proximity_radius: float = 150.0
    # horizontal slack when deciding a caption sits "under" a figure
    horizontal_slack: float = 40.0
    captions_rasterized: bool = False
    min_figure_pixels: int = 16

    def caption_regex(self) -> re.Pattern:
        return re.compile("|".join(f"(?:{p})" for p in self.caption_prefixes))


PROFILES = {
    "generic-atlas": LayoutProfile(name="generic-atlas"),
    "rasterized-captions": LayoutProfile(name="rasterized-captions", captions_rasterized=True),
}


@dataclass
class ExtractionResult:
    pairs: list[ImageTextPair]
    rejects: list[RejectRecord]

    @property
    def figure_count(self) -> int:
        return len(self.pairs) + len(self.rejects)


def _caption_distance(figure_box: Box, caption_box: Box, slack: float) -> float | None:
    """Distance when the caption qualifies (below or beside), else None."""
    below = caption_box.top >= figure_box.bottom - 1.0
    overlaps_h = caption_box.right >= figure_box.left - slack \
        and caption_box.left <= figure_box.right + slack
    if below and overlaps_h:
        return caption_box.top - figure_box.bottom
    beside = caption_box.left >= figure_box.right - 1.0 \
        and caption_box.top <= figure_box.bottom \
        and caption_box.bottom >= figure_box.top
    if beside:
        return caption_box.left - figure_box.right
    return None


def extract_pairs_from_layouts(layouts: list[PageLayout], profile: LayoutProfile,
                               document_id: str,
                               ocr_adapter: OcrAdapter | None = None) -> ExtractionResult:
    """Pair every figure with its nearest qualifying caption.

    Conservation: every detected figure lands in exactly one of
    ``pairs`` or ``rejects``.
    """
    pattern = profile.caption_regex()
    matched: dict[int, tuple[CaptionRecord, list[ExtractedFigure]]] = {}
    rejects: list[RejectRecord] = []
    caption_key = 0

    for layout in layouts:
        captions = [block for block in layout.text_blocks if pattern.search(block.text)]
        page_matches: dict[int, tuple[CaptionRecord, list[ExtractedFigure]]] = {}
        for fig_index, page_image in enumerate(layout.figures):
            figure = ExtractedFigure(
                pixels=page_image.pixels,
                page=layout.number,
                box=page_image.box,
                source=document_id,
                figure_id=f"{document_id}-p{layout.number:03d}-f{fig_index:02d}",
            )
            if figure.pixels.size < profile.min_figure_pixels:
                rejects.append(RejectRecord(figure.figure_id, "figure-too-small"))
                continue
            best = None
            for c_index, block in enumerate(captions):
                distance = _caption_distance(figure.box, block.box, profile.horizontal_slack)
                if distance is not None and distance <= profile.proximity_radius:
                    if best is None or distance < best[0]:
                        best = (distance, c_index, block)
            if best is not None:
                _, c_index, block = best
                if c_index not in page_matches:
                    page_matches[c_index] = (
                        CaptionRecord(text=block.text, page=layout.number, box=block.box),
                        [],
                    )
                page_matches[c_index][1].append(figure)
            elif profile.captions_rasterized:
                if ocr_adapter is None:
                    rejects.append(RejectRecord(figure.figure_id, "caption-unreadable"))
                    continue
                text = " ".join(ocr_adapter.recognize(figure.pixels).split())
                if text:
                    page_matches[len(captions) + fig_index] = (
                        CaptionRecord(text=text, page=layout.number, ocr_flag=True),
                        [figure],
                    )
                else:
                    rejects.append(RejectRecord(figure.figure_id, "caption-unreadable"))
            else:
                rejects.append(RejectRecord(figure.figure_id, "no-caption-within-radius"))
        for key in sorted(page_matches):
            matched[caption_key] = page_matches[key]
            caption_key += 1

    pairs: list[ImageTextPair] = []
    for caption, figures in matched.values():
        pairs.extend(expand_shared_captions(caption, figures))
    pairs.sort(key=lambda p: p.pair_id)
    rejects.sort(key=lambda r: r.figure_ref)
    return ExtractionResult(pairs=pairs, rejects=rejects)


def extract_pairs(document_path: str | Path, profile: LayoutProfile,
                  ocr_adapter: OcrAdapter | None = None) -> ExtractionResult:
    """Parse a document and run figure-caption pairing on its layouts."""
    path = Path(document_path)
    if not path.exists():
        raise ExtractionError(f"document not found: {path}")
    layouts = read_page_layouts(path)
    return extract_pairs_from_layouts(layouts, profile, document_id=path.stem,
                                      ocr_adapter=ocr_adapter)
