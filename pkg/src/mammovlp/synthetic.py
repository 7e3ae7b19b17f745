"""Procedural desk-scale corpora: motif images with descriptive captions.

Eight shape/texture motifs are drawn on small grayscale canvases with a
size, a shade, and a grid position; captions name all four properties
through a handful of sentence templates over a compact vocabulary. The
same drawing code produces labeled classification sets (motif = class)
with patients holding four views each.
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .seeding import rng_for

MOTIFS = ("disk", "ring", "cross", "square", "triangle", "stripes", "checker", "dots")
SIZES = {"small": 0.13, "medium": 0.18, "large": 0.24}
SHADES = {"faint": 0.5, "bright": 1.0}
VPOS = {"upper": 0.30, "lower": 0.70}
HPOS = {"left": 0.22, "middle": 0.50, "right": 0.78}

_TEMPLATES = (
    "a {shade} {size} {motif} in the {vpos} {hpos} of the canvas",
    "the image shows a {size} {shade} {motif} near the {vpos} {hpos} region",
    "this {motif} pattern is {size} and {shade} and sits at the {vpos} {hpos}",
)

VIEWS = ("LCC", "LMLO", "RCC", "RMLO")


def vocabulary() -> list[str]:
    """Every word the caption templates can emit, sorted."""
    words = set(MOTIFS) | set(SIZES) | set(SHADES) | set(VPOS) | set(HPOS)
    for template in _TEMPLATES:
        for token in template.replace("{", " ").replace("}", " ").split():
            if not token.isidentifier() or token in ("motif", "size", "shade", "vpos", "hpos"):
                continue
            words.add(token)
    out = sorted(words)
    assert len(out) <= 64, f"caption vocabulary grew past 64 words ({len(out)})"
    return out


@dataclass
class Combo:
    motif: str
    size: str
    shade: str
    vpos: str
    hpos: str

    @property
    def motif_index(self) -> int:
        return MOTIFS.index(self.motif)


def all_combos() -> list[Combo]:
    return [
        Combo(m, s, sh, v, h)
        for m in MOTIFS for s in SIZES for sh in SHADES for v in VPOS for h in HPOS
    ]


def draw_motif(combo: Combo, resolution: tuple[int, int],
               rng: np.random.Generator, noise: float = 0.05) -> np.ndarray:
    """Render one combo as an (H, W, 1) float32 image in [0, 1]."""
    h, w = resolution
    scale = min(h, w)
    r = SIZES[combo.size] * scale
    shade = SHADES[combo.shade]
    cy = VPOS[combo.vpos] * h + rng.uniform(-0.03, 0.03) * h
    cx = HPOS[combo.hpos] * w + rng.uniform(-0.03, 0.03) * w
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dy, dx = yy - cy, xx - cx
    dist = np.hypot(dy, dx)

    motif = combo.motif
    if motif == "disk":
        mask = dist <= r
    elif motif == "ring":
        mask = (dist <= r) & (dist >= 0.62 * r)
    elif motif == "cross":
        mask = ((np.abs(dy) <= 0.30 * r) & (np.abs(dx) <= r)) \
            | ((np.abs(dx) <= 0.30 * r) & (np.abs(dy) <= r))
    elif motif == "square":
        mask = (np.abs(dy) <= 0.85 * r) & (np.abs(dx) <= 0.85 * r)
    elif motif == "triangle":
        progress = (dy + r) / 2.0
        mask = (dy >= -r) & (dy <= r) & (np.abs(dx) <= np.maximum(progress, 0.0) * 0.9)
    elif motif == "stripes":
        in_box = (np.abs(dy) <= r) & (np.abs(dx) <= r)
        mask = in_box & (np.floor((dy + r) / (0.4 * r)).astype(int) % 2 == 0)
    elif motif == "checker":
        in_box = (np.abs(dy) <= r) & (np.abs(dx) <= r)
        cells = np.floor((dy + r) / (0.5 * r)).astype(int) + np.floor((dx + r) / (0.5 * r)).astype(int)
        mask = in_box & (cells % 2 == 0)
    elif motif == "dots":
        centers = [(-0.62 * r, -0.62 * r), (-0.62 * r, 0.0), (-0.62 * r, 0.62 * r),
                   (0.0, -0.62 * r), (0.0, 0.0), (0.0, 0.62 * r),
                   (0.62 * r, -0.62 * r), (0.62 * r, 0.0), (0.62 * r, 0.62 * r)]
        mask = np.zeros((h, w), dtype=bool)
        for oy, ox in centers:
            mask |= np.hypot(dy - oy, dx - ox) <= 0.22 * r
    else:
        raise ValueError(f"unknown motif {motif}")

    canvas = rng.normal(0.0, noise, size=(h, w))
    canvas[mask] = shade + rng.normal(0.0, noise, size=int(mask.sum()))
    return np.clip(canvas, 0.0, 1.0).astype(np.float32)[:, :, None]


def caption_for(combo: Combo, template_index: int) -> str:
    return _TEMPLATES[template_index % len(_TEMPLATES)].format(
        motif=combo.motif, size=combo.size, shade=combo.shade,
        vpos=combo.vpos, hpos=combo.hpos,
    )


@dataclass
class SyntheticPair:
    pair_id: str
    image: np.ndarray
    caption: str
    combo: Combo
    group: str  # provenance-like grouping for validation splits


def build_pair_corpus(n: int = 256, resolution: tuple[int, int] = (128, 96),
                      seed: int = 0, noise: float = 0.05) -> list[SyntheticPair]:
    """``n`` pairs over distinct combos, so every caption is unique."""
    combos = all_combos()
    if n > len(combos):
        raise ValueError(f"at most {len(combos)} distinct combos available, asked for {n}")
    rng = rng_for(seed, "pair-corpus")
    order = rng.permutation(len(combos))[:n]
    pairs = []
    for i, combo_index in enumerate(order):
        combo = combos[int(combo_index)]
        image = draw_motif(combo, resolution, rng, noise=noise)
        caption = caption_for(combo, int(rng.integers(0, len(_TEMPLATES))))
        pairs.append(SyntheticPair(
            pair_id=f"synth-{i:04d}", image=image, caption=caption,
            combo=combo, group=f"g{i:04d}",
        ))
    return pairs


@dataclass
class ClassifiedImage:
    image: np.ndarray
    target: int  # motif index
    patient_id: str
    view: str
    attributes: Combo = field(repr=False, default=None)


def build_classification_set(n_patients: int, resolution: tuple[int, int] = (128, 96),
                             seed: int = 0, images_per_patient: int = 4,
                             noise: float = 0.05) -> list[ClassifiedImage]:
    """Labeled motif images; each patient carries one motif across views."""
    rng = rng_for(seed, "classification-set")
    samples = []
    for p in range(n_patients):
        motif = MOTIFS[int(rng.integers(0, len(MOTIFS)))]
        patient_id = f"pat{p:04d}"
        for v in range(images_per_patient):
            combo = Combo(
                motif=motif,
                size=list(SIZES)[int(rng.integers(0, len(SIZES)))],
                shade=list(SHADES)[int(rng.integers(0, len(SHADES)))],
                vpos=list(VPOS)[int(rng.integers(0, len(VPOS)))],
                hpos=list(HPOS)[int(rng.integers(0, len(HPOS)))],
            )
            samples.append(ClassifiedImage(
                image=draw_motif(combo, resolution, rng, noise=noise),
                target=combo.motif_index,
                patient_id=patient_id,
                view=VIEWS[v % len(VIEWS)],
                attributes=combo,
            ))
    return samples


def write_pair_corpus(pairs: list[SyntheticPair], out_dir: str | Path) -> Path:
    """Persist as the standard extraction output layout (PNGs + pairs.jsonl)."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    pairs_path = out_dir / "pairs.jsonl"
    with open(pairs_path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            image_file = f"images/{pair.pair_id}.png"
            cv2.imwrite(str(out_dir / image_file),
                        (pair.image[:, :, 0] * 255).round().astype(np.uint8))
            fh.write(json.dumps({
                "pair_id": pair.pair_id, "image_file": image_file,
                "caption": pair.caption, "source": "synthetic",
                "page": 0, "ocr_flag": False,
            }, sort_keys=True) + "\n")
    return pairs_path


def write_classification_manifest(samples: list[ClassifiedImage], out_dir: str | Path,
                                  birads_of_motif: dict[int, int],
                                  dataset_name: str = "synthetic") -> Path:
    """Persist labeled images + a manifest CSV, mapping motifs to labels."""
    from .data.manifest import LabeledSample, Manifest, write_manifest

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    rows = []
    for i, sample in enumerate(samples):
        image_file = f"images/{sample.patient_id}_{sample.view}_{i:05d}.png"
        cv2.imwrite(str(out_dir / image_file),
                    (sample.image[:, :, 0] * 255).round().astype(np.uint8))
        rows.append(LabeledSample(
            image_path=image_file,
            patient_id=sample.patient_id,
            view=sample.view,
            birads=birads_of_motif[sample.target],
            density="",
            dataset=dataset_name,
        ))
    manifest_path = out_dir / "manifest.csv"
    write_manifest(Manifest(samples=rows, name=dataset_name), manifest_path)
    return manifest_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Generate a desk-scale synthetic pair corpus and labeled manifest.")
    parser.add_argument("out", type=Path)
    parser.add_argument("--pairs", type=int, default=256)
    parser.add_argument("--patients", type=int, default=64)
    parser.add_argument("--height", type=int, default=128)
    parser.add_argument("--width", type=int, default=96)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    resolution = (args.height, args.width)
    pairs_path = write_pair_corpus(
        build_pair_corpus(args.pairs, resolution, seed=args.seed), args.out / "pairs")
    birads_of_motif = {0: 1, 1: 2, 2: 0, 3: 4, 4: 5, 5: 6, 6: 3, 7: 1}
    manifest_path = write_classification_manifest(
        build_classification_set(args.patients, resolution, seed=args.seed),
        args.out / "labeled", birads_of_motif)
    print(pairs_path)
    print(manifest_path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
