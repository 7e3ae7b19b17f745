"""Image preprocessing: breast-region cropping and letterbox resizing.

Cropping prefers a supplied detector adapter (the production path uses an
external detection model behind this boundary); without one, a
deterministic fallback thresholds the image, keeps the largest connected
component, and crops its bounding box with a 2% margin.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

import cv2
import numpy as np

from ..errors import ShapeError

logger = logging.getLogger(__name__)

CROP_MARGIN_FRACTION = 0.02


@dataclass(frozen=True)
class DetectionBox:
    """Pixel box, half-open on the bottom/right edges."""

    y0: int
    x0: int
    y1: int
    x1: int
    confidence: float = 1.0


class BreastDetector(Protocol):
    def detect(self, image: np.ndarray) -> list[DetectionBox]: ...


@dataclass
class CropResult:
    image: np.ndarray
    box: DetectionBox
    source: str  # "detector" | "fallback"
    flagged: bool = False


def _to_gray_2d(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise ShapeError(f"expected a grayscale image, got shape {arr.shape}")
    return arr


def _as_uint8(gray: np.ndarray) -> np.ndarray:
    if gray.dtype == np.uint8:
        return gray
    return np.clip(gray * 255.0, 0, 255).astype(np.uint8)


def _fallback_box(gray: np.ndarray) -> DetectionBox | None:
    u8 = _as_uint8(gray)
    if u8.max() == u8.min():
        return None
    _, binary = cv2.threshold(u8, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
    if not binary.any():
        return None
    count, labels, stats, _ = cv2.connectedComponentsWithStats(binary, connectivity=8)
    if count <= 1:
        return None
    largest = 1 + int(np.argmax(stats[1:, cv2.CC_STAT_AREA]))
    x0 = int(stats[largest, cv2.CC_STAT_LEFT])
    y0 = int(stats[largest, cv2.CC_STAT_TOP])
    w = int(stats[largest, cv2.CC_STAT_WIDTH])
    h = int(stats[largest, cv2.CC_STAT_HEIGHT])
    my = int(round(CROP_MARGIN_FRACTION * h))
    mx = int(round(CROP_MARGIN_FRACTION * w))
    return DetectionBox(
        y0=max(0, y0 - my),
        x0=max(0, x0 - mx),
        y1=min(gray.shape[0], y0 + h + my),
        x1=min(gray.shape[1], x0 + w + mx),
    )


def crop_breast(image: np.ndarray, detector: BreastDetector | None = None) -> CropResult:
    """Crop to the highest-confidence detector box, or the fallback box."""
    gray = _to_gray_2d(image)
    source = "fallback"
    box: DetectionBox | None = None
    if detector is not None:
        boxes = detector.detect(gray)
        if boxes:
            box = max(boxes, key=lambda b: b.confidence)
            source = "detector"
        else:
            logger.warning("detector returned no box; using fallback crop")
    if box is None:
        box = _fallback_box(gray)
    if box is None:
        # nothing croppable (constant image): leave input unchanged
        full = DetectionBox(0, 0, gray.shape[0], gray.shape[1])
        return CropResult(image=gray.copy(), box=full, source="fallback", flagged=True)
    cropped = gray[box.y0:box.y1, box.x0:box.x1].copy()
    return CropResult(image=cropped, box=box, source=source)


def resize_letterbox(image: np.ndarray, target: tuple[int, int] = (1024, 768)) -> np.ndarray:
    """Aspect-preserving resize, zero-padded to exactly ``target`` (H, W).

    Returns an (H, W, 1) float32 array in [0, 1]. Padding splits evenly,
    with the odd pixel going to the bottom/right band.
    """
    gray = _to_gray_2d(image)
    h, w = gray.shape
    if h == 0 or w == 0:
        raise ShapeError("cannot letterbox an empty image")
    if gray.dtype == np.uint8:
        gray = gray.astype(np.float32) / 255.0
    else:
        gray = gray.astype(np.float32)
    th, tw = int(target[0]), int(target[1])
    scale = min(th / h, tw / w)
    nh = min(th, max(1, int(round(h * scale))))
    nw = min(tw, max(1, int(round(w * scale))))
    if (nh, nw) != (h, w):
        resized = cv2.resize(gray, (nw, nh), interpolation=cv2.INTER_LINEAR)
    else:
        resized = gray
    top = (th - nh) // 2
    left = (tw - nw) // 2
    canvas = np.zeros((th, tw), dtype=np.float32)
    canvas[top:top + nh, left:left + nw] = resized
    return canvas[:, :, None]
