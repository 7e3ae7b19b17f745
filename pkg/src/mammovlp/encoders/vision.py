"""Vision encoders and the encoder description record.

Images are grayscale ``(H, W, C)`` float arrays in [0, 1]. The shipped
desk-scale encoder is a small convolutional net; full-scale backbones
plug in through :class:`VisionEncoderBase`. Channel replication for
3-channel adapter encoders happens in :func:`ensure_channels`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..errors import ContractError, ShapeError


@dataclass(frozen=True)
class EncoderSpec:
    """What a pluggable encoder declares about itself."""

    kind: str  # "vision" | "text"
    output_width: int
    architecture: str
    parameter_count: int

    def __post_init__(self):
        if self.output_width <= 0:
            raise ValueError("output_width must be positive")


def validate_image(pixels: np.ndarray, resolution: tuple[int, int], channels: int = 1) -> np.ndarray:
    """Check an image against the configured resolution contract."""
    arr = np.asarray(pixels)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    expected = (resolution[0], resolution[1], channels)
    if arr.shape != expected:
        raise ShapeError(f"expected image of shape {expected}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("image contains non-finite values")
    return arr.astype(np.float32, copy=False)


def ensure_channels(pixels: np.ndarray, channels: int) -> np.ndarray:
    """Replicate a single-channel image when an encoder wants 3 channels."""
    arr = np.asarray(pixels)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.shape[2] == channels:
        return arr
    if arr.shape[2] == 1:
        return np.repeat(arr, channels, axis=2)
    raise ShapeError(f"cannot map {arr.shape[2]}-channel image to {channels} channels")


class VisionEncoderBase(nn.Module):
    """Contract every vision encoder implements.

    ``forward`` maps a ``(B, C, H, W)`` float tensor at the configured
    resolution to ``(B, output_width)`` features.
    """

    resolution: tuple[int, int]
    in_channels: int
    output_width: int

    @property
    def spec(self) -> EncoderSpec:
        return EncoderSpec(
            kind="vision",
            output_width=self.output_width,
            architecture=type(self).__name__,
            parameter_count=sum(p.numel() for p in self.parameters()),
        )

    def forward(self, images: torch.Tensor) -> torch.Tensor:  # pragma: no cover
        raise NotImplementedError


class TinyVisionEncoder(VisionEncoderBase):
    """Small convolutional encoder for desk-scale experiments.

    Strided convolutions with group norm, pooled to a fixed 4x3 grid so
    the head keeps coarse spatial layout (needed to tell apart motifs
    that differ only in position) while staying resolution-independent.
    """

    def __init__(self, resolution: tuple[int, int], in_channels: int = 1,
                 output_width: int = 128):
        super().__init__()
        self.resolution = (int(resolution[0]), int(resolution[1]))
        self.in_channels = in_channels
        self.output_width = output_width
        # full-resolution stem so fine texture survives into the /4 map
        stages = ((16, 1), (32, 2), (64, 2))
        layers: list[nn.Module] = []
        previous = in_channels
        for width, stride in stages:
            layers += [
                nn.Conv2d(previous, width, 3, stride=stride, padding=1),
                nn.GroupNorm(4, width),
                nn.GELU(),
            ]
            previous = width
        self.features = nn.Sequential(*layers)
        # avg + max over a fixed grid: mean keeps texture energy, max keeps
        # sparse shape cues; the grid keeps coarse position
        self.pool_avg = nn.AdaptiveAvgPool2d((4, 3))
        self.pool_max = nn.AdaptiveMaxPool2d((4, 3))
        self.head = nn.Linear(2 * stages[-1][0] * 4 * 3, output_width)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        expected = (self.in_channels, *self.resolution)
        if images.dim() != 4 or tuple(images.shape[1:]) != expected:
            raise ShapeError(
                f"expected (B, {expected[0]}, {expected[1]}, {expected[2]}) images, "
                f"got {tuple(images.shape)}"
            )
        x = self.features(images)
        pooled = torch.cat([self.pool_avg(x), self.pool_max(x)], dim=1)
        return self.head(pooled.flatten(1))


def encode_image(encoder: VisionEncoderBase, image: np.ndarray) -> np.ndarray:
    """Single-image convenience around ``encoder.forward`` (eval mode)."""
    arr = validate_image(image, encoder.resolution, encoder.in_channels)
    was_training = encoder.training
    encoder.eval()
    try:
        with torch.no_grad():
            tensor = torch.from_numpy(arr).permute(2, 0, 1)[None]
            out = encoder(tensor)
    finally:
        encoder.train(was_training)
    return out[0].numpy()
