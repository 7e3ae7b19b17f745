"""Projection heads bridging encoder-native widths to the joint space.

One linear layer per modality followed by L2 normalization, so the dot
product of two projected vectors is their cosine similarity.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from ..errors import ShapeError

NORM_EPS = 1e-12


def l2_normalize(x: torch.Tensor, eps: float = NORM_EPS) -> torch.Tensor:
    """x / max(||x||, eps) along the last axis; never emits NaN."""
    norm = torch.linalg.vector_norm(x, dim=-1, keepdim=True)
    return x / torch.clamp(norm, min=eps)


class ProjectionHead(nn.Module):
    """Linear map into the d-dimensional joint space, unit-normalized."""

    def __init__(self, input_width: int, output_dim: int):
        super().__init__()
        self.input_width = input_width
        self.output_dim = output_dim
        self.linear = nn.Linear(input_width, output_dim)

    @classmethod
    def identity(cls, width: int) -> "ProjectionHead":
        head = cls(width, width)
        with torch.no_grad():
            head.linear.weight.copy_(torch.eye(width))
            head.linear.bias.zero_()
        return head

    def forward(self, raw: torch.Tensor) -> torch.Tensor:
        if raw.shape[-1] != self.input_width:
            raise ShapeError(
                f"raw width {raw.shape[-1]} != head input width {self.input_width}"
            )
        return l2_normalize(self.linear(raw))


def project(raw: np.ndarray, head: ProjectionHead) -> np.ndarray:
    """Project a single raw embedding to a unit vector in the joint space."""
    arr = np.asarray(raw, dtype=np.float32)
    if arr.ndim != 1:
        raise ShapeError(f"expected a 1-d raw embedding, got shape {arr.shape}")
    with torch.no_grad():
        out = head(torch.from_numpy(arr)[None])
    return out[0].numpy()
