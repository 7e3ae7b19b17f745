"""The full pretraining model: both encoders, projections, and fusion."""

from __future__ import annotations

import torch
from torch import nn

from .fusion import FusionModel
from .projection import ProjectionHead
from .text import TextEncoderBase
from .vision import VisionEncoderBase


class VisionLanguageModel(nn.Module):
    """Paired encoders with projection heads into a shared space.

    During training a single thread owns the parameters; in eval mode the
    module is immutable and safe to call concurrently.
    """

    def __init__(self, vision: VisionEncoderBase, text: TextEncoderBase,
                 joint_dim: int, fusion_layers: int = 4, fusion_heads: int = 4):
        super().__init__()
        self.vision = vision
        self.text = text
        self.joint_dim = joint_dim
        self.vision_projection = ProjectionHead(vision.output_width, joint_dim)
        self.text_projection = ProjectionHead(text.width, joint_dim)
        self.fusion = FusionModel(
            image_dim=joint_dim, seq_width=text.width,
            vocab_size=text.vocab_size, max_len=text.max_len,
            layers=fusion_layers, heads=fusion_heads,
        )

    def embed_images(self, images: torch.Tensor) -> torch.Tensor:
        """(B, C, H, W) -> unit-norm (B, d) joint embeddings."""
        return self.vision_projection(self.vision(images))

    def embed_texts(self, ids: torch.Tensor, mask: torch.Tensor):
        """Token ids -> (sequence reps (B, l, w), unit-norm CLS joint (B, d))."""
        seq, cls = self.text(ids, mask)
        return seq, self.text_projection(cls)

    def predict_masked(self, image_embeddings: torch.Tensor,
                       masked_ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Vocabulary logits for a batch of masked sequences, image-conditioned."""
        seq, _ = self.text(masked_ids, mask)
        return self.fusion(image_embeddings, seq, mask)
