"""Transformer fusion model for image-conditioned token prediction.

The image embedding is linearly mapped to the sequence width and
prepended to the masked text sequence as an extra position; a small
transformer processes the concatenation and a linear head emits
vocabulary logits for every text position.
"""

from __future__ import annotations

import torch
from torch import nn

from ..errors import ShapeError


class FusionModel(nn.Module):
    def __init__(self, image_dim: int, seq_width: int, vocab_size: int,
                 max_len: int, layers: int = 4, heads: int = 4):
        super().__init__()
        self.image_dim = image_dim
        self.seq_width = seq_width
        self.vocab_size = vocab_size
        self.max_len = max_len
        self.image_proj = nn.Linear(image_dim, seq_width)
        self.position_embedding = nn.Embedding(max_len + 1, seq_width)
        layer = nn.TransformerEncoderLayer(
            d_model=seq_width, nhead=heads, dim_feedforward=4 * seq_width,
            dropout=0.0, batch_first=True, norm_first=True,
        )
        self.transformer = nn.TransformerEncoder(
            layer, num_layers=layers, norm=nn.LayerNorm(seq_width),
            enable_nested_tensor=False)
        self.output_head = nn.Linear(seq_width, vocab_size)

    def forward(self, image_embedding: torch.Tensor, masked_sequence: torch.Tensor,
                attention_mask: torch.Tensor) -> torch.Tensor:
        """(B, d) image embeddings + (B, l, width) sequence -> (B, l, V) logits."""
        if image_embedding.dim() != 2 or image_embedding.shape[1] != self.image_dim:
            raise ShapeError(
                f"expected (B, {self.image_dim}) image embeddings, "
                f"got {tuple(image_embedding.shape)}"
            )
        if (masked_sequence.dim() != 3
                or masked_sequence.shape[1] != self.max_len
                or masked_sequence.shape[2] != self.seq_width):
            raise ShapeError(
                f"expected (B, {self.max_len}, {self.seq_width}) sequence, "
                f"got {tuple(masked_sequence.shape)}"
            )
        if image_embedding.shape[0] != masked_sequence.shape[0]:
            raise ShapeError("batch sizes of image and sequence inputs differ")
        image_token = self.image_proj(image_embedding)[:, None, :]
        x = torch.cat([image_token, masked_sequence], dim=1)
        positions = torch.arange(self.max_len + 1, device=x.device)
        x = x + self.position_embedding(positions)[None, :, :]
        # image token at position 0 is always attendable
        pad = torch.cat(
            [torch.zeros_like(attention_mask[:, :1]), attention_mask == 0], dim=1
        )
        out = self.transformer(x, src_key_padding_mask=pad.bool())
        return self.output_head(out[:, 1:, :])
