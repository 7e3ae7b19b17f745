"""Text tokenization and the pluggable text encoder.

The shipped encoder is a small transformer over a word-level vocabulary,
sized for desk-scale corpora. Full-scale pretrained encoders plug in
through :class:`TextEncoderBase` and the registry in ``__init__``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..errors import ShapeError, VocabularyError

PAD_ID = 0
CLS_ID = 1
MASK_ID = 2
UNK_ID = 3
NUM_SPECIAL_TOKENS = 4

_WORD_RE = re.compile(r"[a-z0-9]+")


@dataclass
class TokenSequence:
    """Fixed-length token ids with an attention mask.

    Position 0 is always CLS; padding occupies the tail. The mask is 1
    exactly on non-padding positions.
    """

    ids: np.ndarray
    attention_mask: np.ndarray

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.attention_mask = np.asarray(self.attention_mask, dtype=np.int64)

    def validate(self, vocab_size: int) -> None:
        if self.ids.ndim != 1 or self.ids.shape != self.attention_mask.shape:
            raise ShapeError(
                f"ids and attention_mask must be 1-d and equal length, "
                f"got {self.ids.shape} and {self.attention_mask.shape}"
            )
        if self.ids.size == 0 or self.ids[0] != CLS_ID:
            raise ShapeError("position 0 must be the CLS token")
        if self.ids.min() < 0 or self.ids.max() >= vocab_size:
            raise VocabularyError(
                f"token id out of range [0, {vocab_size}): max seen {int(self.ids.max())}"
            )
        pad = self.ids == PAD_ID
        if not np.array_equal(self.attention_mask, (~pad).astype(np.int64)):
            raise ShapeError("attention_mask must be 1 exactly on non-padding positions")

    @property
    def length(self) -> int:
        return int(self.ids.size)

    def copy(self) -> "TokenSequence":
        return TokenSequence(self.ids.copy(), self.attention_mask.copy())


@dataclass
class WordTokenizer:
    """Lowercasing word-level tokenizer over a fixed vocabulary.

    Ids 0..3 are reserved for PAD/CLS/MASK/UNK; words follow in the order
    given at construction.
    """

    words: list[str]
    word_to_id: dict[str, int] = field(init=False)

    def __post_init__(self):
        if len(set(self.words)) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        self.word_to_id = {
            w: i + NUM_SPECIAL_TOKENS for i, w in enumerate(self.words)
        }

    @classmethod
    def from_texts(cls, texts: list[str]) -> "WordTokenizer":
        seen: dict[str, None] = {}
        for text in texts:
            for word in _WORD_RE.findall(text.lower()):
                seen.setdefault(word, None)
        return cls(sorted(seen))

    @property
    def vocab_size(self) -> int:
        return NUM_SPECIAL_TOKENS + len(self.words)

    def encode(self, text: str, max_len: int) -> TokenSequence:
        """[CLS] + word ids, truncated/padded to ``max_len``."""
        ids = [CLS_ID]
        for word in _WORD_RE.findall(text.lower()):
            ids.append(self.word_to_id.get(word, UNK_ID))
        ids = ids[:max_len]
        ids += [PAD_ID] * (max_len - len(ids))
        arr = np.asarray(ids, dtype=np.int64)
        return TokenSequence(arr, (arr != PAD_ID).astype(np.int64))

    def to_dict(self) -> dict:
        return {"words": list(self.words)}

    @classmethod
    def from_dict(cls, payload: dict) -> "WordTokenizer":
        return cls(list(payload["words"]))


class TextEncoderBase(nn.Module):
    """Contract every text encoder implements.

    ``forward`` maps (B, l) ids plus a (B, l) mask to the full sequence
    representation (B, l, width) and the CLS vector (B, width). Padding
    keys must be excluded from attention so padded tails cannot leak into
    non-padding outputs.
    """

    vocab_size: int
    width: int
    max_len: int

    @property
    def spec(self) -> "EncoderSpec":
        from .vision import EncoderSpec

        return EncoderSpec(
            kind="text",
            output_width=self.width,
            architecture=type(self).__name__,
            parameter_count=sum(p.numel() for p in self.parameters()),
        )

    def forward(self, ids: torch.Tensor, mask: torch.Tensor):  # pragma: no cover
        raise NotImplementedError


class TinyTextEncoder(TextEncoderBase):
    """2-layer transformer encoder for the desk-scale synthetic vocabulary."""

    def __init__(self, vocab_size: int, max_len: int, width: int = 64,
                 layers: int = 2, heads: int = 4):
        super().__init__()
        self.vocab_size = vocab_size
        self.width = width
        self.max_len = max_len
        self.token_embedding = nn.Embedding(vocab_size, width)
        self.position_embedding = nn.Embedding(max_len, width)
        # pre-norm keeps the small stack stable at the larger desk-scale
        # learning rates
        layer = nn.TransformerEncoderLayer(
            d_model=width, nhead=heads, dim_feedforward=4 * width,
            dropout=0.0, batch_first=True, norm_first=True,
        )
        self.transformer = nn.TransformerEncoder(
            layer, num_layers=layers, norm=nn.LayerNorm(width),
            enable_nested_tensor=False)

    def forward(self, ids: torch.Tensor, mask: torch.Tensor):
        if ids.dim() != 2 or ids.shape[1] != self.max_len:
            raise ShapeError(f"expected (B, {self.max_len}) ids, got {tuple(ids.shape)}")
        if int(ids.max()) >= self.vocab_size or int(ids.min()) < 0:
            raise VocabularyError(
                f"token id out of range [0, {self.vocab_size})"
            )
        positions = torch.arange(self.max_len, device=ids.device)
        x = self.token_embedding(ids) + self.position_embedding(positions)[None, :, :]
        # key padding mask: True marks positions attention must ignore
        seq = self.transformer(x, src_key_padding_mask=(mask == 0))
        return seq, seq[:, 0, :]


def encode_text(encoder: TextEncoderBase, tokens: TokenSequence):
    """Single-sequence convenience around ``encoder.forward``.

    Returns the (l, width) sequence representation and the CLS vector as
    numpy arrays, computed in evaluation mode.
    """
    tokens.validate(encoder.vocab_size)
    was_training = encoder.training
    encoder.eval()
    try:
        with torch.no_grad():
            ids = torch.from_numpy(tokens.ids[None, :])
            mask = torch.from_numpy(tokens.attention_mask[None, :])
            seq, cls = encoder(ids, mask)
    finally:
        encoder.train(was_training)
    return seq[0].numpy(), cls[0].numpy()
