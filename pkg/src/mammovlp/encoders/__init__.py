"""Pluggable vision/text encoders, projection heads, and the fusion model.

Adapters for full-scale pretrained backbones register factories here;
the shipped "tiny" pair covers desk-scale runs.
"""

from __future__ import annotations

from typing import Callable

from .composite import VisionLanguageModel
from .fusion import FusionModel
from .projection import NORM_EPS, ProjectionHead, l2_normalize, project
from .text import (
    CLS_ID,
    MASK_ID,
    NUM_SPECIAL_TOKENS,
    PAD_ID,
    UNK_ID,
    TextEncoderBase,
    TinyTextEncoder,
    TokenSequence,
    WordTokenizer,
    encode_text,
)
from .vision import (
    EncoderSpec,
    TinyVisionEncoder,
    VisionEncoderBase,
    encode_image,
    ensure_channels,
    validate_image,
)

VISION_ENCODERS: dict[str, Callable[..., VisionEncoderBase]] = {}
TEXT_ENCODERS: dict[str, Callable[..., TextEncoderBase]] = {}


def register_vision_encoder(name: str, factory: Callable[..., VisionEncoderBase]) -> None:
    VISION_ENCODERS[name] = factory


def register_text_encoder(name: str, factory: Callable[..., TextEncoderBase]) -> None:
    TEXT_ENCODERS[name] = factory


register_vision_encoder("tiny", TinyVisionEncoder)
register_text_encoder("tiny", TinyTextEncoder)

__all__ = [
    "CLS_ID",
    "MASK_ID",
    "NORM_EPS",
    "NUM_SPECIAL_TOKENS",
    "PAD_ID",
    "UNK_ID",
    "EncoderSpec",
    "FusionModel",
    "ProjectionHead",
    "TextEncoderBase",
    "TinyTextEncoder",
    "TinyVisionEncoder",
    "TokenSequence",
    "VisionEncoderBase",
    "VisionLanguageModel",
    "WordTokenizer",
    "encode_image",
    "encode_text",
    "ensure_channels",
    "l2_normalize",
    "project",
    "register_text_encoder",
    "register_vision_encoder",
    "validate_image",
    "VISION_ENCODERS",
    "TEXT_ENCODERS",
]
