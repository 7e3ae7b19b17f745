"""Pretraining objectives: symmetric contrastive loss, masked-token
prediction loss, and their weighted combination.

All losses are computed with double-precision accumulation regardless of
model precision, so closed-form test values hold to tight tolerances.
Every function here is pure given its inputs (plus an explicit generator
for the masking policy) and safe for concurrent use.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from .encoders.text import NUM_SPECIAL_TOKENS, MASK_ID, TokenSequence
from .errors import ContractError, NumericalAbortError, ParameterError, ShapeError

logger = logging.getLogger(__name__)

UNIT_NORM_TOLERANCE = 1e-4


@dataclass(frozen=True)
class LossBreakdown:
    """Per-step loss record; ``total == contrastive + weight * mlm`` exactly."""

    contrastive: float
    mlm: float
    total: float
    mlm_weight: float

    def to_dict(self) -> dict:
        return {
            "contrastive": self.contrastive,
            "mlm": self.mlm,
            "total": self.total,
            "lambda": self.mlm_weight,
        }


@dataclass
class MaskingOutcome:
    """Result of applying the masking policy to one token sequence."""

    masked_sequence: TokenSequence
    target_positions: np.ndarray
    target_ids: np.ndarray


def _as_2d_tensor(embeddings) -> torch.Tensor:
    if isinstance(embeddings, torch.Tensor):
        t = embeddings
    else:
        t = torch.as_tensor(np.stack([np.asarray(e) for e in embeddings]))
    if t.dim() != 2:
        raise ShapeError(f"expected (N, d) embeddings, got {tuple(t.shape)}")
    return t


def similarity_matrix(image_embeddings, text_embeddings) -> torch.Tensor:
    """Pairwise cosine similarities s[i][j] = <v_i, t_j>.

    Inputs must already be unit vectors (the projection heads normalize);
    a norm far from 1 means a projection was skipped upstream.
    """
    v = _as_2d_tensor(image_embeddings)
    t = _as_2d_tensor(text_embeddings)
    if v.shape != t.shape:
        raise ShapeError(f"embedding stacks differ in shape: {tuple(v.shape)} vs {tuple(t.shape)}")
    if v.shape[0] < 1:
        raise ShapeError("need at least one embedding pair")
    for name, stack in (("image", v), ("text", t)):
        norms = torch.linalg.vector_norm(stack.detach(), dim=1)
        worst = float((norms - 1.0).abs().max())
        if worst > UNIT_NORM_TOLERANCE:
            raise ContractError(
                f"{name} embeddings are not unit-norm (max |norm-1| = {worst:.3e}); "
                "was the projection head applied?"
            )
    return v @ t.T


def contrastive_loss(similarities, temperature: float = 1.0) -> torch.Tensor:
    """Symmetric InfoNCE over an N x N similarity matrix.

    Averages the image-to-text and text-to-image log-softmax terms on the
    diagonal, each computed through the log-sum-exp path in float64. With
    temperature 1 the bare-exponential form is recovered.
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    s = similarities if isinstance(similarities, torch.Tensor) else torch.as_tensor(similarities)
    if s.dim() != 2 or s.shape[0] != s.shape[1]:
        raise ShapeError(f"similarity matrix must be square, got {tuple(s.shape)}")
    n = s.shape[0]
    if n == 1:
        logger.warning("contrastive loss over a single pair is degenerate; returning 0")
        return torch.zeros((), dtype=torch.float64)
    logits = s.double() / temperature
    diag = torch.arange(n)
    image_to_text = -torch.log_softmax(logits, dim=1)[diag, diag].mean()
    text_to_image = -torch.log_softmax(logits, dim=0)[diag, diag].mean()
    return image_to_text + text_to_image


def mask_tokens(tokens: TokenSequence, p: float, rng: np.random.Generator,
                vocab_size: int) -> MaskingOutcome:
    """Select eligible positions independently with probability ``p``.

    Eligible means a real word: padding, CLS, and the other reserved ids
    never qualify. A selected position becomes the mask token 80% of the
    time, a random word id 10%, and stays unchanged 10%.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"mask probability must lie in (0, 1), got {p}")
    tokens.validate(vocab_size)
    ids = tokens.ids
    eligible = ids >= NUM_SPECIAL_TOKENS
    selected = (rng.random(ids.size) < p) & eligible
    positions = np.flatnonzero(selected)
    masked = ids.copy()
    if positions.size:
        rolls = rng.random(positions.size)
        random_ids = rng.integers(NUM_SPECIAL_TOKENS, vocab_size, positions.size)
        replace_mask = rolls < 0.8
        replace_random = (rolls >= 0.8) & (rolls < 0.9)
        masked[positions[replace_mask]] = MASK_ID
        masked[positions[replace_random]] = random_ids[replace_random]
    outcome = TokenSequence(masked, tokens.attention_mask.copy())
    return MaskingOutcome(
        masked_sequence=outcome,
        target_positions=positions,
        target_ids=ids[positions].copy(),
    )


def mlm_loss(logits, outcomes: list[MaskingOutcome]) -> torch.Tensor:
    """Mean cross-entropy over every masked token in the batch.

    Token-level mean: a sample with more masked positions weighs more. A
    batch with no masked tokens at all contributes 0 and is flagged.
    """
    if isinstance(logits, torch.Tensor) and logits.dim() == 2:
        logits = logits[None]
    stacks = logits if isinstance(logits, torch.Tensor) else torch.as_tensor(np.stack(
        [np.asarray(x) for x in logits]))
    if stacks.dim() != 3:
        raise ShapeError(f"expected (B, l, V) logits, got {tuple(stacks.shape)}")
    if stacks.shape[0] != len(outcomes):
        raise ShapeError(
            f"{stacks.shape[0]} logit stacks for {len(outcomes)} masking outcomes"
        )
    gathered = []
    targets = []
    for i, outcome in enumerate(outcomes):
        if outcome.target_positions.size == 0:
            continue
        if outcome.target_positions.max() >= stacks.shape[1]:
            raise ShapeError("target position outside the logit sequence length")
        gathered.append(stacks[i, outcome.target_positions, :])
        targets.append(torch.as_tensor(outcome.target_ids, dtype=torch.long))
    if not gathered:
        logger.warning("batch contains no masked tokens; MLM term is 0")
        return torch.zeros((), dtype=torch.float64)
    all_logits = torch.cat(gathered).double()
    all_targets = torch.cat(targets)
    return torch.nn.functional.cross_entropy(all_logits, all_targets)


def combined_loss(contrastive: float, mlm: float, mlm_weight: float) -> LossBreakdown:
    """Weighted pretraining total: contrastive + weight * mlm."""
    if mlm_weight < 0:
        raise ParameterError(f"MLM weight must be non-negative, got {mlm_weight}")
    for name, value in (("contrastive", contrastive), ("mlm", mlm)):
        if not np.isfinite(value):
            raise NumericalAbortError(name)
    contrastive = float(contrastive)
    mlm = float(mlm)
    return LossBreakdown(
        contrastive=contrastive,
        mlm=mlm,
        total=contrastive + mlm_weight * mlm,
        mlm_weight=float(mlm_weight),
    )
