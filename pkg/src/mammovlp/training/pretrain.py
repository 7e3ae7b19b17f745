"""Contrastive + masked-token pretraining with best-checkpoint selection.

One training thread owns the parameters. Each step encodes both
modalities, projects into the joint space, scores the in-batch similarity
matrix, masks the captions, runs the fusion model, and combines the two
losses. The checkpoint returned is the epoch with the lowest validation
total loss (ties resolve to the earlier epoch).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import json

import numpy as np
import torch

from ..encoders import (
    TEXT_ENCODERS,
    VISION_ENCODERS,
    TokenSequence,
    VisionLanguageModel,
    WordTokenizer,
    validate_image,
)
from ..errors import ConfigError, NumericalAbortError
from ..objectives import combined_loss, contrastive_loss, mask_tokens, mlm_loss, similarity_matrix
from ..seeding import derive_seed, rng_for
from .checkpoint import Checkpoint
from .config import PretrainConfig

logger = logging.getLogger(__name__)


@dataclass
class PretrainExample:
    """One materialized image-text pair ready for training."""

    image: np.ndarray
    caption: str
    pair_id: str
    group: str = ""


@dataclass
class TrainingLog:
    steps: list[dict] = field(default_factory=list)
    validations: list[dict] = field(default_factory=list)

    def record_step(self, step: int, epoch: int, breakdown, lr: float) -> None:
        if self.steps and step <= self.steps[-1]["step"]:
            raise ValueError("step indices must be strictly increasing")
        self.steps.append({
            "step": step,
            "epoch": epoch,
            "contrastive": breakdown.contrastive,
            "mlm": breakdown.mlm,
            "total": breakdown.total,
            "lr": lr,
            "timestamp": time.time(),
        })

    def record_validation(self, epoch: int, contrastive: float, mlm: float,
                          total: float) -> None:
        self.validations.append({
            "epoch": epoch,
            "contrastive": contrastive,
            "mlm": mlm,
            "total": total,
            "timestamp": time.time(),
        })

    def loss_sequence(self) -> list[float]:
        return [record["total"] for record in self.steps]

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.steps:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def write_validation_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.validations:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


@dataclass
class PretrainResult:
    checkpoint: Checkpoint
    log: TrainingLog
    tokenizer: WordTokenizer


def build_pretrain_model(config: PretrainConfig, vocab_size: int) -> VisionLanguageModel:
    """Construct the full model with deterministically seeded parameters."""
    torch.manual_seed(derive_seed(config.seed, "model-init"))
    vision = VISION_ENCODERS[config.vision_arch](
        resolution=config.resolution, in_channels=1, output_width=config.vision_width)
    text = TEXT_ENCODERS[config.text_arch](
        vocab_size=vocab_size, max_len=config.max_text_len, width=config.text_width,
        layers=config.text_layers, heads=config.text_heads)
    return VisionLanguageModel(
        vision, text, joint_dim=config.joint_dim,
        fusion_layers=config.fusion_layers, fusion_heads=config.fusion_heads)


def load_pretrained_model(checkpoint: Checkpoint) -> tuple[VisionLanguageModel, WordTokenizer, PretrainConfig]:
    """Rebuild model + tokenizer from a pretrain checkpoint."""
    if checkpoint.kind != "pretrain":
        raise ConfigError(f"expected a pretrain checkpoint, got kind={checkpoint.kind!r}")
    config = PretrainConfig.from_dict(checkpoint.config)
    tokenizer = WordTokenizer.from_dict(checkpoint.extra["tokenizer"])
    model = build_pretrain_model(config, tokenizer.vocab_size)
    model.load_state_dict({k: torch.as_tensor(v) for k, v in checkpoint.state.items()})
    return model, tokenizer, config


def _stack_images(examples: Sequence[PretrainExample], indices, resolution) -> torch.Tensor:
    arrays = [validate_image(examples[i].image, resolution) for i in indices]
    batch = np.stack(arrays).transpose(0, 3, 1, 2)
    return torch.from_numpy(np.ascontiguousarray(batch))


def _split_validation(examples: Sequence[PretrainExample], fraction: float,
                      seed: int) -> tuple[list[int], list[int]]:
    """Group-level holdout (page/patient provenance) when groups allow it."""
    groups: dict[str, list[int]] = {}
    for i, example in enumerate(examples):
        groups.setdefault(example.group or example.pair_id, []).append(i)
    names = sorted(groups)
    rng = rng_for(seed, "validation-split")
    rng.shuffle(names)
    target = max(1, int(round(fraction * len(examples))))
    val: list[int] = []
    for name in names:
        if len(val) >= target or len(val) + len(groups[name]) >= len(examples):
            break
        val.extend(groups[name])
    val_set = set(val)
    train = [i for i in range(len(examples)) if i not in val_set]
    return train, sorted(val)


def _forward_losses(model: VisionLanguageModel, images: torch.Tensor,
                    ids: torch.Tensor, mask: torch.Tensor,
                    token_sequences: list[TokenSequence],
                    config: PretrainConfig, mask_rng: np.random.Generator,
                    vocab_size: int):
    image_joint = model.embed_images(images)
    _, text_joint = model.embed_texts(ids, mask)
    similarities = similarity_matrix(image_joint, text_joint)
    c_loss = contrastive_loss(similarities, temperature=config.temperature)

    outcomes = [
        mask_tokens(seq, config.mask_probability, mask_rng, vocab_size)
        for seq in token_sequences
    ]
    masked_ids = torch.from_numpy(
        np.stack([o.masked_sequence.ids for o in outcomes]))
    logits = model.predict_masked(image_joint, masked_ids, mask)
    m_loss = mlm_loss(logits, outcomes)
    return c_loss, m_loss


def pretrain(examples: Sequence[PretrainExample], config: PretrainConfig,
             tokenizer: WordTokenizer | None = None) -> PretrainResult:
    """Train on image-text pairs; return the lowest-validation-loss checkpoint."""
    config.validate()
    if tokenizer is None:
        tokenizer = WordTokenizer.from_texts([e.caption for e in examples])
    vocab_size = tokenizer.vocab_size

    train_idx, val_idx = _split_validation(examples, config.validation_fraction, config.seed)
    if len(train_idx) < 2 * config.batch_size:
        raise ConfigError(
            f"need at least {2 * config.batch_size} training pairs after the "
            f"validation split, got {len(train_idx)}")

    tokens = [tokenizer.encode(e.caption, config.max_text_len) for e in examples]
    for seq in tokens:
        seq.validate(vocab_size)

    model = build_pretrain_model(config, vocab_size)
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate, betas=config.betas,
        weight_decay=config.weight_decay)

    log = TrainingLog()
    best: tuple[float, int, dict] | None = None  # (val_loss, epoch, state)
    global_step = 0

    def snapshot_state() -> dict:
        return {k: v.detach().clone() for k, v in model.state_dict().items()}

    def make_checkpoint(entry) -> Checkpoint:
        val_loss, epoch, state = entry
        return Checkpoint(
            kind="pretrain", config=config.to_dict(), epoch=epoch,
            validation_loss=val_loss, state=state,
            extra={"tokenizer": tokenizer.to_dict()},
        )

    def batches(indices: list[int], batch_size: int):
        for start in range(0, len(indices), batch_size):
            chunk = indices[start:start + batch_size]
            if len(chunk) >= 2:
                yield chunk

    for epoch in range(1, config.epochs + 1):
        model.train()
        order = list(rng_for(config.seed, "shuffle", epoch).permutation(len(train_idx)))
        epoch_indices = [train_idx[i] for i in order]
        for step_in_epoch, batch_idx in enumerate(batches(epoch_indices, config.batch_size)):
            images = _stack_images(examples, batch_idx, config.resolution)
            ids = torch.from_numpy(np.stack([tokens[i].ids for i in batch_idx]))
            attn = torch.from_numpy(np.stack([tokens[i].attention_mask for i in batch_idx]))
            mask_rng = rng_for(config.seed, "mask", epoch, step_in_epoch)
            c_loss, m_loss = _forward_losses(
                model, images, ids, attn, [tokens[i] for i in batch_idx],
                config, mask_rng, vocab_size)
            try:
                breakdown = combined_loss(
                    float(c_loss.detach()), float(m_loss.detach()), config.mlm_weight)
            except NumericalAbortError as abort:
                abort.last_good = make_checkpoint(best) if best else None
                raise
            total = c_loss + config.mlm_weight * m_loss
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            global_step += 1
            log.record_step(global_step, epoch, breakdown, config.learning_rate)

        val_c, val_m, val_total = evaluate_validation_loss(
            model, examples, val_idx, tokens, config, vocab_size)
        log.record_validation(epoch, val_c, val_m, val_total)
        if not np.isfinite(val_total):
            raise NumericalAbortError(
                "validation-total", make_checkpoint(best) if best else None)
        if best is None or val_total < best[0]:
            best = (val_total, epoch, snapshot_state())

    return PretrainResult(checkpoint=make_checkpoint(best), log=log, tokenizer=tokenizer)


def evaluate_validation_loss(model: VisionLanguageModel,
                             examples: Sequence[PretrainExample],
                             val_idx: list[int], tokens: list[TokenSequence],
                             config: PretrainConfig, vocab_size: int):
    """Sample-weighted mean losses over the validation pairs.

    Masking uses a fixed stream derived only from the run seed, so the
    validation loss is comparable across epochs.
    """
    model.eval()
    mask_rng = rng_for(config.seed, "validation-mask")
    totals = np.zeros(3, dtype=np.float64)
    weight = 0
    with torch.no_grad():
        for start in range(0, len(val_idx), config.batch_size):
            chunk = val_idx[start:start + config.batch_size]
            if len(chunk) < 2:
                continue
            images = _stack_images(examples, chunk, config.resolution)
            ids = torch.from_numpy(np.stack([tokens[i].ids for i in chunk]))
            attn = torch.from_numpy(np.stack([tokens[i].attention_mask for i in chunk]))
            c_loss, m_loss = _forward_losses(
                model, images, ids, attn, [tokens[i] for i in chunk],
                config, mask_rng, vocab_size)
            breakdown = combined_loss(float(c_loss), float(m_loss), config.mlm_weight)
            totals += len(chunk) * np.array(
                [breakdown.contrastive, breakdown.mlm, breakdown.total])
            weight += len(chunk)
    if weight == 0:
        raise ConfigError("validation split produced no usable batch")
    return tuple(float(x) for x in totals / weight)


def embed_pairs(model: VisionLanguageModel, tokenizer: WordTokenizer,
                examples: Sequence[PretrainExample], config: PretrainConfig,
                batch_size: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Unit-norm joint embeddings for a list of pairs (eval mode)."""
    model.eval()
    image_parts, text_parts = [], []
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            chunk = list(range(start, min(start + batch_size, len(examples))))
            images = _stack_images(examples, chunk, config.resolution)
            token_sequences = [
                tokenizer.encode(examples[i].caption, config.max_text_len) for i in chunk]
            ids = torch.from_numpy(np.stack([t.ids for t in token_sequences]))
            attn = torch.from_numpy(np.stack([t.attention_mask for t in token_sequences]))
            image_parts.append(model.embed_images(images).numpy())
            _, text_joint = model.embed_texts(ids, attn)
            text_parts.append(text_joint.numpy())
    return np.concatenate(image_parts), np.concatenate(text_parts)


def retrieval_top1(image_embeddings: np.ndarray, text_embeddings: np.ndarray) -> float:
    """Image-to-text top-1 retrieval accuracy with index pairing."""
    scores = image_embeddings @ text_embeddings.T
    return float(np.mean(scores.argmax(axis=1) == np.arange(scores.shape[0])))
