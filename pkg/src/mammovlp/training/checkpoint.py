"""Single-file checkpoint archive.

Layout: one JSON header line {format_version, kind, config, epoch,
validation_loss, payload_sha256, extra} followed by the binary parameter
payload. The hash is verified on load; files are written atomically
(temp file + rename).
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import torch

from ..errors import IntegrityError

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    kind: str  # "pretrain" | "classifier"
    config: dict
    epoch: int
    validation_loss: float
    state: dict  # parameter name -> tensor
    extra: dict = field(default_factory=dict)

    def content_hash(self) -> str:
        return hashlib.sha256(_serialize_state(self.state)).hexdigest()


def _serialize_state(state: dict) -> bytes:
    buffer = io.BytesIO()
    torch.save(state, buffer)
    return buffer.getvalue()


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = _serialize_state(checkpoint.state)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": checkpoint.kind,
        "config": checkpoint.config,
        "epoch": checkpoint.epoch,
        "validation_loss": checkpoint.validation_loss,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
        "extra": checkpoint.extra,
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)
    os.replace(tmp, path)
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"{path} has no readable checkpoint header") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise IntegrityError(
            f"unsupported checkpoint format {header.get('format_version')}")
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header.get("payload_sha256"):
        raise IntegrityError(
            f"checkpoint payload hash mismatch in {path}: "
            f"stored {header.get('payload_sha256')}, computed {digest}")
    state = torch.load(io.BytesIO(payload), weights_only=True)
    return Checkpoint(
        kind=header["kind"],
        config=header["config"],
        epoch=int(header["epoch"]),
        validation_loss=float(header["validation_loss"]),
        state=state,
        extra=header.get("extra", {}),
    )
