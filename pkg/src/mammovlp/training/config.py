"""Run configuration records for both training stages."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from ..errors import ConfigError

ALL = "all"  # sentinel budget meaning "use every available sample"


@dataclass
class PretrainConfig:
    batch_size: int = 64
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    betas: tuple[float, float] = (0.9, 0.999)
    epochs: int = 25
    mlm_weight: float = 1.0
    mask_probability: float = 0.15
    temperature: float = 1.0
    resolution: tuple[int, int] = (1024, 768)
    joint_dim: int = 256
    max_text_len: int = 256
    seed: int = 0
    validation_fraction: float = 0.1
    vision_arch: str = "tiny"
    text_arch: str = "tiny"
    vision_width: int = 128
    text_width: int = 64
    text_layers: int = 2
    text_heads: int = 4
    fusion_layers: int = 4
    fusion_heads: int = 4

    def validate(self) -> None:
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be at least 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError(
                f"validation_fraction must lie in (0, 1), got {self.validation_fraction}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if self.mlm_weight < 0:
            raise ConfigError(f"mlm_weight must be non-negative, got {self.mlm_weight}")
        if not 0.0 < self.mask_probability < 1.0:
            raise ConfigError(
                f"mask_probability must lie in (0, 1), got {self.mask_probability}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["betas"] = list(self.betas)
        payload["resolution"] = list(self.resolution)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "PretrainConfig":
        known = {f: payload[f] for f in cls.__dataclass_fields__ if f in payload}
        unknown = set(payload) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown pretrain config keys: {sorted(unknown)}")
        config = cls(**known)
        config.betas = tuple(config.betas)
        config.resolution = tuple(config.resolution)
        return config


@dataclass
class FinetuneConfig:
    budget: int | str = ALL
    scheme: str = "FIVE"
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    epochs: int = 25
    batch_size: int = 32
    seed: int = 0
    validation_fraction: float = 0.2
    freeze_backbone: bool = False

    def validate(self) -> None:
        if self.budget != ALL and (not isinstance(self.budget, int) or self.budget < 1):
            raise ConfigError(f"budget must be a positive count or '{ALL}', got {self.budget!r}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError(
                f"validation_fraction must lie in [0, 1), got {self.validation_fraction}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "FinetuneConfig":
        unknown = set(payload) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown finetune config keys: {sorted(unknown)}")
        return cls(**payload)
