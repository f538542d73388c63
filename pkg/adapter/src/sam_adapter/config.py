"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

MODEL_VARIANTS = ("vit_b", "vit_l", "vit_h")


@dataclass(frozen=True)
class AdapterConfig:
    watch_dir: Path
    model_variant: str = "vit_h"
    checkpoint: Path | None = None
    poll_s: float = 0.25

    def __post_init__(self):
        if self.model_variant not in MODEL_VARIANTS:
            raise ValueError(f"model variant must be one of {MODEL_VARIANTS}, got {self.model_variant!r}")
        if self.poll_s <= 0:
            raise ValueError(f"poll interval must be positive, got {self.poll_s}")
        object.__setattr__(self, "watch_dir", Path(self.watch_dir))
        if self.checkpoint is not None:
            ckpt = Path(self.checkpoint)
            object.__setattr__(self, "checkpoint", ckpt)
            if self.model_variant not in ckpt.name:
                raise ValueError(
                    f"checkpoint {ckpt.name!r} does not match model variant {self.model_variant!r}"
                )
