"""Flat run configuration: defaults, file/flag merging, validation.

One JSON file with flat keys configures the whole pipeline; every CLI flag
overrides its key. The effective config is reproducible via --print-config.
"""

from __future__ import annotations

import json
from pathlib import Path

from .boxes import PipelineConfig
from .errors import ConfigError
from .filtering import FilterThresholds
from .pointcloud import CLIP_UNIT, MINMAX_PER_FRAME, RangeSpec
from .raster import GridConfig, Palette

DEFAULTS: dict = {
    "lx": -30.0,
    "ux": 30.0,
    "ly": -30.0,
    "uy": 30.0,
    "sx": 0.1,
    "sy": 0.1,
    "dilation_kernel": 3,
    "prompt_n": 32,
    "prune": True,
    "prune_radius": 3,
    "area_lo": 200,
    "area_hi": 5000,
    "ratio_lo": 1.5,
    "ratio_hi": 4.0,
    "dedup": True,
    "dedup_iou": 0.8,
    "intensity_mode": MINMAX_PER_FRAME,
    "multimask": True,
    "palette": None,
    "iou_thr": 0.7,
    "max_dist": 30.0,
    "timeout_s": 120.0,
    "poll_s": 0.1,
}

_BOOL_KEYS = {"prune", "dedup", "multimask"}
_INT_KEYS = {"dilation_kernel", "prompt_n", "prune_radius"}
_FLOAT_KEYS = {
    "lx", "ux", "ly", "uy", "sx", "sy", "area_lo", "area_hi", "ratio_lo", "ratio_hi",
    "dedup_iou", "iou_thr", "max_dist", "timeout_s", "poll_s",
}


def _coerce(key: str, value):
    try:
        if key in _BOOL_KEYS:
            if isinstance(value, bool):
                return value
            if isinstance(value, str):
                if value.lower() in ("true", "1", "yes"):
                    return True
                if value.lower() in ("false", "0", "no"):
                    return False
            raise ValueError(f"expected boolean, got {value!r}")
        if key in _INT_KEYS:
            out = int(value)
            if out != float(value):
                raise ValueError(f"expected integer, got {value!r}")
            return out
        if key in _FLOAT_KEYS:
            out = float(value)
            # keep pixel-area thresholds integral when they are whole numbers
            if key in ("area_lo", "area_hi") and out == int(out):
                return int(out)
            return out
        if key == "intensity_mode":
            if value not in (MINMAX_PER_FRAME, CLIP_UNIT):
                raise ValueError(f"unknown intensity mode {value!r}")
            return value
        if key == "palette":
            return None if value in (None, "", "null") else str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from exc
    raise ConfigError(f"unknown config key {key!r}")


def resolve_config(file_path: str | Path | None = None, overrides: dict | None = None) -> dict:
    """defaults <- config file <- explicit overrides, all validated."""
    merged = dict(DEFAULTS)
    if file_path is not None:
        try:
            loaded = json.loads(Path(file_path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {file_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {file_path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object with flat keys")
        for key, value in loaded.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = _coerce(key, value)
    return merged


def effective_config_json(cfg: dict) -> str:
    return json.dumps({k: cfg[k] for k in sorted(cfg)}, indent=2)


def build_pipeline_config(cfg: dict) -> PipelineConfig:
    """Construct the typed pipeline config, surfacing violations as ConfigError."""
    try:
        grid = GridConfig(
            range=RangeSpec(cfg["lx"], cfg["ux"], cfg["ly"], cfg["uy"]),
            sx=cfg["sx"],
            sy=cfg["sy"],
            dilation_kernel=cfg["dilation_kernel"],
        )
        palette = Palette.from_json(cfg["palette"]) if cfg["palette"] else Palette()
        thresholds = FilterThresholds(
            area_lo=cfg["area_lo"],
            area_hi=cfg["area_hi"],
            ratio_lo=cfg["ratio_lo"],
            ratio_hi=cfg["ratio_hi"],
        )
        if cfg["prompt_n"] < 1:
            raise ValueError(f"prompt_n must be >= 1, got {cfg['prompt_n']}")
        if cfg["prune_radius"] < 0:
            raise ValueError(f"prune_radius must be >= 0, got {cfg['prune_radius']}")
        return PipelineConfig(
            grid=grid,
            palette=palette,
            prompt_n=cfg["prompt_n"],
            prune=cfg["prune"],
            prune_radius=cfg["prune_radius"],
            thresholds=thresholds,
            dedup=cfg["dedup"],
            dedup_iou=cfg["dedup_iou"],
            intensity_mode=cfg["intensity_mode"],
            multimask=cfg["multimask"],
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc)) from exc
