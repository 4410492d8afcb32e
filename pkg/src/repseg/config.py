"""JSON pipeline configuration: defaults plus named semantic levels."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError, InvalidParam, IoError
from .estimator import RepetitionSegmenter
from .evalkit import LevelSpec

PIPELINE_PARAMS = set(RepetitionSegmenter().get_params())
LEVEL_FIELDS = {"r": float, "k": int, "sigma": float, "tau": float,
                "superpixels": int, "compactness": float}


@dataclass
class PipelineConfig:
    defaults: dict = field(default_factory=dict)
    levels: dict[str, LevelSpec] = field(default_factory=dict)

    def level(self, name: str) -> LevelSpec:
        if name not in self.levels:
            raise InvalidParam(
                f"unknown level {name!r}; available: {', '.join(sorted(self.levels))}")
        return self.levels[name]

    def to_dict(self) -> dict:
        return {
            "defaults": dict(self.defaults),
            "levels": {name: {f: getattr(spec, f) for f in LEVEL_FIELDS}
                       for name, spec in self.levels.items()},
        }


def default_config() -> PipelineConfig:
    base = RepetitionSegmenter().get_params()
    spec = LevelSpec(name="default", r=base["r"], k=base["k"],
                     sigma=base["vote_sigma"], tau=base["tau"],
                     superpixels=base["n_superpixels"],
                     compactness=base["compactness"])
    return PipelineConfig(defaults={}, levels={"default": spec})


def _check_defaults(defaults: dict, where: str) -> None:
    unknown = set(defaults) - PIPELINE_PARAMS
    if unknown:
        raise InvalidParam(f"{where}: unknown parameter(s) {sorted(unknown)}; "
                           f"valid: {sorted(PIPELINE_PARAMS)}")
    merged = RepetitionSegmenter().get_params()
    merged.update(defaults)
    _check_ranges(merged, where)


def _check_ranges(p: dict, where: str) -> None:
    def bad(field: str, why: str):
        return InvalidParam(f"{where}: {field} {why}")

    if not 0 <= p["canny_low"] <= p["canny_high"]:
        raise bad("canny_low/canny_high", "must satisfy 0 <= low <= high")
    if p["gauss_sigma"] <= 0:
        raise bad("gauss_sigma", "must be > 0")
    if p["stride"] < 1:
        raise bad("stride", "must be >= 1")
    if p["max_keypoints"] < 1:
        raise bad("max_keypoints", "must be >= 1")
    if p["patch"] % 2 != 0 or p["patch"] < 8:
        raise bad("patch", "must be even and >= 8")
    if p["k"] < 1:
        raise bad("k", "must be >= 1")
    if p["r"] < 0:
        raise bad("r", "must be >= 0")
    if p["d_max"] <= 0:
        raise bad("d_max", "must be > 0")
    if p["vote_sigma"] <= 0:
        raise bad("vote_sigma", "must be > 0")
    if p["vote_bin"] < 1:
        raise bad("vote_bin", "must be >= 1")
    if p["half_extent"] is not None and p["half_extent"] < 1:
        raise bad("half_extent", "must be >= 1 (or null for min(w,h))")
    if p["tau"] < 0:
        raise bad("tau", "must be >= 0")
    if p["n_superpixels"] < 1:
        raise bad("n_superpixels", "must be >= 1")
    if p["compactness"] <= 0:
        raise bad("compactness", "must be > 0")
    if p["slic_iters"] < 1:
        raise bad("slic_iters", "must be >= 1")
    if p["min_support"] < 1:
        raise bad("min_support", "must be >= 1")


def _parse_level(name: str, raw: dict, where: str) -> LevelSpec:
    if not isinstance(raw, dict):
        raise InvalidParam(f"{where}: level {name!r} must be an object")
    unknown = set(raw) - set(LEVEL_FIELDS)
    if unknown:
        raise InvalidParam(f"{where}: level {name!r} has unknown field(s) "
                           f"{sorted(unknown)}; valid: {sorted(LEVEL_FIELDS)}")
    kwargs = {}
    for f, conv in LEVEL_FIELDS.items():
        if f in raw:
            try:
                kwargs[f] = conv(raw[f])
            except (TypeError, ValueError) as e:
                raise InvalidParam(f"{where}: level {name!r} field {f!r}: {e}") from e
    spec = LevelSpec(name=name, **kwargs)
    if spec.r < 0 or spec.k < 1 or spec.sigma <= 0 or spec.tau < 0 \
            or spec.superpixels < 1 or spec.compactness <= 0:
        raise InvalidParam(f"{where}: level {name!r} has out-of-range values")
    return spec


def parse_config(data: dict, where: str = "config") -> PipelineConfig:
    if not isinstance(data, dict):
        raise InvalidParam(f"{where}: top level must be an object")
    unknown = set(data) - {"defaults", "levels"}
    if unknown:
        raise InvalidParam(f"{where}: unknown top-level key(s) {sorted(unknown)}")
    defaults = data.get("defaults", {})
    if not isinstance(defaults, dict):
        raise InvalidParam(f"{where}: 'defaults' must be an object")
    _check_defaults(defaults, where)
    levels_raw = data.get("levels", {})
    if not isinstance(levels_raw, dict):
        raise InvalidParam(f"{where}: 'levels' must be an object")
    cfg = PipelineConfig(defaults=dict(defaults))
    for name, raw in levels_raw.items():
        cfg.levels[name] = _parse_level(name, raw, where)
    if not cfg.levels:
        base = default_config()
        for spec in base.levels.values():
            merged = RepetitionSegmenter().get_params()
            merged.update(cfg.defaults)
            cfg.levels["default"] = LevelSpec(
                name="default", r=merged["r"], k=merged["k"],
                sigma=merged["vote_sigma"], tau=merged["tau"],
                superpixels=merged["n_superpixels"],
                compactness=merged["compactness"])
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from e
    return parse_config(data, where=str(path))


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n",
                          encoding="utf-8")
