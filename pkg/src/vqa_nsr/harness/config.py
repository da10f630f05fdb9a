"""Run configuration (TOML) for the benchmark harness.

Sections: ``[dataset]`` or ``[synthetic]``, ``[noise]``, ``[thresholds]``,
``[modes]``, ``[output]``. Example::

    [synthetic]
    num_scenes = 125
    questions_per_scene = 10
    seed = 7

    [noise]
    presets = ["poor", "good"]
    seed = 0

    [thresholds]
    bbox = [0.25, 0.5]
    alphas = [0.5, 1.0, 1.5, 2.0]
    k = 1

    [modes]
    run = ["deterministic", "nondeterministic"]

    [output]
    dir = "runs/example"
    trace = true
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from ..detector_sim import NoiseConfig, preset
from .tasks import SyntheticConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

MODES = ("deterministic", "nondeterministic")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetPaths:
    scenes: str
    questions: str
    predictions: str | None = None


@dataclass(frozen=True)
class RunConfig:
    synthetic: SyntheticConfig | None = field(default_factory=SyntheticConfig)
    dataset: DatasetPaths | None = None
    noise: dict[str, NoiseConfig] = field(default_factory=lambda: {"poor": preset("poor")})
    bbox_thresholds: tuple[float, ...] = (0.25,)
    alphas: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    k: int = 1
    iou_min: float = 0.5
    calibration_fraction: float = 0.2
    modes: tuple[str, ...] = MODES
    output_dir: str | None = None
    trace: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.modes:
            raise ConfigError("at least one mode is required")
        bad = set(self.modes) - set(MODES)
        if bad:
            raise ConfigError(f"unknown modes {sorted(bad)}")
        if "nondeterministic" in self.modes and not self.alphas:
            raise ConfigError("non-deterministic mode needs at least one alpha")
        if any(a < 0 for a in self.alphas):
            raise ConfigError("alpha must be non-negative")
        if any(not 0 <= t <= 1 for t in self.bbox_thresholds) or not self.bbox_thresholds:
            raise ConfigError("bbox thresholds must be a nonempty list within [0, 1]")
        if not 1 <= self.k <= 96:
            raise ConfigError("k must lie in [1, 96]")
        if not 0 < self.calibration_fraction < 1:
            raise ConfigError("calibration_fraction must lie in (0, 1)")
        if (self.synthetic is None) == (self.dataset is None):
            raise ConfigError("exactly one of [dataset] and [synthetic] is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "synthetic": None if self.synthetic is None else asdict(self.synthetic),
            "dataset": None if self.dataset is None else asdict(self.dataset),
            "noise": {name: cfg.to_dict() for name, cfg in self.noise.items()},
            "bbox_thresholds": list(self.bbox_thresholds),
            "alphas": list(self.alphas),
            "k": self.k,
            "iou_min": self.iou_min,
            "calibration_fraction": self.calibration_fraction,
            "modes": list(self.modes),
            "output_dir": self.output_dir,
            "trace": self.trace,
            "workers": self.workers,
        }

    def digest(self) -> str:
        """Hash of everything that affects results (output location excluded)."""
        d = self.to_dict()
        for key in ("output_dir", "trace", "workers"):
            d.pop(key)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _noise_section(sec: Mapping[str, Any]) -> dict[str, NoiseConfig]:
    seed = sec.get("seed")
    out: dict[str, NoiseConfig] = {}
    for name in sec.get("presets", ["poor"] if "custom" not in sec else []):
        out[name] = preset(name, seed)
    for name, body in sec.get("custom", {}).items():
        cfg = NoiseConfig.from_dict(body)
        out[name] = cfg if seed is None or "seed" in body else replace(cfg, seed=seed)
    if not out:
        raise ConfigError("[noise] selects no presets")
    return out


def config_from_dict(data: Mapping[str, Any], base_dir: Path | None = None) -> RunConfig:
    known = {"dataset", "synthetic", "noise", "thresholds", "modes", "output"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    kw: dict[str, Any] = {}
    if "dataset" in data:
        d = dict(data["dataset"])
        if base_dir is not None:
            for key in ("scenes", "questions", "predictions"):
                if d.get(key):
                    d[key] = str((base_dir / d[key]).resolve())
        kw["dataset"] = DatasetPaths(**d)
        kw["synthetic"] = None
    if "synthetic" in data:
        kw["synthetic"] = SyntheticConfig(**data["synthetic"])
    if "noise" in data:
        kw["noise"] = _noise_section(data["noise"])
    th = data.get("thresholds", {})
    if "bbox" in th:
        bbox = th["bbox"]
        kw["bbox_thresholds"] = tuple(bbox if isinstance(bbox, list) else [bbox])
    if "alphas" in th:
        kw["alphas"] = tuple(float(a) for a in th["alphas"])
    for key in ("k", "iou_min", "calibration_fraction"):
        if key in th:
            kw[key] = th[key]
    if "modes" in data:
        kw["modes"] = tuple(data["modes"].get("run", MODES))
    out = data.get("output", {})
    if "dir" in out:
        kw["output_dir"] = str(out["dir"])  # relative to the working directory
    for key in ("trace", "workers"):
        if key in out:
            kw[key] = out[key]
    try:
        return RunConfig(**kw)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    with path.open("rb") as fh:
        data = tomllib.load(fh)
    return config_from_dict(data, base_dir=path.parent)
