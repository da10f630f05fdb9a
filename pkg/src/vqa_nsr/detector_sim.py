"""Synthetic object detector producing prediction matrices from ground-truth scenes.

Class scores come from a softmax over ``-distance/temperature + z`` where
``distance`` counts the attributes on which a class differs from the true one
and ``z`` is standard normal noise per class. Temperature 0 gives one-hot
rows; larger temperatures spread mass onto nearby classes first.
"""

from __future__ import annotations

import sys
import zlib
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from typing import Any, Mapping, Sequence

import numpy as np

from .scene_model import (
    ALL_CLASSES,
    NUM_CLASSES,
    BoundingBox,
    PredictionMatrix,
    PredictionRow,
    SceneGraph,
    attribute_distance,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

IMAGE_WIDTH, IMAGE_HEIGHT = 480.0, 320.0

# DISTANCE[t, j] = number of differing attributes between classes t and j
DISTANCE = np.array([[attribute_distance(a, b) for b in ALL_CLASSES] for a in ALL_CLASSES], dtype=float)


@dataclass(frozen=True)
class NoiseConfig:
    temperature: float = 0.0
    score_scale: float = 1.0
    p_fn: float = 0.0
    p_fp: float = 0.0
    box_jitter: float = 0.0
    seed: int = 0
    true_box_confidence: tuple[float, float] = (1.0, 1.0)
    spurious_box_confidence: tuple[float, float] = (0.0, 0.5)

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.score_scale <= 1:
            raise ValueError("score_scale must lie in (0, 1]")
        if not 0 <= self.p_fn <= 1:
            raise ValueError("p_fn must lie in [0, 1]")
        if self.p_fp < 0 or self.box_jitter < 0:
            raise ValueError("p_fp and box_jitter must be >= 0")
        for lo, hi in (self.true_box_confidence, self.spurious_box_confidence):
            if not 0 <= lo <= hi <= 1:
                raise ValueError("box confidence ranges must satisfy 0 <= lo <= hi <= 1")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> NoiseConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"preset"}
        if unknown:
            raise ValueError(f"unknown noise settings {sorted(unknown)}")
        kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in data.items() if k in known}
        base = preset(data["preset"]) if "preset" in data else cls()
        return replace(base, **kw)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["true_box_confidence"] = list(self.true_box_confidence)
        d["spurious_box_confidence"] = list(self.spurious_box_confidence)
        return d


def load_presets() -> dict[str, NoiseConfig]:
    text = resources.files("vqa_nsr.data").joinpath("presets.toml").read_text()
    raw = tomllib.loads(text)["noise"]
    return {name: NoiseConfig.from_dict(cfg) for name, cfg in raw.items()}


def preset(name: str, seed: int | None = None) -> NoiseConfig:
    presets = load_presets()
    if name not in presets:
        raise KeyError(f"unknown noise preset {name!r}; choose from {sorted(presets)}")
    cfg = presets[name]
    return cfg if seed is None else replace(cfg, seed=seed)


def _rng(scene: SceneGraph, cfg: NoiseConfig) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, zlib.crc32(scene.image_id.encode())])


def class_scores(true_index: int, rng: np.random.Generator, cfg: NoiseConfig) -> np.ndarray:
    z = rng.standard_normal(NUM_CLASSES)  # drawn even when unused, keeps streams aligned across temperatures
    if cfg.temperature == 0:
        p = np.zeros(NUM_CLASSES)
        p[true_index] = 1.0
    else:
        logits = -DISTANCE[true_index] / cfg.temperature + z
        logits -= logits.max()
        p = np.exp(logits)
        p /= p.sum()
    return np.clip(cfg.score_scale * p, 0.0, 1.0)


def _jitter(box: BoundingBox, rng: np.random.Generator, sigma: float) -> BoundingBox:
    noise = rng.standard_normal(4) * sigma
    x1, y1, x2, y2 = (np.array(box.as_list()) + noise).tolist()
    # keep corners ordered
    if x2 - x1 < 1.0:
        x1, x2 = min(x1, x2), max(x1, x2) + 1.0
    if y2 - y1 < 1.0:
        y1, y2 = min(y1, y2), max(y1, y2) + 1.0
    return BoundingBox(x1, y1, x2, y2)


def _row(scores: np.ndarray, box: BoundingBox, conf: float) -> PredictionRow:
    return PredictionRow(tuple(float(s) for s in scores), box, float(conf))


def simulate(scene: SceneGraph, cfg: NoiseConfig) -> PredictionMatrix:
    rng = _rng(scene, cfg)
    rows = []
    lo, hi = cfg.true_box_confidence
    for obj in scene.objects:
        dropped = rng.random() < cfg.p_fn
        scores = class_scores(obj.cls.index, rng, cfg)
        box = _jitter(obj.box, rng, cfg.box_jitter) if cfg.box_jitter > 0 else obj.box
        conf = rng.uniform(lo, hi)
        if not dropped:
            rows.append(_row(scores, box, conf))
    lo, hi = cfg.spurious_box_confidence
    for _ in range(rng.poisson(cfg.p_fp)):
        cls = int(rng.integers(NUM_CLASSES))
        scores = class_scores(cls, rng, cfg)
        w, h = rng.uniform(20.0, 80.0, size=2)
        x, y = rng.uniform(0.0, IMAGE_WIDTH - w), rng.uniform(0.0, IMAGE_HEIGHT - h)
        rows.append(_row(scores, BoundingBox(x, y, x + w, y + h), rng.uniform(lo, hi)))
    return PredictionMatrix(scene.image_id, tuple(rows))


def _match(matrix: PredictionMatrix, scene: SceneGraph, iou_min: float) -> tuple[int, int, int]:
    pairs = []
    for i, row in enumerate(matrix.rows):
        for j, obj in enumerate(scene.objects):
            iou = row.box.iou(obj.box)
            if iou >= iou_min:
                pairs.append((-iou, i, j))
    pairs.sort()
    used_rows, used_objs, tp = set(), set(), 0
    for _, i, j in pairs:
        if i in used_rows or j in used_objs:
            continue
        used_rows.add(i)
        used_objs.add(j)
        if matrix.rows[i].argmax() == scene.objects[j].cls:
            tp += 1
    fp = len(matrix.rows) - tp
    fn = len(scene.objects) - len(used_objs)
    return tp, fp, fn


def detection_counts(
    predictions: Sequence[PredictionMatrix], truth: Sequence[SceneGraph], iou_min: float = 0.5
) -> tuple[int, int, int]:
    """Total (TP, FP, FN) under greedy highest-IoU-first matching."""
    if not 0 < iou_min <= 1:
        raise ValueError("iou_min must lie in (0, 1]")
    by_id = {s.image_id: s for s in truth}
    pred_ids = [m.image_id for m in predictions]
    if set(pred_ids) != set(by_id) or len(pred_ids) != len(set(pred_ids)):
        raise ValueError("prediction and ground-truth image ids differ")
    tp = fp = fn = 0
    for m in predictions:
        a, b, c = _match(m, by_id[m.image_id], iou_min)
        tp, fp, fn = tp + a, fp + b, fn + c
    return tp, fp, fn


def detection_metrics(
    predictions: Sequence[PredictionMatrix], truth: Sequence[SceneGraph], iou_min: float = 0.5
) -> tuple[float, float]:
    """(precision, recall); precision is 1.0 when nothing was predicted."""
    tp, fp, fn = detection_counts(predictions, truth, iou_min)
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return precision, recall
