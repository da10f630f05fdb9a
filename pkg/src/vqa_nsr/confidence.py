"""Confidence thresholds over detector class scores and candidate class sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable

from .scene_model import NUM_CLASSES, BoundingBox, ObjectClass, PredictionMatrix

MAX_WEIGHT = 5000


@dataclass(frozen=True)
class ScoreStats:
    mu: float
    sigma: float
    count: int = 0


@dataclass(frozen=True)
class Candidate:
    cls: ObjectClass
    score: float
    weight: int


@dataclass(frozen=True)
class CandidateSet:
    row_index: int
    box: BoundingBox
    candidates: tuple[Candidate, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def classes(self) -> frozenset[ObjectClass]:
        return frozenset(c.cls for c in self.candidates)


def score_statistics(matrices: Iterable[PredictionMatrix]) -> ScoreStats:
    """Mean and population standard deviation of per-row maximum class scores."""
    maxima = [row.max_score for m in matrices for row in m.rows]
    if not maxima:
        raise ValueError("score statistics need at least one prediction row")
    n = len(maxima)
    mu = math.fsum(maxima) / n
    var = math.fsum((x - mu) ** 2 for x in maxima) / n
    return ScoreStats(mu=mu, sigma=math.sqrt(var), count=n)


def confidence_threshold(stats: ScoreStats, alpha: float) -> float:
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return max(stats.mu - alpha * stats.sigma, 0.0)


def weight(s: float) -> int:
    """Integer weak-constraint cost ``min(-1000 ln s, 5000)``, rounded half away from zero."""
    if not 0.0 <= s <= 1.0 or math.isnan(s):
        raise ValueError(f"score {s} outside [0, 1]")
    if s == 0.0:
        return MAX_WEIGHT
    raw = min(-1000.0 * math.log(s), float(MAX_WEIGHT))
    # -ln(1) is -0.0
    return int(Decimal(abs(raw)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _candidate(cls_index: int, s: float) -> Candidate:
    return Candidate(ObjectClass(cls_index), s, weight(s))


def candidate_sets(
    matrix: PredictionMatrix, theta: float, k: int = 1, deterministic: bool = False
) -> list[CandidateSet]:
    if not 1 <= k <= NUM_CLASSES:
        raise ValueError(f"fall-back k={k} outside [1, {NUM_CLASSES}]")
    out = []
    for i, row in enumerate(matrix.rows):
        # descending score, ascending class index on ties
        ranked = sorted(range(NUM_CLASSES), key=lambda j: (-row.scores[j], j))
        if deterministic:
            chosen = ranked[:1]
        else:
            chosen = [j for j in ranked if row.scores[j] >= theta] or ranked[:k]
        out.append(CandidateSet(i, row.box, tuple(_candidate(j, row.scores[j]) for j in chosen)))
    return out
