"""Builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from vqa_nsr.compiler.program import FUNCTIONS, build_program
from vqa_nsr.confidence import Candidate, CandidateSet, weight
from vqa_nsr.harness.tasks import QuestionSampler, generate_scene
from vqa_nsr.scene_model import (
    NUM_CLASSES,
    BoundingBox,
    ObjectClass,
    PredictionMatrix,
    PredictionRow,
    SceneGraph,
    SceneObject,
    class_index,
)


def cls(desc: str) -> ObjectClass:
    """``"large red metal cylinder"`` -> ObjectClass."""
    size, color, material, shape = desc.split()
    return class_index(size, shape, material, color)


def box(x: float, y: float, half: float = 18.0) -> BoundingBox:
    return BoundingBox(x - half, y - half, x + half, y + half)


def scene(image_id: str, *objects: tuple[str, float, float]) -> SceneGraph:
    return SceneGraph(image_id, tuple(SceneObject(cls(d), box(x, y)) for d, x, y in objects))


def row(scores: dict[str, float], b: BoundingBox | None = None, conf: float = 1.0) -> PredictionRow:
    vec = [0.0] * NUM_CLASSES
    for desc, s in scores.items():
        vec[cls(desc).index] = s
    return PredictionRow(tuple(vec), b or box(100, 100), conf)


def matrix(image_id: str, *rows: PredictionRow) -> PredictionMatrix:
    return PredictionMatrix(image_id, tuple(rows))


def fig2_program():
    """"How many large things are either cyan metallic cylinders or yellow blocks?" in CLEVR node order."""
    return build_program(
        [
            ("scene", [], None),
            ("filter_material", [0], "metal"),
            ("filter_color", [1], "cyan"),
            ("filter_shape", [2], "cylinder"),
            ("scene", [], None),
            ("filter_color", [4], "yellow"),
            ("filter_shape", [5], "cube"),
            ("union", [3, 6], None),
            ("filter_size", [7], "large"),
            ("count", [8], None),
        ]
    )


FIG2_FACTS = """
end(8).
count(8,7).
filter_large(7,6).
union(6,3,5).
filter_cylinder(3,2).  filter_cube(5,4).
filter_cyan(2,1).      filter_yellow(4,0).
filter_metal(1,0).
scene(0).
"""

TIE_SCORES = (0.9, 0.5, 0.5, 0.3, 0.3, 0.2, 0.05)


def random_candidates(rng: np.random.Generator, sc: SceneGraph, max_cands: int = 3, max_rows: int = 6) -> list[CandidateSet]:
    """Rows for the scene objects (plus maybe one spurious row), each with 1..max_cands classes.

    Scores come from a small pool so equal weights are frequent.
    """
    boxes = [o.box for o in sc.objects]
    truths = [o.cls.index for o in sc.objects]
    if len(boxes) < max_rows and rng.random() < 0.3:
        x, y = rng.uniform(30, 450), rng.uniform(30, 290)
        boxes.append(box(x, y))
        truths.append(int(rng.integers(NUM_CLASSES)))
    out = []
    for i, (b, t) in enumerate(zip(boxes, truths)):
        n = int(rng.integers(1, max_cands + 1))
        classes = [t]
        while len(classes) < n:
            c = int(rng.integers(NUM_CLASSES))
            if c not in classes:
                classes.append(c)
        rng.shuffle(classes)
        scores = sorted((float(rng.choice(TIE_SCORES)) for _ in classes), reverse=True)
        cands = tuple(Candidate(ObjectClass(c), s, weight(s)) for c, s in zip(classes, scores))
        out.append(CandidateSet(i, b, cands))
    return out


def random_instances(seed: int, count: int, max_objects: int = 5, max_depth: int = 8):
    """``count`` (candidates, program) pairs; programs come from the synthetic sampler."""
    rng = np.random.default_rng(seed)
    sampler = QuestionSampler(rng, max_depth=max_depth)
    for i in range(count):
        sc = generate_scene(rng, f"r{i}", int(rng.integers(1, max_objects + 1)))
        program = sampler.sample(sc, question_id=str(i))
        yield random_candidates(rng, sc), program


ALL_FUNCTIONS = frozenset(FUNCTIONS)
