"""Synthetic CLEVR-like scenes and questions with reference answers.

Questions come from a fixed cycle of CLEVR-style templates; the per-template
attribute/comparison variants also cycle, so every catalogue function appears
within any run of 100 consecutive questions. A question is kept only if it
has an answer on the ground-truth scene.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..compiler.program import RELATIONS, ProgramError, QuestionProgram, build_program
from ..reasoner.evaluate import direct_interpret, related
from ..scene_model import (
    ATTRIBUTES,
    BOX_HALF_EXTENT,
    NUM_CLASSES,
    BoundingBox,
    ObjectClass,
    SceneGraph,
    SceneObject,
)

log = logging.getLogger(__name__)

ATTRS = tuple(ATTRIBUTES)
INT_COMPARISONS = ("equal_integer", "less_than", "greater_than")
MAX_TRIES = 200


@dataclass(frozen=True)
class SyntheticConfig:
    num_scenes: int = 50
    min_objects: int = 3
    max_objects: int = 8
    questions_per_scene: int = 10
    seed: int = 0
    max_depth: int | None = None
    image_prefix: str = "synth"


class _Sketch:
    """Mutable node list under construction: (function, inputs, value) triples."""

    def __init__(self):
        self.raw: list[tuple[str, list[int], str | None]] = [("scene", [], None)]

    def add(self, fn: str, inputs: list[int], value: str | None = None) -> int:
        self.raw.append((fn, inputs, value))
        return len(self.raw) - 1


class _Unidentifiable(Exception):
    pass


def generate_scene(rng: np.random.Generator, image_id: str, n_objects: int) -> SceneGraph:
    """Uniform classes at non-overlapping positions in a 480x320 frame."""
    objects: list[SceneObject] = []
    for _ in range(n_objects):
        cls = ObjectClass(int(rng.integers(NUM_CLASSES)))
        h = BOX_HALF_EXTENT[cls.size]
        for _ in range(MAX_TRIES):
            cx, cy = rng.uniform(h + 4, 480 - h - 4), rng.uniform(h + 4, 320 - h - 4)
            box = BoundingBox(cx - h, cy - h, cx + h, cy + h)
            if all(box.iou(o.box) == 0.0 for o in objects):
                break
        else:
            break  # frame is full
        objects.append(SceneObject(cls, box))
    return SceneGraph(image_id, tuple(objects))


class QuestionSampler:
    def __init__(self, rng: np.random.Generator, max_depth: int | None = None):
        self.rng = rng
        self.max_depth = max_depth
        self.turn = 0
        self.variant: dict[str, int] = {}
        self.templates: list[tuple[str, Callable[[SceneGraph, _Sketch, int], None]]] = [
            ("count", self._count),
            ("exist", self._exist),
            ("query", self._query),
            ("relate_count", self._relate_count),
            ("relate_query", self._relate_query),
            ("same", self._same),
            ("compare_integer", self._compare_integer),
            ("compare_attribute", self._compare_attribute),
            ("union", self._union),
            ("intersect", self._intersect),
            ("relate_exist", self._relate_exist),
        ]

    # --- helpers --------------------------------------------------------------
    def _pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def _filters(self, scene: SceneGraph, sk: _Sketch, src: int, must: str | None = None) -> int:
        """Random filter chain; values come from a random scene object so results are often nonempty."""
        attrs = [a for a in ATTRS if self.rng.random() < 0.35]
        if must and must not in attrs:
            attrs.append(must)
        if not attrs and self.rng.random() < 0.5:
            attrs = [self._pick(ATTRS)]
        if scene.objects and self.rng.random() < 0.8:
            template = self._pick(scene.objects).cls
            values = {a: template.attribute(a) for a in attrs}
        else:
            values = {a: self._pick(ATTRIBUTES[a]) for a in attrs}
        node = src
        for a in attrs:
            node = sk.add(f"filter_{a}", [node], values[a])
        return node

    def _identify(self, scene: SceneGraph, sk: _Sketch, target: int, pool: list[int], src: int) -> int:
        """Filters on ``src`` singling out ``target`` among ``pool``, then unique()."""
        order = list(ATTRS)
        self.rng.shuffle(order)
        remaining = list(pool)
        node = src
        tcls = scene.objects[target].cls
        for a in order:
            if remaining == [target]:
                break
            v = tcls.attribute(a)
            narrowed = [o for o in remaining if scene.objects[o].cls.attribute(a) == v]
            if len(narrowed) < len(remaining) or self.rng.random() < 0.2:
                node = sk.add(f"filter_{a}", [node], v)
                remaining = narrowed
        if remaining != [target]:
            raise _Unidentifiable
        return sk.add("unique", [node])

    def _object(self, scene: SceneGraph) -> int:
        if not scene.objects:
            raise _Unidentifiable
        return int(self.rng.integers(len(scene.objects)))

    def _all(self, scene: SceneGraph) -> list[int]:
        return list(range(len(scene.objects)))

    # --- templates ------------------------------------------------------------
    def _count(self, scene, sk, k):
        sk.add("count", [self._filters(scene, sk, 0, must=ATTRS[k % 4])])

    def _exist(self, scene, sk, k):
        sk.add("exist", [self._filters(scene, sk, 0, must=ATTRS[(k + 2) % 4])])

    def _query(self, scene, sk, k):
        u = self._identify(scene, sk, self._object(scene), self._all(scene), 0)
        sk.add(f"query_{ATTRS[k % 4]}", [u])

    def _relate(self, scene, sk) -> tuple[int, list[int]]:
        ref = self._object(scene)
        direction = self._pick(RELATIONS)
        u = self._identify(scene, sk, ref, self._all(scene), 0)
        rel = sk.add("relate", [u], direction)
        coords = [o.box.quantized() for o in scene.objects]
        return rel, sorted(related(coords, ref, direction))

    def _relate_count(self, scene, sk, k):
        rel, _ = self._relate(scene, sk)
        sk.add("count", [self._filters(scene, sk, rel)])

    def _relate_exist(self, scene, sk, k):
        rel, _ = self._relate(scene, sk)
        sk.add("exist", [self._filters(scene, sk, rel)])

    def _relate_query(self, scene, sk, k):
        rel, pool = self._relate(scene, sk)
        if not pool:
            raise _Unidentifiable
        u = self._identify(scene, sk, self._pick(pool), pool, rel)
        sk.add(f"query_{ATTRS[(k + 1) % 4]}", [u])

    def _same(self, scene, sk, k):
        u = self._identify(scene, sk, self._object(scene), self._all(scene), 0)
        same = sk.add(f"same_{ATTRS[k % 4]}", [u])
        out = self._filters(scene, sk, same)
        sk.add("exist" if k % 2 else "count", [out])

    def _compare_integer(self, scene, sk, k):
        a = sk.add("count", [self._filters(scene, sk, 0)])
        b = sk.add("count", [self._filters(scene, sk, 0)])
        sk.add(INT_COMPARISONS[k % 3], [a, b])

    def _compare_attribute(self, scene, sk, k):
        attr = ATTRS[k % 4]
        first = self._object(scene)
        others = [o for o in self._all(scene) if o != first]
        if not others:
            raise _Unidentifiable
        qa = sk.add(f"query_{attr}", [self._identify(scene, sk, first, self._all(scene), 0)])
        qb = sk.add(f"query_{attr}", [self._identify(scene, sk, self._pick(others), self._all(scene), 0)])
        sk.add(f"equal_{attr}", [qa, qb])

    def _union(self, scene, sk, k):
        a = self._filters(scene, sk, 0, must=ATTRS[k % 4])
        b = self._filters(scene, sk, 0, must=ATTRS[(k + 1) % 4])
        out = sk.add("union", [a, b])
        if self.rng.random() < 0.5:
            out = self._filters(scene, sk, out)
        sk.add("count" if k % 2 == 0 else "exist", [out])

    def _intersect(self, scene, sk, k):
        rel, _ = self._relate(scene, sk)
        a = self._filters(scene, sk, rel)
        b = self._filters(scene, sk, 0, must=ATTRS[k % 4])
        sk.add("exist" if k % 2 else "count", [sk.add("intersect", [a, b])])

    # --- driver ---------------------------------------------------------------
    def sample(self, scene: SceneGraph, **meta) -> QuestionProgram:
        """Next template in the cycle, resampled until answerable on ``scene``."""
        for offset in range(len(self.templates)):
            name, template = self.templates[(self.turn + offset) % len(self.templates)]
            k = self.variant.get(name, 0)
            for _ in range(MAX_TRIES):
                sk = _Sketch()
                try:
                    template(scene, sk, k)
                    prog = build_program(sk.raw, **meta)
                except (_Unidentifiable, ProgramError):
                    continue
                if self.max_depth is not None and prog.depth() > self.max_depth:
                    continue
                answer = direct_interpret(prog, scene)
                if answer is None:
                    continue
                self.variant[name] = k + 1
                self.turn += 1
                return QuestionProgram(
                    prog.nodes,
                    expected_answer=str(answer),
                    image_id=scene.image_id,
                    question_id=meta.get("question_id"),
                    metadata={"template": name},
                )
            log.debug("template %s unanswerable on %s", name, scene.image_id)
        raise RuntimeError(f"no template yields an answerable question on {scene.image_id}")


def generate_synthetic_tasks(cfg: SyntheticConfig) -> tuple[list[SceneGraph], list[QuestionProgram]]:
    rng = np.random.default_rng(cfg.seed)
    sampler = QuestionSampler(rng, cfg.max_depth)
    scenes, questions = [], []
    for i in range(cfg.num_scenes):
        n = int(rng.integers(cfg.min_objects, cfg.max_objects + 1))
        scene = generate_scene(rng, f"{cfg.image_prefix}_{cfg.seed}_{i:05d}", n)
        scenes.append(scene)
        for _ in range(cfg.questions_per_scene):
            questions.append(sampler.sample(scene, question_id=str(len(questions))))
    return scenes, questions
