"""Bottom-up evaluation of a functional program over one fixed scene interpretation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..compiler.program import (
    ANSWER_TYPES,
    BOX_COORDS,
    DEFAULT_SPATIAL,
    ProgramError,
    QuestionProgram,
)
from ..scene_model import ATTRIBUTES, BoundingBox, ObjectClass, SceneGraph, normalize_value

_BOOL_TEXT = {True: "yes", False: "no"}


@dataclass(frozen=True)
class Answer:
    kind: str  # size | color | material | shape | bool | int
    value: str | bool | int

    def __post_init__(self):
        if self.kind not in ANSWER_TYPES:
            raise ValueError(f"unknown answer kind {self.kind!r}")

    def __str__(self) -> str:
        if self.kind == "bool":
            return _BOOL_TEXT[self.value]
        return str(self.value)

    @classmethod
    def parse(cls, text: str) -> Answer:
        """Read a CLEVR answer string ("yes", "3", "large", "metallic", ...)."""
        t = str(text).strip().lower()
        if t in ("yes", "true"):
            return cls("bool", True)
        if t in ("no", "false"):
            return cls("bool", False)
        if t.isdigit():
            return cls("int", int(t))
        v = normalize_value(t)
        return cls(next(a for a, vals in ATTRIBUTES.items() if v in vals), v)


@dataclass(frozen=True)
class ChosenObject:
    row: int
    cls: ObjectClass
    coords: tuple[int, int, int, int]  # quantized box
    weight: int = 0


@dataclass(frozen=True)
class Choice:
    objects: tuple[ChosenObject, ...]

    @property
    def total_cost(self) -> int:
        return sum(o.weight for o in self.objects)

    @classmethod
    def from_scene(cls, scene: SceneGraph) -> Choice:
        return cls(tuple(ChosenObject(i, o.cls, o.box.quantized()) for i, o in enumerate(scene.objects)))


class _Fail(Exception):
    pass


def _single(s: frozenset[int]) -> int:
    if len(s) != 1:
        raise _Fail
    return next(iter(s))


def related(
    coords: Sequence[tuple[int, int, int, int]],
    ref: int,
    direction: str,
    spatial: Mapping[str, tuple[str, int]] = DEFAULT_SPATIAL,
) -> frozenset[int]:
    """Objects (by position) standing in ``direction`` of object ``ref``."""
    coord, sign = spatial[direction]
    k = BOX_COORDS.index(coord)
    r = coords[ref][k]
    return frozenset(o for o in range(len(coords)) if o != ref and sign * (coords[o][k] - r) > 0)


def check_answerable(program: QuestionProgram) -> None:
    if program.answer_type not in ANSWER_TYPES:
        raise ProgramError(f"program root {program.nodes[-1].function} yields no answer")


def evaluate_fixed(
    choice: Choice,
    program: QuestionProgram,
    spatial: Mapping[str, tuple[str, int]] = DEFAULT_SPATIAL,
) -> Answer | None:
    """Answer under one class per object, or ``None`` when a uniqueness precondition fails."""
    check_answerable(program)
    objs = choice.objects
    coords = [o.coords for o in objs]
    vals: list = []
    try:
        for n in program.nodes:
            f, args = n.function, [vals[i] for i in n.inputs]
            if f == "scene":
                v = frozenset(range(len(objs)))
            elif f.startswith("filter_"):
                v = frozenset(o for o in args[0] if objs[o].cls.attribute(n.attribute) == n.value)
            elif f == "union":
                v = args[0] | args[1]
            elif f == "intersect":
                v = args[0] & args[1]
            elif f == "unique":
                _single(args[0])
                v = args[0]
            elif f == "relate":
                v = related(coords, _single(args[0]), n.value, spatial)
            elif f == "count":
                v = len(args[0])
            elif f == "exist":
                v = bool(args[0])
            elif f.startswith("query_"):
                v = objs[_single(args[0])].cls.attribute(n.attribute)
            elif f.startswith("same_"):
                ref = _single(args[0])
                target = objs[ref].cls.attribute(n.attribute)
                v = frozenset(
                    o for o in range(len(objs)) if o != ref and objs[o].cls.attribute(n.attribute) == target
                )
            elif f == "less_than":
                v = args[0] < args[1]
            elif f == "greater_than":
                v = args[0] > args[1]
            elif f.startswith("equal_"):  # equal_integer and equal_<attribute>
                v = args[0] == args[1]
            else:  # pragma: no cover - guarded by program validation
                raise ProgramError(f"unhandled function {f}")
            vals.append(v)
    except _Fail:
        return None
    return Answer(program.answer_type, vals[-1])


def direct_interpret(
    program: QuestionProgram,
    scene: SceneGraph,
    spatial: Mapping[str, tuple[str, int]] = DEFAULT_SPATIAL,
) -> Answer | None:
    """Reference answer on a ground-truth scene, bypassing detection."""
    return evaluate_fixed(Choice.from_scene(scene), program, spatial)


def choice_from_boxes(rows: Sequence[tuple[int, ObjectClass, BoundingBox, int]]) -> Choice:
    return Choice(tuple(ChosenObject(r, c, b.quantized(), w) for r, c, b, w in rows))
