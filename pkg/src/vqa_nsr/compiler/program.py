"""CLEVR functional programs as typed, topologically ordered DAGs."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from ..scene_model import ATTRIBUTES, VocabularyError, normalize_value

RELATIONS = ("left", "right", "front", "behind")

# direction -> (box coordinate, sign): an object o is <direction> of ref when
# sign * (o.coord - ref.coord) > 0. Larger y2 means closer to the camera.
DEFAULT_SPATIAL: dict[str, tuple[str, int]] = {
    "left": ("x1", -1),
    "right": ("x1", 1),
    "front": ("y2", 1),
    "behind": ("y2", -1),
}
BOX_COORDS = ("x1", "y1", "x2", "y2")

# function -> (input types, output type); attribute-valued types use the attribute name
SIGNATURES: dict[str, tuple[tuple[str, ...], str]] = {
    "scene": ((), "objects"),
    "unique": (("objects",), "object"),
    "relate": (("object",), "objects"),
    "union": (("objects", "objects"), "objects"),
    "intersect": (("objects", "objects"), "objects"),
    "count": (("objects",), "int"),
    "exist": (("objects",), "bool"),
    "equal_integer": (("int", "int"), "bool"),
    "less_than": (("int", "int"), "bool"),
    "greater_than": (("int", "int"), "bool"),
}
for _attr in ATTRIBUTES:
    SIGNATURES[f"filter_{_attr}"] = (("objects",), "objects")
    SIGNATURES[f"query_{_attr}"] = (("object",), _attr)
    SIGNATURES[f"same_{_attr}"] = (("object",), "objects")
    SIGNATURES[f"equal_{_attr}"] = ((_attr, _attr), "bool")

FUNCTIONS = tuple(SIGNATURES)
VALUED = frozenset([f"filter_{a}" for a in ATTRIBUTES] + ["relate"])
ANSWER_TYPES = frozenset(["int", "bool", *ATTRIBUTES])

# a single object is still an object set
_COMPATIBLE = {("object", "objects")}


class ProgramError(ValueError):
    """Invalid functional program: unknown function, bad arity/value, or not a DAG."""


def _accepts(expected: str, actual: str) -> bool:
    return expected == actual or (actual, expected) in _COMPATIBLE


@dataclass(frozen=True)
class FPNode:
    id: int
    function: str
    inputs: tuple[int, ...] = ()
    value: str | None = None

    @property
    def output_type(self) -> str:
        return SIGNATURES[self.function][1]

    @property
    def attribute(self) -> str | None:
        """Attribute name for filter_/query_/same_/equal_ attribute functions."""
        head, _, tail = self.function.partition("_")
        return tail if tail in ATTRIBUTES else None


@dataclass(frozen=True)
class QuestionProgram:
    nodes: tuple[FPNode, ...]
    expected_answer: str | None = None
    question_text: str | None = None
    image_id: str | None = None
    question_id: str | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        _validate(self.nodes)

    @property
    def root(self) -> int:
        return self.nodes[-1].id

    @property
    def answer_type(self) -> str:
        return self.nodes[-1].output_type

    def __len__(self) -> int:
        return len(self.nodes)

    def depth(self) -> int:
        d: dict[int, int] = {}
        for n in self.nodes:
            d[n.id] = 1 + max((d[i] for i in n.inputs), default=0)
        return d[self.root]

    def functions(self) -> set[str]:
        return {n.function for n in self.nodes}

    def inspected_attributes(self) -> frozenset[str]:
        """Attributes whose value can influence the answer."""
        return frozenset(n.attribute for n in self.nodes if n.attribute and not n.function.startswith("equal_"))


def _validate(nodes: Sequence[FPNode]) -> None:
    if not nodes:
        raise ProgramError("empty program")
    for pos, n in enumerate(nodes):
        if n.id != pos:
            raise ProgramError(f"node {pos} carries id {n.id}")
        if n.function not in SIGNATURES:
            raise ProgramError(f"unknown function {n.function!r}")
        in_types, _ = SIGNATURES[n.function]
        if len(n.inputs) != len(in_types):
            raise ProgramError(
                f"{n.function} at node {n.id} takes {len(in_types)} inputs, got {len(n.inputs)}"
            )
        for i, expected in zip(n.inputs, in_types):
            if not 0 <= i < n.id:
                raise ProgramError(f"node {n.id} references node {i}, not an earlier node")
            if not _accepts(expected, nodes[i].output_type):
                raise ProgramError(
                    f"{n.function} at node {n.id} expects {expected}, "
                    f"node {i} yields {nodes[i].output_type}"
                )
        if n.function in VALUED:
            if n.value is None:
                raise ProgramError(f"{n.function} at node {n.id} needs a value")
            allowed = RELATIONS if n.function == "relate" else ATTRIBUTES[n.attribute]
            if n.value not in allowed:
                raise ProgramError(f"bad value {n.value!r} for {n.function}")
        elif n.value is not None:
            raise ProgramError(f"{n.function} at node {n.id} takes no value")


_BRACKET = re.compile(r"^(?P<base>[a-z_]+)\[(?P<inner>[a-z_]+)\]$")


def _normalize_function(name: str, values: Sequence[str]) -> tuple[str, str | None]:
    """Resolve release-specific spellings to ``(function, value)``."""
    name = name.strip().lower()
    value = values[0] if values else None
    m = _BRACKET.match(name)
    if m:
        base, inner = m["base"], m["inner"]
        if f"{base}_{inner}" in SIGNATURES:  # filter[color] + value_inputs
            name = f"{base}_{inner}"
        elif base in SIGNATURES or base.startswith("filter"):  # relate[left], filter_color[red]
            name, value = base, inner
        else:
            raise ProgramError(f"unknown function {name!r}")
    if name not in SIGNATURES:
        raise ProgramError(f"unknown function {name!r}")
    if name in VALUED:
        if value is None:
            raise ProgramError(f"{name} needs a value input")
        value = str(value).strip().lower()
        if name != "relate":
            attr = name.split("_", 1)[1]
            try:
                value = normalize_value(value, attr)
            except VocabularyError as e:
                raise ProgramError(str(e)) from None
    elif value is not None:
        raise ProgramError(f"{name} takes no value input, got {value!r}")
    return name, value


def build_program(raw: Sequence[tuple[str, Sequence[int], str | None]], **meta: Any) -> QuestionProgram:
    """Canonicalize ``(function, inputs, value)`` triples into a QuestionProgram.

    All ``scene`` nodes are merged into the first one and the remaining nodes
    are renumbered in their original order, so a program mentions a single
    scene node.
    """
    if not raw:
        raise ProgramError("empty program")
    remap: dict[int, int] = {}
    nodes: list[FPNode] = []
    scene_id: int | None = None
    for old, (fn, inputs, value) in enumerate(raw):
        for i in inputs:
            if not (isinstance(i, int) and 0 <= i < old):
                raise ProgramError(f"node {old} references node {i}, not an earlier node")
        if fn == "scene" and scene_id is not None:
            remap[old] = scene_id
            continue
        new = len(nodes)
        remap[old] = new
        if fn == "scene":
            scene_id = new
        nodes.append(FPNode(new, fn, tuple(remap[i] for i in inputs), value))
    # a root that merged into the scene node is still the last entry
    if remap[len(raw) - 1] != len(nodes) - 1:
        raise ProgramError("root must be the last node")
    return QuestionProgram(tuple(nodes), **meta)


def parse_question(data: Mapping[str, Any] | Sequence[Mapping[str, Any]], require_answer: bool = False) -> QuestionProgram:
    """Parse one CLEVR question entry (or a bare ``program`` node list)."""
    if isinstance(data, Mapping):
        program = data.get("program")
        if program is None:
            raise ProgramError('question has no "program"')
        meta = {
            "expected_answer": None if data.get("answer") is None else str(data["answer"]),
            "question_text": data.get("question"),
            "image_id": _image_id(data),
            "question_id": None if data.get("question_index") is None else str(data["question_index"]),
        }
    else:
        program, meta = data, {}
    raw = []
    for pos, node in enumerate(program):
        fn = node.get("function", node.get("type"))
        if fn is None:
            raise ProgramError(f"node {pos} has no function")
        values = node.get("value_inputs", node.get("side_inputs", [])) or []
        name, value = _normalize_function(fn, values)
        inputs = node.get("inputs", [])
        raw.append((name, [int(i) for i in inputs], value))
    prog = build_program(raw, **meta)
    if require_answer and prog.answer_type not in ANSWER_TYPES:
        raise ProgramError(f"root {prog.nodes[-1].function} does not produce an answer")
    return prog


def _image_id(entry: Mapping[str, Any]) -> str | None:
    for key in ("image_id", "image_filename", "image_index"):
        if entry.get(key) is not None:
            return str(entry[key])
    return None


def load_questions(source: str | Path | Mapping[str, Any], require_answer: bool = True) -> list[QuestionProgram]:
    """Load CLEVR ``questions.json``."""
    if isinstance(source, Mapping):
        data = source
    else:
        try:
            data = json.loads(Path(source).read_text())
        except json.JSONDecodeError as e:
            raise ProgramError(f"malformed JSON: {e}") from e
    entries = data["questions"] if isinstance(data, Mapping) else data
    return [parse_question(q, require_answer=require_answer) for q in entries]


def program_to_json(program: QuestionProgram) -> list[dict[str, Any]]:
    return [
        {
            "function": n.function,
            "inputs": list(n.inputs),
            "value_inputs": [] if n.value is None else [n.value],
        }
        for n in program.nodes
    ]


def question_to_json(program: QuestionProgram) -> dict[str, Any]:
    out: dict[str, Any] = {"program": program_to_json(program)}
    if program.image_id is not None:
        out["image_id"] = program.image_id
    if program.question_id is not None:
        out["question_index"] = program.question_id
    if program.question_text is not None:
        out["question"] = program.question_text
    if program.expected_answer is not None:
        out["answer"] = program.expected_answer
    return out


def dump_questions(programs: Iterable[QuestionProgram]) -> dict[str, Any]:
    return {"questions": [question_to_json(p) for p in programs]}
