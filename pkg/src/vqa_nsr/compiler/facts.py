"""Indexed fact encoding of functional programs, and its inverse."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

from ..scene_model import VALUE_ATTRIBUTE
from .program import RELATIONS, SIGNATURES, ProgramError, QuestionProgram, build_program

Arg = Union[int, str]

# input spellings of the set operations
SET_OP_ALIASES = {"union": "union", "or": "union", "intersect": "intersect", "and": "intersect"}


@dataclass(frozen=True, order=True)
class Fact:
    predicate: str
    args: tuple[Arg, ...]

    def __str__(self) -> str:
        if not self.args:
            return f"{self.predicate}."
        return f"{self.predicate}({','.join(map(str, self.args))})."


def predicate_name(function: str, value: str | None) -> str:
    if function.startswith("filter_"):
        return f"filter_{value}"
    if function == "relate":
        return f"relate_{value}"
    return function


def to_facts(program: QuestionProgram) -> list[Fact]:
    """``end(root)`` followed by one fact per node, highest id first."""
    facts = [Fact("end", (program.root,))]
    for node in reversed(program.nodes):
        facts.append(Fact(predicate_name(node.function, node.value), (node.id, *node.inputs)))
    return facts


def format_facts(facts: Iterable[Fact]) -> str:
    return "\n".join(str(f) for f in facts) + "\n"


_FACT = re.compile(r"\s*([a-z][A-Za-z0-9_]*)\s*(?:\(([^()]*)\))?\s*\.")


def parse_fact_text(text: str) -> list[Fact]:
    text = re.sub(r"%[^\n]*", "", text)
    facts, pos = [], 0
    for m in _FACT.finditer(text):
        if text[pos:m.start()].strip():
            raise ProgramError(f"unparsable fact text near {text[pos:m.start()].strip()!r}")
        args = tuple(
            int(a) if re.fullmatch(r"-?\d+", a.strip()) else a.strip()
            for a in (m.group(2).split(",") if m.group(2) else [])
        )
        facts.append(Fact(m.group(1), args))
        pos = m.end()
    if text[pos:].strip():
        raise ProgramError(f"trailing text {text[pos:].strip()!r}")
    return facts


def _function_of(predicate: str) -> tuple[str, str | None]:
    if predicate in SET_OP_ALIASES:
        return SET_OP_ALIASES[predicate], None
    if predicate.startswith("filter_"):
        value = predicate[len("filter_"):]
        if value not in VALUE_ATTRIBUTE:
            raise ProgramError(f"unknown filter value in {predicate!r}")
        return f"filter_{VALUE_ATTRIBUTE[value]}", value
    if predicate.startswith("relate_"):
        value = predicate[len("relate_"):]
        if value not in RELATIONS:
            raise ProgramError(f"unknown relation in {predicate!r}")
        return "relate", value
    if predicate in SIGNATURES:
        return predicate, None
    raise ProgramError(f"unknown predicate {predicate!r}")


def from_facts(facts: Iterable[Fact] | str) -> QuestionProgram:
    """Rebuild a program from its fact encoding (ids must be 0..n-1)."""
    if isinstance(facts, str):
        facts = parse_fact_text(facts)
    ends = []
    by_id: dict[int, tuple[str, list[int], str | None]] = {}
    for f in facts:
        if f.predicate == "end":
            ends.append(f.args[0])
            continue
        if not f.args or not all(isinstance(a, int) for a in f.args):
            raise ProgramError(f"fact {f} needs integer node references")
        fn, value = _function_of(f.predicate)
        if f.args[0] in by_id:
            raise ProgramError(f"node {f.args[0]} defined twice")
        by_id[f.args[0]] = (fn, list(f.args[1:]), value)
    if len(ends) != 1:
        raise ProgramError("exactly one end/1 fact required")
    if sorted(by_id) != list(range(len(by_id))):
        raise ProgramError("node ids must be contiguous from 0")
    if ends[0] != len(by_id) - 1:
        raise ProgramError("end must reference the last node")
    return build_program([by_id[i] for i in range(len(by_id))])
