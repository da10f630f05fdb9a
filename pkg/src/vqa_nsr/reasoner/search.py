"""Optimal answers over candidate class sets.

:func:`solve` is a depth-first branch and bound over per-row class choices.
Its bound is the incumbent cost against ``partial cost + cheapest completion``;
it additionally drops a subtree as soon as a three-valued evaluation of the
program shows that every completion violates a uniqueness precondition.
:func:`brute_force` enumerates every choice and serves as the test oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..compiler.program import DEFAULT_SPATIAL, QuestionProgram
from ..confidence import Candidate, CandidateSet
from .evaluate import Answer, Choice, ChosenObject, check_answerable, evaluate_fixed, related

BRUTE_FORCE_LIMIT = 10**6


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Outcome:
    result: Answer | None
    cost: int | None
    tie: bool = False
    explored: int = field(default=0, compare=False)
    # candidate position chosen per row, in row order
    selection: tuple[int, ...] | None = field(default=None, compare=False)

    @property
    def answered(self) -> bool:
        return self.result is not None


NO_ANSWER_TEXT = "no answer"


def _chosen(cs: CandidateSet, cand: Candidate) -> ChosenObject:
    return ChosenObject(cs.row_index, cand.cls, cs.box.quantized(), cand.weight)


class _Incumbent:
    def __init__(self):
        self.cost = math.inf
        self.key: tuple[int, ...] | None = None
        self.answer: Answer | None = None
        self.answers: set[Answer] = set()

    def offer(self, cost: int, key: tuple[int, ...], answer: Answer) -> None:
        if cost < self.cost:
            self.cost, self.key, self.answer, self.answers = cost, key, answer, {answer}
        elif cost == self.cost:
            self.answers.add(answer)
            if key < self.key:
                self.key, self.answer = key, answer

    def outcome(self, explored: int) -> Outcome:
        if self.key is None:
            return Outcome(None, None, False, explored)
        return Outcome(self.answer, int(self.cost), len(self.answers) > 1, explored, self.key)


def brute_force(
    candidates: Sequence[CandidateSet],
    program: QuestionProgram,
    spatial: Mapping[str, tuple[str, int]] = DEFAULT_SPATIAL,
    limit: int = BRUTE_FORCE_LIMIT,
) -> Outcome:
    """Evaluate every choice; same tie-break as :func:`solve`."""
    check_answerable(program)
    size = math.prod(len(cs.candidates) for cs in candidates)
    if size > limit:
        raise InstanceTooLarge(f"{size} choices exceed the brute-force limit {limit}")
    best = _Incumbent()
    explored = 0
    for key in itertools.product(*(range(len(cs.candidates)) for cs in candidates)):
        explored += 1
        choice = Choice(tuple(_chosen(cs, cs.candidates[p]) for cs, p in zip(candidates, key)))
        answer = evaluate_fixed(choice, program, spatial)
        if answer is not None:
            best.offer(choice.total_cost, key, answer)
    return best.outcome(explored)


# --- three-valued evaluation over partially assigned scenes -------------------


class _Doomed(Exception):
    pass


def _doomed(
    domains: Sequence[Mapping[str, frozenset[str]]],
    coords: Sequence[tuple[int, int, int, int]],
    program: QuestionProgram,
    spatial: Mapping[str, tuple[str, int]],
) -> bool:
    """True when no completion of ``domains`` passes every uniqueness check.

    Object sets are bracketed as (must, may); integers as (lo, hi);
    booleans and attribute values as sets of possible values.
    """
    n_obj = len(domains)
    vals: list = []
    try:
        for n in program.nodes:
            f, args = n.function, [vals[i] for i in n.inputs]
            a = n.attribute
            if f == "scene":
                everything = frozenset(range(n_obj))
                v = (everything, everything)
            elif f.startswith("filter_"):
                must, may = args[0]
                v = (
                    frozenset(o for o in must if domains[o][a] == {n.value}),
                    frozenset(o for o in may if n.value in domains[o][a]),
                )
            elif f == "union":
                v = (args[0][0] | args[1][0], args[0][1] | args[1][1])
            elif f == "intersect":
                v = (args[0][0] & args[1][0], args[0][1] & args[1][1])
            elif f == "unique":
                must, may = args[0]
                if len(must) >= 2 or not may:
                    raise _Doomed
                v = args[0]
            elif f == "relate":
                refs = args[0][0] if len(args[0][0]) == 1 else args[0][1]
                outs = [related(coords, r, n.value, spatial) for r in refs]
                v = (frozenset.intersection(*outs), frozenset.union(*outs))
            elif f == "count":
                v = (len(args[0][0]), len(args[0][1]))
            elif f == "exist":
                must, may = args[0]
                v = frozenset([True]) if must else frozenset([False]) if not may else frozenset([True, False])
            elif f.startswith("query_"):
                refs = args[0][0] if len(args[0][0]) == 1 else args[0][1]
                v = frozenset().union(*(domains[r][a] for r in refs))
            elif f.startswith("same_"):
                must_ref, may_ref = args[0]
                if len(must_ref) == 1 and len(domains[next(iter(must_ref))][a]) == 1:
                    r = next(iter(must_ref))
                    target = domains[r][a]
                    v = (
                        frozenset(o for o in range(n_obj) if o != r and domains[o][a] == target),
                        frozenset(o for o in range(n_obj) if o != r and domains[o][a] & target),
                    )
                else:
                    may = frozenset(
                        o for r in may_ref for o in range(n_obj) if o != r and domains[o][a] & domains[r][a]
                    )
                    v = (frozenset(), may)
            elif f in ("equal_integer", "less_than", "greater_than"):
                (lo1, hi1), (lo2, hi2) = args
                if f == "equal_integer":
                    can_true, can_false = lo1 <= hi2 and lo2 <= hi1, not (lo1 == hi1 == lo2 == hi2)
                elif f == "less_than":
                    can_true, can_false = lo1 < hi2, hi1 >= lo2
                else:
                    can_true, can_false = hi1 > lo2, lo1 <= hi2
                v = frozenset([b for b, ok in ((True, can_true), (False, can_false)) if ok])
            else:  # equal_<attribute>
                x, y = args
                v = frozenset([b for b, ok in ((True, bool(x & y)), (False, not (x == y and len(x) == 1))) if ok])
            vals.append(v)
    except _Doomed:
        return True
    return False


def _signature(cls, attrs: Sequence[str]) -> tuple[str, ...]:
    return tuple(cls.attribute(a) for a in attrs)


def solve(
    candidates: Sequence[CandidateSet],
    program: QuestionProgram,
    spatial: Mapping[str, tuple[str, int]] = DEFAULT_SPATIAL,
) -> Outcome:
    """Minimum-cost answer over all choices; ``Outcome.result`` is None for NoAnswer.

    Ties at the optimal cost are broken by the lexicographically smallest
    vector of candidate positions (row order); ``tie`` reports whether a
    different answer is equally cheap.
    """
    check_answerable(program)
    attrs = sorted(program.inspected_attributes())
    n_rows = len(candidates)

    # Candidates indistinguishable to the program: keep the cheapest, earliest one.
    options: list[list[tuple[int, Candidate]]] = []
    for cs in candidates:
        kept: dict[tuple[str, ...], tuple[int, Candidate]] = {}
        for pos, cand in enumerate(cs.candidates):
            sig = _signature(cand.cls, attrs)
            if sig not in kept or (cand.weight, pos) < (kept[sig][1].weight, kept[sig][0]):
                kept[sig] = (pos, cand)
        options.append(sorted(kept.values(), key=lambda pc: (pc[1].weight, pc[0])))

    order = sorted(range(n_rows), key=lambda r: (len(options[r]), r))
    fixed = [r for r in order if len(options[r]) == 1]
    branching = [r for r in order if len(options[r]) > 1]
    suffix_min = [0] * (len(branching) + 1)
    for d in range(len(branching) - 1, -1, -1):
        suffix_min[d] = suffix_min[d + 1] + options[branching[d]][0][1].weight

    coords = [cs.box.quantized() for cs in candidates]
    domains: list[dict[str, frozenset[str]]] = [
        {a: frozenset(c.cls.attribute(a) for _, c in opts) for a in attrs} for opts in options
    ]
    positions: list[int] = [0] * n_rows
    classes = [opts[0][1] for opts in options]
    for r in fixed:
        positions[r] = options[r][0][0]
    base_cost = sum(options[r][0][1].weight for r in fixed)

    best = _Incumbent()
    explored = 0

    def leaf(cost: int) -> None:
        choice = Choice(tuple(_chosen(candidates[r], classes[r]) for r in range(n_rows)))
        answer = evaluate_fixed(choice, program, spatial)
        if answer is not None:
            best.offer(cost, tuple(positions), answer)

    def descend(depth: int, cost: int) -> None:
        nonlocal explored
        explored += 1
        if depth == len(branching):
            leaf(cost)
            return
        if _doomed(domains, coords, program, spatial):
            return
        row = branching[depth]
        saved = domains[row]
        for pos, cand in options[row]:
            c = cost + cand.weight
            if c + suffix_min[depth + 1] > best.cost:
                break
            positions[row], classes[row] = pos, cand
            domains[row] = {a: frozenset([cand.cls.attribute(a)]) for a in attrs}
            descend(depth + 1, c)
        domains[row] = saved

    descend(0, base_cost)
    return best.outcome(explored)
