"""Standalone ASP-Core-2 programs for one question over one set of detections."""

from __future__ import annotations

from typing import Mapping, Sequence

from ..confidence import CandidateSet
from ..scene_model import ATTRIBUTES
from .facts import format_facts, to_facts
from .program import BOX_COORDS, DEFAULT_SPATIAL, QuestionProgram

# obj(T, I, Size, Shape, Material, Color, X1, Y1, X2, Y2)
OBJ_ARGS = ("T", "I", "Size", "Shape", "Mat", "Color", "X1", "Y1", "X2", "Y2")
_ATTR_POS = {"size": 2, "shape": 3, "material": 4, "color": 5}
_COORD_POS = {c: 6 + i for i, c in enumerate(BOX_COORDS)}
_VALUE_PRED = {"size": "size", "color": "color", "material": "material", "shape": "shape"}


def _anon(node: str, ident: str = "_", **fixed: str) -> str:
    """obj/10 atom with only the node, identifier and selected positions named."""
    args = [node, ident] + ["_"] * 8
    for name, term in fixed.items():
        pos = _ATTR_POS.get(name, _COORD_POS.get(name))
        args[pos] = term
    return f"obj({','.join(args)})"


def _full(node: str, ident: str = "I", **fixed: str) -> str:
    args = [node, ident] + list(OBJ_ARGS[2:])
    for name, term in fixed.items():
        pos = _ATTR_POS.get(name, _COORD_POS.get(name))
        args[pos] = term
    return f"obj({','.join(args)})"


def rule_library(spatial: Mapping[str, tuple[str, int]] = DEFAULT_SPATIAL) -> str:
    """Question-independent rules for every basic CLEVR function."""
    out = ["% --- helpers"]
    out.append(f"nonempty(T) :- {_anon('T')}.")
    out.append(f"multi(T) :- {_anon('T', 'I')}, {_anon('T', 'J')}, I != J.")
    out.append("single(T) :- nonempty(T), not multi(T).")

    out.append("% --- filters")
    for attr, values in ATTRIBUTES.items():
        for v in values:
            out.append(f"{_full('T', **{attr: v})} :- filter_{v}(T,T1), {_full('T1', **{attr: v})}.")

    out.append("% --- set operations")
    out.append("or(T,T1,T2) :- union(T,T1,T2).")
    out.append("and(T,T1,T2) :- intersect(T,T1,T2).")
    out.append(f"{_full('T')} :- and(T,T1,T2), {_full('T1')}, {_full('T2')}.")
    out.append(f"{_full('T')} :- or(T,T1,T2), {_full('T1')}.")
    out.append(f"{_full('T')} :- or(T,T1,T2), {_full('T2')}.")

    out.append("% --- uniqueness")
    out.append(":- unique(T,T1), not single(T1).")
    out.append(f"{_full('T')} :- unique(T,T1), {_full('T1')}.")

    out.append("% --- spatial relations")
    for direction, (coord, sign) in spatial.items():
        op = ">" if sign > 0 else "<"
        out.append(
            f"{_full('T')} :- relate_{direction}(T,T1), scene(S), {_full('S')}, "
            f"{_anon('T1', 'J', **{coord: 'R'})}, I != J, {OBJ_ARGS[_COORD_POS[coord]]} {op} R."
        )
        out.append(f":- relate_{direction}(T,T1), not single(T1).")

    out.append("% --- count and exist")
    out.append(f"int(T,V) :- count(T,T1), V = #count{{ I : {_anon('T1', 'I')} }}.")
    out.append("bool(T,true) :- exist(T,T1), nonempty(T1).")
    out.append("bool(T,false) :- exist(T,T1), not bool(T,true).")

    out.append("% --- queries")
    for attr in ATTRIBUTES:
        out.append(f"{_VALUE_PRED[attr]}(T,V) :- query_{attr}(T,T1), {_anon('T1', **{attr: 'V'})}.")
        out.append(f":- query_{attr}(T,T1), not single(T1).")

    out.append("% --- same-attribute relations")
    for attr in ATTRIBUTES:
        var = OBJ_ARGS[_ATTR_POS[attr]]
        out.append(
            f"{_full('T')} :- same_{attr}(T,T1), scene(S), {_full('S')}, "
            f"{_anon('T1', 'J', **{attr: var})}, I != J."
        )
        out.append(f":- same_{attr}(T,T1), not single(T1).")

    out.append("% --- integer comparison")
    for fn, cond in (("equal_integer", "V1 = V2"), ("less_than", "V1 < V2"), ("greater_than", "V1 > V2")):
        out.append(f"bool(T,true) :- {fn}(T,T1,T2), int(T1,V1), int(T2,V2), {cond}.")
        out.append(f"bool(T,false) :- {fn}(T,T1,T2), not bool(T,true).")

    out.append("% --- attribute comparison")
    for attr in ATTRIBUTES:
        p = _VALUE_PRED[attr]
        out.append(f"bool(T,true) :- equal_{attr}(T,T1,T2), {p}(T1,V), {p}(T2,V).")
        out.append(f"bool(T,false) :- equal_{attr}(T,T1,T2), not bool(T,true).")

    out.append("% --- answer extraction")
    for p in ("size", "color", "material", "shape", "bool", "int"):
        out.append(f"ans(V) :- end(T), {p}(T,V).")
    out.append(":- not ans(_).")
    return "\n".join(out) + "\n"


def _candidate_atom(node: str, cs: CandidateSet, cls) -> str:
    size, shape, material, color = cls.attrs
    x1, y1, x2, y2 = cs.box.quantized()
    return f"obj({node},{cs.row_index},{size},{shape},{material},{color},{x1},{y1},{x2},{y2})"


def scene_encoding(candidates: Sequence[CandidateSet]) -> str:
    """One exactly-one choice rule per row plus a weak constraint per candidate."""
    out = []
    for cs in candidates:
        atoms = "; ".join(_candidate_atom("O", cs, c.cls) for c in cs.candidates)
        out.append(f"{{ {atoms} }} = 1 :- scene(O).")
        for c in cs.candidates:
            out.append(f":~ {_candidate_atom('O', cs, c.cls)}. [{c.weight}@1,{cs.row_index}]")
    return "\n".join(out) + ("\n" if out else "")


def emit_asp(
    program: QuestionProgram,
    candidates: Sequence[CandidateSet],
    spatial: Mapping[str, tuple[str, int]] = DEFAULT_SPATIAL,
) -> str:
    parts = ["% question facts", format_facts(to_facts(program)).rstrip("\n")]
    parts += ["% scene encoding", scene_encoding(candidates).rstrip("\n") or "% (no detections)"]
    parts += ["% rules", rule_library(spatial).rstrip("\n")]
    return "\n".join(parts) + "\n"

