"""Minimal ASP-Core-2 syntax checker.

Covers the fragment the emitter produces: facts, normal/disjunctive rules,
constraints, choice rules with bounds, ``#count``-style aggregates, builtin
comparisons, and weak constraints. Each statement is also checked for
variable safety.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<op>:-|:~|!=|<>|<=|>=|[=<>])
  | (?P<agg>\#(?:count|sum|min|max))
  | (?P<num>\d+)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<anon>_(?![A-Za-z0-9_]))
  | (?P<id>[a-z][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<punct>[.,;:(){}\[\]@|+\-*/])
    """,
    re.VERBOSE,
)

_BINOPS = {"=", "!=", "<>", "<", ">", "<=", ">="}


class AspSyntaxError(ValueError):
    pass


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


@dataclass
class Statement:
    kind: str  # fact, rule, constraint, choice, weak
    line: int
    head_vars: set[str] = field(default_factory=set)
    bound: set[str] = field(default_factory=set)
    needed: set[str] = field(default_factory=set)


def tokenize(text: str) -> list[Tok]:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise AspSyntaxError(f"line {line}:{pos - line_start + 1}: unexpected {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            toks.append(Tok(kind, m.group(), line, pos - line_start + 1))
        for nl in re.finditer("\n", m.group()):
            line += 1
            line_start = pos + nl.end()
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0

    # -- token helpers
    def peek(self, offset: int = 0) -> Tok | None:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def at(self, *texts: str) -> bool:
        t = self.peek()
        return t is not None and t.text in texts

    def error(self, msg: str):
        t = self.peek()
        where = f"line {t.line}:{t.col} near {t.text!r}" if t else "end of input"
        raise AspSyntaxError(f"{where}: {msg}")

    def take(self, text: str | None = None, kind: str | None = None) -> Tok:
        t = self.peek()
        if t is None or (text and t.text != text) or (kind and t.kind != kind):
            self.error(f"expected {text or kind}")
        self.i += 1
        return t

    # -- terms
    def term(self, vars_: set[str]) -> None:
        self.simple_term(vars_)
        while self.at("+", "-", "*", "/"):
            self.i += 1
            self.simple_term(vars_)

    def simple_term(self, vars_: set[str]) -> None:
        t = self.peek()
        if t is None:
            self.error("expected term")
        if t.text == "-":
            self.i += 1
            return self.simple_term(vars_)
        if t.text == "(":
            self.i += 1
            self.term(vars_)
            self.take(")")
            return
        if t.kind == "id":
            self.i += 1
            if self.at("("):
                self.i += 1
                self.terms(vars_)
                self.take(")")
            return
        if t.kind == "var":
            vars_.add(t.text)
            self.i += 1
            return
        if t.kind in ("num", "str", "anon"):
            self.i += 1
            return
        self.error("expected term")

    def terms(self, vars_: set[str]) -> None:
        self.term(vars_)
        while self.at(","):
            self.i += 1
            self.term(vars_)

    # -- literals
    def atom(self, vars_: set[str]) -> None:
        if self.at("-"):
            self.i += 1
        self.take(kind="id")
        if self.at("("):
            self.i += 1
            if not self.at(")"):
                self.terms(vars_)
            self.take(")")

    def _is_builtin(self) -> bool:
        # scan the term, then look for a comparison operator
        depth, j = 0, self.i
        while j < len(self.toks):
            t = self.toks[j]
            if t.text in ("(", "{"):
                depth += 1
            elif t.text in (")", "}"):
                if depth == 0:
                    return False
                depth -= 1
            elif depth == 0 and (t.text in (",", ".", ";", ":", "[") or t.kind == "agg"):
                return False
            elif depth == 0 and t.text in _BINOPS:
                return self.toks[j + 1].kind != "agg" if j + 1 < len(self.toks) else False
            j += 1
        return False

    def body_literal(self, st: Statement) -> None:
        # aggregate with a leading bound: "V = #count{...}" or "2 < #count{...}"
        nxt = self.peek(1)
        if nxt is not None and nxt.text in _BINOPS and self.peek(2) is not None and self.peek(2).kind == "agg":
            left: set[str] = set()
            self.term(left)
            op = self.take().text
            self.aggregate(st)
            if op == "=":
                st.bound |= left
            else:
                st.needed |= left
            return
        if self.peek() is not None and self.peek().kind == "agg":
            self.aggregate(st)
            if self.at(*_BINOPS):
                op = self.take().text
                right: set[str] = set()
                self.term(right)
                (st.bound if op == "=" else st.needed).update(right)
            return
        if self.at("not"):
            self.i += 1
            if self.at("not"):
                self.i += 1
            neg: set[str] = set()
            self.atom(neg)
            st.needed |= neg
            return
        if self._is_builtin():
            self.term(st.needed)
            self.take()
            self.term(st.needed)
            return
        pos: set[str] = set()
        self.atom(pos)
        st.bound |= pos

    def aggregate(self, st: Statement) -> None:
        self.take(kind="agg")
        self.take("{")
        while not self.at("}"):
            local: set[str] = set()
            if not self.at(":"):
                self.terms(local)
            if self.at(":"):
                self.i += 1
                inner = Statement("agg", 0)
                self.body_literal(inner)
                while self.at(","):
                    self.i += 1
                    self.body_literal(inner)
                local = (local | inner.needed) - inner.bound
            st.needed |= local
            if not self.at(";"):
                break
            self.i += 1
        self.take("}")

    def body(self, st: Statement) -> None:
        self.body_literal(st)
        while self.at(","):
            self.i += 1
            self.body_literal(st)

    def choice(self, st: Statement) -> None:
        if not self.at("{"):
            self.term(st.needed)
            if self.at(*_BINOPS):  # "1 <= { ... }" as well as "1 { ... }"
                self.i += 1
        self.take("{")
        while not self.at("}"):
            local: set[str] = set()
            self.atom(local)
            if self.at(":"):
                self.i += 1
                inner = Statement("cond", 0)
                self.body_literal(inner)
                while self.at(","):
                    self.i += 1
                    self.body_literal(inner)
                local = (local | inner.needed) - inner.bound
            st.head_vars |= local
            if not self.at(";"):
                break
            self.i += 1
        self.take("}")
        if self.at(*_BINOPS):
            self.i += 1
            self.term(st.needed)
        elif self.peek() is not None and self.peek().kind in ("num", "var", "id"):
            self.term(st.needed)

    def statement(self) -> Statement:
        t = self.peek()
        if t.text == ":-":
            self.i += 1
            st = Statement("constraint", t.line)
            self.body(st)
            self.take(".")
            return st
        if t.text == ":~":
            self.i += 1
            st = Statement("weak", t.line)
            self.body(st)
            self.take(".")
            self.take("[")
            self.term(st.needed)
            if self.at("@"):
                self.i += 1
                self.term(st.needed)
            while self.at(","):
                self.i += 1
                self.term(st.needed)
            self.take("]")
            return st
        st = Statement("rule", t.line)
        if t.text == "{" or (self.peek(1) is not None and self.peek(1).text in _BINOPS | {"{"}):
            st.kind = "choice"
            self.choice(st)
        else:
            self.atom(st.head_vars)
            while self.at("|"):
                self.i += 1
                self.atom(st.head_vars)
        if self.at(":-"):
            self.i += 1
            self.body(st)
        elif st.kind == "rule":
            st.kind = "fact"
        self.take(".")
        return st

    def program(self) -> list[Statement]:
        out = []
        while self.peek() is not None:
            out.append(self.statement())
        return out


def validate_asp(text: str) -> list[Statement]:
    """Parse ``text``; raise :class:`AspSyntaxError` on a syntax or safety violation."""
    statements = _Parser(tokenize(text)).program()
    for st in statements:
        unsafe = (st.head_vars | st.needed) - st.bound
        if unsafe:
            raise AspSyntaxError(f"line {st.line}: unsafe variables {sorted(unsafe)}")
    return statements
