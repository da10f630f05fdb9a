"""Functional-program parsing, fact encoding and ASP emission."""

from .emit import emit_asp, rule_library, scene_encoding
from .facts import Fact, format_facts, from_facts, parse_fact_text, to_facts
from .program import (
    DEFAULT_SPATIAL,
    FUNCTIONS,
    FPNode,
    ProgramError,
    QuestionProgram,
    build_program,
    load_questions,
    parse_question,
)
from .syntax import AspSyntaxError, validate_asp

__all__ = [
    "AspSyntaxError",
    "DEFAULT_SPATIAL",
    "FPNode",
    "FUNCTIONS",
    "Fact",
    "ProgramError",
    "QuestionProgram",
    "build_program",
    "emit_asp",
    "format_facts",
    "from_facts",
    "load_questions",
    "parse_fact_text",
    "parse_question",
    "rule_library",
    "scene_encoding",
    "to_facts",
    "validate_asp",
]
