from .evaluate import Answer, Choice, ChosenObject, direct_interpret, evaluate_fixed
from .search import NO_ANSWER_TEXT, InstanceTooLarge, Outcome, brute_force, solve

__all__ = [
    "Answer",
    "Choice",
    "ChosenObject",
    "InstanceTooLarge",
    "NO_ANSWER_TEXT",
    "Outcome",
    "brute_force",
    "direct_interpret",
    "evaluate_fixed",
    "solve",
]
