"""Neuro-symbolic question answering over CLEVR-style scenes.

Detector outputs are thresholded into candidate class sets, questions are
compiled to logic programs, and an optimizing answer engine picks the most
plausible scene interpretation that admits an answer.
"""

__version__ = "0.1.0"
