"""
Verification harness: brute-force oracles, the invariant suite and the CLI.
"""

from . import oracles
from .checks import PROPERTIES, evaluate, require_all, run_suite
from .cli import build_parser, main
from .session import class_names, prepare_inputs, run_model

__all__ = [
    "oracles",
    "PROPERTIES",
    "evaluate",
    "run_suite",
    "require_all",
    "class_names",
    "prepare_inputs",
    "run_model",
    "build_parser",
    "main",
]
