"""Conformance checking for AI agent protocols.

The package bundles reconstructed protocol models (MCP, A2A, ANP and two
ACP variants), a catalog of agent-safety principles, a bounded explicit
state model checker, TLA+ emission and TLC log parsing, cross-protocol
composition, and a trace replay harness for implementation-level tests.
"""

__version__ = "0.1.0"

from .builtins import BUILTIN_NAMES, builtin, builtin_clauses, aps_table
from .checker import (Bounds, DEFAULT_BOUNDS, CheckResult, Counterexample,
                      check, check_all, enumerate_states, validate_trace)

__all__ = [
    "BUILTIN_NAMES", "builtin", "builtin_clauses", "aps_table",
    "Bounds", "DEFAULT_BOUNDS", "CheckResult", "Counterexample",
    "check", "check_all", "enumerate_states", "validate_trace",
]
