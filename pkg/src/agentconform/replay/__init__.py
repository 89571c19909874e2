"""Trace replay against executable protocol endpoints.

Counterexample traces compile into test cases; adapters map transition
ids to concrete wire operations and drive them against mock endpoints
(vulnerable or hardened profile) or, outside the test suite, against a
live endpoint. The oracle for each test is derived from the violated
property's principle.
"""

from .harness import (AdapterActionMap, AdapterReport, ReplayError,
                      TestCase, adapter_table, generate_tests, run)
from .mocks import A2aMock, McpMock

__all__ = [
    "AdapterActionMap", "AdapterReport", "ReplayError", "TestCase",
    "adapter_table", "generate_tests", "run", "McpMock", "A2aMock",
]
