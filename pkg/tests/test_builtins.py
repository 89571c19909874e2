"""Bundled protocol models, clause stores, and the APS table."""

import pytest

from agentconform import builtins
from agentconform.builtins import (APS_LAYERS, APS_PROTOCOLS, BUILTIN_NAMES,
                                   aps_table, builtin, builtin_clauses)


def test_builtin_names():
    assert BUILTIN_NAMES == ("mcp", "a2a", "anp", "acp-cap", "acp-client")


def test_unknown_name_rejected():
    with pytest.raises(builtins.BuiltinError):
        builtin("nosuch")


def test_builtin_caching():
    assert builtin("mcp") is builtin("mcp")
    assert builtin_clauses("mcp") is builtin_clauses("mcp")


def test_mcp_clause_store_shape():
    clauses = builtin_clauses("mcp")
    assert len(clauses) == 37
    assert len({c.source.document for c in clauses}) == 8


def test_mcp_transition_kinds():
    model = builtin("mcp")
    kinds = {}
    for t in model.transitions:
        kinds.setdefault(t.kind, []).append(t.id)
    assert len(kinds["Protocol"]) == 6
    assert kinds["Adversary"] == ["InjectOutput"]
    assert model.transition("InjectOutput").adv == "ADV-1"


def test_acp_client_write_transition():
    model = builtin("acp-client")
    t = model.transition("fs_write")
    assert t.modality == "MAY"


def test_every_adversary_transition_is_tagged():
    for name in BUILTIN_NAMES:
        for t in builtin(name).transitions:
            if t.kind == "Adversary":
                assert t.adv in ("ADV-1", "ADV-2", "ADV-3"), (name, t.id)


def test_aps_table_shape_and_content():
    cells = aps_table()
    assert len(cells) == 24
    by_key = {(c.layer, c.protocol): c.status for c in cells}
    assert set(APS_PROTOCOLS) == {"mcp", "a2a", "anp", "acp-cap"}
    for proto in APS_PROTOCOLS:
        assert by_key[("L1", proto)] == "SPECIFIED"
    for layer in APS_LAYERS:
        assert by_key[(layer, "anp")] == (
            "SPECIFIED" if layer == "L1" else "UNDERCONSTRAINED")
    assert by_key[("L2", "mcp")] == "SPEC_GAP"
    assert by_key[("L2", "a2a")] == "SPECIFIED"
    assert by_key[("L2", "acp-cap")] == "SPECIFIED"
    for layer in ("L3", "L4", "L5", "L6"):
        for proto in ("mcp", "a2a", "acp-cap"):
            assert by_key[(layer, proto)] == "SPEC_GAP"
