"""Bounded model checker: verdicts, minimality, determinism, trace tools."""

import dataclasses
import random

import pytest

from agentconform import checker, expr as E, ir
from agentconform.builtins import builtin

from _oracle import oracle_check


def test_mcp_p8_minimal_counterexample():
    model = builtin("mcp")
    res = checker.check(model, model.property_by_id("P8_CredRevocation"))
    assert res.verdict == "FAIL"
    cx = res.counterexample
    assert cx.depth == 2
    assert [s.transition_id for s in cx.steps] == \
        ["OpenSession", "CloseSession"]
    assert checker.validate_trace(model, cx)


def test_counterexample_depth_matches_oracle():
    model = builtin("mcp")
    prop = model.property_by_id("P8_CredRevocation")
    verdict, depth = oracle_check(model, prop)
    assert verdict == "FAIL" and depth == 2


def test_pass_requires_exhaustion():
    model = builtin("acp-cap")
    prop = model.property_by_id("P8_CredRevocation")
    res = checker.check(model, prop)
    assert res.verdict == "PASS"
    shallow = dataclasses.replace(checker.DEFAULT_BOUNDS, max_depth=1)
    assert checker.check(model, prop, shallow).verdict == "BOUND_EXHAUSTED"


def test_state_budget_reported():
    model = builtin("a2a")
    tiny = dataclasses.replace(checker.DEFAULT_BOUNDS, max_states=5)
    res = checker.check(model,
                        model.property_by_id("P2_CapabilityAttestation"),
                        tiny)
    assert res.verdict in ("FAIL", "BOUND_EXHAUSTED")


def test_check_all_matches_individual_checks():
    model = builtin("a2a")
    combined = checker.check_all(model, model.properties)
    for prop in model.properties:
        single = checker.check(model, prop)
        assert combined[prop.id] == single, prop.id


def test_worker_determinism():
    model = builtin("a2a")
    base = checker.check_all(model, model.properties, workers=1)
    for workers in (2, 4):
        assert checker.check_all(model, model.properties,
                                 workers=workers) == base


def test_domain_caps_truncate():
    model = builtin("a2a")
    capped = checker.DEFAULT_BOUNDS.with_caps(tasks=1, agentid=1)
    n_small = checker.enumerate_states(model, capped)
    n_full = checker.enumerate_states(model)
    assert 0 < n_small < n_full


def test_counterexample_export_import_round_trip():
    model = builtin("mcp")
    res = checker.check(model, model.property_by_id("P8_CredRevocation"))
    text = checker.export_counterexample(model, res.counterexample)
    again = checker.import_counterexample(model, text)
    assert again == res.counterexample
    assert checker.validate_trace(model, again)


def test_import_rejects_wrong_model():
    model = builtin("mcp")
    res = checker.check(model, model.property_by_id("P8_CredRevocation"))
    text = checker.export_counterexample(model, res.counterexample)
    with pytest.raises(checker.CheckError):
        checker.import_counterexample(builtin("a2a"), text)


def test_validate_trace_rejects_tampering():
    model = builtin("mcp")
    res = checker.check(model, model.property_by_id("P8_CredRevocation"))
    cx = res.counterexample
    broken = dataclasses.replace(cx, steps=cx.steps[:1])
    assert not checker.validate_trace(model, broken)


# ---------------------------------------------------------------------------
# Randomized models for checker/oracle agreement (shared with acceptance)

def random_model(rng: random.Random, index: int) -> ir.ProtocolModel:
    """Small well-sorted model: <=4 vars, <=5 transitions, domains <=3."""
    n_atoms = rng.randint(1, 3)
    atoms = tuple(f"d{i}" for i in range(n_atoms))
    constants = (("Dom", atoms),)

    var_pool = [
        ("b0", ir.BoolSort(), ir.InitExpr(E.parse("false"))),
        ("b1", ir.BoolSort(), ir.InitExpr(E.parse("true"))),
        ("k0", ir.CounterSort(2), ir.InitExpr(E.parse("0"))),
        ("m0", ir.MapSort("Dom", ir.BoolSort()), ir.InitAll(E.parse("false"))),
        ("s0", ir.SetSort("Dom"), ir.InitExpr(E.parse("{}"))),
        ("e0", ir.EnumSort(("A", "B")), ir.InitExpr(E.parse("A"))),
    ]
    rng.shuffle(var_pool)
    chosen = var_pool[:rng.randint(2, 4)]
    state_vars = tuple(ir.StateVarDecl(n, s, i) for n, s, i in chosen)
    names = {n for n, _, _ in chosen}

    guards = ["true"]
    updates = []
    if "b0" in names:
        guards += ["b0 = false", "not b0"]
        updates += [("b0", (), "true"), ("b0", (), "not b0")]
    if "b1" in names:
        guards += ["b1 = true"]
        updates += [("b1", (), "false")]
    if "k0" in names:
        guards += ["k0 <= 1", "k0 = 0"]
        updates += [("k0", (), "k0 + 1")]
    if "m0" in names:
        guards += ["m0[x] = false"]
        updates += [("m0", ("x",), "true")]
    if "s0" in names:
        guards += ["x notin s0"]
        updates += [("s0", (), "s0 union {x}")]
    if "e0" in names:
        guards += ["e0 = A"]
        updates += [("e0", (), "B")]

    transitions = []
    for i in range(rng.randint(1, 5)):
        guard = rng.choice(guards)
        n_upd = rng.randint(1, min(2, len(updates)))
        upds = rng.sample(updates, n_upd)
        needs_param = "x" in guard or any("x" in u[2] or u[1]
                                          for u in upds)
        transitions.append(ir.Transition(
            id=f"T{i}",
            kind="Protocol",
            actor="sys",
            params=(("x", "Dom"),) if needs_param else (),
            guard=E.parse(guard),
            updates=tuple(
                (ir.UpdateTarget(v, tuple(E.parse(k) for k in keys)),
                 E.parse(rhs)) for v, keys, rhs in upds),
            modality="MAY",
            source_refs=(ir.SourceRef("gen", "random"),),
        ))

    inv_pool = []
    if "b0" in names:
        inv_pool.append("b0 = false")
    if "b1" in names:
        inv_pool.append("b1 = true")
    if "k0" in names:
        inv_pool.append("k0 <= 1")
    if "m0" in names:
        inv_pool.append("forall x in Dom : m0[x] = false")
    if "s0" in names:
        inv_pool.append("forall x in Dom : x notin s0")
    if "e0" in names:
        inv_pool.append("e0 = A")
    invariant = rng.choice(inv_pool)

    return ir.ProtocolModel(
        name=f"rand{index}",
        snapshot="2025-01",
        constants=constants,
        state_vars=state_vars,
        transitions=tuple(transitions),
        properties=(ir.Property(
            "INV", "P0", "aasm-hardening", E.parse(invariant)),),
        aps=(),
    )


# depth bound exceeds any random model's state count, so both the engine
# and the oracle always exhaust and PASS verdicts are comparable
RANDOM_BOUNDS = dataclasses.replace(
    checker.DEFAULT_BOUNDS, max_depth=500, max_states=200000)


def agreement_run(count: int, seed: int = 20250826):
    """Checker vs oracle over `count` random models; returns mismatches."""
    rng = random.Random(seed)
    mismatches = []
    for i in range(count):
        model = random_model(rng, i)
        prop = model.properties[0]
        res = checker.check(model, prop, RANDOM_BOUNDS)
        verdict, depth = oracle_check(model, prop, RANDOM_BOUNDS)
        got = (res.verdict,
               res.counterexample.depth if res.failed else None)
        if got != (verdict, depth):
            mismatches.append((model.name, got, (verdict, depth)))
        if res.failed:
            assert checker.validate_trace(model, res.counterexample,
                                          bounds=RANDOM_BOUNDS)
    return mismatches


def test_random_agreement_sample():
    assert agreement_run(60) == []
