"""Expression grammar, printer, and evaluator."""

import pytest
from hypothesis import given, settings, strategies as st

from agentconform import expr as E


# ---------------------------------------------------------------------------
# Parsing and printing

def test_parse_precedence():
    e = E.parse("a = b or c = d and not e = f")
    assert isinstance(e, E.Or)
    assert isinstance(e.items[1], E.And)


def test_implies_is_right_associative():
    e = E.parse("a = b => b = c => c = d")
    assert isinstance(e, E.Implies)
    assert isinstance(e.rhs, E.Implies)


def test_quantifier_body_extends_right():
    e = E.parse("forall x in D : p[x] = true and q[x] = true")
    assert isinstance(e, E.Forall)
    assert isinstance(e.body, E.And)


def test_quantified_consequent_requires_parens():
    with pytest.raises(E.ExprSyntaxError):
        E.parse("a = b => forall x in D : p[x] = true")
    e = E.parse("a = b => (forall x in D : p[x] = true)")
    assert isinstance(e.rhs, E.Forall)


def test_set_and_int_terms():
    e = E.parse("s union {c1} subseteq t and n + 1 <= 3")
    assert isinstance(e, E.And)


def test_nested_index():
    e = E.parse("delegation[a][b] subseteq caps")
    assert isinstance(e.lhs, E.Index)
    assert isinstance(e.lhs.base, E.Index)


def test_syntax_errors_carry_position():
    with pytest.raises(E.ExprSyntaxError):
        E.parse("forall x D : true")
    with pytest.raises(E.ExprSyntaxError):
        E.parse("a = ")


def test_print_round_trip_on_model_formulas():
    samples = [
        "forall t in Tasks : session_state[t] = CLOSED => "
        "(credentials[t] # ACTIVE)",
        "forall a in AgentID : (forall b in AgentID : "
        "delegation[a][b] subseteq original_caps[a])",
        "not prompt_tainted or executed[op_call] = false",
        "exists x in Caps : x in granted[a] and x notin granted[b]",
        "n + 1 <= limit and s union {c1} subseteq all_caps",
    ]
    for text in samples:
        e = E.parse(text)
        assert E.parse(E.print_expr(e)) == e


def test_free_symbols_respects_binding():
    e = E.parse("forall x in D : p[x] = y")
    syms = E.free_symbols(e)
    assert "y" in syms and "p" in syms and "x" not in syms


# ---------------------------------------------------------------------------
# Evaluation

STATE = {
    "flag": True,
    "n": 2,
    "mode": E.Atom("OPEN"),
    "caps": frozenset({E.Atom("c1")}),
    "grant": E.FMap.of({"ag1": frozenset({E.Atom("c1")}),
                        "ag2": frozenset()}),
}
CONSTANTS = {"AgentID": ["ag1", "ag2"], "Caps": ["c1", "c2"]}
ATOMS = frozenset({"ag1", "ag2", "c1", "c2", "OPEN", "CLOSED"})


def ev(text):
    return E.evaluate(E.parse(text), STATE, CONSTANTS, ATOMS)


def test_evaluate_basics():
    assert ev("flag and n <= 2") is True
    assert ev("mode = OPEN") is True
    assert ev("c1 in caps and c2 notin caps") is True
    assert ev("grant[ag1] subseteq caps") is True
    assert ev("forall a in AgentID : grant[a] subseteq caps") is True
    assert ev("exists a in AgentID : grant[a] = {}") is True


def test_evaluate_implication_and_union():
    assert ev("n = 3 => mode = CLOSED") is True
    assert ev("caps union {c2} = {c1, c2}") is True


def test_unbound_symbol():
    with pytest.raises(E.UnboundSymbolError):
        ev("nonsense = 1")


def test_type_errors():
    with pytest.raises(E.ExprTypeError):
        ev("n and flag")
    with pytest.raises(E.ExprTypeError):
        ev("mode < 3")
    with pytest.raises(E.ExprTypeError):
        ev("grant[c1]")


def test_index_outside_domain():
    with pytest.raises(E.ExprTypeError):
        ev("grant[OPEN] = {}")


# ---------------------------------------------------------------------------
# Property-based: printer/parser round trip and quantifier duality

_names = st.sampled_from(["flag", "n", "mode", "caps", "ag1", "c1"])


def _leaf():
    return st.one_of(
        _names.map(E.Name),
        st.integers(min_value=0, max_value=3).map(E.IntLit),
        st.booleans().map(E.BoolLit),
    )


def _exprs(depth=3):
    if depth == 0:
        return _leaf().map(lambda t: E.Cmp("=", t, t))
    sub = _exprs(depth - 1)
    term = _leaf()
    return st.one_of(
        sub,
        st.tuples(sub, sub).map(lambda p: E.And((p[0], p[1]))),
        st.tuples(sub, sub).map(lambda p: E.Or((p[0], p[1]))),
        st.tuples(sub, sub).map(lambda p: E.Implies(p[0], p[1])),
        sub.map(E.Not),
        st.tuples(st.sampled_from(["=", "#", "<", "<=", ">", ">="]),
                  term, term).map(lambda c: E.Cmp(c[0], c[1], c[2])),
        sub.map(lambda b: E.Forall("x", "AgentID", b)),
        sub.map(lambda b: E.Exists("x", "AgentID", b)),
    )


@settings(max_examples=200, deadline=None)
@given(_exprs())
def test_round_trip_random(e):
    assert E.parse(E.print_expr(e)) == e


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.sampled_from(["ag1", "ag2"]), st.booleans(),
                       min_size=2, max_size=2))
def test_quantifier_de_morgan(assign):
    state = {"p": E.FMap.of(assign)}
    consts = {"AgentID": ["ag1", "ag2"]}
    body = E.parse("p[x] = true")
    lhs = E.Not(E.Forall("x", "AgentID", body))
    rhs = E.Exists("x", "AgentID", E.Not(body))
    assert E.evaluate(lhs, state, consts, None) == \
        E.evaluate(rhs, state, consts, None)
