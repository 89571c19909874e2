"""Bounded explicit-state model checker.

Breadth-first reachability over a ProtocolModel with per-invariant checking.
BFS guarantees counterexamples of minimal depth, which matters because
traces feed the replay harness where short action sequences are cheaper to
execute and easier to attribute.

Determinism contract: successors are expanded in sorted transition-id order,
then sorted parameter-binding order, so results are byte-identical across
runs and across worker counts.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

from . import expr as E
from . import ir


class CheckError(Exception):
    pass


class StateOverflowError(CheckError):
    pass


@dataclass(frozen=True)
class Bounds:
    domain_caps: tuple = ()  # ((domain-name lowercased, cap), ...)
    counter_max: int = 3
    max_depth: int = 20
    max_states: int = 10**6

    def cap_for(self, domain: str) -> Optional[int]:
        for name, cap in self.domain_caps:
            if name == domain.lower():
                return cap
        return None

    def with_caps(self, **caps) -> "Bounds":
        merged = dict(self.domain_caps)
        merged.update({k.lower(): v for k, v in caps.items()})
        return replace(self, domain_caps=tuple(sorted(merged.items())))


DEFAULT_BOUNDS = Bounds(
    domain_caps=(("agentid", 2), ("agents", 2), ("caps", 2),
                 ("sessions", 2), ("tasks", 2)),
    counter_max=3, max_depth=20, max_states=10**6)


def bounded_constants(model: ir.ProtocolModel, bounds: Bounds) -> dict:
    out = {}
    for dom, atoms in model.constants:
        cap = bounds.cap_for(dom)
        out[dom] = atoms if cap is None else atoms[:cap]
    return out


@dataclass(frozen=True)
class TraceStep:
    transition_id: str
    binding: tuple  # ((param, atom name), ...)
    post_state: tuple  # canonical state vector


@dataclass(frozen=True)
class Counterexample:
    model: str
    property_id: str
    depth: int
    initial: tuple  # canonical state vector
    steps: tuple


@dataclass(frozen=True)
class CheckResult:
    verdict: str  # PASS | FAIL | BOUND_EXHAUSTED
    states_explored: int
    counterexample: Optional[Counterexample] = None

    @property
    def failed(self) -> bool:
        return self.verdict == "FAIL"


# ---------------------------------------------------------------------------
# State handling

def state_vector(model: ir.ProtocolModel, state: dict) -> tuple:
    """Canonical hashable encoding: declaration-ordered value tuple."""
    return tuple(state[v.name] for v in model.state_vars)


def state_dict(model: ir.ProtocolModel, vector: tuple) -> dict:
    return {v.name: vector[i] for i, v in enumerate(model.state_vars)}


def _set_nested(value, keys, new):
    if not keys:
        return new
    head = keys[0]
    return value.set(head, _set_nested(value[head], keys[1:], new))


def _counter_cap(sort: ir.Sort, bounds: Bounds) -> Optional[int]:
    if isinstance(sort, ir.CounterSort):
        return min(sort.max, bounds.counter_max)
    return None


class _Engine:
    """Successor computation for one (model, bounds) pair."""

    def __init__(self, model: ir.ProtocolModel, bounds: Bounds):
        self.model = model
        self.bounds = bounds
        self.constants = bounded_constants(model, bounds)
        self.atoms = model.atom_universe()
        self.sorts = {v.name: v.sort for v in model.state_vars}
        # deterministic expansion order
        self.transitions = sorted(model.transitions, key=lambda t: t.id)
        self.bindings = {
            t.id: [tuple(zip((n for n, _ in t.params), combo))
                   for combo in itertools.product(
                       *(sorted(self.constants.get(d, ()))
                         for _, d in t.params))]
            for t in self.transitions}

    def initial(self) -> tuple:
        state = {v.name: v.initial_value(self.constants)
                 for v in self.model.state_vars}
        return state_vector(self.model, state)

    def _apply(self, t: ir.Transition, binding, state: dict):
        scope = {**state, **{n: E.Atom(a) for n, a in binding}}
        if not E.evaluate_bool(t.guard, scope, self.constants, self.atoms):
            return None
        new = dict(state)
        for target, rhs in t.updates:
            # scope reads the pre-state throughout
            val = E.evaluate(rhs, scope, self.constants, self.atoms)
            cap = _counter_cap(self.sorts[target.var], self.bounds)
            if cap is not None and isinstance(val, int) \
                    and not isinstance(val, bool) and (val < 0 or val > cap):
                return None  # counter out of bounds: binding disabled
            if target.keys:
                keys = [E.evaluate(k, scope, self.constants, self.atoms)
                        for k in target.keys]
                new[target.var] = _set_nested(
                    state[target.var], [k.name for k in keys], val)
            else:
                new[target.var] = val
        return new

    def successors(self, vector: tuple):
        """Deterministically ordered (transition, binding, post-vector)."""
        state = state_dict(self.model, vector)
        out = []
        for t in self.transitions:
            for binding in self.bindings[t.id]:
                post = self._apply(t, binding, state)
                if post is not None:
                    out.append((t.id, binding,
                                state_vector(self.model, post)))
        return out

    def holds(self, prop: ir.Property, vector: tuple) -> bool:
        return E.evaluate_bool(prop.invariant,
                               state_dict(self.model, vector),
                               self.constants, self.atoms)


# ---------------------------------------------------------------------------
# Public operations

def check(model: ir.ProtocolModel, prop: ir.Property,
          bounds: Bounds = DEFAULT_BOUNDS, workers: int = 1) -> CheckResult:
    """BFS reachability; FAIL carries a minimal-depth counterexample.

    PASS is reported only when the frontier is exhausted within bounds;
    hitting the depth or state budget yields BOUND_EXHAUSTED, never PASS.
    """
    eng = _Engine(model, bounds)
    init = eng.initial()
    if not eng.holds(prop, init):
        return CheckResult("FAIL", 1, Counterexample(
            model.name, prop.id, 0, init, ()))

    parents = {init: None}  # vector -> (pred, tid, binding)
    frontier = [init]
    depth = 0
    while frontier:
        if depth >= bounds.max_depth:
            return CheckResult("BOUND_EXHAUSTED", len(parents))
        depth += 1
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                expanded = list(pool.map(eng.successors, frontier))
        else:
            expanded = [eng.successors(v) for v in frontier]
        next_frontier = []
        for pre, succs in zip(frontier, expanded):
            for tid, binding, post in succs:
                if post in parents:
                    continue
                parents[post] = (pre, tid, binding)
                if len(parents) > bounds.max_states:
                    return CheckResult("BOUND_EXHAUSTED", len(parents))
                if not eng.holds(prop, post):
                    return CheckResult("FAIL", len(parents),
                                       _extract(model, prop, parents, post))
                next_frontier.append(post)
        frontier = next_frontier
    return CheckResult("PASS", len(parents))


def _extract(model, prop, parents, final) -> Counterexample:
    steps = []
    cur = final
    while parents[cur] is not None:
        pre, tid, binding = parents[cur]
        steps.append(TraceStep(tid, binding, cur))
        cur = pre
    steps.reverse()
    return Counterexample(model.name, prop.id, len(steps), cur, tuple(steps))


def check_all(model: ir.ProtocolModel, properties,
              bounds: Bounds = DEFAULT_BOUNDS, workers: int = 1) -> dict:
    """Checks every property over a single shared BFS.

    Results match per-property check() calls exactly: BFS visits states
    in depth order, so the first violating state seen for a property is
    its minimal counterexample, and the explored-state count is frozen
    at the moment of discovery. A property whose evaluation raises is
    recorded as ERROR without aborting the others.
    """
    results = {}
    try:
        eng = _Engine(model, bounds)
        init = eng.initial()
    except Exception as exc:
        return {p.id: CheckResult(f"ERROR: {exc}", 0) for p in properties}

    pending = []
    for prop in properties:
        try:
            if not eng.holds(prop, init):
                results[prop.id] = CheckResult("FAIL", 1, Counterexample(
                    model.name, prop.id, 0, init, ()))
            else:
                pending.append(prop)
        except Exception as exc:
            results[prop.id] = CheckResult(f"ERROR: {exc}", 0)
    if not pending:
        return results

    parents = {init: None}  # vector -> (pred, tid, binding)
    frontier = [init]
    depth = 0
    while frontier and pending:
        if depth >= bounds.max_depth:
            for prop in pending:
                results[prop.id] = CheckResult("BOUND_EXHAUSTED", len(parents))
            return results
        depth += 1
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                expanded = list(pool.map(eng.successors, frontier))
        else:
            expanded = [eng.successors(v) for v in frontier]
        next_frontier = []
        for pre, succs in zip(frontier, expanded):
            for tid, binding, post in succs:
                if post in parents:
                    continue
                parents[post] = (pre, tid, binding)
                if len(parents) > bounds.max_states:
                    for prop in pending:
                        results[prop.id] = CheckResult(
                            "BOUND_EXHAUSTED", len(parents))
                    return results
                survivors = []
                for prop in pending:
                    try:
                        ok = eng.holds(prop, post)
                    except Exception as exc:
                        results[prop.id] = CheckResult(f"ERROR: {exc}", 0)
                        continue
                    if ok:
                        survivors.append(prop)
                    else:
                        results[prop.id] = CheckResult(
                            "FAIL", len(parents),
                            _extract(model, prop, parents, post))
                pending = survivors
                if not pending:
                    return results
                next_frontier.append(post)
        frontier = next_frontier
    for prop in pending:
        results[prop.id] = CheckResult("PASS", len(parents))
    return results


def enumerate_states(model: ir.ProtocolModel,
                     bounds: Bounds = DEFAULT_BOUNDS) -> int:
    """Exact count of distinct reachable states within bounds."""
    eng = _Engine(model, bounds)
    seen = {eng.initial()}
    frontier = [eng.initial()]
    depth = 0
    while frontier:
        if depth >= bounds.max_depth:
            raise StateOverflowError(
                f"depth bound {bounds.max_depth} hit with live frontier")
        depth += 1
        nxt = []
        for v in frontier:
            for _, _, post in eng.successors(v):
                if post not in seen:
                    seen.add(post)
                    if len(seen) > bounds.max_states:
                        raise StateOverflowError(
                            f"more than {bounds.max_states} states")
                    nxt.append(post)
        frontier = nxt
    return len(seen)


def validate_trace(model: ir.ProtocolModel, cx: Counterexample,
                   prop: Optional[ir.Property] = None,
                   bounds: Bounds = DEFAULT_BOUNDS) -> bool:
    """Internal soundness oracle: replays the trace symbolically.

    True iff every step's guard holds in its pre-state, the recorded
    post-state matches the declared updates, the property holds in every
    state except the last, and the last state violates it.
    """
    eng = _Engine(model, bounds)
    if prop is None:
        prop = model.property_by_id(cx.property_id)
    for step in cx.steps:
        model.transition(step.transition_id)  # raises KeyError if unknown
    cur = cx.initial
    for step in cx.steps:
        if not eng.holds(prop, cur):
            return False
        state = state_dict(model, cur)
        t = model.transition(step.transition_id)
        post = eng._apply(t, step.binding, state)
        if post is None:
            return False
        if state_vector(model, post) != step.post_state:
            return False
        cur = step.post_state
    return not eng.holds(prop, cur) and cx.depth == len(cx.steps)


# ---------------------------------------------------------------------------
# Counterexample documents (the Phase-2 input format)

def value_to_json(v):
    if isinstance(v, bool) or isinstance(v, int):
        return v
    if isinstance(v, E.Atom):
        return v.name
    if isinstance(v, frozenset):
        return sorted(value_to_json(x) for x in v)
    if isinstance(v, E.FMap):
        return {k: value_to_json(x) for k, x in v.items}
    raise CheckError(f"unencodable value {v!r}")


def value_from_json(obj, sort: ir.Sort):
    if isinstance(sort, ir.BoolSort):
        return bool(obj)
    if isinstance(sort, ir.CounterSort):
        return int(obj)
    if isinstance(sort, ir.EnumSort):
        return E.Atom(obj)
    if isinstance(sort, ir.SetSort):
        return frozenset(E.Atom(x) for x in obj)
    if isinstance(sort, ir.MapSort):
        return E.FMap.of({k: value_from_json(v, sort.value)
                          for k, v in obj.items()})
    raise CheckError(f"cannot decode against sort {sort}")


def export_counterexample(model: ir.ProtocolModel, cx: Counterexample) -> str:
    doc = {
        "model": cx.model,
        "property": cx.property_id,
        "depth": cx.depth,
        "initial": {v.name: value_to_json(cx.initial[i])
                    for i, v in enumerate(model.state_vars)},
        "steps": [
            {"action": s.transition_id,
             "params": dict(s.binding),
             "state": {v.name: value_to_json(s.post_state[i])
                       for i, v in enumerate(model.state_vars)}}
            for s in cx.steps],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def import_counterexample(model: ir.ProtocolModel, text: str) -> Counterexample:
    doc = json.loads(text)
    if doc.get("model") != model.name:
        raise CheckError(f"counterexample is for model {doc.get('model')!r}, "
                         f"not {model.name!r}")

    def decode(state_obj):
        return tuple(value_from_json(state_obj[v.name], v.sort)
                     for v in model.state_vars)

    steps = tuple(
        TraceStep(s["action"], tuple(sorted(s["params"].items())),
                  decode(s["state"]))
        for s in doc["steps"])
    return Counterexample(doc["model"], doc["property"], doc["depth"],
                          decode(doc["initial"]), steps)
