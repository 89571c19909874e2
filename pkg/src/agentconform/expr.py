"""Guard/invariant expression language over finite domains.

Grammar (canonical concrete syntax):

    expr   := quant | impl
    quant  := ("forall" | "exists") IDENT "in" IDENT ":" expr
    impl   := disj ("=>" impl)?
    disj   := conj ("or" conj)*
    conj   := neg ("and" neg)*
    neg    := "not" neg | atom
    atom   := term (RELOP term)? | "(" expr ")" | "true" | "false"
    RELOP  := "=" | "#" | "!=" | "<" | "<=" | ">" | ">=" | "in" | "notin" | "subseteq"
    term   := addend (("+" | "union") addend)*
    addend := primary ("[" term "]")*
    primary:= IDENT | INT | "true" | "false" | "{" (term ("," term)*)? "}"

`+` and `union` are the only term-level operators; they exist so counter
increments and set-growing state updates can be written in the same language
as guards and invariants. `!=` is an accepted alias for `#`; the printer
always emits `#`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Union


class ExprError(Exception):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class ExprTypeError(ExprError):
    pass


class UnboundSymbolError(ExprError):
    pass


# ---------------------------------------------------------------------------
# Values

@dataclass(frozen=True, order=True)
class Atom:
    """An uninterpreted constant: a domain element or enum value."""
    name: str

    def __repr__(self):
        return f"Atom({self.name})"


@dataclass(frozen=True)
class FMap:
    """Immutable finite map with atom keys, hashable by construction."""
    items: tuple  # tuple of (key: str, Value), sorted by key

    @staticmethod
    def of(mapping) -> "FMap":
        return FMap(tuple(sorted(mapping.items())))

    def __getitem__(self, key: str):
        for k, v in self.items:
            if k == key:
                return v
        raise KeyError(key)

    def __contains__(self, key: str) -> bool:
        return any(k == key for k, _ in self.items)

    def keys(self):
        return [k for k, _ in self.items]

    def set(self, key: str, value) -> "FMap":
        if key not in self:
            raise KeyError(key)
        return FMap(tuple((k, value if k == key else v) for k, v in self.items))


Value = Union[bool, int, Atom, frozenset, FMap]


def value_kind(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, Atom):
        return "atom"
    if isinstance(v, frozenset):
        return "set"
    if isinstance(v, FMap):
        return "map"
    raise ExprTypeError(f"not a value: {v!r}")


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Forall:
    var: str
    domain: str
    body: "Expr"


@dataclass(frozen=True)
class Exists:
    var: str
    domain: str
    body: "Expr"


@dataclass(frozen=True)
class Implies:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Cmp:
    op: str  # = # < <= > >= in notin subseteq
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class BinTerm:
    op: str  # + union
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Index:
    base: "Expr"
    key: "Expr"


@dataclass(frozen=True)
class SetLit:
    items: tuple


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


Expr = Union[Forall, Exists, Implies, And, Or, Not, Cmp, BinTerm, Index,
             SetLit, Name, IntLit, BoolLit]


# ---------------------------------------------------------------------------
# Tokenizer

_KEYWORDS = {"forall", "exists", "in", "notin", "subseteq", "and", "or",
             "not", "true", "false", "union"}
_PUNCT = ("=>", "!=", "<=", ">=", ":=", "=", "#", "<", ">", ":", "[", "]",
          "{", "}", "(", ")", ",", "+")


@dataclass
class _Tok:
    kind: str  # IDENT INT PUNCT KEYWORD EOF
    text: str
    line: int
    col: int


def _tokenize(text: str, line_offset: int = 0) -> list:
    toks = []
    i, line, col = 0, 1 + line_offset, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "KEYWORD" if word in _KEYWORDS else "IDENT"
            toks.append(_Tok(kind, word, line, col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("INT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(_Tok("PUNCT", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ExprSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(_Tok("EOF", "", line, col))
    return toks


_RELOPS = ("=", "#", "!=", "<", "<=", ">", ">=", "in", "notin", "subseteq")


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, msg: str):
        t = self.peek()
        raise ExprSyntaxError(msg, t.line, t.col)

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text!r}")
        return self.next()

    def expect_ident(self) -> str:
        t = self.peek()
        if t.kind != "IDENT":
            self.error(f"expected identifier, found {t.text!r}")
        return self.next().text

    # expr := quant | impl
    def expr(self):
        t = self.peek()
        if t.text in ("forall", "exists"):
            self.next()
            var = self.expect_ident()
            self.expect("in")
            domain = self.expect_ident()
            self.expect(":")
            body = self.expr()  # body extends maximally right
            return (Forall if t.text == "forall" else Exists)(var, domain, body)
        return self.impl()

    def impl(self):
        lhs = self.disj()
        if self.peek().text == "=>":
            self.next()
            return Implies(lhs, self.impl())
        return lhs

    def disj(self):
        items = [self.conj()]
        while self.peek().text == "or":
            self.next()
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self):
        items = [self.neg()]
        while self.peek().text == "and":
            self.next()
            items.append(self.neg())
        return items[0] if len(items) == 1 else And(tuple(items))

    def neg(self):
        if self.peek().text == "not":
            self.next()
            return Not(self.neg())
        return self.atom()

    def atom(self):
        t = self.peek()
        if t.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        lhs = self.term()
        nxt = self.peek().text
        if nxt in _RELOPS:
            self.next()
            op = "#" if nxt == "!=" else nxt
            return Cmp(op, lhs, self.term())
        return lhs

    def term(self):
        lhs = self.addend()
        while self.peek().text in ("+", "union"):
            op = self.next().text
            lhs = BinTerm(op, lhs, self.addend())
        return lhs

    def addend(self):
        e = self.primary()
        while self.peek().text == "[":
            self.next()
            key = self.term()
            self.expect("]")
            e = Index(e, key)
        return e

    def primary(self):
        t = self.peek()
        if t.kind == "IDENT":
            return Name(self.next().text)
        if t.kind == "INT":
            return IntLit(int(self.next().text))
        if t.text in ("true", "false"):
            return BoolLit(self.next().text == "true")
        if t.text == "{":
            self.next()
            items = []
            if self.peek().text != "}":
                items.append(self.term())
                while self.peek().text == ",":
                    self.next()
                    items.append(self.term())
            self.expect("}")
            return SetLit(tuple(items))
        self.error(f"unexpected token {t.text!r}")


def parse(text: str, line_offset: int = 0) -> Expr:
    """Parse an expression; raises ExprSyntaxError with position on failure."""
    p = _Parser(_tokenize(text, line_offset))
    e = p.expr()
    if p.peek().kind != "EOF":
        p.error(f"trailing input {p.peek().text!r}")
    return e


# ---------------------------------------------------------------------------
# Printer

# precedence levels, loosest to tightest
_L_QUANT, _L_IMPL, _L_OR, _L_AND, _L_NOT, _L_CMP, _L_TERM = range(7)


def _level(e) -> int:
    if isinstance(e, (Forall, Exists)):
        return _L_QUANT
    if isinstance(e, Implies):
        return _L_IMPL
    if isinstance(e, Or):
        return _L_OR
    if isinstance(e, And):
        return _L_AND
    if isinstance(e, Not):
        return _L_NOT
    if isinstance(e, Cmp):
        return _L_CMP
    return _L_TERM


def _p(e, need: int) -> str:
    s = _raw(e)
    return f"({s})" if _level(e) < need else s


def _raw(e) -> str:
    if isinstance(e, Forall):
        return f"forall {e.var} in {e.domain}: {_p(e.body, _L_QUANT)}"
    if isinstance(e, Exists):
        return f"exists {e.var} in {e.domain}: {_p(e.body, _L_QUANT)}"
    if isinstance(e, Implies):
        # => is right-associative: lhs must bind tighter
        return f"{_p(e.lhs, _L_OR)} => {_p(e.rhs, _L_IMPL)}"
    if isinstance(e, Or):
        return " or ".join(_p(x, _L_AND) for x in e.items)
    if isinstance(e, And):
        return " and ".join(_p(x, _L_NOT) for x in e.items)
    if isinstance(e, Not):
        return f"not {_p(e.operand, _L_NOT)}"
    if isinstance(e, Cmp):
        return f"{_p(e.lhs, _L_TERM)} {e.op} {_p(e.rhs, _L_TERM)}"
    if isinstance(e, BinTerm):
        return f"{_p(e.lhs, _L_TERM)} {e.op} {_p(e.rhs, _L_TERM)}"
    if isinstance(e, Index):
        return f"{_p(e.base, _L_TERM)}[{_raw(e.key)}]"
    if isinstance(e, SetLit):
        return "{" + ", ".join(_raw(x) for x in e.items) + "}"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    raise ExprTypeError(f"not an expression: {e!r}")


def print_expr(e: Expr) -> str:
    """Canonical text form; parse(print_expr(e)) == e."""
    return _raw(e)


# ---------------------------------------------------------------------------
# Free symbols

def free_symbols(e: Expr) -> frozenset:
    """Unbound Name references (quantifier domains and bound vars excluded)."""
    out = set()

    def walk(node, bound):
        if isinstance(node, (Forall, Exists)):
            walk(node.body, bound | {node.var})
        elif isinstance(node, Implies):
            walk(node.lhs, bound)
            walk(node.rhs, bound)
        elif isinstance(node, (And, Or)):
            for x in node.items:
                walk(x, bound)
        elif isinstance(node, Not):
            walk(node.operand, bound)
        elif isinstance(node, (Cmp, BinTerm)):
            walk(node.lhs, bound)
            walk(node.rhs, bound)
        elif isinstance(node, Index):
            walk(node.base, bound)
            walk(node.key, bound)
        elif isinstance(node, SetLit):
            for x in node.items:
                walk(x, bound)
        elif isinstance(node, Name):
            if node.name not in bound:
                out.add(node.name)

    walk(e, frozenset())
    return frozenset(out)


# ---------------------------------------------------------------------------
# Evaluator

def _require(kind: str, v, what: str):
    if value_kind(v) != kind:
        raise ExprTypeError(f"{what}: expected {kind}, got {value_kind(v)}")
    return v


def _bool(v, what: str) -> bool:
    # hot path: avoid value_kind for the overwhelmingly common case
    if v is True or v is False:
        return v
    raise ExprTypeError(f"{what}: expected bool, got {value_kind(v)}")


# interning caches; atom vocabularies are tiny and fixed per model
_ATOM_CACHE: dict = {}
_DOMAIN_CACHE: dict = {}


def _atom(name: str) -> Atom:
    a = _ATOM_CACHE.get(name)
    if a is None:
        a = _ATOM_CACHE[name] = Atom(name)
    return a


def _domain_set(names) -> frozenset:
    key = tuple(names)
    s = _DOMAIN_CACHE.get(key)
    if s is None:
        s = _DOMAIN_CACHE[key] = frozenset(_atom(a) for a in key)
    return s


def _eval(e, env, state, constants, atoms):
    # leaves first: Name dominates call counts in checker workloads
    if isinstance(e, Name):
        n = e.name
        if n in env:
            return env[n]
        if n in state:
            return state[n]
        if n in constants:
            return _domain_set(constants[n])
        if atoms is None or n in atoms:
            return _atom(n)
        raise UnboundSymbolError(f"unbound symbol {n!r}")
    if isinstance(e, Cmp):
        l = _eval(e.lhs, env, state, constants, atoms)
        r = _eval(e.rhs, env, state, constants, atoms)
        return _compare(e.op, l, r)
    if isinstance(e, Index):
        base = _eval(e.base, env, state, constants, atoms)
        key = _eval(e.key, env, state, constants, atoms)
        _require("map", base, "indexing")
        _require("atom", key, "map key")
        if key.name not in base:
            raise ExprTypeError(f"index {key.name!r} outside map key domain")
        return base[key.name]
    if isinstance(e, (Forall, Exists)):
        if e.domain not in constants:
            raise UnboundSymbolError(f"unknown domain {e.domain!r}")
        sub = dict(env)
        want = isinstance(e, Exists)
        for a in constants[e.domain]:
            sub[e.var] = _atom(a)
            if _bool(_eval(e.body, sub, state, constants, atoms),
                     "quantifier body") is want:
                return want
        return not want
    if isinstance(e, And):
        return all(_bool(_eval(x, env, state, constants, atoms), "and")
                   for x in e.items)
    if isinstance(e, Or):
        return any(_bool(_eval(x, env, state, constants, atoms), "or")
                   for x in e.items)
    if isinstance(e, Not):
        return not _bool(
            _eval(e.operand, env, state, constants, atoms), "not")
    if isinstance(e, Implies):
        lhs = _bool(_eval(e.lhs, env, state, constants, atoms), "=>")
        return (not lhs) or _bool(
            _eval(e.rhs, env, state, constants, atoms), "=>")
    if isinstance(e, BinTerm):
        l = _eval(e.lhs, env, state, constants, atoms)
        r = _eval(e.rhs, env, state, constants, atoms)
        if e.op == "+":
            _require("int", l, "+")
            _require("int", r, "+")
            return l + r
        _require("set", l, "union")
        _require("set", r, "union")
        return l | r
    if isinstance(e, SetLit):
        return frozenset(_eval(x, env, state, constants, atoms)
                         for x in e.items)
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    raise ExprTypeError(f"not an expression: {e!r}")


def _compare(op, l, r):
    if op in ("in", "notin"):
        _require("set", r, op)
        return (l in r) if op == "in" else (l not in r)
    if op == "subseteq":
        _require("set", l, op)
        _require("set", r, op)
        return l <= r
    lk, rk = value_kind(l), value_kind(r)
    if lk != rk:
        raise ExprTypeError(f"cannot compare {lk} {op} {rk}")
    if op == "=":
        return l == r
    if op == "#":
        return l != r
    if lk != "int":
        raise ExprTypeError(f"ordering {op!r} requires ints, got {lk}")
    return {"<": l < r, "<=": l <= r, ">": l > r, ">=": l >= r}[op]


def evaluate(e: Expr, state: Mapping, constants: Mapping,
             atoms=None) -> Value:
    """Evaluate under finite-model semantics.

    `state` maps symbols to Values; `constants` maps domain names to atom
    name sequences. When `atoms` (the universe of known atom names) is
    given, an unresolvable identifier raises UnboundSymbolError instead of
    falling back to an atom literal.
    """
    return _eval(e, {}, state, constants, atoms)


def evaluate_bool(e: Expr, state: Mapping, constants: Mapping,
                  atoms=None) -> bool:
    v = evaluate(e, state, constants, atoms)
    return _require("bool", v, "top-level expression")


def iter_subterms(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, (Forall, Exists)):
            stack.append(node.body)
        elif isinstance(node, (Implies, Cmp, BinTerm)):
            stack.extend((node.lhs, node.rhs))
        elif isinstance(node, (And, Or, SetLit)):
            stack.extend(node.items)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, Index):
            stack.extend((node.base, node.key))
