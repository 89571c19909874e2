"""Loader and serializer for the IR file format and clause files.

The format is UTF-8 structured text: top-level `key: value` lines, `var`
declarations, and brace-delimited blocks (`constants { }`, `transition ID
{ }`, `property ID { }`, `aps { }`, `clause { }`). Inside a block, a line
may hold several `key: value` pairs separated by two or more spaces; a
value may be a bare token run, a double-quoted string, or an inline
`{ ... }` group (used for source references).

Models stay reviewable data assets: everything, including guard and
invariant expressions, is plain text with provenance attached.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import expr as E
from . import ir


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Low-level line scanning

_KEY_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*:")


def _scan_pairs(text: str, line: int):
    """Split a block line into (key, value) pairs.

    A new pair starts at an identifier followed by ':' that is either at the
    start of the line or preceded by two-plus spaces. Quoted strings and
    brace groups are kept intact.
    """
    pairs = []
    i, n = 0, len(text)
    while i < n:
        while i < n and text[i] == " ":
            i += 1
        if i >= n:
            break
        m = _KEY_RE.match(text, i)
        if not m:
            raise ParseError(f"expected 'key:' at {text[i:i+20]!r}", line, i + 1)
        key = text[i:m.end() - 1]
        i = m.end()
        while i < n and text[i] == " ":
            i += 1
        # value: quoted string, brace group, or run until '  key:' boundary
        if i < n and text[i] == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated string", line, i + 1)
            pairs.append((key, text[i + 1:j]))
            i = j + 1
        elif i < n and text[i] == "{" and key in ("source", "constants", "aps"):
            depth, j = 0, i
            while j < n:
                if text[j] == "{":
                    depth += 1
                elif text[j] == "}":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if depth != 0:
                raise ParseError("unbalanced '{' in value", line, i + 1)
            pairs.append((key, text[i:j + 1]))
            i = j + 1
        else:
            j = i
            depth = 0
            while j < n:
                c = text[j]
                if c in "{[(":
                    depth += 1
                elif c in "}])":
                    depth -= 1
                elif c == '"':
                    j = text.find('"', j + 1)
                    if j < 0:
                        raise ParseError("unterminated string", line, i + 1)
                elif depth == 0 and c == " " and text[j:j + 2] == "  ":
                    k = j
                    while k < n and text[k] == " ":
                        k += 1
                    if _KEY_RE.match(text, k):
                        break
                j += 1
            pairs.append((key, text[i:j].strip()))
            i = j
    return pairs


@dataclass
class _Block:
    kind: str  # top | constants | transition | property | aps | clause
    name: str
    pairs: list  # (key, value, line)
    line: int


def _read_blocks(text: str):
    """Split a document into a top-level pair list plus named blocks."""
    top = []
    blocks = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = lines[i]
        lineno = i + 1
        stripped = raw.strip()
        i += 1
        if not stripped or stripped.startswith("#"):
            continue
        m = re.match(r"^(constants|aps|transition|property|clause|bridge)"
                     r"(?:\s+([A-Za-z_][A-Za-z0-9_\-]*))?\s*\{(.*)$", stripped)
        if m:
            kind, name, rest = m.group(1), m.group(2) or "", m.group(3)
            body_lines = []
            depth = 1 + rest.count("{") - rest.count("}")
            if depth == 0:
                # single-line block: `constants { ... }`
                inner = rest[:rest.rfind("}")]
                body_lines.append((inner, lineno))
            else:
                if rest.strip():
                    body_lines.append((rest, lineno))
                while i < len(lines):
                    ln = lines[i]
                    lineno2 = i + 1
                    i += 1
                    depth += ln.count("{") - ln.count("}")
                    if depth == 0:
                        tail = ln[:ln.rfind("}")]
                        if tail.strip():
                            body_lines.append((tail, lineno2))
                        break
                    body_lines.append((ln, lineno2))
                else:
                    raise ParseError(f"unterminated block {kind!r}", lineno)
            pairs = []
            for body, ln_no in body_lines:
                body = body.strip()
                if not body or body.startswith("#"):
                    continue
                for k, v in _scan_pairs(body, ln_no):
                    pairs.append((k, v, ln_no))
            blocks.append(_Block(kind, name, pairs, lineno))
        elif stripped.startswith("var "):
            blocks.append(_Block("var", "", [("decl", stripped[4:], lineno)],
                                 lineno))
        else:
            for k, v in _scan_pairs(stripped, lineno):
                top.append((k, v, lineno))
    return top, blocks


# ---------------------------------------------------------------------------
# Sorts and init specs

def parse_sort(text: str, line: int = 0) -> ir.Sort:
    text = text.strip()
    if text == "BOOL":
        return ir.BoolSort()
    m = re.fullmatch(r"COUNTER\(\s*(\d+)\s*\)", text)
    if m:
        return ir.CounterSort(int(m.group(1)))
    m = re.fullmatch(r"ENUM\[(.*)\]", text)
    if m:
        values = tuple(v.strip() for v in m.group(1).split(",") if v.strip())
        if not values:
            raise ParseError("empty ENUM", line)
        return ir.EnumSort(values)
    m = re.fullmatch(r"SET\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*\)", text)
    if m:
        return ir.SetSort(m.group(1))
    m = re.fullmatch(r"MAP\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*->\s*(.*)\)", text)
    if m:
        return ir.MapSort(m.group(1), parse_sort(m.group(2), line))
    raise ParseError(f"unknown sort {text!r}", line)


def _split_top_commas(text: str):
    parts, depth, start = [], 0, 0
    for j, c in enumerate(text):
        if c in "{[(":
            depth += 1
        elif c in "}])":
            depth -= 1
        elif c == "," and depth == 0:
            parts.append(text[start:j])
            start = j + 1
    parts.append(text[start:])
    return [p.strip() for p in parts if p.strip()]


def parse_init(text: str, line: int = 0) -> ir.InitSpec:
    text = text.strip()
    if text.startswith("all "):
        return ir.InitAll(E.parse(text[4:]))
    if text.startswith("["):
        if not text.endswith("]"):
            raise ParseError("unterminated map-literal init", line)
        entries = []
        for part in _split_top_commas(text[1:-1]):
            if ":" not in part:
                raise ParseError(f"bad map-literal entry {part!r}", line)
            k, v = part.split(":", 1)
            entries.append((k.strip(), E.parse(v.strip())))
        return ir.InitMap(tuple(entries))
    return ir.InitExpr(E.parse(text))


# ---------------------------------------------------------------------------
# Element parsers

def _parse_source_value(value: str, line: int) -> ir.SourceRef:
    value = value.strip()
    if value == ir.INVENTED_MARKER:
        return ir.INVENTED_REF
    if not (value.startswith("{") and value.endswith("}")):
        raise ParseError(f"bad source reference {value!r}", line)
    fields = dict((k, v) for k, v in _scan_pairs(value[1:-1].strip(), line))
    return ir.SourceRef(fields.get("doc", ""), fields.get("section", ""),
                        fields.get("quote", ""))


def _parse_params(value: str, line: int):
    params = []
    for part in _split_top_commas(value):
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s+in\s+"
                         r"([A-Za-z_][A-Za-z0-9_]*)", part)
        if not m:
            raise ParseError(f"bad parameter {part!r}", line)
        params.append((m.group(1), m.group(2)))
    return tuple(params)


def _parse_update(value: str, line: int):
    updates = []
    for part in value.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":=" not in part:
            raise ParseError(f"update missing ':=' in {part!r}", line)
        lhs_text, rhs_text = part.split(":=", 1)
        lhs = E.parse(lhs_text.strip())
        keys = []
        while isinstance(lhs, E.Index):
            keys.insert(0, lhs.key)
            lhs = lhs.base
        if not isinstance(lhs, E.Name):
            raise ParseError(f"bad update target in {part!r}", line)
        updates.append((ir.UpdateTarget(lhs.name, tuple(keys)),
                        E.parse(rhs_text.strip())))
    return tuple(updates)


def _parse_transition(block: _Block) -> ir.Transition:
    kind = actor = ""
    modality = "NOT_SPECIFIED"
    adv = None
    params = ()
    guard = E.BoolLit(True)
    updates = []
    refs = []
    for key, value, line in block.pairs:
        if key == "kind":
            kind = value
        elif key == "actor":
            actor = value
        elif key == "params":
            params = _parse_params(value, line)
        elif key == "guard":
            guard = E.parse(value)
        elif key == "update":
            updates.extend(_parse_update(value, line))
        elif key == "modality":
            modality = value
        elif key == "adv":
            adv = value
        elif key == "source":
            refs.append(_parse_source_value(value, line))
        else:
            raise ParseError(f"unknown transition key {key!r}", line)
    if kind not in ir.KINDS:
        raise ParseError(f"transition {block.name!r}: bad kind {kind!r}",
                         block.line)
    if modality not in ir.MODALITIES:
        raise ParseError(f"transition {block.name!r}: bad modality "
                         f"{modality!r}", block.line)
    return ir.Transition(block.name, kind, actor, params, guard,
                         tuple(updates), modality, tuple(refs), adv)


def _parse_property(block: _Block) -> ir.Property:
    principle = cls = ""
    invariant = None
    refs = []
    for key, value, line in block.pairs:
        if key == "principle":
            principle = value
        elif key == "class":
            cls = value
        elif key == "invariant":
            invariant = E.parse(value)
        elif key == "source":
            refs.append(_parse_source_value(value, line))
        else:
            raise ParseError(f"unknown property key {key!r}", line)
    if principle not in ir.PRINCIPLES:
        raise ParseError(f"property {block.name!r}: bad principle "
                         f"{principle!r}", block.line)
    if cls not in ir.PROPERTY_CLASSES:
        raise ParseError(f"property {block.name!r}: bad class {cls!r}",
                         block.line)
    if invariant is None:
        raise ParseError(f"property {block.name!r}: missing invariant",
                         block.line)
    return ir.Property(block.name, principle, cls, invariant, tuple(refs))


def _parse_constants(block: _Block):
    constants = []
    for key, value, line in block.pairs:
        value = value.strip()
        if not (value.startswith("[") and value.endswith("]")):
            raise ParseError(f"constants {key!r}: expected [a, b, ...]", line)
        atoms = tuple(a.strip() for a in value[1:-1].split(",") if a.strip())
        constants.append((key, atoms))
    return tuple(constants)


def parse_model(text: str, *, origin: str = "<string>") -> ir.ProtocolModel:
    top, blocks = _read_blocks(text)
    fields = {}
    for k, v, line in top:
        if k in fields:
            raise ParseError(f"duplicate top-level key {k!r}", line)
        fields[k] = v
    if "protocol" not in fields:
        raise ParseError(f"{origin}: missing 'protocol:' header", 1)
    if "snapshot" not in fields:
        raise ParseError(f"{origin}: missing 'snapshot:' header", 1)

    constants = ()
    aps = ()
    state_vars = []
    transitions = []
    properties = []
    seen_ids = set()
    for block in blocks:
        if block.kind == "constants":
            constants = _parse_constants(block)
        elif block.kind == "aps":
            aps = tuple((k, v) for k, v, _ in block.pairs)
        elif block.kind == "var":
            decl, line = block.pairs[0][1], block.pairs[0][2]
            m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.+?)\s+init\s+(.+)$",
                         decl)
            if not m:
                raise ParseError(f"bad var declaration {decl!r}", line)
            name = m.group(1)
            if name in seen_ids:
                raise ParseError(f"duplicate id {name!r}", line)
            seen_ids.add(name)
            state_vars.append(ir.StateVarDecl(
                name, parse_sort(m.group(2), line),
                parse_init(m.group(3), line)))
        elif block.kind == "transition":
            if block.name in seen_ids:
                raise ParseError(f"duplicate id {block.name!r}", block.line)
            seen_ids.add(block.name)
            transitions.append(_parse_transition(block))
        elif block.kind == "property":
            if block.name in seen_ids:
                raise ParseError(f"duplicate id {block.name!r}", block.line)
            seen_ids.add(block.name)
            properties.append(_parse_property(block))
        else:
            raise ParseError(f"unexpected block {block.kind!r} in model file",
                             block.line)

    return ir.ProtocolModel(fields["protocol"], fields["snapshot"], constants,
                            tuple(state_vars), tuple(transitions),
                            tuple(properties), aps)


def load_model(path) -> ir.ProtocolModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), origin=str(path))


# ---------------------------------------------------------------------------
# Clause files

def parse_clauses(text: str):
    _, blocks = _read_blocks(text)
    clauses = []
    seen = set()
    for block in blocks:
        if block.kind != "clause":
            raise ParseError(f"unexpected block {block.kind!r} in clause file",
                             block.line)
        fields = {}
        source = ir.SourceRef("")
        for k, v, line in block.pairs:
            if k == "source":
                source = _parse_source_value(v, line)
            else:
                fields[k] = v
        cid = fields.get("id", "")
        if not cid:
            raise ParseError("clause missing id", block.line)
        if cid in seen:
            raise ParseError(f"duplicate clause id {cid!r}", block.line)
        seen.add(cid)
        modality = fields.get("modality", "NOT_SPECIFIED")
        if modality not in ir.MODALITIES:
            raise ParseError(f"clause {cid}: bad modality {modality!r}",
                             block.line)
        precedence = int(fields.get("precedence", "1"))
        if not 1 <= precedence <= 5:
            raise ParseError(f"clause {cid}: precedence {precedence} out of "
                             "range [1,5]", block.line)
        if modality != "NOT_SPECIFIED" and not source.quote:
            raise ParseError(f"clause {cid}: modality {modality} requires a "
                             "verbatim quote", block.line)
        clauses.append(ir.NormativeClause(
            cid, fields.get("protocol", ""), modality,
            fields.get("actor", ""), fields.get("behavior", ""), source,
            fields.get("ambiguous", "false") == "true", precedence))
    return clauses


def load_clauses(path):
    with open(path, encoding="utf-8") as fh:
        return parse_clauses(fh.read())


# ---------------------------------------------------------------------------
# Serialization

def _fmt_source(ref: ir.SourceRef) -> str:
    if ref.invented:
        return ir.INVENTED_MARKER
    return (f'{{ doc: {ref.document}  section: "{ref.section}"  '
            f'quote: "{ref.quote}" }}')


def _fmt_init(init: ir.InitSpec) -> str:
    if isinstance(init, ir.InitExpr):
        return E.print_expr(init.expr)
    if isinstance(init, ir.InitAll):
        return "all " + E.print_expr(init.expr)
    return "[" + ", ".join(f"{k}: {E.print_expr(v)}"
                           for k, v in init.entries) + "]"


def serialize_model(model: ir.ProtocolModel) -> str:
    out = [f"protocol: {model.name}", f"snapshot: {model.snapshot}"]
    if model.constants:
        inner = "  ".join(f"{d}: [{', '.join(a)}]"
                          for d, a in model.constants)
        out.append(f"constants {{ {inner} }}")
    if model.aps:
        inner = "  ".join(f"{k}: {v}" for k, v in model.aps)
        out.append(f"aps {{ {inner} }}")
    for v in model.state_vars:
        out.append(f"var {v.name} : {v.sort} init {_fmt_init(v.init)}")
    for t in model.transitions:
        out.append(f"transition {t.id} {{")
        head = f"  kind: {t.kind}  actor: {t.actor}"
        if t.params:
            head += "  params: " + ", ".join(f"{n} in {d}" for n, d in t.params)
        out.append(head)
        out.append(f"  guard: {E.print_expr(t.guard)}")
        for target, rhs in t.updates:
            out.append(f"  update: {target} := {E.print_expr(rhs)}")
        out.append(f"  modality: {t.modality}")
        if t.adv:
            out.append(f"  adv: {t.adv}")
        for ref in t.source_refs:
            out.append(f"  source: {_fmt_source(ref)}")
        out.append("}")
    for p in model.properties:
        out.append(f"property {p.id} {{")
        out.append(f"  principle: {p.principle}  class: {p.cls}")
        out.append(f"  invariant: {E.print_expr(p.invariant)}")
        for ref in p.source_refs:
            out.append(f"  source: {_fmt_source(ref)}")
        out.append("}")
    return "\n".join(out) + "\n"


def serialize_clauses(clauses) -> str:
    out = []
    for c in clauses:
        out.append("clause {")
        out.append(f"  id: {c.id}  protocol: {c.protocol}  "
                   f"modality: {c.modality}  actor: {c.actor}")
        out.append(f'  behavior: "{c.behavior}"')
        out.append(f"  ambiguous: {'true' if c.ambiguous else 'false'}  "
                   f"precedence: {c.precedence}")
        out.append(f"  source: {_fmt_source(c.source)}")
        out.append("}")
    return "\n".join(out) + "\n"
