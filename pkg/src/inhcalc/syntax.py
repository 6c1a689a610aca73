"""Surface syntax: parsing, reference desugaring, and the core node table.

A program is a single record literal.  Records contain two kinds of
elements: definitions (``label = body``) and inheritance references.
References come in three surface forms:

* named      -- ``this@Outer.a.b`` names an enclosing scope by label
* indexed    -- ``^2.a.b`` carries an explicit de Bruijn scope count
* lexical    -- ``a.b`` names a sibling (or outer) definition by its head

All three desugar to the same representation: a pair ``(n, downs)`` where
``n`` counts enclosing scope levels upward (``n = 0`` is the scope
enclosing the record that contains the reference) and ``downs`` is a list
of downward projections.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

Label = str
Path = tuple[str, ...]

ROOT: Path = ()

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ParseError(Exception):
    """Raised on malformed surface syntax; carries line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ResolutionError(Exception):
    """A named or lexical reference that does not resolve."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind  # "NamedNotFound" | "LexicalNotFound"


@dataclass(frozen=True, order=True)
class Reference:
    """A desugared reference: ``n`` scope levels up, then ``downs`` down."""

    n: int
    downs: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("reference index must be nonnegative")


# ---------------------------------------------------------------------------
# Surface AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NamedRef:
    up: str
    downs: tuple[str, ...] = ()


@dataclass(frozen=True)
class IndexedRef:
    n: int
    downs: tuple[str, ...] = ()


@dataclass(frozen=True)
class LexicalRef:
    downs: tuple[str, ...]  # nonempty; downs[0] is the head label


SurfaceRef = NamedRef | IndexedRef | LexicalRef


@dataclass
class SurfaceRecord:
    """A record literal: a set of definitions and a set of references.

    Duplicate same-label definitions are merged (union of bodies) at
    construction time, and duplicate references are deduplicated, so the
    representation is insensitive to element order and repetition.
    """

    defs: dict[str, "SurfaceRecord"] = field(default_factory=dict)
    refs: list[SurfaceRef] = field(default_factory=list)

    def add_def(self, label: str, body: "SurfaceRecord") -> None:
        if label in self.defs:
            self.defs[label] = merge_records(self.defs[label], body)
        else:
            self.defs[label] = body

    def add_ref(self, ref: SurfaceRef) -> None:
        if ref not in self.refs:
            self.refs.append(ref)


def merge_records(a: SurfaceRecord, b: SurfaceRecord) -> SurfaceRecord:
    out = SurfaceRecord()
    for label, body in a.defs.items():
        out.add_def(label, body)
    for label, body in b.defs.items():
        out.add_def(label, body)
    for ref in a.refs + b.refs:
        out.add_ref(ref)
    return out


def record_of(*elements) -> SurfaceRecord:
    """Build a SurfaceRecord from (label, body) pairs and SurfaceRefs."""
    rec = SurfaceRecord()
    for el in elements:
        if isinstance(el, tuple):
            label, body = el
            rec.add_def(label, body)
        else:
            rec.add_ref(el)
    return rec


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>\#[^\n]*)
    | (?P<thisat>this@)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<nat>[0-9]+)
    | (?P<lb>\{)
    | (?P<rb>\})
    | (?P<eq>=)
    | (?P<comma>,)
    | (?P<dot>\.)
    | (?P<caret>\^)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {source[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> _Token:
        j = min(self.i + offset, len(self.tokens) - 1)
        return self.tokens[j]

    def error(self, message: str):
        raise ParseError(message, self.cur.line, self.cur.column)

    def expect(self, kind: str) -> _Token:
        if self.cur.kind != kind:
            self.error(f"expected {kind}, found {self.cur.kind or 'eof'}")
        tok = self.cur
        self.i += 1
        return tok

    def parse_program(self) -> SurfaceRecord:
        rec = self.parse_record()
        if self.cur.kind != "eof":
            self.error("trailing input after top-level record")
        return rec

    def parse_record(self) -> SurfaceRecord:
        self.expect("lb")
        rec = SurfaceRecord()
        if self.cur.kind == "rb":
            self.i += 1
            return rec
        while True:
            self.parse_element(rec)
            if self.cur.kind == "comma":
                self.i += 1
                if self.cur.kind == "rb":  # trailing comma
                    self.i += 1
                    return rec
                continue
            self.expect("rb")
            return rec

    def parse_element(self, rec: SurfaceRecord) -> None:
        if self.cur.kind == "ident" and self.peek().kind == "eq":
            label = self.expect("ident").text
            self.expect("eq")
            if self.cur.kind == "lb":
                body = self.parse_record()
            else:
                # "x = r" sugars to "x = { r }"
                body = SurfaceRecord()
                body.add_ref(self.parse_reference())
            rec.add_def(label, body)
        else:
            rec.add_ref(self.parse_reference())

    def parse_reference(self) -> SurfaceRef:
        if self.cur.kind == "thisat":
            self.i += 1
            up = self.expect("ident").text
            downs = self.parse_downs()
            return NamedRef(up, downs)
        if self.cur.kind == "caret":
            self.i += 1
            n = int(self.expect("nat").text)
            downs = self.parse_downs()
            return IndexedRef(n, downs)
        if self.cur.kind == "ident":
            head = self.expect("ident").text
            downs = (head,) + self.parse_downs()
            return LexicalRef(downs)
        self.error("expected an element (definition or reference)")

    def parse_downs(self) -> tuple[str, ...]:
        downs = []
        while self.cur.kind == "dot":
            self.i += 1
            downs.append(self.expect("ident").text)
        return tuple(downs)


def parse(source: str) -> SurfaceRecord:
    """Parse surface text into a SurfaceRecord (the surface program)."""
    return _Parser(_tokenize(source)).parse_program()


# ---------------------------------------------------------------------------
# Core program and reference resolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    defines: frozenset[str] = frozenset()
    inherits: frozenset[Reference] = frozenset()


_EMPTY_NODE = Node()


class CoreProgram:
    """Per-path node table exposing ``defines`` and ``inherits``.

    Lookups on paths never mentioned in the source return empty sets;
    the semantic equations freely probe candidate paths.
    """

    def __init__(self, nodes: dict[Path, Node]):
        self.nodes = dict(nodes)

    def defines(self, p: Path) -> frozenset[str]:
        return self.nodes.get(p, _EMPTY_NODE).defines

    def inherits(self, p: Path) -> frozenset[Reference]:
        return self.nodes.get(p, _EMPTY_NODE).inherits

    def paths(self) -> list[Path]:
        return sorted(self.nodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoreProgram):
            return NotImplemented
        return self.nodes == other.nodes

    def __hash__(self):
        return hash(frozenset(self.nodes.items()))

    def __repr__(self):
        return f"CoreProgram({len(self.nodes)} paths)"


def _surface_defines(rec: SurfaceRecord, p: Path, acc: dict[Path, SurfaceRecord]):
    acc[p] = rec
    for label, body in rec.defs.items():
        _surface_defines(body, p + (label,), acc)


def resolve_references(sp: SurfaceRecord) -> CoreProgram:
    """Desugar all references to de Bruijn pairs, producing a CoreProgram.

    * named ``this@L.downs`` at path p: target the last occurrence of L
      among the labels of p; ``n = |p| - |p_target| - 1``.
    * lexical ``l1.l2...`` at path p: target the nearest proper prefix p'
      with ``l1 in defines(p')``; ``n = |p| - |p'| - 1``.
    * indexed references pass through unchanged.
    """
    records: dict[Path, SurfaceRecord] = {}
    _surface_defines(sp, ROOT, records)

    nodes: dict[Path, Node] = {}
    for p, rec in records.items():
        refs = set()
        for ref in rec.refs:
            refs.add(_resolve_one(ref, p, records))
        nodes[p] = Node(frozenset(rec.defs), frozenset(refs))
    return CoreProgram(nodes)


def _resolve_one(
    ref: SurfaceRef, p: Path, records: dict[Path, SurfaceRecord]
) -> Reference:
    if isinstance(ref, IndexedRef):
        return Reference(ref.n, ref.downs)
    if isinstance(ref, NamedRef):
        # Only proper prefixes of p are enclosing scopes of a reference
        # stored at p, so the record's own final label is not a target.
        for i in range(len(p) - 2, -1, -1):
            if p[i] == ref.up:
                # p_target = p[: i + 1]
                return Reference(len(p) - (i + 1) - 1, ref.downs)
        raise ResolutionError(
            "NamedNotFound",
            f"this@{ref.up} at path {path_text(p)}: "
            "label does not name an enclosing scope",
        )
    if isinstance(ref, LexicalRef):
        head = ref.downs[0]
        for i in range(len(p) - 1, -1, -1):
            prefix = p[:i]
            if head in records[prefix].defs:
                return Reference(len(p) - i - 1, ref.downs)
        raise ResolutionError(
            "LexicalNotFound",
            f"{'.'.join(ref.downs)} at path {path_text(p)}: "
            f"no enclosing scope defines {head!r}",
        )
    raise TypeError(f"unknown reference form: {ref!r}")


def parse_program(source: str) -> CoreProgram:
    """Convenience: parse + resolve in one step."""
    return resolve_references(parse(source))


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def path_text(p: Path) -> str:
    """Canonical textual form of a path; the root renders as ``()``."""
    return ".".join(p) if p else "()"


def parse_path(text: str) -> Path:
    """Inverse of path_text for user-supplied query paths."""
    if text in ("", "()"):
        return ROOT
    parts = tuple(text.split("."))
    for part in parts:
        if not IDENT_RE.match(part):
            raise ValueError(f"invalid path component: {part!r}")
    return parts


def ref_text(ref: Reference) -> str:
    out = f"^{ref.n}"
    if ref.downs:
        out += "." + ".".join(ref.downs)
    return out


def render(prog: CoreProgram) -> str:
    """Deterministic surface text that re-parses to an equal CoreProgram.

    References render in indexed form only and are sorted; definitions
    are sorted lexicographically.  A definition whose body is a single
    reference with no sub-definitions uses the ``x = r`` sugar.
    """

    def render_body(p: Path) -> str:
        node = prog.nodes.get(p, _EMPTY_NODE)
        parts = [ref_text(r) for r in sorted(node.inherits)]
        for label in sorted(node.defines):
            child = p + (label,)
            cnode = prog.nodes.get(child, _EMPTY_NODE)
            if not cnode.defines and len(cnode.inherits) == 1:
                (only,) = cnode.inherits
                parts.append(f"{label} = {ref_text(only)}")
            else:
                parts.append(f"{label} = {render_body(child)}")
        if not parts:
            return "{}"
        return "{" + ", ".join(parts) + "}"

    return render_body(ROOT)
