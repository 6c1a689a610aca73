"""The lambda-calculus bridge.

Contains four independent pieces:

* a parser and ANF normalizer for closed lambda-terms;
* the five-rule translation from ANF terms to inheritance records;
* the inheritance-convergence check (scan the ``result`` chain for the
  abstraction shape);
* a self-contained head-reduction / Boehm-prefix oracle on de Bruijn
  terms that shares no code with the record semantics.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .semantics import (
    DEFAULT_FUEL,
    DivergenceError,
    EvalContext,
)
from .syntax import (
    CoreProgram,
    IndexedRef,
    LexicalRef,
    Path,
    SurfaceRecord,
    resolve_references,
)

SYNTHETIC_LABELS = frozenset({"argument", "result", "tailCall"})

DEFAULT_MAX_DEPTH = 64


class LambdaParseError(Exception):
    pass


class FreeVariableError(Exception):
    pass


class SyntheticNameCollision(Exception):
    pass


# ---------------------------------------------------------------------------
# Named terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Abs:
    param: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Let:
    name: str
    rhs: "Term"
    body: "Term"


Term = Var | Abs | App | Let


def is_value(t: Term) -> bool:
    return isinstance(t, (Var, Abs))


def free_vars(t: Term, bound: frozenset[str] = frozenset()) -> set[str]:
    if isinstance(t, Var):
        return set() if t.name in bound else {t.name}
    if isinstance(t, Abs):
        return free_vars(t.body, bound | {t.param})
    if isinstance(t, App):
        return free_vars(t.fun, bound) | free_vars(t.arg, bound)
    if isinstance(t, Let):
        return free_vars(t.rhs, bound) | free_vars(t.body, bound | {t.name})
    raise TypeError(t)


def bound_names(t: Term) -> set[str]:
    if isinstance(t, Var):
        return set()
    if isinstance(t, Abs):
        return {t.param} | bound_names(t.body)
    if isinstance(t, App):
        return bound_names(t.fun) | bound_names(t.arg)
    if isinstance(t, Let):
        return {t.name} | bound_names(t.rhs) | bound_names(t.body)
    raise TypeError(t)


def term_text(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Abs):
        return f"\\{t.param}. {term_text(t.body)}"
    if isinstance(t, Let):
        return f"let {t.name} = {term_text(t.rhs)} in {term_text(t.body)}"
    if isinstance(t, App):
        fun = term_text(t.fun)
        arg = term_text(t.arg)
        if isinstance(t.fun, (Abs, Let)):
            fun = f"({fun})"
        if not isinstance(t.arg, Var):
            arg = f"({arg})"
        return f"{fun} {arg}"
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Parser: \x. M, left-associative juxtaposition, let x = M in N, parens
# ---------------------------------------------------------------------------

_LAM_TOKEN_RE = re.compile(
    r"\s+|(?P<lam>\\|λ)|(?P<lp>\()|(?P<rp>\))|(?P<dot>\.)|(?P<eq>=)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
)


def _lam_tokens(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _LAM_TOKEN_RE.match(text, pos)
        if m is None:
            raise LambdaParseError(f"unexpected character {text[pos]!r} at {pos}")
        if m.lastgroup is not None:
            tok = m.group()
            if m.lastgroup == "ident" and tok in ("let", "in"):
                out.append((tok, tok))
            else:
                out.append((m.lastgroup, tok))
        pos = m.end()
    out.append(("eof", ""))
    return out


class _LamParser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self):
        return self.tokens[self.i]

    def expect(self, kind):
        if self.cur[0] != kind:
            raise LambdaParseError(f"expected {kind}, found {self.cur[0] or 'eof'}")
        tok = self.cur
        self.i += 1
        return tok

    def parse(self) -> Term:
        t = self.parse_term()
        self.expect("eof")
        return t

    def parse_term(self) -> Term:
        if self.cur[0] == "lam":
            self.i += 1
            param = self.expect("ident")[1]
            self.expect("dot")
            return Abs(param, self.parse_term())
        if self.cur[0] == "let":
            self.i += 1
            name = self.expect("ident")[1]
            self.expect("eq")
            rhs = self.parse_term()
            self.expect("in")
            body = self.parse_term()
            return Let(name, rhs, body)
        return self.parse_application()

    def parse_application(self) -> Term:
        t = self.parse_atom()
        while self.cur[0] in ("lp", "ident", "lam"):
            if self.cur[0] == "lam":
                # allow "f \x. M" to consume the trailing abstraction
                t = App(t, self.parse_term())
                break
            t = App(t, self.parse_atom())
        return t

    def parse_atom(self) -> Term:
        if self.cur[0] == "lp":
            self.i += 1
            t = self.parse_term()
            self.expect("rp")
            return t
        if self.cur[0] == "ident":
            return Var(self.expect("ident")[1])
        raise LambdaParseError(f"unexpected token {self.cur[0] or 'eof'}")


def parse_lambda(text: str, allow_free: bool = False) -> Term:
    term = _LamParser(_lam_tokens(text)).parse()
    if not allow_free:
        free = free_vars(term)
        if free:
            raise FreeVariableError(
                f"term is not closed; free variables: {sorted(free)}"
            )
    return term


# ---------------------------------------------------------------------------
# ANF transform
# ---------------------------------------------------------------------------

def is_anf(t: Term) -> bool:
    """Check the ANF grammar: Let binds exactly one application of values;
    tail position is one application of values or a value."""
    if isinstance(t, Let):
        return (
            isinstance(t.rhs, App)
            and is_anf_value(t.rhs.fun)
            and is_anf_value(t.rhs.arg)
            and is_anf(t.body)
        )
    if isinstance(t, App):
        return is_anf_value(t.fun) and is_anf_value(t.arg)
    return is_anf_value(t)


def is_anf_value(t: Term) -> bool:
    if isinstance(t, Var):
        return True
    if isinstance(t, Abs):
        return is_anf(t.body)
    return False


def _check_let_names(t: Term) -> None:
    if isinstance(t, Let):
        if t.name in SYNTHETIC_LABELS:
            raise SyntheticNameCollision(
                f"let-name {t.name!r} collides with a synthetic label"
            )
        _check_let_names(t.rhs)
        _check_let_names(t.body)
    elif isinstance(t, Abs):
        _check_let_names(t.body)
    elif isinstance(t, App):
        _check_let_names(t.fun)
        _check_let_names(t.arg)


def anf_transform(t: Term) -> Term:
    """Normalize a term to ANF with deterministic fresh names _a0, _a1, ...

    Intermediate applications are named in evaluation order (arguments
    before the function position, innermost first), matching the shape
    ``let x1 = b false in let x2 = x1 true in let x3 = a b in x3 x2``
    for ``(a b)(b false true)``.  Terms already in ANF pass through with
    their let-names intact.
    """
    _check_let_names(t)
    used = bound_names(t) | free_vars(t)
    counter = [0]

    def fresh() -> str:
        while True:
            name = f"_a{counter[0]}"
            counter[0] += 1
            if name not in used:
                used.add(name)
                return name

    def to_value(v: Term) -> Term:
        if isinstance(v, Var):
            return v
        if isinstance(v, Abs):
            return Abs(v.param, to_comp(v.body))
        raise TypeError(f"not a value: {v!r}")

    def atomize(u: Term, lets: list) -> Term:
        if is_value(u):
            return to_value(u)
        if isinstance(u, Let):
            return atomize(App(Abs(u.name, u.body), u.rhs), lets)
        arg = atomize(u.arg, lets)
        fun = atomize(u.fun, lets)
        name = fresh()
        lets.append((name, fun, arg))
        return Var(name)

    def to_comp(u: Term) -> Term:
        if is_value(u):
            return to_value(u)
        if isinstance(u, Let):
            rhs = u.rhs
            if isinstance(rhs, App) and is_value(rhs.fun) and is_value(rhs.arg):
                return Let(
                    u.name,
                    App(to_value(rhs.fun), to_value(rhs.arg)),
                    to_comp(u.body),
                )
            return to_comp(App(Abs(u.name, u.body), rhs))
        # u is an application spine
        lets: list = []
        arg = atomize(u.arg, lets)
        fun = atomize(u.fun, lets)
        out: Term = App(fun, arg)
        for name, f, a in reversed(lets):
            out = Let(name, App(f, a), out)
        return out

    result = to_comp(t)
    assert is_anf(result)
    return result


def substitute(t: Term, x: str, v: Term) -> Term:
    """Capture-avoiding substitution t[v/x] for a closed value v.

    Performed at the named-ANF level so let-names are preserved;
    substituting a value for a variable keeps the term in ANF.
    """
    assert is_value(v) and not free_vars(v), "substitute requires a closed value"
    if isinstance(t, Var):
        return v if t.name == x else t
    if isinstance(t, Abs):
        if t.param == x:
            return t
        return Abs(t.param, substitute(t.body, x, v))
    if isinstance(t, App):
        return App(substitute(t.fun, x, v), substitute(t.arg, x, v))
    if isinstance(t, Let):
        rhs = substitute(t.rhs, x, v)
        if t.name == x:
            return Let(t.name, rhs, t.body)
        return Let(t.name, rhs, substitute(t.body, x, v))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Translation to inheritance records
# ---------------------------------------------------------------------------
#
# Each record literal is one scope level.  The frame list mirrors the
# enclosing record levels from the translation root: frame i is the record
# at nesting level i.  A reference element of a record at level L with
# stored index n targets level L - 1 - n, so a lambda-bound variable whose
# binder record sits at level j gets index L - 1 - j; this realizes the
# "lambda index plus intervening let/tail scopes" adjustment.

_LAM = "lam"
_LET = "let"
_OPAQUE = "opaque"


def _lookup(env: list, name: str):
    for j in range(len(env) - 1, -1, -1):
        kind, bound = env[j]
        if bound == name and kind in (_LAM, _LET):
            return j, kind
    raise FreeVariableError(f"unbound variable {name!r} in translation")


def _value_ref_at(v: Term, level: int, env: list):
    """Reference for variable v placed in a record at the given level."""
    j, kind = _lookup(env, v.name)
    if kind == _LAM:
        return IndexedRef(level - 1 - j, ("argument",))
    return LexicalRef((v.name, "result"))


def _application_record(v1: Term, v2: Term, env: list) -> SurfaceRecord:
    """The encapsulated application { T(V1), argument = T(V2) }.

    env covers the levels above this record, so the record itself sits at
    level len(env).  An abstraction literal in function position is inlined
    (set union), merging its scope level with the application record's.
    """
    level = len(env)
    if isinstance(v1, Abs):
        rec = _translate_comp(v1, env)  # the lambda record *is* this record
    else:
        rec = SurfaceRecord()
        rec.add_ref(_value_ref_at(v1, level, env))
    # The argument subtree counts the application record as one scope
    # level, but an inlined lambda-literal's binder is not in scope there.
    arg_env = env + [(_OPAQUE, None)]
    if isinstance(v2, Abs):
        arg_body = _translate_comp(v2, arg_env)
    else:
        arg_body = SurfaceRecord()
        arg_body.add_ref(_value_ref_at(v2, len(arg_env), env))
    rec.add_def("argument", arg_body)
    return rec


def _translate_comp(m: Term, env: list) -> SurfaceRecord:
    """Translate a computation into the record at level len(env)."""
    level = len(env)
    if isinstance(m, Abs):
        rec = SurfaceRecord()
        rec.add_def("argument", SurfaceRecord())
        rec.add_def("result", _translate_comp(m.body, env + [(_LAM, m.param)]))
        return rec
    if isinstance(m, Let):
        rec = SurfaceRecord()
        inner = env + [(_LET, m.name)]
        assert isinstance(m.rhs, App)
        rec.add_def(m.name, _application_record(m.rhs.fun, m.rhs.arg, inner))
        rec.add_def("result", _translate_comp(m.body, inner))
        return rec
    if isinstance(m, App):
        rec = SurfaceRecord()
        inner = env + [(_OPAQUE, None)]
        rec.add_def("tailCall", _application_record(m.fun, m.arg, inner))
        forward = SurfaceRecord()
        forward.add_ref(LexicalRef(("tailCall", "result")))
        rec.add_def("result", forward)
        return rec
    if isinstance(m, Var):
        rec = SurfaceRecord()
        rec.add_ref(_value_ref_at(m, level, env))
        return rec
    raise TypeError(m)


def translate_surface(t: Term) -> SurfaceRecord:
    if not is_anf(t):
        raise ValueError("translate requires an ANF term")
    free = free_vars(t)
    if free:
        raise FreeVariableError(f"translate requires a closed term: {sorted(free)}")
    _check_let_names(t)
    return _translate_comp(t, [])


def translate(t: Term) -> CoreProgram:
    return resolve_references(translate_surface(t))


# ---------------------------------------------------------------------------
# Inheritance-convergence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    depth: int | None = None
    reason: str | None = None  # Cycle | FuelExhausted | DepthExceeded

    def describe(self) -> str:
        if self.converged:
            return f"converged at depth {self.depth}"
        return f"not converged: {self.reason}"


def converges(
    prog: CoreProgram,
    fuel: int = DEFAULT_FUEL,
    max_depth: int = DEFAULT_MAX_DEPTH,
    base_path: Path = (),
    ctx: EvalContext | None = None,
) -> ConvergenceReport:
    """Scan n = 0, 1, ... for the least result-chain depth at which both
    ``argument`` and ``result`` are properties (the abstraction shape)."""
    if ctx is None:
        ctx = EvalContext(prog, fuel=fuel)
    for n in range(max_depth + 1):
        p = base_path + ("result",) * n
        try:
            props = ctx.properties(p)
        except DivergenceError as exc:
            return ConvergenceReport(False, None, exc.kind)
        if "argument" in props and "result" in props:
            return ConvergenceReport(True, n, None)
    return ConvergenceReport(False, None, "DepthExceeded")


# ---------------------------------------------------------------------------
# Head-reduction / Boehm-prefix oracle (independent of the record engine)
# ---------------------------------------------------------------------------
#
# Oracle terms are nested tuples over de Bruijn indices:
#   ("var", n) | ("abs", body) | ("app", fun, arg)

OTerm = tuple


def o_var(n: int) -> OTerm:
    return ("var", n)


def o_abs(body: OTerm) -> OTerm:
    return ("abs", body)


def o_app(fun: OTerm, arg: OTerm) -> OTerm:
    return ("app", fun, arg)


def named_to_oracle(t: Term, env: tuple[str, ...] = ()) -> OTerm:
    """Convert a named term to an oracle de Bruijn term.  Let-bindings are
    expanded as beta-redexes: let x = M in N == (\\x. N) M."""
    if isinstance(t, Var):
        for i, name in enumerate(env):
            if name == t.name:
                return o_var(i)
        raise FreeVariableError(f"unbound variable {t.name!r}")
    if isinstance(t, Abs):
        return o_abs(named_to_oracle(t.body, (t.param,) + env))
    if isinstance(t, App):
        return o_app(named_to_oracle(t.fun, env), named_to_oracle(t.arg, env))
    if isinstance(t, Let):
        return o_app(
            o_abs(named_to_oracle(t.body, (t.name,) + env)),
            named_to_oracle(t.rhs, env),
        )
    raise TypeError(t)


def oracle_to_named(t: OTerm, depth: int = 0) -> Term:
    if t[0] == "var":
        index = t[1]
        if index >= depth:
            raise FreeVariableError(f"free de Bruijn index {index}")
        return Var(f"v{depth - 1 - index}")
    if t[0] == "abs":
        return Abs(f"v{depth}", oracle_to_named(t[1], depth + 1))
    return App(oracle_to_named(t[1], depth), oracle_to_named(t[2], depth))


def shift(t: OTerm, d: int, cutoff: int = 0) -> OTerm:
    if t[0] == "var":
        return o_var(t[1] + d) if t[1] >= cutoff else t
    if t[0] == "abs":
        return o_abs(shift(t[1], d, cutoff + 1))
    return o_app(shift(t[1], d, cutoff), shift(t[2], d, cutoff))


def subst(t: OTerm, j: int, s: OTerm) -> OTerm:
    if t[0] == "var":
        return s if t[1] == j else t
    if t[0] == "abs":
        return o_abs(subst(t[1], j + 1, shift(s, 1)))
    return o_app(subst(t[1], j, s), subst(t[2], j, s))


def beta(body: OTerm, arg: OTerm) -> OTerm:
    return shift(subst(body, 0, shift(arg, 1)), -1)


def head_step(t: OTerm) -> OTerm | None:
    """One head-reduction step, or None if t is in head normal form."""
    binders = 0
    u = t
    while u[0] == "abs":
        binders += 1
        u = u[1]
    spine: list[OTerm] = []
    while u[0] == "app":
        spine.append(u[2])
        u = u[1]
    if u[0] == "var":
        return None
    # u is an abstraction applied to spine[-1] (the first argument)
    result = beta(u[1], spine[-1])
    for a in reversed(spine[:-1]):
        result = o_app(result, a)
    for _ in range(binders):
        result = o_abs(result)
    return result


@dataclass(frozen=True)
class HeadResult:
    status: str  # "hnf" | "diverged" | "fuel"
    term: OTerm
    steps: int

    @property
    def decided(self) -> bool:
        return self.status in ("hnf", "diverged")


def head_reduce(t: OTerm, fuel: int = 10_000) -> HeadResult:
    """Iterate head steps.  Head reduction is deterministic, so revisiting
    a previously seen term proves divergence (status "diverged")."""
    seen = {t}
    steps = 0
    while steps < fuel:
        nt = head_step(t)
        if nt is None:
            return HeadResult("hnf", t, steps)
        steps += 1
        if nt in seen:
            return HeadResult("diverged", nt, steps)
        seen.add(nt)
        t = nt
    return HeadResult("fuel", t, steps)


def hnf_decompose(t: OTerm) -> tuple[int, int, list[OTerm]]:
    """Split an HNF into (binder count, head index, argument list)."""
    binders = 0
    while t[0] == "abs":
        binders += 1
        t = t[1]
    args: list[OTerm] = []
    while t[0] == "app":
        args.append(t[2])
        t = t[1]
    assert t[0] == "var", "not a head normal form"
    args.reverse()
    return binders, t[1], args


# Boehm prefix nodes

UNEXPANDED = "unexpanded"


@dataclass(frozen=True)
class Bottom:
    proven: bool  # True when divergence was proven by loop detection


@dataclass(frozen=True)
class HnfNode:
    binders: int
    head: int
    children: tuple


BohmNode = Bottom | HnfNode


def bohm_prefix(t: OTerm, depth: int = 2, fuel: int = 10_000) -> BohmNode:
    result = head_reduce(t, fuel)
    if result.status != "hnf":
        return Bottom(proven=result.status == "diverged")
    binders, head, args = hnf_decompose(result.term)
    if depth <= 0:
        children = tuple(UNEXPANDED for _ in args)
    else:
        children = tuple(bohm_prefix(a, depth - 1, fuel) for a in args)
    return HnfNode(binders, head, children)


def bohm_text(node: BohmNode, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(node, Bottom):
        mark = "bottom" if node.proven else "bottom?"
        return f"{pad}{mark}"
    lines = [f"{pad}λ^{node.binders}. {node.head}"]
    for child in node.children:
        if child == UNEXPANDED:
            lines.append("  " * (indent + 1) + "...")
        else:
            lines.append(bohm_text(child, indent + 1))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Named fixture terms
# ---------------------------------------------------------------------------

def _church(n: int) -> Term:
    body: Term = Var("x")
    for _ in range(n):
        body = App(Var("f"), body)
    return Abs("f", Abs("x", body))


NAMED_TERMS: dict[str, Term] = {
    "I": parse_lambda("\\x. x"),
    "K": parse_lambda("\\t. \\f. t"),
    "S": parse_lambda("\\x. \\y. \\z. (x z) (y z)"),
    "omega": parse_lambda("(\\x. x x) (\\x. x x)"),
    "true": parse_lambda("\\t. \\f. t"),
    "false": parse_lambda("\\t. \\f. f"),
    "eq": parse_lambda("\\a. \\b. (a b) (b (\\t. \\f. f) (\\t. \\f. t))"),
    "church0": _church(0),
    "church1": _church(1),
    "church2": _church(2),
    "church3": _church(3),
}
