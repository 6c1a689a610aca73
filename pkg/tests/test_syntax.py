import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import mutated_text
from inhcalc.syntax import (
    ParseError,
    Reference,
    ResolutionError,
    parse,
    parse_path,
    parse_program,
    path_text,
    render,
)

# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def test_empty_record():
    prog = parse_program("{}")
    assert prog.defines(()) == frozenset()
    assert prog.inherits(()) == frozenset()


def test_definitions_and_refs():
    prog = parse_program("{A = {x = {}}, B = {A, ^1.z, c = {this@B.w}}}")
    assert prog.defines(()) == {"A", "B"}
    assert prog.defines(("A",)) == {"x"}
    assert prog.inherits(("B",)) == {Reference(0, ("A",)), Reference(1, ("z",))}
    assert prog.inherits(("B", "c")) == {Reference(0, ("w",))}


def test_named_ref_to_own_label_is_not_enclosing():
    with pytest.raises(ResolutionError) as exc:
        parse_program("{B = {this@B.w}}")
    assert exc.value.kind == "NamedNotFound"


def test_definition_reference_sugar():
    # "x = r" abbreviates "x = { r }"
    assert parse_program("{a = {}, x = a}") == parse_program("{a = {}, x = {a}}")


def test_trailing_comma_and_comments():
    src = """
    # leading comment
    {
      a = {},  # trailing comment
      b = {a},
    }
    """
    prog = parse_program(src)
    assert prog.defines(()) == {"a", "b"}


def test_duplicate_definitions_merge():
    merged = parse_program("{x = {a = {}}, x = {b = {}}}")
    direct = parse_program("{x = {a = {}, b = {}}}")
    assert merged == direct


def test_parse_error_position():
    with pytest.raises(ParseError) as exc:
        parse("{a = }")
    assert exc.value.line == 1
    assert exc.value.column == 6


def test_unexpected_character():
    with pytest.raises(ParseError):
        parse("{a = $}")


def test_named_not_found():
    with pytest.raises(ResolutionError) as exc:
        parse_program("{a = {r = this@Missing}}")
    assert exc.value.kind == "NamedNotFound"


def test_lexical_not_found():
    with pytest.raises(ResolutionError) as exc:
        parse_program("{a = {nowhere.b}}")
    assert exc.value.kind == "LexicalNotFound"


# ---------------------------------------------------------------------------
# Desugaring
# ---------------------------------------------------------------------------

def test_named_desugars_by_last_occurrence():
    # At path A.B.A.r, this@A targets the innermost A: n = 4 - 3 - 1 = 0.
    prog = parse_program("{A = {B = {A = {r = this@A}}}}")
    assert prog.inherits(("A", "B", "A", "r")) == {Reference(0)}
    # At path A.B.r, this@A targets the outer A: n = 3 - 1 - 1 = 1.
    prog2 = parse_program("{A = {B = {r = this@A}}}")
    assert prog2.inherits(("A", "B", "r")) == {Reference(1)}


def test_named_equals_explicit_indexed():
    named = parse_program("{Outer = {Inner = {r = this@Outer.x}}}")
    indexed = parse_program("{Outer = {Inner = {r = ^1.x}}}")
    assert named == indexed


def test_lexical_equals_explicit_indexed():
    # sibling reference: nearest proper prefix defining the head
    lexical = parse_program("{a = {}, b = {a.c}}")
    indexed = parse_program("{a = {}, b = {^0.a.c}}")
    assert lexical == indexed
    # reference across one level
    lexical2 = parse_program("{a = {}, b = {c = {a}}}")
    indexed2 = parse_program("{a = {}, b = {c = {^1.a}}}")
    assert lexical2 == indexed2


def test_lexical_skips_own_scope():
    # the head label is searched in proper prefixes only, so a record
    # defining x can still reference an outer x-sibling
    prog = parse_program("{x = {}, b = {x = {}, r = {x}}}")
    # r's scope is b, which defines x: n = 3 - 1 - 1 = 1 ... prefix (b,)
    assert prog.inherits(("b", "r")) == {Reference(0, ("x",))}


# ---------------------------------------------------------------------------
# Paths and rendering
# ---------------------------------------------------------------------------

def test_path_text_round_trip():
    for p in ((), ("a",), ("a", "b", "c")):
        assert parse_path(path_text(p)) == p
    with pytest.raises(ValueError):
        parse_path("a..b")


def test_render_round_trip_simple():
    src = "{A = {x = {}}, B = {A, x = {y = {}}}}"
    prog = parse_program(src)
    assert parse_program(render(prog)) == prog


# ---------------------------------------------------------------------------
# Property tests
# ---------------------------------------------------------------------------

_LABELS = st.sampled_from(["a", "b", "c", "x", "y"])


@st.composite
def _record_texts(draw, depth=3):
    n = draw(st.integers(0, 3))
    labels = draw(st.lists(_LABELS, min_size=n, max_size=n, unique=True))
    parts = []
    for label in labels:
        if depth > 0 and draw(st.booleans()):
            parts.append(f"{label} = {draw(_record_texts(depth=depth - 1))}")
        else:
            parts.append(f"{label} = {{}}")
    for _ in range(draw(st.integers(0, 2))):
        m = draw(st.integers(0, 2))
        downs = draw(st.lists(_LABELS, min_size=m, max_size=m))
        suffix = "." + ".".join(downs) if downs else ""
        parts.append(f"^{draw(st.integers(0, 3))}{suffix}")
    return "{" + ", ".join(parts) + "}" if parts else "{}"


@settings(max_examples=200, deadline=None)
@given(_record_texts(), st.integers(0, 2**32))
def test_permutation_and_duplication_invariance(src, seed):
    rec = parse(src)
    base = parse_program(src)
    assert parse_program(mutated_text(rec, random.Random(seed))) == base


@settings(max_examples=200, deadline=None)
@given(_record_texts())
def test_render_parse_round_trip(src):
    prog = parse_program(src)
    again = parse_program(render(prog))
    assert again == prog
    # rendering is a fixpoint after one pass
    assert render(again) == render(prog)
