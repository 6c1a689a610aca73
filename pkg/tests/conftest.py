"""Shared helpers for the test suite."""

from __future__ import annotations

import random

from inhcalc.anf_direct import DirectContext
from inhcalc.semantics import DivergenceError, EvalContext
from inhcalc.syntax import IndexedRef, NamedRef, SurfaceRecord


def ref_str(ref) -> str:
    if isinstance(ref, NamedRef):
        out = f"this@{ref.up}"
    elif isinstance(ref, IndexedRef):
        out = f"^{ref.n}"
    else:  # LexicalRef
        return ".".join(ref.downs)
    if ref.downs:
        out += "." + ".".join(ref.downs)
    return out


def mutated_text(rec: SurfaceRecord, rng: random.Random, dup: float = 0.25) -> str:
    """Surface text of ``rec`` with elements shuffled and randomly
    duplicated at every nesting level."""
    parts = [ref_str(r) for r in rec.refs]
    parts += [f"{label} = {mutated_text(body, rng, dup)}" for label, body in rec.defs.items()]
    parts += [p for p in parts if rng.random() < dup]
    rng.shuffle(parts)
    return "{" + ", ".join(parts) + "}" if parts else "{}"


def properties_struct(ctx: EvalContext, p, depth: int):
    """Finite observation of properties as a comparable tuple; divergence
    collapses to a marker so engines with different budgets still align."""
    try:
        labels = tuple(sorted(ctx.properties(p)))
    except DivergenceError:
        return ("diverged",)
    children = ()
    if depth > 0:
        children = tuple(
            (label, properties_struct(ctx, p + (label,), depth - 1))
            for label in labels
        )
    return (labels, children)


def labels_struct(ctx: DirectContext, p, depth: int):
    """The same observation over the direct ANF engine's labels."""
    try:
        labels = tuple(sorted(ctx.labels(p)))
    except DivergenceError:
        return ("diverged",)
    children = ()
    if depth > 0:
        children = tuple(
            (label, labels_struct(ctx, p + (label,), depth - 1))
            for label in labels
        )
    return (labels, children)
