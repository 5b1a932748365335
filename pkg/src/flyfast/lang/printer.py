"""Canonical text rendering of specs and formulas.

The output reparses to a structurally equal tree, which is what the
round-trip tests rely on.
"""

from __future__ import annotations

import math

from .ast import (
    FALSE, TRUE, Arg, Atom, BExp, BinOp, Const, Expr, Frc, Neg, Next, Not, Or,
    Prob, SystemSpec, Until,
)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_number(x: float) -> str:
    if math.isnan(x):
        raise ValueError("NaN has no literal form")
    if math.isinf(x):
        return "1e999"
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") and "e" not in text else text


def format_expr(e: Expr, args: tuple[str, ...] = (), prec: int = 0) -> str:
    if isinstance(e, Const):
        s, p = format_number(abs(e.value)), 4
        if math.copysign(1.0, e.value) < 0:
            # Negative literals only arise programmatically; print as negation.
            s, p = "-" + s, 3
    elif isinstance(e, Frc):
        s, p = f"frc {e.state}", 4
    elif isinstance(e, Arg):
        s, p = f"frc {args[e.index]}", 4
    elif isinstance(e, Neg):
        s, p = "-" + format_expr(e.arg, args, 3), 3
    elif isinstance(e, BinOp) and e.op in ("min", "max"):
        s, p = f"{e.op}({format_expr(e.left, args)}, {format_expr(e.right, args)})", 4
    elif isinstance(e, BinOp):
        p = _PREC[e.op]
        s = f"{format_expr(e.left, args, p)} {e.op} {format_expr(e.right, args, p + 1)}"
    else:
        raise TypeError(f"not an expression: {e!r}")
    return f"({s})" if p < prec else s


def format_bexp(b: BExp) -> str:
    return f"{format_expr(b.func, b.args)} {b.relation} {format_number(b.threshold)}"


def format_spec(spec: SystemSpec) -> str:
    lines = []
    for d in spec.states:
        lines.append(f"{d.state} := " + " + ".join(f"{b.action}.{b.target}" for b in d.branches) + ";")
    lines.append("")
    for p in spec.probs:
        lines.append(f"{p.action} :: {format_expr(p.expr)};")
    if spec.local_labels or spec.global_labels:
        lines.append("")
    for lab in spec.local_labels:
        lines.append(f"label local {lab.atom} = {', '.join(lab.states)};")
    for lab in spec.global_labels:
        lines.append(f"label global {lab.atom} = {format_bexp(lab.bexp)};")
    if spec.init:
        lines.append("")
        lines.append("init <" + ", ".join(f"{e.state}[{e.count}]" for e in spec.init) + ">;")
    return "\n".join(lines) + "\n"


def _is_and(f) -> bool:
    return (isinstance(f, Not) and isinstance(f.arg, Or)
            and isinstance(f.arg.left, Not) and isinstance(f.arg.right, Not))


def format_formula(f, prec: int = 0) -> str:
    if f == TRUE:
        s, p = "true", 4
    elif f == FALSE:
        s, p = "false", 4
    elif isinstance(f, Atom):
        s, p = f.name, 4
    elif _is_and(f):
        left, right = f.arg.left.arg, f.arg.right.arg
        s, p = f"{format_formula(left, 2)} & {format_formula(right, 3)}", 2
    elif isinstance(f, Not):
        s, p = "!" + format_formula(f.arg, 3), 3
    elif isinstance(f, Or):
        s, p = f"{format_formula(f.left, 1)} | {format_formula(f.right, 2)}", 1
    elif isinstance(f, Prob):
        s, p = f"P{f.op}{format_number(f.bound)} [ {format_path(f.path)} ]", 4
    else:
        raise TypeError(f"not a state formula: {f!r}")
    return f"({s})" if p < prec else s


def format_path(phi) -> str:
    if isinstance(phi, Next):
        return f"X {format_formula(phi.arg)}"
    if isinstance(phi, Until):
        return f"{format_formula(phi.left)} U<={phi.k} {format_formula(phi.right)}"
    raise TypeError(f"not a path formula: {phi!r}")
