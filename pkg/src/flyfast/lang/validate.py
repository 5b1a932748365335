"""Static well-formedness checks for parsed system specifications."""

from __future__ import annotations

from dataclasses import dataclass

from .ast import BEXP_OPS, BinOp, Const, Frc, SystemSpec, walk_expr
from .errors import ERROR_CLASSES, SpecError

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int = 0
    col: int = 0
    severity: str = ERROR

    def __str__(self):
        where = f"{self.line}:{self.col}: " if self.line else ""
        return f"{where}{self.severity}: {self.message} [{self.code}]"

    def to_exception(self) -> SpecError:
        return ERROR_CLASSES.get(self.code, SpecError)(self.message, self.line, self.col)


def _at(node, fallback):
    return node.pos if node.pos != (0, 0) else fallback.pos


def validate(spec: SystemSpec) -> list[Diagnostic]:
    """Return every violated rule, in a fixed order (errors and warnings mixed).

    An empty list means the spec is well formed.
    """
    out: list[Diagnostic] = []

    def add(code, message, pos=(0, 0), severity=ERROR):
        out.append(Diagnostic(code, message, pos[0], pos[1], severity))

    if not spec.states:
        add("syntax-error", "no state definitions")

    defined: dict[str, tuple[int, int]] = {}
    for d in spec.states:
        if d.state in defined:
            add("duplicate-state-def", f"state {d.state} is defined more than once", d.pos)
        else:
            defined[d.state] = d.pos

    # Branches: distinct actions per state, targets defined.
    used_at: dict[str, tuple[int, int]] = {}
    for d in spec.states:
        seen = set()
        for b in d.branches:
            if b.action in seen:
                add("duplicate-action", f"action {b.action} occurs twice in the definition of {d.state}", b.pos)
            seen.add(b.action)
            used_at.setdefault(b.action, b.pos)
            if b.target not in defined:
                add("undefined-state", f"undefined state {b.target}", b.pos)

    # Probability definitions: exactly one per action that occurs.
    prob_seen: set[str] = set()
    for p in spec.probs:
        if p.action in prob_seen:
            add("duplicate-prob-def", f"action {p.action} has more than one probability definition", p.pos)
        elif p.action not in used_at:
            add("unused-prob-def", f"probability defined for action {p.action}, which occurs in no state", p.pos)
        prob_seen.add(p.action)
    for action, pos in used_at.items():
        if action not in prob_seen:
            add("missing-prob-def", f"action {action} has no probability definition", pos)

    for p in spec.probs:
        for node in walk_expr(p.expr):
            if isinstance(node, Frc) and node.state not in defined:
                add("undefined-state", f"undefined state {node.state} in probability of {p.action}", _at(node, p))
            elif isinstance(node, Const) and not 0.0 <= node.value <= 1.0:
                add("literal-range", f"constant {node.value:g} in probability of {p.action} is outside [0, 1]",
                    _at(node, p))
            elif isinstance(node, BinOp) and node.op == "/":
                add("continuity-warning",
                    f"probability of {p.action} uses division and may be discontinuous in the occupancy measure",
                    _at(node, p), WARNING)

    # Labels.
    local_atoms: dict[str, tuple[int, int]] = {}
    for lab in spec.local_labels:
        local_atoms.setdefault(lab.atom, lab.pos)
        for s in lab.states:
            if s not in defined:
                add("undefined-state", f"undefined state {s} in label {lab.atom}", lab.pos)
    global_atoms: set[str] = set()
    for lab in spec.global_labels:
        if lab.atom in local_atoms:
            add("atom-clash", f"atom {lab.atom} is declared both local and global", lab.pos)
        elif lab.atom in global_atoms:
            add("atom-clash", f"global atom {lab.atom} is defined more than once", lab.pos)
        global_atoms.add(lab.atom)
        for s in lab.bexp.args:
            if s not in defined:
                add("undefined-state", f"undefined state {s} in label {lab.atom}", lab.pos)
        for node in walk_expr(lab.bexp.func):
            if isinstance(node, BinOp) and node.op not in BEXP_OPS:
                add("bexp-error", f"operator {node.op!r} is not allowed in global label {lab.atom}",
                    _at(node, lab))

    # Initial population.
    if not spec.init:
        add("init-error", "missing 'init' declaration")
    init_seen: set[str] = set()
    for e in spec.init:
        if e.state not in defined:
            add("undefined-state", f"undefined state {e.state} in init", e.pos)
        if e.state in init_seen:
            add("init-error", f"state {e.state} listed twice in init", e.pos)
        init_seen.add(e.state)
        if e.count < 0:
            add("negative-count", f"count {e.count} for state {e.state} is negative", e.pos)
    if spec.init and sum(max(e.count, 0) for e in spec.init) < 1:
        add("init-error", "population must be >= 1", spec.init[0].pos)

    return out


def errors(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == ERROR]


def raise_for_errors(diags: list[Diagnostic]) -> None:
    errs = errors(diags)
    if errs:
        raise errs[0].to_exception()


def resolve_atoms(phi, spec: SystemSpec) -> None:
    """Raise :class:`UnknownAtomError` if ``phi`` uses an atom the spec does not declare."""
    from .ast import TRUE_ATOM, atoms_of
    from .errors import UnknownAtomError

    known = {TRUE_ATOM} | {lab.atom for lab in spec.local_labels} | {lab.atom for lab in spec.global_labels}
    unknown = sorted(atoms_of(phi) - known)
    if unknown:
        raise UnknownAtomError(f"unknown atom {unknown[0]}")
