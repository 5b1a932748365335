"""Syntax trees for population specifications and bounded-PCTL formulas.

All nodes are frozen dataclasses. Source positions are carried in a ``pos``
field excluded from equality and hashing, so two trees parsed from
differently formatted text compare equal when their structure matches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

Pos = tuple[int, int]
_NOPOS: Pos = (0, 0)


def _pos() -> Pos:
    return field(default=_NOPOS, compare=False, hash=False, repr=False)


# --------------------------------------------------------------------------
# Arithmetic expressions

@dataclass(frozen=True)
class Const:
    value: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class Frc:
    """Fraction of the population currently in ``state``."""

    state: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Arg:
    """Formal argument placeholder inside a global-label function body."""

    index: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class BinOp:
    op: str  # one of BINARY_OPS
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


Expr = Union[Const, Frc, Arg, Neg, BinOp]

BINARY_OPS = ("+", "-", "*", "/", "min", "max")
BEXP_OPS = frozenset({"+", "-", "*", "min", "max"})


def walk_expr(e: Expr):
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Neg):
            stack.append(node.arg)
        elif isinstance(node, BinOp):
            stack.append(node.right)
            stack.append(node.left)


# --------------------------------------------------------------------------
# System specification

@dataclass(frozen=True)
class Branch:
    action: str
    target: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class StateDef:
    state: str
    branches: tuple[Branch, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class ProbDef:
    action: str
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class BExp:
    """``func(frc args[0], ..., frc args[q-1]) relation threshold``.

    ``func`` refers to its arguments through :class:`Arg` nodes.
    """

    func: Expr
    args: tuple[str, ...]
    relation: str  # "<" or ">"
    threshold: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class LocalLabel:
    atom: str
    states: tuple[str, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class GlobalLabel:
    atom: str
    bexp: BExp
    pos: Pos = _pos()


@dataclass(frozen=True)
class InitEntry:
    state: str
    count: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class SystemSpec:
    """A parsed system: object definitions, probabilities, labels, initial state.

    The raw declaration tuples are kept in source order so that validation
    can report duplicates; the convenience properties assume a validated spec.
    """

    states: tuple[StateDef, ...]
    probs: tuple[ProbDef, ...]
    local_labels: tuple[LocalLabel, ...] = ()
    global_labels: tuple[GlobalLabel, ...] = ()
    init: tuple[InitEntry, ...] = ()

    @property
    def state_names(self) -> tuple[str, ...]:
        return tuple(d.state for d in self.states)

    @property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.state_names)}

    @property
    def actions(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for d in self.states:
            for b in d.branches:
                seen.setdefault(b.action)
        return tuple(seen)

    @property
    def prob_map(self) -> dict[str, Expr]:
        return {p.action: p.expr for p in self.probs}

    @property
    def local_atoms(self) -> dict[str, frozenset[int]]:
        """Atom -> set of state indices it labels."""
        idx = self.index
        out: dict[str, set[int]] = {}
        for lab in self.local_labels:
            out.setdefault(lab.atom, set()).update(idx[s] for s in lab.states)
        return {a: frozenset(v) for a, v in out.items()}

    @property
    def global_atoms(self) -> dict[str, BExp]:
        return {g.atom: g.bexp for g in self.global_labels}

    @property
    def counts(self) -> tuple[int, ...]:
        idx = self.index
        c = [0] * len(idx)
        for e in self.init:
            c[idx[e.state]] += e.count
        return tuple(c)

    @property
    def population(self) -> int:
        return sum(self.counts)

    @property
    def initial_occupancy(self) -> tuple[float, ...]:
        n = self.population
        return tuple(c / n for c in self.counts)

    @property
    def first_state(self) -> int:
        """Index of the tagged object's initial state (first ``init`` entry with count > 0)."""
        idx = self.index
        for e in self.init:
            if e.count > 0:
                return idx[e.state]
        raise ValueError("empty population")

    def with_counts(self, counts) -> "SystemSpec":
        """Copy of the spec with the initial population replaced by ``counts``.

        The first state of the original ``init`` with a positive count is
        listed first so it stays the tagged object's state whenever its new
        count is positive.
        """
        names = self.state_names
        order = list(range(len(names)))
        if self.init:
            first = self.first_state
            order.remove(first)
            order.insert(0, first)
        entries = tuple(InitEntry(names[i], int(counts[i])) for i in order)
        return SystemSpec(self.states, self.probs, self.local_labels,
                          self.global_labels, entries)


# --------------------------------------------------------------------------
# Bounded PCTL

@dataclass(frozen=True)
class Atom:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Not:
    arg: "Formula"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Prob:
    op: str  # ">=", ">", "<=", "<"
    bound: float
    path: "PathFormula"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Next:
    arg: "Formula"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"
    k: int
    pos: Pos = _pos()


Formula = Union[Atom, Not, Or, Prob]
PathFormula = Union[Next, Until]

# Reserved atom satisfied by every state; ``true`` is sugar for tt | !tt.
TRUE_ATOM = "true"
TRUE: Formula = Or(Atom(TRUE_ATOM), Not(Atom(TRUE_ATOM)))
FALSE: Formula = Not(TRUE)

COMPARISONS = (">=", ">", "<=", "<")


def And(left: Formula, right: Formula) -> Formula:
    return Not(Or(Not(left), Not(right)))


def Implies(left: Formula, right: Formula) -> Formula:
    return Or(Not(left), right)


def atoms_of(phi) -> set[str]:
    """All atom names occurring in a state or path formula."""
    out: set[str] = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, Atom):
            out.add(f.name)
        elif isinstance(f, (Not, Next)):
            stack.append(f.arg)
        elif isinstance(f, (Or, Until)):
            stack.extend((f.left, f.right))
        elif isinstance(f, Prob):
            stack.append(f.path)
    return out


def has_prob(phi) -> bool:
    """True if ``phi`` contains a probability operator anywhere."""
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, Prob):
            return True
        if isinstance(f, (Not, Next)):
            stack.append(f.arg)
        elif isinstance(f, (Or, Until)):
            stack.extend((f.left, f.right))
    return False
