"""On-the-fly bounded-PCTL model checking over an abstract model.

A model supplies three callables:

* ``next(s)``: list of ``(successor, probability)`` pairs, probabilities in
  (0, 1] summing to one;
* ``lab_eval(s, atom)``: truth of an atomic proposition in ``s``;
* ``memo_key(s)``: a hashable key identifying ``s`` for memoization.

Evaluation follows the usual local recursion (atoms, negation, disjunction,
probability operators; next sums successor mass, bounded until unrolls one
step at a time) but runs on an explicit stack, so step bounds in the
thousands do not hit Python's recursion limit. Results are memoized on
``(memo_key(s), subformula, remaining steps)``. Bounded-until entries are
keyed by their operands rather than the enclosing formula, so sweeping the
step bound reuses all earlier work.

Disjunction short-circuits: the right operand is not evaluated when the
left one holds. The until clause tests ``not Check(s, left)`` rather than
``Check(s, not left)``; the two agree for every formula.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Protocol

from .lang.ast import Atom, Next, Not, Or, Prob, Until
from .lang.errors import ModelError

DEFAULT_SAFETY_EPSILON = 1e-6
_SUM_TOL = 1e-9
_NO_NOTES: dict = {}


class ModelInterface(Protocol):
    def next(self, state) -> list[tuple[Any, float]]: ...

    def lab_eval(self, state, atom: str) -> bool: ...

    def memo_key(self, state) -> Hashable: ...


@dataclass(frozen=True)
class PathEvaluation:
    """One computed path probability under a probability operator."""

    state: Hashable
    formula: Prob
    probability: float


@dataclass(frozen=True)
class SafetyIncident:
    state: Hashable
    formula: Prob
    probability: float
    threshold: float
    gap: float


@dataclass
class Stats:
    expanded: int = 0
    cache_hits: int = 0
    wall_time: float = 0.0


@dataclass
class CheckResult:
    value: bool
    probability: float | None = None  # top-level path probability, if any
    safety: list[SafetyIncident] = field(default_factory=list)
    stats: Stats = field(default_factory=Stats)

    @property
    def safe(self) -> bool:
        return not self.safety


def compare(prob: float, op: str, bound: float) -> bool:
    if op == ">=":
        return prob >= bound
    if op == ">":
        return prob > bound
    if op == "<=":
        return prob <= bound
    if op == "<":
        return prob < bound
    raise ValueError(f"unknown comparison {op!r}")


def safety_monitor(evaluations: Iterable[PathEvaluation],
                   epsilon: float = DEFAULT_SAFETY_EPSILON) -> list[SafetyIncident]:
    """Keep the evaluations whose probability lies within ``epsilon`` of the bound.

    Such verdicts may flip under an arbitrarily small perturbation of the
    model, so the mean-field answer need not carry over to finite N.
    """
    out = []
    for ev in evaluations:
        gap = abs(ev.probability - ev.formula.bound)
        if gap <= epsilon:
            out.append(SafetyIncident(ev.state, ev.formula, ev.probability, ev.formula.bound, gap))
    return out


class Checker:
    """Bounded-PCTL checker bound to one model.

    The memo table lives as long as the checker, so repeated queries (e.g.
    a sweep over step bounds) share work.
    """

    def __init__(self, model: ModelInterface, safety_epsilon: float = DEFAULT_SAFETY_EPSILON,
                 memoize: bool = True):
        self.model = model
        self.safety_epsilon = safety_epsilon
        self.memoize = memoize
        self._ids: dict[Any, int] = {}
        self._nodes: list[Any] = []
        self._memo: dict[tuple, Any] = {}
        self._succ: dict[Hashable, list] = {}
        self._stats = Stats()
        self._seen: dict[tuple, PathEvaluation] = {}

    # -- public API ------------------------------------------------------
    def check(self, state, phi) -> CheckResult:
        """Decide ``state |= phi`` and report path probabilities near their bounds."""
        t0 = time.perf_counter()
        self._begin()
        fid = self._intern(phi)
        if isinstance(phi, Prob):
            prob = self._solve(state, ("P", fid))
            value, top = compare(prob, phi.op, phi.bound), prob
        else:
            value, top = self._solve(state, ("F", fid)), None
        return self._finish(CheckResult(bool(value), top), t0)

    def check_path(self, state, path) -> float:
        """Probability that a path from ``state`` satisfies ``path``."""
        self._begin()
        return self._solve(state, self._path_request(path))

    def path_probability(self, state, path) -> CheckResult:
        """Like :meth:`check_path` but with statistics and safety incidents."""
        t0 = time.perf_counter()
        self._begin()
        prob = self._solve(state, self._path_request(path))
        return self._finish(CheckResult(True, prob), t0)

    # -- bookkeeping -----------------------------------------------------
    def _begin(self):
        self._stats = Stats()
        self._seen = {}

    def _finish(self, res: CheckResult, t0: float) -> CheckResult:
        res.safety = safety_monitor(self._seen.values(), self.safety_epsilon)
        self._stats.wall_time = time.perf_counter() - t0
        res.stats = self._stats
        return res

    def _intern(self, f) -> int:
        fid = self._ids.get(f)
        if fid is not None:
            return fid
        if isinstance(f, (Not,)):
            self._intern(f.arg)
        elif isinstance(f, Or):
            self._intern(f.left)
            self._intern(f.right)
        elif isinstance(f, Prob):
            self._path_request(f.path)
        elif not isinstance(f, Atom):
            raise TypeError(f"not a state formula: {f!r}")
        fid = len(self._nodes)
        self._nodes.append(f)
        self._ids[f] = fid
        return fid

    def _path_request(self, path) -> tuple:
        if isinstance(path, Next):
            return ("X", self._intern(path.arg))
        if isinstance(path, Until):
            if path.k < 0:
                raise ValueError("negative step bound")
            return ("U", self._intern(path.left), self._intern(path.right), path.k)
        raise TypeError(f"not a path formula: {path!r}")

    def _successors(self, s):
        key = self.model.memo_key(s)
        if self.memoize:
            succ = self._succ.get(key)
            if succ is not None:
                return succ
        succ = self.model.next(s)
        self._stats.expanded += 1
        total = math.fsum(p for _, p in succ)
        if abs(total - 1.0) > _SUM_TOL or any(not 0.0 < p <= 1.0 for _, p in succ):
            raise ModelError(f"next() of {key!r} is not a probability distribution (mass {total!r})")
        if self.memoize:
            self._succ[key] = succ
        return succ

    # -- evaluation ------------------------------------------------------
    def _solve(self, state, request):
        # Each memo entry stores its value together with the near-bound
        # path evaluations found underneath it, so a cache hit reports the
        # same safety incidents as a fresh computation would.
        memo = self._memo if self.memoize else None
        key = (self.model.memo_key(state), request)
        if memo is not None and key in memo:
            self._stats.cache_hits += 1
            value, notes = memo[key]
            self._seen.update(notes)
            return value
        root: dict = {}
        stack = [(key, self._frame(state, request), root)]
        value = None
        while stack:
            key, frame, notes = stack[-1]
            try:
                sub_state, sub_req = frame.send(value)
            except StopIteration as stop:
                stack.pop()
                value = stop.value
                self._note(key, value, notes)
                if memo is not None:
                    memo[key] = (value, notes or _NO_NOTES)
                parent = stack[-1][2] if stack else root
                if parent is not notes:
                    parent.update(notes)
                continue
            sub_key = (self.model.memo_key(sub_state), sub_req)
            if memo is not None and sub_key in memo:
                self._stats.cache_hits += 1
                value, sub_notes = memo[sub_key]
                notes.update(sub_notes)
            else:
                stack.append((sub_key, self._frame(sub_state, sub_req), {}))
                value = None
        self._seen.update(root)
        return value

    def _note(self, key, value, notes):
        req = key[1]
        if req[0] == "P":
            f = self._nodes[req[1]]
            if abs(value - f.bound) <= self.safety_epsilon:
                notes[key] = PathEvaluation(key[0], f, value)

    def _frame(self, s, req):
        kind = req[0]
        if kind == "F":
            return self._state_frame(s, self._nodes[req[1]])
        if kind == "P":
            return self._prob_frame(s, self._nodes[req[1]])
        if kind == "X":
            return self._next_frame(s, req[1])
        return self._until_frame(s, *req[1:])

    def _state_frame(self, s, f):
        if isinstance(f, Atom):
            return bool(self.model.lab_eval(s, f.name))
        if isinstance(f, Not):
            return not (yield s, ("F", self._ids[f.arg]))
        if isinstance(f, Or):
            if (yield s, ("F", self._ids[f.left])):
                return True
            return bool((yield s, ("F", self._ids[f.right])))
        prob = yield s, ("P", self._ids[f])
        return compare(prob, f.op, f.bound)

    def _prob_frame(self, s, f):
        return (yield s, self._path_request(f.path))

    def _next_frame(self, s, arg):
        terms = []
        for s2, p in self._successors(s):
            if (yield s2, ("F", arg)):
                terms.append(p)
        return math.fsum(terms)

    def _until_frame(self, s, left, right, k):
        if (yield s, ("F", right)):
            return 1.0
        if not (yield s, ("F", left)):
            return 0.0
        if k <= 0:
            return 0.0
        terms = []
        for s2, p in self._successors(s):
            terms.append(p * (yield s2, ("U", left, right, k - 1)))
        return math.fsum(terms)


def check(state, phi, model: ModelInterface, **kwargs) -> CheckResult:
    """One-shot :meth:`Checker.check` with a fresh memo table."""
    return Checker(model, **kwargs).check(state, phi)


def check_path(state, path, model: ModelInterface, **kwargs) -> float:
    return Checker(model, **kwargs).check_path(state, path)
