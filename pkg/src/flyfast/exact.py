"""Finite-population semantics.

A global state of N objects is stored lumped: the tagged (first) object's
local state plus the counts of the other N-1 objects per local state. The
one-step distribution over lumped states is the image of the product
transition matrix under that projection, so checking on the lumped chain
gives the same probabilities as checking on the full S^N chain.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .lang.ast import (
    TRUE_ATOM, Arg, Atom, BExp, BinOp, Const, Expr, Frc, Neg, Next, Not, Or, Prob,
    SystemSpec, has_prob,
)
from .lang.errors import ModelError, UnknownAtomError

SIMPLEX_TOL = 1e-9
# Slack allowed when checking that an action probability lies in [0, 1].
RANGE_TOL = 1e-12
DROP_BELOW = 1e-15


def eval_expr(e: Expr, m, index: dict[str, int], args=None):
    """Interpret an arithmetic expression at occupancy measure ``m``.

    ``m`` may be a single vector or an array of vectors (last axis = states);
    in the latter case the result is an array. ``args`` supplies the values
    of :class:`Arg` placeholders inside global-label functions.
    """
    m = np.asarray(m, dtype=float)
    return _eval(e, m, index, args)


def _eval(e, m, index, args):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Frc):
        return m[..., index[e.state]]
    if isinstance(e, Arg):
        return args[e.index]
    if isinstance(e, Neg):
        return -_eval(e.arg, m, index, args)
    if isinstance(e, BinOp):
        a = _eval(e.left, m, index, args)
        b = _eval(e.right, m, index, args)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if np.any(np.asarray(b) == 0):
                raise ModelError(f"division by zero at m={_fmt(m)}")
            return a / b
        if op == "min":
            return np.minimum(a, b)
        if op == "max":
            return np.maximum(a, b)
    raise TypeError(f"not an expression: {e!r}")


def eval_bexp(b: BExp, m, index: dict[str, int]):
    m = np.asarray(m, dtype=float)
    values = [m[..., index[s]] for s in b.args]
    v = _eval(b.func, m, index, values)
    return v < b.threshold if b.relation == "<" else v > b.threshold


def _fmt(m) -> str:
    m = np.asarray(m)
    if m.ndim == 1:
        return "(" + ", ".join(f"{x:.6g}" for x in m) + ")"
    return f"<batch of {m.shape[0]}>"


class Population:
    """Compiled, read-only view of a validated :class:`SystemSpec`.

    Holds the state order, the action table and the label tables in the
    shapes the semantic functions need. Cheap to share between threads.
    """

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.states = spec.state_names
        self.S = len(self.states)
        self.index = spec.index
        self.actions = spec.actions
        probs = spec.prob_map
        self.exprs = [probs[a] for a in self.actions]
        aidx = {a: i for i, a in enumerate(self.actions)}
        # moves[c]: (action index, target) pairs with target != c, i.e. I(c).
        # loops[c]: self-loop actions, which only count towards I*(c).
        self.moves: list[list[tuple[int, int]]] = []
        self.loops: list[list[int]] = []
        for d in spec.states:
            c = self.index[d.state]
            mv, lp = [], []
            for b in d.branches:
                t = self.index[b.target]
                (lp.append(aidx[b.action]) if t == c else mv.append((aidx[b.action], t)))
            self.moves.append(mv)
            self.loops.append(lp)
        self.local = spec.local_atoms
        self.globals = spec.global_atoms

    # -- probabilities ---------------------------------------------------
    def action_probs(self, m) -> np.ndarray:
        """pi(m, a) for every action, in :attr:`actions` order (last axis)."""
        m = np.asarray(m, dtype=float)
        out = np.empty(m.shape[:-1] + (len(self.actions),))
        for j, e in enumerate(self.exprs):
            v = np.asarray(_eval(e, m, self.index, None), dtype=float)
            bad = (v < -RANGE_TOL) | (v > 1 + RANGE_TOL) | np.isnan(v)
            if np.any(bad):
                raise ModelError(f"action probability out of range at m={_fmt(m)}: "
                                 f"pi({self.actions[j]}) = {float(np.ravel(v)[np.argmax(np.ravel(bad))]):.6g}")
            out[..., j] = v
        return out

    def matrix(self, m) -> np.ndarray:
        """Object transition matrix K(m); batched over leading axes of ``m``."""
        m = np.asarray(m, dtype=float)
        pi = self.action_probs(m)
        K = np.zeros(m.shape[:-1] + (self.S, self.S))
        for c in range(self.S):
            out_total = np.zeros(m.shape[:-1])
            for a, t in self.moves[c]:
                K[..., c, t] += pi[..., a]
                out_total = out_total + pi[..., a]
            total = out_total
            for a in self.loops[c]:
                total = total + pi[..., a]
            bad = (total < -RANGE_TOL) | (total > 1 + RANGE_TOL)
            if np.any(bad):
                raise ModelError(f"state {self.states[c]} is not probabilistic at m={_fmt(m)} "
                                 f"(outgoing probability {float(np.ravel(total)[np.argmax(np.ravel(bad))]):.6g})")
            K[..., c, c] = 1.0 - out_total
        return K

    # -- labels ----------------------------------------------------------
    def holds(self, atom: str, c: int, m) -> bool:
        if atom == TRUE_ATOM:
            return True
        if atom in self.local:
            return c in self.local[atom]
        if atom in self.globals:
            return bool(eval_bexp(self.globals[atom], m, self.index))
        raise UnknownAtomError(f"unknown atom {atom}")

    def satisfies(self, phi, c: int, m) -> bool:
        """Evaluate a probability-free state formula at local state ``c`` and field ``m``."""
        if isinstance(phi, Atom):
            return self.holds(phi.name, c, m)
        if isinstance(phi, Not):
            return not self.satisfies(phi.arg, c, m)
        if isinstance(phi, Or):
            return self.satisfies(phi.left, c, m) or self.satisfies(phi.right, c, m)
        if isinstance(phi, Prob):
            raise NotImplementedError("nested probability operators need a model checker")
        raise TypeError(f"not a state formula: {phi!r}")


@lru_cache(maxsize=64)
def population(spec: SystemSpec) -> Population:
    return Population(spec)


# -- public functional API ---------------------------------------------------

def action_prob(spec: SystemSpec, m, action: str) -> float:
    pop = population(spec)
    if action not in pop.actions:
        raise KeyError(f"no probability definition for action {action}")
    return float(pop.action_probs(m)[pop.actions.index(action)])


def object_matrix(spec: SystemSpec, m) -> np.ndarray:
    return population(spec).matrix(m)


class LumpedGlobalState(NamedTuple):
    """Tagged object's state index and counts of the remaining N-1 objects."""

    first: int
    rest: tuple[int, ...]

    @property
    def size(self) -> int:
        return 1 + sum(self.rest)


def occupancy_measure(g: LumpedGlobalState, N: int | None = None) -> tuple[float, ...]:
    N = g.size if N is None else N
    if N != g.size:
        raise ValueError(f"state holds {g.size} objects, not {N}")
    return tuple((n + (i == g.first)) / N for i, n in enumerate(g.rest))


def initial_state(spec: SystemSpec, counts: Sequence[int] | None = None) -> LumpedGlobalState:
    """Lumped initial state; the tagged object starts in the first populated ``init`` state."""
    counts = list(spec.counts if counts is None else counts)
    if sum(counts) < 1:
        raise ModelError("population must be >= 1")
    first = spec.first_state
    if counts[first] < 1:
        first = next(i for i, n in enumerate(counts) if n > 0)
    counts[first] -= 1
    return LumpedGlobalState(first, tuple(counts))


@lru_cache(maxsize=4096)
def _compositions(n: int, parts: int) -> tuple[tuple[int, ...], ...]:
    """All ways to write n as an ordered sum of ``parts`` non-negative ints, lexicographic."""
    if parts == 1:
        return ((n,),)
    out = []
    for k in range(n + 1):
        for tail in _compositions(n - k, parts - 1):
            out.append((k,) + tail)
    return tuple(out)


def _multinomial(n: int, ks: tuple[int, ...], ps) -> float:
    coef = math.factorial(n)
    for k in ks:
        coef //= math.factorial(k)
    prob = float(coef)
    for k, p in zip(ks, ps):
        if k:
            prob *= p ** k
    return prob


def next_exact_with(pop: Population, g: LumpedGlobalState) -> list[tuple[LumpedGlobalState, float]]:
    S = pop.S
    K = pop.matrix(occupancy_measure(g))
    # Distribution of the untagged counts: per-class multinomials, convolved.
    dist: dict[tuple[int, ...], float] = {(0,) * S: 1.0}
    for c, n in enumerate(g.rest):
        if n == 0:
            continue
        targets = [j for j in range(S) if K[c, j] > 0]
        ps = [float(K[c, j]) for j in targets]
        spread = []
        for ks in _compositions(n, len(targets)):
            vec = [0] * S
            for j, k in zip(targets, ks):
                vec[j] = k
            spread.append((vec, _multinomial(n, ks, ps)))
        new: dict[tuple[int, ...], float] = {}
        for base, q in dist.items():
            for vec, p in spread:
                key = tuple(a + b for a, b in zip(base, vec))
                new[key] = new.get(key, 0.0) + q * p
        dist = new
    out: dict[LumpedGlobalState, float] = {}
    for j in range(S):
        pj = float(K[g.first, j])
        if pj <= 0:
            continue
        for rest, q in dist.items():
            s = LumpedGlobalState(j, rest)
            out[s] = out.get(s, 0.0) + pj * q
    return sorted(((s, p) for s, p in out.items() if p >= DROP_BELOW), key=lambda sp: sp[0])


def next_exact(spec: SystemSpec, g: LumpedGlobalState) -> list[tuple[LumpedGlobalState, float]]:
    """Successor distribution of a lumped global state, sorted by (first, rest)."""
    return next_exact_with(population(spec), g)


def lab_eval_exact(spec: SystemSpec, g: LumpedGlobalState, atom: str) -> bool:
    return population(spec).holds(atom, g.first, occupancy_measure(g))


class ExactModel:
    """Model interface over the lumped finite-N chain.

    ``counts`` overrides the spec's initial population (same state order).
    """

    def __init__(self, spec: SystemSpec, counts: Sequence[int] | None = None):
        self.spec = spec
        self.pop = population(spec)
        self.counts = tuple(spec.counts if counts is None else counts)
        self.N = sum(self.counts)

    def initial_state(self) -> LumpedGlobalState:
        return initial_state(self.spec, self.counts)

    def next(self, g: LumpedGlobalState):
        return next_exact_with(self.pop, g)

    def lab_eval(self, g: LumpedGlobalState, atom: str) -> bool:
        return self.pop.holds(atom, g.first, occupancy_measure(g))

    def memo_key(self, g: LumpedGlobalState):
        return g

    def describe_key(self, g: LumpedGlobalState) -> str:
        names = self.pop.states
        rest = ",".join(f"{names[i]}:{n}" for i, n in enumerate(g.rest) if n)
        return f"<{names[g.first]} | {rest}>"


def scale_counts(counts: Sequence[int], N: int, keep: int | None = None) -> tuple[int, ...]:
    """Rescale a population to size ``N`` preserving proportions (largest remainder).

    ``keep`` names a state whose count must stay positive (the tagged object's).
    """
    if N < 1:
        raise ModelError("population must be >= 1")
    total = sum(counts)
    shares = [c * N / total for c in counts]
    out = [int(math.floor(s)) for s in shares]
    order = sorted(range(len(counts)), key=lambda i: (-(shares[i] - out[i]), i))
    for i in order[: N - sum(out)]:
        out[i] += 1
    if keep is not None and out[keep] == 0:
        donor = max(range(len(out)), key=lambda i: out[i])
        out[donor] -= 1
        out[keep] += 1
    return tuple(out)


# -- simulation ---------------------------------------------------------------

def simulate_runs(spec: SystemSpec, T: int, R: int, seed: int | None = 0,
                  counts: Sequence[int] | None = None, retag_at: int | None = None):
    """Sample R independent trajectories of the N-object chain for T steps.

    Each object moves independently according to its row of K(m) at the
    current occupancy ``m``; the untagged objects are advanced per class
    with one multinomial draw, which has the same law as moving them one by
    one. Returns ``(tagged, occupancy)`` with shapes (R, T+1) and (R, T+1, S).

    With ``retag_at=t`` the tag is moved at time t to an object in the
    initial tagged state (when one exists), so the tagged object starts
    there at t while the population keeps its law.
    """
    if T < 0 or R < 1:
        raise ValueError("need T >= 0 and R >= 1")
    pop = population(spec)
    g0 = initial_state(spec, counts)
    N, S = g0.size, pop.S
    rng = np.random.default_rng(seed)
    tagged = np.full(R, g0.first, dtype=np.int64)
    rest = np.tile(np.array(g0.rest, dtype=np.int64), (R, 1))
    eye = np.eye(S, dtype=np.int64)
    tag_path = np.empty((R, T + 1), dtype=np.int64)
    occ = np.empty((R, T + 1, S))
    for t in range(T + 1):
        if t == retag_at and t > 0:
            swap = (tagged != g0.first) & (rest[:, g0.first] > 0)
            rest[swap, g0.first] -= 1
            rest[swap, tagged[swap]] += 1
            tagged[swap] = g0.first
        m = (rest + eye[tagged]) / N
        tag_path[:, t] = tagged
        occ[:, t] = m
        if t == T:
            break
        K = np.clip(pop.matrix(m), 0.0, 1.0)
        K /= K.sum(axis=-1, keepdims=True)
        row = K[np.arange(R), tagged]
        u = rng.random(R)
        tagged = np.minimum((np.cumsum(row, axis=1) < u[:, None]).sum(axis=1), S - 1)
        new_rest = np.zeros_like(rest)
        for c in range(S):
            if rest[:, c].any():
                new_rest += rng.multinomial(rest[:, c], K[:, c, :])
        rest = new_rest
    return tag_path, occ


def simulate(spec: SystemSpec, T: int, R: int, seed: int | None = 0,
             counts: Sequence[int] | None = None) -> np.ndarray:
    """Mean occupancy over R runs at t = 0..T, shape (T+1, S)."""
    _, occ = simulate_runs(spec, T, R, seed, counts)
    return occ.mean(axis=0)


def estimate_path_probability(spec: SystemSpec, path, R: int, seed: int | None = 0,
                              counts: Sequence[int] | None = None, t0: int = 0) -> float:
    """Monte Carlo estimate of the tagged object's path probability.

    Only path formulas whose operands are probability-free are supported.
    With ``t0 > 0`` the population first evolves for t0 steps and the
    tagged object is then taken to be one in the initial tagged state.
    """
    if has_prob(path):
        raise NotImplementedError("statistical estimation of nested probability operators")
    horizon = 1 if isinstance(path, Next) else path.k
    tag, occ = simulate_runs(spec, t0 + horizon, R, seed, counts, retag_at=t0)
    pop = population(spec)
    hits = 0
    for r in range(R):
        if isinstance(path, Next):
            hits += pop.satisfies(path.arg, tag[r, t0 + 1], occ[r, t0 + 1])
            continue
        for h in range(path.k + 1):
            c, m = tag[r, t0 + h], occ[r, t0 + h]
            if pop.satisfies(path.right, c, m):
                hits += 1
                break
            if not pop.satisfies(path.left, c, m):
                break
    return hits / R
