"""Mean-field limit semantics: the deterministic occupancy trajectory and
the tagged-object chain over pairs (local state, field).

Nothing here depends on the population size. The initial field is the
spec's initial occupancy unless one is supplied explicitly.
"""

from __future__ import annotations

import threading
from typing import NamedTuple, Sequence

import numpy as np

from .exact import SIMPLEX_TOL, Population, population
from .lang.ast import SystemSpec
from .lang.errors import ModelError


class HState(NamedTuple):
    c: int
    t: int
    m: tuple[float, ...]


def _check_simplex(m: np.ndarray) -> None:
    if m.ndim != 1 or np.any(m < -SIMPLEX_TOL) or abs(m.sum() - 1.0) > SIMPLEX_TOL:
        raise ModelError(f"occupancy measure {tuple(m)} is not on the unit simplex")


def _step(pop: Population, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    K = pop.matrix(m)
    nxt = m @ K
    total = nxt.sum()
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise ModelError(f"mean-field step drifted off the simplex (mass {total!r})")
    return nxt / total, K


def mf_step(spec: SystemSpec, m: Sequence[float]) -> np.ndarray:
    """One step of mu(t+1) = mu(t) . K(mu(t))."""
    m = np.asarray(m, dtype=float)
    _check_simplex(m)
    return _step(population(spec), m)[0]


def mf_trajectory(spec: SystemSpec, mu0: Sequence[float] | None, T: int) -> list[np.ndarray]:
    """mu(0..T) starting from ``mu0`` (the spec's initial occupancy when None)."""
    if T < 0:
        raise ValueError("horizon must be >= 0")
    traj = Trajectory(spec, mu0)
    traj.extend_to(T)
    return [traj.mu(t) for t in range(T + 1)]


class Trajectory:
    """Append-only cache of mu(t) and K(mu(t)), extended on demand.

    Safe to share between threads: extension happens under a lock and
    published entries are never modified.
    """

    def __init__(self, spec: SystemSpec, mu0: Sequence[float] | None = None):
        self.pop = population(spec)
        m0 = np.asarray(spec.initial_occupancy if mu0 is None else mu0, dtype=float)
        if m0.shape != (self.pop.S,):
            raise ValueError(f"initial measure has {m0.size} entries, expected {self.pop.S}")
        _check_simplex(m0)
        self._mu: list[np.ndarray] = [m0]
        self._K: list[np.ndarray] = []
        self._lock = threading.Lock()

    def extend_to(self, t: int) -> None:
        if t < len(self._mu):
            return
        with self._lock:
            while len(self._mu) <= t:
                nxt, K = _step(self.pop, self._mu[-1])
                self._K.append(K)
                self._mu.append(nxt)

    def mu(self, t: int) -> np.ndarray:
        self.extend_to(t)
        return self._mu[t]

    def K(self, t: int) -> np.ndarray:
        self.extend_to(t + 1)
        return self._K[t]

    def __len__(self):
        return len(self._mu)


def next_hd(spec: SystemSpec, s: HState) -> list[tuple[HState, float]]:
    """Successors of ``s``: row c of K(m), all sharing the field m . K(m)."""
    m = np.asarray(s.m, dtype=float)
    nxt, K = _step(population(spec), m)
    return _successors(s, K, tuple(float(x) for x in nxt))


def _successors(s: HState, K: np.ndarray, m_next: tuple[float, ...]):
    row = K[s.c]
    return [(HState(j, s.t + 1, m_next), float(p)) for j, p in enumerate(row) if p > 0]


def lab_eval_hd(spec: SystemSpec, s: HState, atom: str) -> bool:
    return population(spec).holds(atom, s.c, s.m)


class MeanFieldModel:
    """Model interface over the limit chain; memo key is (local state, time)."""

    def __init__(self, spec: SystemSpec, mu0: Sequence[float] | None = None):
        self.spec = spec
        self.pop = population(spec)
        self.trajectory = Trajectory(spec, mu0)

    def initial_state(self, t0: int = 0, c: int | str | None = None) -> HState:
        if t0 < 0:
            raise ValueError("t0 must be >= 0")
        if c is None:
            c = self.spec.first_state
        elif isinstance(c, str):
            c = self.pop.index[c]
        return HState(c, t0, self._field(t0))

    def _field(self, t: int) -> tuple[float, ...]:
        return tuple(float(x) for x in self.trajectory.mu(t))

    def next(self, s: HState):
        return _successors(s, self.trajectory.K(s.t), self._field(s.t + 1))

    def lab_eval(self, s: HState, atom: str) -> bool:
        return self.pop.holds(atom, s.c, s.m)

    def memo_key(self, s: HState):
        return (s.c, s.t)

    def describe_key(self, key) -> str:
        c, t = key
        return f"<{self.pop.states[c]}, t={t}>"
