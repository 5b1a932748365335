"""The lumped chain projects the full S^N chain exactly."""

import itertools

import pytest
from hypothesis import given, settings

from bruteforce import FullChain
from flyfast import next_exact
from flyfast.exact import initial_state
from flyfast.lang import parse_system_spec
from specgen import spec_texts


def lumped_forward(spec, counts, T):
    dist = {initial_state(spec, counts): 1.0}
    for _ in range(T):
        new = {}
        for g, q in dist.items():
            for h, p in next_exact(spec, g):
                new[h] = new.get(h, 0.0) + q * p
        dist = new
    return {(g.first, g.rest): p for g, p in dist.items()}


def start_tuple(spec, counts):
    g = initial_state(spec, counts)
    others = list(itertools.chain.from_iterable([i] * n for i, n in enumerate(g.rest)))
    return (g.first, *others)


def assert_same(a, b, tol=1e-9):
    for key in set(a) | set(b):
        assert abs(a.get(key, 0.0) - b.get(key, 0.0)) <= tol, key


def check_spec(spec, counts, T_max=4):
    chain = FullChain(spec, sum(counts))
    C0 = start_tuple(spec, counts)
    for T in range(T_max + 1):
        assert_same(lumped_forward(spec, counts, T), chain.forward(C0, T))


@pytest.mark.parametrize("counts", [(1, 0, 0, 0), (2, 0, 0, 0), (3, 0, 0, 0), (1, 1, 0, 1), (0, 1, 2, 0)])
def test_epidemic_lumping(epidemic, counts):
    check_spec(epidemic.with_counts(counts), counts)


@pytest.mark.parametrize("counts", [(2, 1, 0), (1, 1, 1), (0, 0, 2)])
def test_gossip_lumping(gossip, counts):
    spec = gossip.with_counts(counts)
    check_spec(spec, spec.counts)


@settings(max_examples=25, deadline=None)
@given(spec_texts(max_states=3, max_pop=3))
def test_random_spec_lumping(text):
    spec = parse_system_spec(text)
    if spec.population > 3:
        spec = spec.with_counts(tuple(min(c, 1) for c in spec.counts))
    check_spec(spec, spec.counts, T_max=3)
