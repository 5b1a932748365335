import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bruteforce import FullChain
from conftest import ORACLE_FORMULAS, P1, P2, P3
from flyfast import Checker, ExactModel, MeanFieldModel, check, check_path, safety_monitor
from flyfast.checker import PathEvaluation
from flyfast.exact import LumpedGlobalState
from flyfast.lang import parse_formula
from flyfast.lang.ast import TRUE, Atom, Next, Not, Or, Prob, Until
from flyfast.lang.parser import parse_spec_unchecked

FORMULAS = [parse_formula(f) for f in ORACLE_FORMULAS]


def exact(spec, n):
    return ExactModel(spec, (n,) + (0,) * (len(spec.state_names) - 1))


def lumped_states(S, N):
    """Every lumped state with N objects over S local states."""
    for first in range(S):
        for rest in itertools.product(range(N), repeat=S):
            if sum(rest) == N - 1:
                yield LumpedGlobalState(first, rest)


def representative(g):
    return (g.first, *itertools.chain.from_iterable([i] * n for i, n in enumerate(g.rest)))


# -- examples -----------------------------------------------------------------

def test_next_example(epidemic):
    model = exact(epidemic, 1)
    res = check(model.initial_state(), parse_formula("P>0.05 [ X e ]"), model)
    assert res.value and res.probability == pytest.approx(0.1, abs=1e-15)


@pytest.mark.parametrize("backend", ["exact", "meanfield"])
def test_trivially_true_next(epidemic, backend):
    model = exact(epidemic, 2) if backend == "exact" else MeanFieldModel(epidemic)
    for atom in ["s", "e", "i", "r", "LowInf"]:
        assert check(model.initial_state(), parse_formula(f"P>=0 [ X {atom} ]"), model).value


def test_until_branches(epidemic):
    model = exact(epidemic, 1)
    s = model.initial_state()
    assert check_path(s, Until(TRUE, Atom("s"), 7), model) == 1.0
    assert check_path(s, Until(Atom("e"), Atom("i"), 7), model) == 0.0
    assert check_path(s, Until(Atom("s"), Atom("e"), 0), model) == 0.0
    # k counts transitions: one step reaches E with 0.1, two steps add 0.9 * 0.1.
    assert check_path(s, Until(TRUE, Atom("e"), 1), model) == pytest.approx(0.1, abs=1e-15)
    assert check_path(s, Until(TRUE, Atom("e"), 2), model) == pytest.approx(0.19, abs=1e-15)


def test_two_step_value_on_meanfield(epidemic):
    model = MeanFieldModel(epidemic)
    assert check_path(model.initial_state(), Until(TRUE, Atom("e"), 2), model) == pytest.approx(0.19, abs=1e-15)


def test_meanfield_p1_at_k30_hand_prefix(epidemic):
    model = MeanFieldModel(epidemic)
    s = model.initial_state()
    # k <= 2 by hand: reach I needs S->E->I, so 0, 0, 0.1*0.4.
    path = P1.path
    assert [check_path(s, Until(path.left, path.right, k), model) for k in range(3)] == \
        pytest.approx([0.0, 0.0, 0.04], abs=1e-15)
    res = check(s, P1, model)
    assert res.value == (res.probability <= 0.5)
    assert res.safe


# -- oracle equivalence ---------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 3])
def test_exact_backend_matches_full_chain(epidemic, N):
    spec = epidemic.with_counts((N, 0, 0, 0))
    chain = FullChain(spec, N)
    checker = Checker(ExactModel(spec))
    for phi in FORMULAS:
        probs = chain.path_prob(phi.path)
        sats = chain.sat(phi)
        for g in lumped_states(4, N):
            i = chain.pos[representative(g)]
            assert checker.check_path(g, phi.path) == pytest.approx(probs[i], abs=1e-9)
            assert checker.check(g, phi).value == bool(sats[i])


@pytest.mark.parametrize("N", [1, 2])
def test_full_chain_matches_path_enumeration(epidemic, N):
    # Guards the oracle itself with a second, structurally different one.
    chain = FullChain(epidemic.with_counts((N, 0, 0, 0)), N)
    C0 = (0,) * N
    for phi in FORMULAS[:12]:
        assert chain.enumerate_paths(C0, phi.path) == pytest.approx(chain.path_prob(phi.path)[chain.pos[C0]], abs=1e-12)


def test_gossip_matches_full_chain(gossip):
    chain = FullChain(gossip, 3)
    checker = Checker(ExactModel(gossip))
    for text in ["P>=0.9 [ true U<=4 k ]", "P<0.5 [ u U<=4 Spread ]", "P>0.2 [ X Mixed ]",
                 "P>=0.1 [ !Spread U<=3 (k & P>0.5 [ X !u ]) ]"]:
        phi = parse_formula(text)
        probs = chain.path_prob(phi.path)
        for g in lumped_states(3, 3):
            assert checker.check_path(g, phi.path) == pytest.approx(probs[chain.pos[representative(g)]], abs=1e-9)


# -- properties -------------------------------------------------------------------

ATOMS = ["s", "e", "i", "r", "LowInf"]


def formulas(depth=2):
    base = st.one_of(st.sampled_from(ATOMS).map(Atom), st.just(TRUE))
    if depth == 0:
        return base
    sub = formulas(depth - 1)
    path = st.one_of(sub.map(Next), st.builds(Until, sub, sub, st.integers(0, 4)))
    return st.one_of(
        base,
        sub.map(Not),
        st.builds(Or, sub, sub),
        st.builds(Prob, st.sampled_from([">=", ">", "<=", "<"]), st.floats(0, 1), path),
    )


@pytest.fixture(scope="module")
def chain2(epidemic):
    return FullChain(epidemic.with_counts((2, 0, 0, 0)), 2)


@settings(max_examples=80, deadline=None)
@given(phi=formulas())
def test_random_formulas_match_oracle(epidemic, chain2, phi):
    spec = epidemic.with_counts((2, 0, 0, 0))
    checker = Checker(ExactModel(spec))
    sats = chain2.sat(phi)
    for g in lumped_states(4, 2):
        assert checker.check(g, phi).value == bool(sats[chain2.pos[representative(g)]])


@settings(max_examples=60, deadline=None)
@given(phi=formulas(), t0=st.integers(0, 10))
def test_negation_duality_and_bounds(epidemic, phi, t0):
    for model, s in [(MeanFieldModel(epidemic), None), (exact(epidemic, 2), None)]:
        s = model.initial_state(t0) if isinstance(model, MeanFieldModel) else model.initial_state()
        checker = Checker(model)
        assert checker.check(s, Not(phi)).value == (not checker.check(s, phi).value)
        if isinstance(phi, Prob):
            p = checker.check_path(s, phi.path)
            assert -1e-12 <= p <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(phi=formulas())
def test_memoization_does_not_change_results(epidemic, phi):
    for model in [MeanFieldModel(epidemic), exact(epidemic, 2)]:
        s = model.initial_state()
        on = Checker(model, memoize=True).check(s, phi)
        off = Checker(model, memoize=False).check(s, phi)
        assert (on.value, on.probability) == (off.value, off.probability)


@pytest.mark.parametrize("phi", [P1, P2, P3], ids=["P1", "P2", "P3"])
def test_monotone_in_k(epidemic, phi):
    for model in [MeanFieldModel(epidemic), exact(epidemic, 3)]:
        checker = Checker(model)
        s = model.initial_state()
        path = phi.path
        probs = [checker.check_path(s, Until(path.left, path.right, k)) for k in range(31)]
        assert all(b >= a - 1e-12 for a, b in zip(probs, probs[1:]))
        assert all(0 <= p <= 1 for p in probs)


def test_large_horizon_has_no_recursion_limit(epidemic):
    model = MeanFieldModel(epidemic)
    p = check_path(model.initial_state(), Until(TRUE, Atom("i"), 5000), model)
    assert 0.99 < p <= 1.0


def test_memo_reuse_across_sweep(epidemic):
    checker = Checker(MeanFieldModel(epidemic))
    s = checker.model.initial_state()
    checker.check(s, P1)
    again = checker.check(s, P1)
    assert again.stats.expanded == 0 and again.stats.cache_hits >= 1


def test_custom_model_interface():
    class Coin:
        def next(self, s):
            return [(s + 1, 0.5), (s, 0.5)] if s < 3 else [(s, 1.0)]

        def lab_eval(self, s, atom):
            return atom == "done" and s == 3 or atom == "true"

        def memo_key(self, s):
            return s

    # Reach 3 from 0 in <= 4 steps: 3 or 4 successes out of 4 fair flips with the cap.
    p = check_path(0, Until(TRUE, Atom("done"), 4), Coin())
    assert p == pytest.approx(5 / 16, abs=1e-15)


def test_bad_distribution_is_rejected():
    class Broken:
        def next(self, s):
            return [(s, 0.7)]

        def lab_eval(self, s, atom):
            return False

        def memo_key(self, s):
            return s

    from flyfast.lang import ModelError
    with pytest.raises(ModelError):
        check_path(0, Next(Atom("a")), Broken())


# -- safety monitor ---------------------------------------------------------------

def test_forced_equality_is_one_incident(epidemic):
    model = MeanFieldModel(epidemic)
    res = check(model.initial_state(), parse_formula("P>=1 [ true U<=5 true ]"), model)
    assert res.value and len(res.safety) == 1
    inc = res.safety[0]
    assert (inc.probability, inc.threshold, inc.gap) == (1.0, 1.0, 0.0)
    assert inc.state == (0, 0)


def test_p1_far_from_bound_is_safe(epidemic):
    model = MeanFieldModel(epidemic)
    res = check(model.initial_state(), P1, model)
    assert res.safe and abs(res.probability - 0.5) > 1e-3


def test_exact_boundary_incident(epidemic):
    model = exact(epidemic, 1)
    res = check(model.initial_state(), parse_formula("P<0.19 [ true U<=2 e ]"), model)
    assert len(res.safety) == 1
    assert res.safety[0].gap == pytest.approx(0.0, abs=1e-15)
    assert check(model.initial_state(), parse_formula("P<0.19 [ true U<=1 e ]"), model).safe


def test_nested_incidents_are_recorded_per_state(epidemic):
    model = MeanFieldModel(epidemic)
    # The inner bound is the exact value at the S-successor, so it trips there only.
    inner = check_path(model.initial_state(1), Next(Atom("e")), model)
    phi = parse_formula(f"P>=0 [ X P>={inner!r} [ X e ] ]")
    res = check(model.initial_state(), phi, model)
    assert [inc.state for inc in res.safety] == [(0, 1)]


def test_monitor_is_repeatable_with_warm_memo(epidemic):
    checker = Checker(MeanFieldModel(epidemic))
    phi = parse_formula("P>=0 [ X P>=1 [ true U<=2 true ] ]")
    s = checker.model.initial_state()
    first = checker.check(s, phi)
    second = checker.check(s, phi)
    assert len(first.safety) == len(second.safety) == 2


def test_safety_monitor_function():
    phi = parse_formula("P<0.5 [ X a ]")
    evs = [PathEvaluation("s0", phi, 0.5), PathEvaluation("s1", phi, 0.5 + 1e-7),
           PathEvaluation("s2", phi, 0.6)]
    assert [i.state for i in safety_monitor(evs)] == ["s0", "s1"]
    assert [i.state for i in safety_monitor(evs, epsilon=0.0)] == ["s0"]
    assert [i.state for i in safety_monitor(evs, epsilon=0.2)] == ["s0", "s1", "s2"]
