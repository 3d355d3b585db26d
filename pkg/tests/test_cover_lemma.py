import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from percut.cover_lemma import (
    SubStochasticMatrix,
    bruteforce_tail_bound,
    covering_sum_bruteforce,
    covering_sum_exact,
    covering_sum_mc,
    delta_bound,
    gamma_sequences,
    is_gamma_sequence,
    load_matrix_file,
    min_cut,
    sample_h_graphs,
)
from percut.errors import CapExceededError, PreconditionError


def uniform_matrix(n: int, value: float) -> SubStochasticMatrix:
    return SubStochasticMatrix(np.full((n, n), value))


THREE = SubStochasticMatrix(
    [[0.0, 1 / 3, 1 / 6], [1 / 3, 0.0, 1 / 3], [1 / 6, 1 / 3, 0.0]]
)


# ---- matrix wrapper ----


def test_matrix_basics():
    m = uniform_matrix(2, 0.25)
    assert m.n == 2
    assert m.kill_probability(0) == pytest.approx(0.5)
    assert m.kill_probability(1) == pytest.approx(0.5)


def test_matrix_averages_tiny_asymmetry():
    m = SubStochasticMatrix([[0.0, 0.25 + 4e-10], [0.25 - 4e-10, 0.0]])
    assert m.p[0, 1] == pytest.approx(0.25, abs=1e-10)
    assert m.p[0, 1] == m.p[1, 0]


def test_matrix_rejects():
    with pytest.raises(PreconditionError):
        SubStochasticMatrix([[0.0, 0.3], [0.1, 0.0]])
    with pytest.raises(PreconditionError):
        SubStochasticMatrix([[0.6, 0.6], [0.6, 0.6]])
    with pytest.raises(PreconditionError):
        SubStochasticMatrix([[-0.2]])
    with pytest.raises(PreconditionError):
        SubStochasticMatrix([[0.1, 0.2]])


# ---- matrix files ----


def test_load_matrix_file():
    m = load_matrix_file("# demo\n2\n0 0.25\n0.25 0  # trailing\n")
    assert m.n == 2
    assert m.p[0, 1] == 0.25


def test_load_matrix_file_rejects():
    for text in ("", "x\n1 2", "2\n0 0.25", "1\n0.1 0.2", "1\nfoo"):
        with pytest.raises(PreconditionError):
            load_matrix_file(text)


# ---- cuts and the guaranteed floor ----


def test_min_cut_values():
    assert min_cut(uniform_matrix(2, 0.25)) == pytest.approx(0.25, abs=1e-15)
    assert min_cut(uniform_matrix(3, 1 / 6)) == pytest.approx(1 / 3, abs=1e-15)
    assert min_cut(uniform_matrix(1, 0.5)) == float("inf")


def test_min_cut_cap():
    with pytest.raises(CapExceededError):
        min_cut(uniform_matrix(2, 0.25), max_n=1)


def test_delta_bound_value():
    want = (0.25 / (16 * math.e**2)) ** 2
    assert delta_bound(0.5, 2) == pytest.approx(want, rel=1e-12)
    assert delta_bound(0.5, 2) == pytest.approx(4.4716e-6, rel=1e-4)


def test_delta_bound_rejects():
    with pytest.raises(PreconditionError):
        delta_bound(0.0, 1)
    with pytest.raises(PreconditionError):
        delta_bound(1.5, 1)
    with pytest.raises(PreconditionError):
        delta_bound(0.5, 0)


# ---- exact covering sum ----


def test_covering_sum_single_state():
    assert covering_sum_exact(uniform_matrix(1, 0.5)) == pytest.approx(0.5, abs=1e-12)


def test_covering_sum_two_state_quarter():
    assert covering_sum_exact(uniform_matrix(2, 0.25)) == pytest.approx(1 / 9, abs=1e-12)


def test_covering_sum_no_kill_is_one():
    assert covering_sum_exact(uniform_matrix(2, 0.5)) == pytest.approx(1.0, abs=1e-12)
    swap = SubStochasticMatrix([[0.0, 1.0], [1.0, 0.0]])
    assert covering_sum_exact(swap) == pytest.approx(1.0, abs=1e-12)


def test_covering_sum_cap():
    with pytest.raises(CapExceededError):
        covering_sum_exact(uniform_matrix(3, 0.1), max_n=2)


def test_covering_sum_beats_delta_floor():
    for m in (uniform_matrix(2, 0.25), uniform_matrix(3, 1 / 6), THREE):
        eps = min(min_cut(m), 1.0)
        assert covering_sum_exact(m) >= delta_bound(eps, m.n) - 1e-15


def test_covering_sum_matches_bruteforce_tail():
    for m, k in ((uniform_matrix(2, 0.25), 14), (THREE, 14)):
        exact = covering_sum_exact(m)
        brute = covering_sum_bruteforce(m, k)
        assert brute <= exact + 1e-12
        assert exact - brute <= bruteforce_tail_bound(m, k) + 1e-12


def test_bruteforce_partial_value():
    # Length-three paths only: 0-1-0 plus the two one-lazy variants.
    assert covering_sum_bruteforce(uniform_matrix(2, 0.25), 3) == pytest.approx(
        1 / 16 + 2 / 64, abs=1e-15
    )


# ---- sampled covering sum ----


def test_covering_sum_mc_two_state():
    m = uniform_matrix(2, 0.25)
    est = covering_sum_mc(m, 40_000, seed=17)
    assert est.trials == 40_000
    assert est.aborted == 0
    assert est.ci_low <= 1 / 9 <= est.ci_high
    assert est == covering_sum_mc(m, 40_000, seed=17)


def test_covering_sum_mc_certain_cover():
    swap = SubStochasticMatrix([[0.0, 1.0], [1.0, 0.0]])
    est = covering_sum_mc(swap, 500, seed=3)
    assert est.value == 1.0


def test_covering_sum_mc_three_state():
    est = covering_sum_mc(THREE, 60_000, seed=23)
    exact = covering_sum_exact(THREE)
    assert est.ci_low <= exact <= est.ci_high


def test_covering_sum_mc_rejects():
    with pytest.raises(PreconditionError):
        covering_sum_mc(uniform_matrix(2, 0.25), 0, seed=1)


# ---- explicit sequences ----


def test_is_gamma_sequence_cases():
    assert is_gamma_sequence(2, (0, 1, 0))
    assert is_gamma_sequence(2, (0, 0, 1, 0))
    assert is_gamma_sequence(2, (0, 1, 1, 0))
    assert is_gamma_sequence(1, (0, 0))
    assert not is_gamma_sequence(2, (0, 1))
    assert not is_gamma_sequence(2, (0, 0))
    assert not is_gamma_sequence(2, (1, 0))
    assert not is_gamma_sequence(2, (0, 1, 0, 1, 0))
    assert not is_gamma_sequence(2, (0, 2, 0))


def test_gamma_sequences_structure():
    m = uniform_matrix(2, 0.25)
    paths = list(gamma_sequences(m, 6))
    assert paths
    seen = set()
    for g in paths:
        assert is_gamma_sequence(2, g.states)
        assert g.weight > 0
        assert len(g.states) <= 7
        assert g.states not in seen
        seen.add(g.states)


def test_gamma_sequences_caps():
    with pytest.raises(PreconditionError):
        list(gamma_sequences(uniform_matrix(2, 0.25), 0))
    with pytest.raises(PreconditionError):
        list(gamma_sequences(uniform_matrix(2, 0.25), 21))
    with pytest.raises(CapExceededError):
        list(gamma_sequences(uniform_matrix(5, 0.1), 4))


# ---- paired random edge multisets ----


def test_h_graph_two_state_connection_rate():
    m = uniform_matrix(2, 0.5)
    rng = np.random.default_rng(9)
    hits = sum(sample_h_graphs(m, rng).h1_connected for _ in range(2000))
    assert hits / 2000 == pytest.approx(0.5, abs=0.05)


def test_h_graph_gamma_when_both_connect():
    m = uniform_matrix(2, 0.5)
    rng = np.random.default_rng(1)
    produced = 0
    for _ in range(400):
        s = sample_h_graphs(m, rng)
        assert len(s.slots) == 2
        if s.h1_connected and s.h2_connected:
            produced += 1
            assert s.gamma is not None
            assert is_gamma_sequence(2, s.gamma.states)
            assert s.gamma.weight > 0
            assert s.gamma_slots is not None
            assert len(set(s.gamma_slots)) == len(s.gamma_slots)
            assert len(s.gamma_slots) == len(s.gamma.states) - 1
        else:
            assert s.gamma is None
    assert produced > 0


def test_h_graph_single_state():
    s = sample_h_graphs(uniform_matrix(1, 0.3), np.random.default_rng(2))
    assert s.h1_connected and s.h2_connected
    assert s.slots == ()


# ---- properties ----


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_random_matrix_exact_between_brute_and_one(seed, n):
    rng = np.random.default_rng(seed)
    raw = rng.random((n, n))
    sym = (raw + raw.T) / 2
    m = SubStochasticMatrix(sym / (sym.sum(axis=1).max() * (1.0 + rng.random())))
    exact = covering_sum_exact(m)
    assert 0.0 <= exact <= 1.0
    brute = covering_sum_bruteforce(m, 10)
    assert brute <= exact + 1e-12
    assert exact - brute <= bruteforce_tail_bound(m, 10) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_gamma_paths_weighted_consistently(seed):
    rng = np.random.default_rng(seed)
    raw = rng.random((3, 3))
    sym = (raw + raw.T) / 2
    m = SubStochasticMatrix(sym / (2.0 * sym.sum(axis=1).max()))
    for g in gamma_sequences(m, 5):
        weight = 1.0
        for a, b in zip(g.states, g.states[1:]):
            weight *= m.p[a, b]
        assert g.weight == pytest.approx(weight, rel=1e-12)
