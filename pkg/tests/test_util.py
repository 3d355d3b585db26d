import numpy as np
import pytest
from hypothesis import given, strategies as st

from percut._util import (
    UniformBuffer,
    checked_solve,
    derive_seed,
    fmt12,
    trial_generator,
    wilson_interval,
)
from percut.errors import NumericalError


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**20))
def test_derive_seed_is_64_bit(seed, index):
    out = derive_seed(seed, index)
    assert 0 <= out < 2**64


def test_derive_seed_distinct_across_indices():
    seen = {derive_seed(12345, i) for i in range(10_000)}
    assert len(seen) == 10_000


def test_derive_seed_distinct_across_seeds():
    assert derive_seed(1, 0) != derive_seed(2, 0)


def test_trial_generator_reproducible():
    a = trial_generator(7, 3).random(5)
    b = trial_generator(7, 3).random(5)
    assert np.array_equal(a, b)


def test_uniform_buffer_matches_generator_stream():
    buf = UniformBuffer(trial_generator(1, 1), block=8)
    raw = trial_generator(1, 1).random(24)
    drawn = [buf.uniform() for _ in range(24)]
    assert np.allclose(drawn, raw)


def test_uniform_buffer_index_range():
    buf = UniformBuffer(trial_generator(2, 2))
    for _ in range(1000):
        assert 0 <= buf.index(7) < 7


def test_wilson_zero_trials():
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_wilson_endpoints_exact():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi < 0.1
    lo, hi = wilson_interval(100, 100)
    assert hi == 1.0 and lo > 0.9


@given(st.integers(1, 10_000), st.data())
def test_wilson_contains_point_estimate(trials, data):
    successes = data.draw(st.integers(0, trials))
    lo, hi = wilson_interval(successes, trials)
    assert 0.0 <= lo <= successes / trials <= hi <= 1.0


def test_checked_solve_accepts_well_conditioned():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    x = checked_solve(a, np.array([1.0, 2.0]))
    assert np.allclose(a @ x, [1.0, 2.0])


def test_checked_solve_refuses_singular():
    with pytest.raises(NumericalError):
        checked_solve(np.zeros((2, 2)), np.ones(2))


def test_fmt12():
    assert fmt12(0.4375) == "0.4375"
    assert fmt12(1 / 3) == "0.333333333333"
