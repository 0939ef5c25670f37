import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsnf.mainterm import quintic_main_term, quintic_rate, quintic_resonant_sum, resonant_quintuples
from nlsnf.state import SpectralState


def test_single_mode_is_zero():
    s = SpectralState.from_modes(4, 3, {1: 0.7 - 0.2j})
    assert quintic_main_term(s, 1) == 0
    assert abs(quintic_resonant_sum(s, 1)) < 1e-15


def test_two_mode_value():
    L, a0, a1 = 3, 0.8 + 0.1j, 0.5j
    s = SpectralState.from_modes(L, 2, {0: a0, 2: a1})
    p0, p1 = abs(a0) ** 2, abs(a1) ** 2
    expected = -(p1**2 + 2 * p1 * p0) / (2 / L) ** 2 / (4 * math.pi) * a0
    assert quintic_main_term(s, 0) == pytest.approx(expected, rel=1e-13)
    assert quintic_resonant_sum(s, 0) == pytest.approx(expected, rel=1e-12)


def test_out_of_box_target():
    with pytest.raises(ValueError):
        quintic_main_term(SpectralState.zeros(1, 2), 3)


def test_resonant_quintuples_on_surface():
    for e in resonant_quintuples(3, 1):
        k1, k2, k3, k4, k5 = e
        assert k1 - k2 + k3 - k4 + k5 == 1
        assert k1 * k1 - k2 * k2 + k3 * k3 - k4 * k4 + k5 * k5 == 1


def test_rate_is_real_and_nonpositive():
    s = SpectralState.from_function(4, 5, lambda K: np.exp(-np.pi * K**2))
    m = quintic_rate(s)
    assert m.dtype.kind == "f" and np.all(m <= 0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_closed_form_matches_brute_force(seed, L):
    rng = np.random.default_rng(seed)
    N = 4
    s = SpectralState(L, N, rng.normal(size=2 * N + 1) + 1j * rng.normal(size=2 * N + 1))
    for K in range(-N, N + 1):
        got = quintic_main_term(s, K)
        ref = quintic_resonant_sum(s, K)
        assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-300)
