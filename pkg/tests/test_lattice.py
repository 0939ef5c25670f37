from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsnf.lattice import (
    ModeTuple,
    enumerate_resonances,
    linear_form,
    quadratic_form,
    quadratic_numerator,
    weighted_supnorm,
)
from nlsnf.state import SpectralState


@pytest.mark.parametrize("L", [1, 3, 8])
def test_linear_form_examples(L):
    assert linear_form(ModeTuple((3, 5, 5), 3, L)) == 0
    assert linear_form(ModeTuple((2, 0, -1, 2, 0), -1, L)) == 0
    assert linear_form(ModeTuple((1, 0, 0), 0, L)) == Fraction(1, L)


@pytest.mark.parametrize("L", [1, 3, 8])
def test_quadratic_form_examples(L):
    assert quadratic_form(ModeTuple((3, 5, 5), 3, L)) == 0
    assert quadratic_form(ModeTuple((2, 0, -1, 2, 0), -1, L)) == 0
    assert quadratic_form(ModeTuple((1, 0, 0), 0, L)) == Fraction(1, L * L)


def test_mode_tuple_rejects_bad_lengths():
    with pytest.raises(ValueError):
        ModeTuple((1, 2), 0)
    with pytest.raises(ValueError):
        ModeTuple((1, 2, 3, 4), 0)
    with pytest.raises(ValueError):
        ModeTuple((1, 2, 3), 0, L=0)


def test_equal_numerators_mean_equal_frequencies():
    assert ModeTuple((1, 2, 3), 2, 4) == ModeTuple((1, 2, 3), 2, 4)
    assert ModeTuple((1, 2, 3), 2, 4).frequencies() == (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


def test_cubic_resonances_degenerate():
    pts = list(enumerate_resonances(1, 2))
    assert pts
    for t in pts:
        k1, k2, k3 = t.entries
        assert sorted((k1, k3)) == sorted((t.target, k2))


def test_quintic_box2_contains_example():
    pts = {(t.entries, t.target) for t in enumerate_resonances(2, 2)}
    assert ((1, 0, -1, 1, 0), -1) in pts


def test_box_zero_only_zero_tuple():
    pts = list(enumerate_resonances(2, 0))
    assert [(t.entries, t.target) for t in pts] == [((0, 0, 0, 0, 0), 0)]


def _brute(d, box):
    import itertools

    out = set()
    for e in itertools.product(range(-box, box + 1), repeat=2 * d + 1):
        K = sum(x if i % 2 == 0 else -x for i, x in enumerate(e))
        q = sum(x * x if i % 2 == 0 else -x * x for i, x in enumerate(e))
        if abs(K) <= box and q == K * K:
            out.add((e, K))
    return out


@pytest.mark.parametrize("d,box", [(1, 3), (2, 2)])
def test_enumeration_matches_brute_force(d, box):
    got = [(t.entries, t.target) for t in enumerate_resonances(d, box)]
    assert len(got) == len(set(got))
    assert set(got) == _brute(d, box)


def test_enumeration_symmetries():
    box = 3
    pts = {(t.entries, t.target) for t in enumerate_resonances(2, box)}
    for e, K in pts:
        assert ((e[2], e[1], e[0], e[3], e[4]), K) in pts
        for c in (-1, 1):
            sh = tuple(x + c for x in e)
            if max(abs(x) for x in sh + (K + c,)) <= box:
                assert (sh, K + c) in pts


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-30, 30), min_size=3, max_size=3), st.integers(-20, 20))
def test_quadratic_translation_invariant_on_linear_zero(entries, c):
    t = ModeTuple.resonant_target(entries)
    s = ModeTuple(tuple(x + c for x in t.entries), t.target + c)
    assert quadratic_numerator(s) == quadratic_numerator(t)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-64, 64), min_size=2, max_size=2), st.integers(-64, 64))
def test_cubic_degeneracy_property(head, k3):
    t = ModeTuple.resonant_target(head + [k3])
    if quadratic_numerator(t) == 0:
        assert sorted((t.entries[0], t.entries[2])) == sorted((t.target, t.entries[1]))


def test_weighted_supnorm_examples():
    assert weighted_supnorm(SpectralState.from_modes(1, 2, {0: 1}), 2) == pytest.approx(1.0)
    assert weighted_supnorm(SpectralState.from_modes(1, 2, {1: 1}), 2) == pytest.approx(2.0)
    assert weighted_supnorm(SpectralState.from_modes(1, 2, {0: 1, 1: 0.25}), 2) == pytest.approx(1.0)
    assert weighted_supnorm(({}, 4), 2) == 0.0
    assert weighted_supnorm(({1: 1.0}, 1), 2) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        weighted_supnorm(({1: 1.0}, 1), -1)


def test_state_mass_and_lookup():
    s = SpectralState.from_modes(4, 3, {0: 2, -3: 1j})
    assert s.mass() == pytest.approx(5 / 4)
    assert s.amplitude(-3) == 1j
    assert s.amplitude(10) == 0
    assert s.support() == [-3, 0]
    np.testing.assert_allclose(s.frequencies(), np.arange(-3, 4) / 4)
