import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nlsnf.chains import (
    _omega_partition,
    DifferenceVector,
    PartitionChain,
    admissible_partitions,
    chain_closed_form,
    chain_sum,
    enumerate_chains,
    refinements,
    validate_partition,
)
from nlsnf.coefficients import sample_resonance_point
from nlsnf.errors import DegenerateInputError
from nlsnf.lattice import ModeTuple


def _intermediate_forms_nonzero(t):
    n = len(t)
    for m in range(3, n, 2):
        for p in admissible_partitions(n, m):
            if _omega_partition(p, t.entries, t.target) == 0:
                return False
    return True


def _generic_point(d, rng, radius=10):
    # chain sums are defined when no difference and no intermediate form vanishes
    while True:
        e, K = sample_resonance_point(d, rng, radius)
        t = ModeTuple(e, K)
        if all(e[i] != e[i + 1] for i in range(2 * d)) and _intermediate_forms_nonzero(t):
            return t


def test_worked_example():
    t = ModeTuple((2, 0, -1, 2, 0), -1)
    r = chain_sum(1, ((1, 1), (2, 2), (3, 5)), t)
    assert r.value == Fraction(-1, 12) and r.equal


def test_partition_counts():
    # compositions of n into m odd parts
    assert len(admissible_partitions(5, 3)) == 3
    assert len(admissible_partitions(7, 3)) == 6
    assert len(admissible_partitions(5, 5)) == 1
    assert admissible_partitions(4, 3) == []
    for p in admissible_partitions(7, 3):
        validate_partition(p, 7)


def test_bad_partitions_rejected():
    with pytest.raises(ValueError):
        validate_partition(((1, 2), (3, 5)), 5)
    with pytest.raises(ValueError):
        validate_partition(((1, 1), (2, 2)), 2)


def test_refinements_split_one_block():
    p = ((1, 1), (2, 6), (7, 7))
    for s, q in refinements(p):
        assert s == 2 and len(q) == 5
        validate_partition(q, 7)


def test_chains_end_in_singletons():
    p = ((1, 5), (6, 6), (7, 7))
    chains = list(enumerate_chains(p))
    assert chains
    for c in chains:
        assert all(a == b for a, b in c.partitions[-1])
        assert len(c.splits) == len(c.partitions) - 1
    with pytest.raises(ValueError):
        PartitionChain((((1, 3),),), ())


def test_difference_vector_surface():
    rng = random.Random(0)
    for _ in range(100):
        e, K = sample_resonance_point(2, rng)
        assert DifferenceVector.of(ModeTuple(e, K)).quintic_surface() == 0


def test_next_to_last_level_closed_form():
    rng = random.Random(5)
    for d in (2, 3):
        t = _generic_point(d, rng)
        l = DifferenceVector.of(t).l
        for p in admissible_partitions(2 * d + 1, 2 * d - 1):
            i = next(j for j, (a, b) in enumerate(p) if b > a) + 1
            assert chain_sum(d - 1, p, t).value == Fraction(1, 2 * l[i - 1] * l[i])


def test_degenerate_input():
    t = ModeTuple((1, 1, 2, 2, 0), 0)
    with pytest.raises(DegenerateInputError):
        chain_closed_form(((1, 1), (2, 2), (3, 5)), t)
    with pytest.raises(ValueError):
        chain_sum(1, ((1, 1), (2, 2), (3, 5)), ModeTuple((1, 2, 3, 4, 5), 0))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(0, 10**6), st.integers(1, 3))
def test_chain_sum_closed_form_property(d, seed, L):
    t0 = _generic_point(d, random.Random(seed))
    t = ModeTuple(t0.entries, t0.target, L)
    n = 2 * d + 1
    for k in range(1, d + 1):
        for p in admissible_partitions(n, 2 * k + 1):
            assert chain_sum(k, p, t).equal
    total = sum(chain_sum(1, p, t).value for p in admissible_partitions(n, 3))
    assert total == 0
