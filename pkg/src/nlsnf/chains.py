"""Partition chains and the chain sums behind the vanishing induction.

A partition of ``{1..n}`` into ``2k+1`` consecutive blocks of odd length plays
the role of one level of a tree.  The chain sum of a partition collects all
ways of refining it down to singletons by splitting one block into three odd
sub-blocks at a time:

    Sigma(P) = (1 / Omega(P)) * sum over splits of block s of (-1)^s Sigma(P')

with ``Sigma(singletons) = 1`` and ``Omega(P)`` the quadratic form on the block
alternating sums.  On the resonance surface the closed form is
``1 / (2^(d-k) * prod of l_j over non-boundary j)`` with ``l_j = K_j - K_{j+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterator, Sequence

from .errors import DegenerateInputError
from .forest import block_sum
from .lattice import ModeTuple, alternating_square_sum, linear_numerator, quadratic_numerator

__all__ = [
    "Partition",
    "PartitionChain",
    "DifferenceVector",
    "ChainSumResult",
    "admissible_partitions",
    "validate_partition",
    "refinements",
    "enumerate_chains",
    "chain_sum",
    "chain_closed_form",
    "boundaries",
]

Partition = tuple[tuple[int, int], ...]


def validate_partition(p: Partition, n: int) -> None:
    pos = 1
    for a, b in p:
        if a != pos or b < a or (b - a) % 2:
            raise ValueError(f"partition {p} is not a cover of 1..{n} by consecutive odd blocks")
        pos = b + 1
    if pos != n + 1 or len(p) % 2 == 0:
        raise ValueError(f"partition {p} is not a cover of 1..{n} by an odd number of odd blocks")


def boundaries(p: Partition) -> tuple[int, ...]:
    """Last label of every block but the final one; boundary s has parity s."""
    return tuple(b for _, b in p[:-1])


def admissible_partitions(n: int, m: int) -> list[Partition]:
    """All partitions of 1..n into m consecutive odd blocks."""
    if n % 2 == 0 or m % 2 == 0 or m > n:
        return []
    out = []
    # boundary i_s must have the parity of s
    for cut in combinations(range(1, n), m - 1):
        if all((c - s) % 2 == 0 for s, c in enumerate(cut, start=1)):
            edges = (0,) + cut + (n,)
            out.append(tuple((edges[i] + 1, edges[i + 1]) for i in range(m)))
    return out


def refinements(p: Partition) -> Iterator[tuple[int, Partition]]:
    """Yield ``(s, P')`` for every split of block s into three odd blocks."""
    for s, (a, b) in enumerate(p, start=1):
        size = b - a + 1
        if size < 3:
            continue
        for x in range(1, size - 1, 2):
            for y in range(1, size - x, 2):
                z = size - x - y
                if z < 1 or z % 2 == 0:
                    continue
                new = ((a, a + x - 1), (a + x, a + x + y - 1), (a + x + y, b))
                yield s, p[: s - 1] + new + p[s:]


@dataclass(frozen=True)
class PartitionChain:
    """A refinement chain ending at singletons."""

    partitions: tuple[Partition, ...]
    splits: tuple[int, ...]

    def __post_init__(self) -> None:
        n = self.partitions[-1][-1][1]
        for p in self.partitions:
            validate_partition(p, n)
        if any(a != b for a, b in self.partitions[-1]):
            raise ValueError("a chain must end with the all-singleton partition")
        for p, q in zip(self.partitions, self.partitions[1:]):
            if len(q) != len(p) + 2:
                raise ValueError("each refinement splits exactly one block into three")

    @property
    def sign(self) -> int:
        return (-1) ** sum(self.splits)


def enumerate_chains(p: Partition) -> Iterator[PartitionChain]:
    if all(a == b for a, b in p):
        yield PartitionChain((p,), ())
        return
    for s, q in refinements(p):
        for tail in enumerate_chains(q):
            yield PartitionChain((p,) + tail.partitions, (s,) + tail.splits)


@dataclass(frozen=True)
class DifferenceVector:
    """l_i = K_i - K_{i+1} on integer numerators (divide by L for lattice units)."""

    l: tuple[int, ...]

    @classmethod
    def of(cls, t: ModeTuple) -> "DifferenceVector":
        e = t.entries
        return cls(tuple(e[i] - e[i + 1] for i in range(len(e) - 1)))

    def quintic_surface(self) -> int:
        """l1 l2 + l3 l4 + l1 l4, which vanishes on the quintic resonance set."""
        l1, l2, l3, l4 = self.l
        return l1 * l2 + l3 * l4 + l1 * l4


@dataclass(frozen=True)
class ChainSumResult:
    value: Fraction
    closed_form: Fraction

    @property
    def equal(self) -> bool:
        return self.value == self.closed_form


def _omega_partition(p: Partition, e: Sequence[int], K: int) -> int:
    return alternating_square_sum([block_sum(e, a, b) for a, b in p]) - K * K


def chain_closed_form(p: Partition, t: ModeTuple) -> Fraction:
    e = t.entries
    d = t.arity
    k = (len(p) - 1) // 2
    hats = set(boundaries(p))
    den = 2 ** (d - k)
    for j in range(1, 2 * d + 1):
        if j in hats:
            continue
        lj = e[j - 1] - e[j]
        if lj == 0:
            raise DegenerateInputError(f"difference l_{j} vanishes outside the hatted set")
        den *= lj
    return Fraction(t.L ** (2 * (d - k)), den)


def chain_sum(k: int, p: Partition, t: ModeTuple) -> ChainSumResult:
    """Sum over all refinement chains of ``p`` together with its closed form."""
    n = len(t)
    validate_partition(p, n)
    if len(p) != 2 * k + 1:
        raise ValueError(f"partition has {len(p)} blocks, expected {2 * k + 1}")
    if linear_numerator(t) or quadratic_numerator(t):
        raise ValueError("chain sums are defined on the resonance surface")
    e, K = t.entries, t.target

    @lru_cache(maxsize=None)
    def sigma(q: Partition) -> Fraction:
        if len(q) == n:
            return Fraction(1)
        om = _omega_partition(q, e, K)
        if om == 0:
            raise DegenerateInputError(f"quadratic form vanishes on intermediate partition {q}")
        acc = Fraction(0)
        for s, r in refinements(q):
            acc += (-1) ** s * sigma(r)
        return acc / om

    d = t.arity
    value = sigma(p) * t.L ** (2 * (d - k))
    return ChainSumResult(value, chain_closed_form(p, t))
