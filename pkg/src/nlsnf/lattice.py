"""Lattice frequencies on Z/L, the alternating linear and quadratic forms, and
resonance enumeration inside a finite box.

Frequencies are carried as integer numerators ``k`` with ``K = k / L``.  All
resonance tests are done on the integer numerators so nothing here ever
compares floats.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "ModeTuple",
    "alternating_sum",
    "alternating_square_sum",
    "linear_form",
    "quadratic_form",
    "linear_numerator",
    "quadratic_numerator",
    "enumerate_resonances",
    "weighted_supnorm",
    "japanese_bracket",
]


@dataclass(frozen=True)
class ModeTuple:
    """An ordered mode tuple ``(K_1, ..., K_{2d+1})`` together with its target K.

    ``entries`` and ``target`` are integer numerators; ``L`` is the shared box
    parameter.  Entry ``j`` (1-based) carries the sign ``(-1)**(j-1)``.
    """

    entries: tuple[int, ...]
    target: int
    L: int = 1

    def __post_init__(self) -> None:
        n = len(self.entries)
        if n < 3 or n % 2 == 0:
            raise ValueError(f"mode tuple must have odd length >= 3, got {n}")
        if self.L < 1:
            raise ValueError("L must be a positive integer")
        object.__setattr__(self, "entries", tuple(int(k) for k in self.entries))
        object.__setattr__(self, "target", int(self.target))

    @classmethod
    def resonant_target(cls, entries: Sequence[int], L: int = 1) -> "ModeTuple":
        """Build the tuple whose target makes the linear form vanish."""
        return cls(tuple(entries), alternating_sum(entries), L)

    @property
    def arity(self) -> int:
        return (len(self.entries) - 1) // 2

    def __len__(self) -> int:
        return len(self.entries)

    def frequencies(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(k, self.L) for k in self.entries)


def alternating_sum(ks: Sequence[int]) -> int:
    """k_1 - k_2 + k_3 - ... for an integer sequence."""
    return sum(k if i % 2 == 0 else -k for i, k in enumerate(ks))


def alternating_square_sum(ks: Sequence[int]) -> int:
    return sum(k * k if i % 2 == 0 else -k * k for i, k in enumerate(ks))


def linear_numerator(t: ModeTuple) -> int:
    """Numerator of the linear form; the form itself is this divided by L."""
    return alternating_sum(t.entries) - t.target


def quadratic_numerator(t: ModeTuple) -> int:
    """Numerator of the quadratic form; the form itself is this over L**2."""
    return alternating_square_sum(t.entries) - t.target * t.target


def linear_form(t: ModeTuple) -> Fraction:
    """Exact value of ``sum (-1)^(j-1) K_j - K``."""
    return Fraction(linear_numerator(t), t.L)


def quadratic_form(t: ModeTuple) -> Fraction:
    """Exact value of ``sum (-1)^(j-1) K_j^2 - K^2``."""
    return Fraction(quadratic_numerator(t), t.L * t.L)


def enumerate_resonances(d: int, box: int, L: int = 1) -> Iterator[ModeTuple]:
    """Yield every (2d+1)-tuple in ``[-box, box]`` on the resonance surface.

    The last free entry enters the quadratic constraint linearly once the
    target is eliminated through the linear constraint, so the loop runs over
    ``2d`` entries and solves for the last one.  Output is lexicographic in
    ``(K_1, ..., K_{2d+1})``, which fixes K.
    """
    if d < 1:
        raise ValueError("arity d must be >= 1")
    if box < 0:
        raise ValueError("box must be >= 0")
    rng = range(-box, box + 1)
    n = 2 * d + 1
    for head in itertools.product(rng, repeat=n - 1):
        # head covers K_1..K_{2d}; K_{2d} enters with a minus sign
        a = alternating_sum(head)
        b = alternating_square_sum(head)
        # with y = K_{2d+1}, K = a + y and b + y^2 - (a + y)^2 = b - a^2 - 2 a y
        if a == 0:
            if b != 0:
                continue
            for y in rng:
                yield ModeTuple(head + (y,), y, L)
            continue
        num = b - a * a
        if num % (2 * a):
            continue
        y = num // (2 * a)
        k = a + y
        if -box <= y <= box and -box <= k <= box:
            yield ModeTuple(head + (y,), k, L)


def japanese_bracket(K: np.ndarray | float) -> np.ndarray | float:
    """<K> = sqrt(1 + K^2)."""
    return np.sqrt(1.0 + np.square(K))


def weighted_supnorm(state, ell: float) -> float:
    """sup over in-box K of <K>^ell |value(K)|.

    ``state`` is either a :class:`nlsnf.state.SpectralState` or a mapping from
    integer numerators to complex values paired with ``L`` via a ``(mapping, L)``
    tuple.
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    if isinstance(state, tuple):
        values, L = state
        values = dict(values)
        if not values:
            return 0.0
        ks = np.array(list(values.keys()), dtype=float) / L
        amps = np.abs(np.array(list(values.values()), dtype=complex))
    else:
        if state.amplitudes.size == 0:
            return 0.0
        ks = state.frequencies()
        amps = np.abs(state.amplitudes)
    return float(np.max(japanese_bracket(ks) ** ell * amps))

