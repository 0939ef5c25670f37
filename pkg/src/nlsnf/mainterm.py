"""The quintic resonant term and its closed form.

On the quintic resonance set the H^2-weighted sum collapses onto degenerate
pairings, leaving a diagonal multiplier on ``d_K``:

    sum_{S=0, Omega=0} H^2 d1 conj(d2) d3 conj(d4) d5
        = -(1 / 4 pi) sum_{K1 != K} (|d_K1|^4 + 2 |d_K1|^2 |d_K|^2) / (K1 - K)^2 * d_K

The left side is evaluated by brute force over the box; the right side is the
closed form.  Both include the ``1 / 2 pi`` carried by H^2 and neither carries
the ``eps^4 / L^4`` prefactor.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .coefficients import _h2_num
from .state import SpectralState

__all__ = ["quintic_main_term", "quintic_resonant_sum", "quintic_rate", "resonant_quintuples"]


def resonant_quintuples(N: int, K: int) -> Iterator[tuple[int, int, int, int, int]]:
    """All in-box 5-tuples with target K on the resonance set."""
    rng = range(-N, N + 1)
    for k1 in rng:
        for k2 in rng:
            for k3 in rng:
                a = k1 - k2 + k3
                b = k1 * k1 - k2 * k2 + k3 * k3
                u = K - a  # = k5 - k4
                rhs = K * K - b  # = k5^2 - k4^2
                if u == 0:
                    if rhs:
                        continue
                    for k4 in rng:
                        yield k1, k2, k3, k4, k4
                    continue
                if rhs % u:
                    continue
                s = rhs // u
                if (s - u) % 2:
                    continue
                k4, k5 = (s - u) // 2, (s + u) // 2
                if -N <= k4 <= N and -N <= k5 <= N:
                    yield k1, k2, k3, k4, k5


def quintic_resonant_sum(state: SpectralState, K: int) -> complex:
    """Brute-force resonant sum of H^2 times the quintic monomial at target K."""
    N, L = state.N, state.L
    amps = state.amplitudes
    conj = np.conj(amps)
    total = 0j
    for e in resonant_quintuples(N, K):
        h, killed = _h2_num(e, K)
        if killed or h == 0:
            continue
        k1, k2, k3, k4, k5 = e
        mono = amps[k1 + N] * conj[k2 + N] * amps[k3 + N] * conj[k4 + N] * amps[k5 + N]
        total += float(h) * mono
    return total * L * L / (2 * math.pi)


def quintic_rate(state: SpectralState) -> np.ndarray:
    """Real multiplier m_K with closed form = m_K * d_K, for every in-box K."""
    N, L = state.N, state.L
    p = np.abs(state.amplitudes) ** 2
    ks = state.numerators()
    diff = (ks[:, None] - ks[None, :]) / L
    with np.errstate(divide="ignore"):
        w = np.where(diff != 0, 1.0 / np.where(diff != 0, diff, 1.0) ** 2, 0.0)
    # row K, column K1
    s = w @ (p * p) + 2.0 * p * (w @ p)
    return -s / (4 * math.pi)


def quintic_main_term(state: SpectralState, K: int) -> complex:
    """Closed form of the quintic resonant sum at target K."""
    if abs(K) > state.N:
        raise ValueError(f"K={K} outside box |k| <= {state.N}")
    return complex(quintic_rate(state)[K + state.N] * state.amplitudes[K + state.N])
