"""Counting oracles for divisor and resonance bounds, plus scaling reports."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .forest import DiagramTree, a_constraint, omega_numerator
from .coefficients import _plans, _prefix, _tree_levels
from .lattice import alternating_square_sum, japanese_bracket

__all__ = [
    "divisor_count",
    "divisor_count_table",
    "count_cubic_resonances",
    "brute_force_cubic",
    "cubic_box_bound",
    "count_constrained_tuples",
    "count_constrained_exhaustive",
    "constrained_histogram",
    "scaling_report",
    "ScalingRow",
    "fitted_slope",
    "resonant_quintuple_array",
]

_SPF_LIMIT = 10**6
_spf: np.ndarray | None = None


def _spf_table() -> np.ndarray:
    """Smallest-prime-factor table up to the cached limit."""
    global _spf
    if _spf is None:
        spf = np.arange(_SPF_LIMIT + 1, dtype=np.int64)
        for p in range(2, math.isqrt(_SPF_LIMIT) + 1):
            if spf[p] == p:
                block = spf[p * p :: p]
                np.copyto(block, p, where=block == np.arange(p * p, _SPF_LIMIT + 1, p))
        _spf = spf
    return _spf


def divisor_count(n: int) -> int:
    """Number of positive divisors of n."""
    if n <= 0:
        raise ValueError("divisor_count needs n >= 1")
    count = 1
    if n <= _SPF_LIMIT:
        spf = _spf_table()
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            count *= e + 1
        return count
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        count *= e + 1
        p += 1 if p == 2 else 2
    if n > 1:
        count *= 2
    return count


def divisor_count_table(nmax: int) -> np.ndarray:
    """``table[n]`` = number of divisors of n for n <= nmax (``table[0] = 0``).

    Every i adds one to each of its multiples, which is trial division by all
    candidates at once.
    """
    table = np.zeros(nmax + 1, dtype=np.int64)
    for i in range(1, nmax + 1):
        table[i::i] += 1
    return table


def count_cubic_resonances(mu: int, mu2: int) -> int:
    """Triples with k1 != k2, k2 != k3, k1 - k2 + k3 = mu, k1^2 - k2^2 + k3^2 = mu2.

    Eliminating the linear constraint gives ``2 (k1 - k2)(k2 - k3) = mu2 - mu^2``,
    and every ordered factor pair ``(a, b)`` of the half-difference fixes
    ``k2 = mu - a + b``.
    """
    diff = mu2 - mu * mu
    if diff == 0 or diff % 2:
        return 0
    return 2 * divisor_count(abs(diff) // 2)


def cubic_box_bound(mu: int, mu2: int) -> int:
    return abs(mu) + abs(mu2 - mu * mu) + 2


def brute_force_cubic(mu: int, mu2_values: Sequence[int], box: int | None = None) -> dict[int, int]:
    """Exhaustive counts for several mu2 at fixed mu over ``|k_i| <= box``."""
    mu2_values = list(mu2_values)
    if box is None:
        box = max(cubic_box_bound(mu, m) for m in mu2_values) if mu2_values else 0
    targets = np.array(mu2_values, dtype=np.int64)
    counts = {m: 0 for m in mu2_values}
    k3 = np.arange(-box, box + 1, dtype=np.int64)
    for k1 in range(-box, box + 1):
        k2 = k1 + k3 - mu
        ok = (np.abs(k2) <= box) & (k2 != k1) & (k2 != k3)
        q = k1 * k1 - k2 * k2 + k3 * k3
        q = q[ok]
        if q.size == 0:
            continue
        hits = np.isin(q, targets)
        if hits.any():
            vals, cnt = np.unique(q[hits], return_counts=True)
            for v, c in zip(vals.tolist(), cnt.tolist()):
                counts[v] += c
    return counts


def count_constrained_tuples(tree: DiagramTree, mu: Sequence[int], box: int) -> int:
    """Tuples in the box with target 0 lying in every A_k(T), with
    ``|Omega(level k)| = mu_{k+1}`` (integer numerators) and final form zero."""
    D = tree.depth
    if len(mu) != D:
        raise ValueError(f"need {D} targets for a depth-{D} tree")
    if any(m == 0 for m in mu):
        return 0
    n = 2 * D + 3
    plan = next(p for p in _plans(D) if p.tree == tree)
    count = 0
    rng = range(-box, box + 1)
    for head in itertools.product(rng, repeat=n - 2):
        a = sum(k if i % 2 == 0 else -k for i, k in enumerate(head))
        b = alternating_square_sum(head)
        # last two entries x (minus) and y (plus): y - x = -a, y^2 - x^2 = -b
        u = -a
        if u == 0:
            if b:
                continue
            pairs = [(x, x) for x in rng]
        else:
            if (-b) % u:
                continue
            s = -b // u
            if (s - u) % 2:
                continue
            x, y = (s - u) // 2, (s + u) // 2
            if not (-box <= x <= box and -box <= y <= box):
                continue
            pairs = [(x, y)]
        for x, y in pairs:
            e = head + (x, y)
            pref = _prefix(e)
            live, _ = _tree_levels(plan, pref, 0, 0)
            if not live:
                continue
            ok = True
            for k in range(D):
                om = alternating_square_sum(plan.sums(k, pref))
                if abs(om) != mu[k]:
                    ok = False
                    break
            if ok:
                count += 1
    return count


def constrained_histogram(tree: DiagramTree, box: int) -> dict[tuple[int, ...], int]:
    """Plain enumeration of the box: resonant tuples with target 0 and all A_k
    live, grouped by the level values ``(|Omega_1|, ..., |Omega_D|)``."""
    D = tree.depth
    n = 2 * D + 3
    hist: dict[tuple[int, ...], int] = {}
    for e in itertools.product(range(-box, box + 1), repeat=n):
        if sum(e[0::2]) - sum(e[1::2]) or alternating_square_sum(e):
            continue
        if all(a_constraint(tree, k, e, 0) for k in range(D)):
            key = tuple(abs(omega_numerator(tree, k + 1, e, 0)) for k in range(D))
            hist[key] = hist.get(key, 0) + 1
    return hist


def count_constrained_exhaustive(tree: DiagramTree, mu: Sequence[int], box: int) -> int:
    """Same count as :func:`count_constrained_tuples` by plain enumeration of the box."""
    if len(mu) != tree.depth:
        raise ValueError(f"need {tree.depth} targets for a depth-{tree.depth} tree")
    return constrained_histogram(tree, box).get(tuple(int(m) for m in mu), 0)


@dataclass
class ScalingRow:
    L: int
    sum_value: float
    bound_exponent: float
    fitted_slope: float


def fitted_slope(Ls: Sequence[float], values: Sequence[float]) -> float:
    x = np.log(np.asarray(Ls, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _random_weights(L: int, N: int, ell: float, rng: np.random.Generator) -> np.ndarray:
    K = np.arange(-N, N + 1) / L
    r = rng.uniform(0.5, 1.0, size=K.size)
    r /= r.max()
    return r * japanese_bracket(K) ** (-ell)


def resonant_quintuple_array(N: int, K: int) -> np.ndarray:
    """Vectorized counterpart of :func:`resonant_quintuples`, one row per tuple."""
    r = np.arange(-N, N + 1, dtype=np.int64)
    k1, k2, k3 = (x.ravel() for x in np.meshgrid(r, r, r, indexing="ij"))
    u = K - (k1 - k2 + k3)
    rhs = K * K - (k1 * k1 - k2 * k2 + k3 * k3)
    nz = np.nonzero(u != 0)[0]
    uu, rr = u[nz], rhs[nz]
    div = rr % uu == 0
    nz, uu = nz[div], uu[div]
    s = rr[div] // uu
    k4, k5 = (s - uu) // 2, (s + uu) // 2
    keep = ((s - uu) % 2 == 0) & (np.abs(k4) <= N) & (np.abs(k5) <= N)
    idx = nz[keep]
    parts = [np.stack([k1[idx], k2[idx], k3[idx], k4[keep], k5[keep]], axis=1)]
    z = np.nonzero((u == 0) & (rhs == 0))[0]
    if z.size:
        rep = np.repeat(z, r.size)
        free = np.tile(r, z.size)
        parts.append(np.stack([k1[rep], k2[rep], k3[rep], free, free], axis=1))
    return np.concatenate(parts)


def _resonant_sum_d2(w: np.ndarray, E: np.ndarray, N: int, L: int, K: int) -> float:
    """max over depth-1 trees of sum 1_{A_0} / |Omega_3(T)| * prod w, in lattice units."""
    mono = np.prod(w[E + N], axis=1)
    best = 0.0
    for l in (1, 2, 3):
        c = E[:, l - 1 : l + 2]
        cols = [E[:, j] for j in range(l - 1)] + [c[:, 0] - c[:, 1] + c[:, 2]] + [E[:, j] for j in range(l + 2, 5)]
        om = cols[0] ** 2 - cols[1] ** 2 + cols[2] ** 2 - K * K
        live = (c[:, 0] != c[:, 1]) & (c[:, 1] != c[:, 2]) & (om != 0)
        best = max(best, float(np.sum(mono[live] / np.abs(om[live]))))
    return best * L * L


def scaling_report(d: int, Ls: Sequence[int], ell: float, trials: int = 1, *, radius: float = 1.0,
                   seed: int = 0, K: int = 0) -> list[ScalingRow]:
    """Resonant constrained sums at target K across L, with a log-log fit.

    States are ``r_K <K>^-ell`` with random ``r_K`` in [0.5, 1] rescaled to unit
    X^ell norm, supported on ``|K| <= radius``.  The reported value is the mean
    over trials of ``<K>^ell`` times the sum, maximized over trees.
    """
    if ell <= 1:
        raise ValueError("scaling needs ell > 1")
    if d != 2:
        raise NotImplementedError("scaling sums are implemented for the quintic level (d=2)")
    rng = np.random.default_rng(seed)
    values = []
    for L in Ls:
        N = int(round(radius * L))
        E = resonant_quintuple_array(N, K)
        acc = 0.0
        for _ in range(trials):
            w = _random_weights(L, N, ell, rng)
            acc += _resonant_sum_d2(w, E, N, L, K)
        values.append(acc / trials * float(japanese_bracket(K / L)) ** ell)
    slope = fitted_slope(Ls, values) if len(Ls) >= 2 and all(v > 0 for v in values) else float("nan")
    return [ScalingRow(L, v, 2.0 * (d - 1), slope) for L, v in zip(Ls, values)]
