"""Normal-form coefficients H^d and G^d.

Two independent evaluation paths are provided:

* the contraction recurrence, which builds H^{d} from H^{d-1} evaluated at
  tuples where three consecutive entries are merged into ``K_j - K_{j+1} +
  K_{j+2}``;
* the closed tree formula, summing signed, indicator-gated reciprocal products
  of level-wise quadratic forms over a forest.

Both paths assume the linear constraint S = 0 (every sum that uses the
coefficients runs over it); off that plane they need not agree.

Values are exact rationals.  All reciprocal factors are stored without their
``2 pi``; the number of such factors is carried as ``two_pi_power`` (always
negative or zero) so numeric callers multiply by ``(2 pi) ** two_pi_power``.

Internally everything runs on integer numerators.  A coefficient with ``m``
reciprocal factors picks up ``L ** (2 m)`` when converted to lattice units.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import CapacityError, InconsistencyError
from .forest import DEFAULT_DEPTH_CAP, DiagramTree, generate_forest
from .lattice import ModeTuple, alternating_square_sum, alternating_sum, enumerate_resonances

__all__ = [
    "CoefficientValue",
    "h2_initial",
    "g2_initial",
    "h_coeff_recurrence",
    "g_coeff_recurrence",
    "h_coeff_trees",
    "g_coeff_trees",
    "all_constraints_live",
    "VanishingReport",
    "verify_vanishing",
    "verify_vanishing_sampled",
    "sample_resonance_point",
    "clear_memo",
]

_ZERO = Fraction(0)


@dataclass(frozen=True)
class CoefficientValue:
    """Exact coefficient value.

    ``killed`` means every term of the defining sum was switched off by its
    indicator; a live sum that cancels to zero has ``killed=False``.
    """

    value: Fraction
    two_pi_power: int
    killed: bool

    def __post_init__(self) -> None:
        if self.killed and self.value != 0:
            raise ValueError("a killed coefficient must be zero")

    def numeric(self) -> float:
        return float(self.value) * (2 * math.pi) ** self.two_pi_power


def _omega(entries: Sequence[int], target: int) -> int:
    return alternating_square_sum(entries) - target * target


def _contract(entries: tuple[int, ...], j: int) -> tuple[int, ...]:
    """Merge positions j, j+1, j+2 (1-based) into K_j - K_{j+1} + K_{j+2}."""
    i = j - 1
    return entries[:i] + (entries[i] - entries[i + 1] + entries[i + 2],) + entries[i + 3 :]


def _scale(value: Fraction, factors: int, L: int) -> Fraction:
    return value * L ** (2 * factors) if L != 1 else value


def _check_len(t: ModeTuple, d: int) -> None:
    if len(t) != 2 * d + 1:
        raise ValueError(f"H^{d}/G^{d} takes a {2 * d + 1}-tuple, got length {len(t)}")


# ---------------------------------------------------------------- quintic base


def _h2_num(e: tuple[int, ...], K: int) -> tuple[Fraction, bool]:
    k1, k2, k3, k4, k5 = e
    a1 = k1 != k2 and k2 != k3 and k4 != k5 and k5 != K
    a2 = k1 != K and k2 != k3 and k3 != k4 and k5 != K
    a3 = k1 != k2 and k1 != K and k3 != k4 and k4 != k5
    value = _ZERO
    for live, sign, contracted in (
        (a2, 1, (k1, k2 - k3 + k4, k5)),
        (a1, -1, (k1 - k2 + k3, k4, k5)),
        (a3, -1, (k1, k2, k3 - k4 + k5)),
    ):
        if not live:
            continue
        om = _omega(contracted, K)
        if om == 0:
            raise InconsistencyError(f"live quintic indicator with zero cubic form at {e}, K={K}")
        value += Fraction(sign, om)
    return value, not (a1 or a2 or a3)


def _g2_num(e: tuple[int, ...], K: int) -> tuple[Fraction, bool]:
    k1, k2, k3, k4, k5 = e
    b1 = k1 == k2 == k3 and k3 != k4 and k4 != k5
    b2 = k1 != k2 and k2 == k3 == k4 and k4 != k5
    b3 = k1 != k2 and k2 != k3 and k3 == k4 == k5
    b4 = k1 != k2 and k2 != k3 and k4 == k5 == K
    live = b1 or b2 or b3 or b4
    if not live:
        return _ZERO, True
    om = _omega(e, K)
    if om == 0:
        raise InconsistencyError(f"live G^2 indicator with zero quintic form at {e}, K={K}")
    return Fraction(int(b1) - int(b2) + int(b3) - int(b4), om), False


def h2_initial(t: ModeTuple) -> CoefficientValue:
    """Three-term quintic coefficient with the A1, A2, A3 indicator sets."""
    _check_len(t, 2)
    v, killed = _h2_num(t.entries, t.target)
    return CoefficientValue(_scale(v, 1, t.L), -1, killed)


def g2_initial(t: ModeTuple) -> CoefficientValue:
    """(1_{B1} - 1_{B2} + 1_{B3} - 1_{B4}) / Omega_5."""
    _check_len(t, 2)
    v, killed = _g2_num(t.entries, t.target)
    return CoefficientValue(_scale(v, 1, t.L), -1, killed)


# ---------------------------------------------------------------- recurrence


@lru_cache(maxsize=1 << 20)
def _h_rec(d: int, e: tuple[int, ...], K: int) -> tuple[Fraction, bool]:
    if d == 1:
        return Fraction(1), False
    if d == 2:
        return _h2_num(e, K)
    return _rec_step(_h_rec, d, e, K)


@lru_cache(maxsize=1 << 20)
def _g_rec(d: int, e: tuple[int, ...], K: int) -> tuple[Fraction, bool]:
    if d == 1:
        return _ZERO, True
    if d == 2:
        return _g2_num(e, K)
    return _rec_step(_g_rec, d, e, K)


def _rec_step(inner, d: int, e: tuple[int, ...], K: int) -> tuple[Fraction, bool]:
    value = _ZERO
    killed = True
    for j in range(1, 2 * d):
        if e[j - 1] == e[j] or e[j] == e[j + 1]:
            continue
        c = _contract(e, j)
        om = _omega(c, K)
        if om == 0:
            continue
        sub, sub_killed = inner(d - 1, c, K)
        if sub_killed:
            continue
        killed = False
        value += (-1 if j % 2 else 1) * sub / om
    return value, killed


def clear_memo() -> None:
    _h_rec.cache_clear()
    _g_rec.cache_clear()


def h_coeff_recurrence(d: int, t: ModeTuple, cap: int = DEFAULT_DEPTH_CAP + 1) -> CoefficientValue:
    """H^d through the contraction recurrence, memoized on (d, tuple, K)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > cap:
        raise CapacityError(f"recurrence depth {d} exceeds cap {cap}")
    _check_len(t, d)
    v, killed = _h_rec(d, t.entries, t.target)
    return CoefficientValue(_scale(v, d - 1, t.L), -(d - 1), killed)


def g_coeff_recurrence(d: int, t: ModeTuple, cap: int = DEFAULT_DEPTH_CAP + 1) -> CoefficientValue:
    """G^d through the same recurrence with G^2 as base and G^1 = 0."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > cap:
        raise CapacityError(f"recurrence depth {d} exceeds cap {cap}")
    _check_len(t, d)
    v, killed = _g_rec(d, t.entries, t.target)
    return CoefficientValue(_scale(v, d - 1, t.L), -(d - 1), killed)


# ---------------------------------------------------------------- tree formula


@dataclass(frozen=True)
class _TreePlan:
    """Precomputed block layout of one tree for fast integer evaluation."""

    tree: DiagramTree
    blocks: tuple[tuple[tuple[int, int], ...], ...]
    sign: int
    sign_g: int

    def sums(self, level: int, pref: Sequence[int]) -> list[int]:
        out = []
        for a, b in self.blocks[level]:
            v = pref[b] - pref[a - 1]
            out.append(v if a % 2 else -v)
        return out


@lru_cache(maxsize=None)
def _plans(depth: int) -> tuple[_TreePlan, ...]:
    return tuple(
        _TreePlan(t, t.blocks, (-1) ** sum(t.branches), (-1) ** sum(t.branches[1:]))
        for t in generate_forest(depth, cap=max(depth, DEFAULT_DEPTH_CAP))
    )


def _prefix(e: Sequence[int]) -> list[int]:
    pref = [0]
    for i, k in enumerate(e):
        pref.append(pref[-1] + (k if i % 2 == 0 else -k))
    return pref


def _tree_levels(plan: _TreePlan, pref: Sequence[int], K: int, first: int) -> tuple[bool, int]:
    """Check A_k for k = first..D-1 and return the product of the level forms.

    Returns ``(live, product)`` where product multiplies the quadratic form on
    level k for each checked k.
    """
    D = plan.tree.depth
    prod = 1
    below = plan.sums(D, pref) if D >= first else None
    for k in range(D - 1, first - 1, -1):
        level = plan.sums(k, pref)
        l = plan.tree.branches[k]
        if below[l - 1] == below[l] or below[l] == below[l + 1]:
            return False, 0
        om = alternating_square_sum(level) - K * K
        if om == 0:
            return False, 0
        prod *= om
        below = level
    return True, prod


def h_tree_numerator(d: int, e: Sequence[int], K: int) -> tuple[Fraction, bool]:
    if d == 1:
        return Fraction(1), False
    pref = _prefix(e)
    value = _ZERO
    killed = True
    for plan in _plans(d - 1):
        live, prod = _tree_levels(plan, pref, K, 0)
        if live:
            killed = False
            value += Fraction(plan.sign, prod)
    return value, killed


def g_tree_numerator(d: int, e: Sequence[int], K: int) -> tuple[Fraction, bool]:
    if d == 1:
        return _ZERO, True
    pref = _prefix(e)
    value = _ZERO
    killed = True
    for plan in _plans(d - 1):
        if plan.tree.branches[0] != 1:
            # G^2 depends on the five level-1 sums only, not on l_0
            continue
        live, prod = _tree_levels(plan, pref, K, 1)
        if not live:
            continue
        v = plan.sums(1, pref)
        om5 = alternating_square_sum(v) - K * K
        if om5 == 0:
            continue
        pattern = (
            int(v[0] == v[1] == v[2]),
            -int(v[1] == v[2] == v[3]),
            int(v[2] == v[3] == v[4]),
            -int(v[3] == v[4] == K),
        )
        if not any(pattern):
            continue
        killed = False
        value += Fraction(plan.sign_g * sum(pattern), om5 * prod)
    return value, killed


def h_coeff_trees(d: int, t: ModeTuple, cap: int = DEFAULT_DEPTH_CAP + 1) -> CoefficientValue:
    """H^d as a signed sum over the forest of depth d-1."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d - 1 > cap:
        raise CapacityError(f"forest depth {d - 1} exceeds cap {cap}")
    _check_len(t, d)
    v, killed = h_tree_numerator(d, t.entries, t.target)
    return CoefficientValue(_scale(v, d - 1, t.L), -(d - 1), killed)


def g_coeff_trees(d: int, t: ModeTuple, cap: int = DEFAULT_DEPTH_CAP + 1) -> CoefficientValue:
    """G^d from the forest of depth d-1 with the B pattern on level 1.

    The level-0 branch does not enter (only l_0 = 1 trees are visited), and each
    term carries ``(-1)^(s+1+l_1+...+l_{d-2})`` with the level-1 form squared at
    the first normal-form step.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if d - 1 > cap:
        raise CapacityError(f"forest depth {d - 1} exceeds cap {cap}")
    _check_len(t, d)
    v, killed = g_tree_numerator(d, t.entries, t.target)
    return CoefficientValue(_scale(v, d - 1, t.L), -(d - 1), killed)


# ---------------------------------------------------------------- vanishing


def all_constraints_live(d: int, e: Sequence[int], K: int) -> bool:
    """True when every tree of the depth d-1 forest has all A_k live."""
    pref = _prefix(e)
    return all(_tree_levels(plan, pref, K, 0)[0] for plan in _plans(d - 1))


@dataclass
class VanishingReport:
    d: int
    box: int | None
    L: int
    resonance_points: int = 0
    constrained_points: int = 0
    violations: int = 0
    witnesses: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "box": self.box,
            "L": self.L,
            "resonance_points": self.resonance_points,
            "constrained_points": self.constrained_points,
            "violations": self.violations,
            "witnesses": self.witnesses,
        }


def _check_points(report: VanishingReport, points: Iterable[tuple[tuple[int, ...], int]], max_witnesses: int) -> None:
    d = report.d
    for e, K in points:
        report.resonance_points += 1
        if not all_constraints_live(d, e, K):
            continue
        report.constrained_points += 1
        v, _ = h_tree_numerator(d, e, K)
        if v != 0:
            report.violations += 1
            if len(report.witnesses) < max_witnesses:
                report.witnesses.append(
                    {"entries": list(e), "K": K, "value": str(_scale(v, d - 1, report.L))}
                )


def verify_vanishing(d: int, box: int, L: int = 1, *, max_work: int = 5 * 10**7, max_witnesses: int = 10) -> VanishingReport:
    """Exhaustively check H^d = 0 on the constrained resonance set in a box."""
    if d < 2:
        raise ValueError("the vanishing check needs d >= 2")
    if d - 1 > DEFAULT_DEPTH_CAP:
        raise CapacityError(f"forest depth {d - 1} exceeds cap {DEFAULT_DEPTH_CAP}")
    work = (2 * box + 1) ** (2 * d)
    if work > max_work:
        raise CapacityError(f"box enumeration of {work} heads exceeds max_work={max_work}")
    report = VanishingReport(d, box, L)
    _check_points(report, ((t.entries, t.target) for t in enumerate_resonances(d, box, L)), max_witnesses)
    return report


def sample_resonance_point(d: int, rng: random.Random, radius: int = 12, u_radius: int | None = None) -> tuple[tuple[int, ...], int]:
    """Draw a random (2d+1)-tuple on the resonance surface.

    The first ``2d - 1`` entries are uniform in ``[-radius, radius]``.  With
    ``A``, ``B`` their alternating sum and square sum, writing
    ``x = K_{2d}``, ``y = K_{2d+1}``, ``u = y - x`` the surface becomes
    ``u (x + y) = (A + u)^2 - B`` with ``K = A + u``, so admissible ``u`` are
    found by a divisibility and parity scan.
    """
    if u_radius is None:
        u_radius = 4 * radius
    n_head = 2 * d - 1
    while True:
        head = tuple(rng.randint(-radius, radius) for _ in range(n_head))
        A = alternating_sum(head)
        B = alternating_square_sum(head)
        options = []
        for u in range(-u_radius, u_radius + 1):
            if u == 0:
                continue
            num = (A + u) ** 2 - B
            if num % u:
                continue
            s = num // u
            if (s - u) % 2:
                continue
            options.append(((s - u) // 2, (s + u) // 2, A + u))
        if not options:
            continue
        x, y, K = rng.choice(options)
        return head + (x, y), K


def verify_vanishing_sampled(d: int, n_points: int, seed: int = 0, L: int = 1, radius: int = 12,
                             max_draws: int = 10**6, max_witnesses: int = 10) -> VanishingReport:
    """Check H^d = 0 on ``n_points`` random constrained resonance points."""
    if d < 2:
        raise ValueError("the vanishing check needs d >= 2")
    rng = random.Random(seed)
    report = VanishingReport(d, None, L)
    draws = 0
    while report.constrained_points < n_points:
        draws += 1
        if draws > max_draws:
            break
        _check_points(report, [sample_resonance_point(d, rng, radius)], max_witnesses)
    return report
