"""Multilinear forms built from the normal-form coefficients, and Q_K / P_K.

A form is a table of tuples with a real weight each.  On a state ``d`` with
running integrals ``I_K = int_0^t |d_K|^2`` it evaluates to

    sum_rows w * d_K1 conj(d_K2) ... d_K(2d+1) * e(Omega t - eps^2/(2 pi L^2) (I_1 - I_2 + ... - I_K))

Along the limit profile ``f(s, K) = exp(i lambda_K s) f0(K)`` every row is a
single complex exponential in time, so time integrals of the forms (and of
their products) are evaluated in closed form instead of by quadrature.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .coefficients import _plans
from .errors import CapacityError

__all__ = [
    "FormTable",
    "ExpSum",
    "support_tuples",
    "h_values",
    "g_values",
    "build_form",
    "QFunctional",
    "build_q_functional",
    "q_functional",
    "p_functional",
    "normal_form_c",
    "DEFAULT_MAX_BOX",
]

DEFAULT_MAX_BOX = 16
_MAX_HEADS = 4 * 10**7


# ---------------------------------------------------------------- tuples


def _alt(n: int) -> np.ndarray:
    return np.array([1 if i % 2 == 0 else -1 for i in range(n)], dtype=np.int64)


def support_tuples(n: int, support: Sequence[int], K: int, kind: str = "all") -> np.ndarray:
    """Rows of n entries from ``support`` with alternating sum K.

    ``kind`` selects the quadratic form: ``"resonant"`` (zero), ``"nonresonant"``
    (nonzero) or ``"all"``.  Rows are in lexicographic order.
    """
    if n % 2 == 0 or n < 3:
        raise ValueError("tuples have odd length >= 3")
    sup = np.array(sorted(set(int(k) for k in support)), dtype=np.int64)
    if sup.size == 0:
        return np.empty((0, n), dtype=np.int64)
    sgn = _alt(n)
    out = []
    if kind == "resonant":
        heads = sup.size ** (n - 2)
        if heads > _MAX_HEADS:
            raise CapacityError(f"{heads} heads exceed the enumeration cap")
        H = _grid(sup, n - 2)
        a = H @ sgn[: n - 2]
        b = (H * H) @ sgn[: n - 2]
        u = K - a  # y - x
        rhs = K * K - b  # y^2 - x^2
        nz = u != 0
        safe = np.where(nz, u, 1)
        ok = nz & (rhs % safe == 0)
        s = np.where(ok, rhs // safe, 0)
        ok &= (s - u) % 2 == 0
        x, y = (s - u) // 2, (s + u) // 2
        ok &= np.isin(x, sup) & np.isin(y, sup)
        rows = np.concatenate([H[ok], x[ok, None], y[ok, None]], axis=1)
        out.append(rows)
        zero = np.nonzero(~nz & (rhs == 0))[0]
        if zero.size:
            rep = np.repeat(zero, sup.size)
            free = np.tile(sup, zero.size)
            out.append(np.concatenate([H[rep], free[:, None], free[:, None]], axis=1))
        rows = np.concatenate(out) if out else np.empty((0, n), np.int64)
    else:
        heads = sup.size ** (n - 1)
        if heads > _MAX_HEADS:
            raise CapacityError(f"{heads} heads exceed the enumeration cap")
        H = _grid(sup, n - 1)
        y = K - H @ sgn[: n - 1]
        ok = np.isin(y, sup)
        rows = np.concatenate([H[ok], y[ok, None]], axis=1)
        if kind != "all":
            om = (rows * rows) @ sgn - K * K
            rows = rows[om != 0] if kind == "nonresonant" else rows[om == 0]
    if rows.size:
        order = np.lexsort(rows.T[::-1])
        rows = rows[order]
    return rows


def _grid(sup: np.ndarray, m: int) -> np.ndarray:
    if m == 0:
        return np.empty((1, 0), dtype=np.int64)
    mesh = np.meshgrid(*([sup] * m), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


# ---------------------------------------------------------------- coefficients


def _prefix_rows(E: np.ndarray) -> np.ndarray:
    signed = E * _alt(E.shape[1])
    return np.concatenate([np.zeros((E.shape[0], 1), dtype=np.int64), np.cumsum(signed, axis=1)], axis=1)


def _level_sums(pref: np.ndarray, blocks) -> list[np.ndarray]:
    return [(pref[:, b] - pref[:, a - 1]) * (1 if a % 2 else -1) for a, b in blocks]


def _altsq(cols: list[np.ndarray]) -> np.ndarray:
    s = np.zeros_like(cols[0])
    for i, c in enumerate(cols):
        s = s + c * c if i % 2 == 0 else s - c * c
    return s


def _levels(plan, pref: np.ndarray, K: np.ndarray, first: int) -> tuple[np.ndarray, np.ndarray]:
    D = plan.tree.depth
    R = pref.shape[0]
    live = np.ones(R, dtype=bool)
    prod = np.ones(R, dtype=float)
    below = _level_sums(pref, plan.blocks[D])
    for k in range(D - 1, first - 1, -1):
        level = _level_sums(pref, plan.blocks[k])
        l = plan.tree.branches[k]
        live &= (below[l - 1] != below[l]) & (below[l] != below[l + 1])
        om = _altsq(level) - K * K
        live &= om != 0
        prod *= np.where(om == 0, 1, om)
        below = level
    return live, prod


def h_values(d: int, E: np.ndarray, K: np.ndarray | int) -> np.ndarray:
    """H^d in integer-numerator units (no powers of L or 2 pi), row by row."""
    E = np.asarray(E, dtype=np.int64)
    R = E.shape[0]
    K = np.broadcast_to(np.asarray(K, dtype=np.int64), (R,))
    if d == 1:
        return np.ones(R)
    pref = _prefix_rows(E)
    val = np.zeros(R)
    for plan in _plans(d - 1):
        live, prod = _levels(plan, pref, K, 0)
        val += np.where(live, plan.sign / prod, 0.0)
    return val


def g_values(d: int, E: np.ndarray, K: np.ndarray | int) -> np.ndarray:
    """G^d in integer-numerator units, row by row."""
    E = np.asarray(E, dtype=np.int64)
    R = E.shape[0]
    K = np.broadcast_to(np.asarray(K, dtype=np.int64), (R,))
    if d == 1:
        return np.zeros(R)
    pref = _prefix_rows(E)
    val = np.zeros(R)
    for plan in _plans(d - 1):
        if plan.tree.branches[0] != 1:
            continue
        live, prod = _levels(plan, pref, K, 1)
        v = _level_sums(pref, plan.blocks[1])
        om5 = _altsq(v) - K * K
        pattern = (
            (v[0] == v[1]) & (v[1] == v[2]),
            -((v[1] == v[2]) & (v[2] == v[3])).astype(int),
            (v[2] == v[3]) & (v[3] == v[4]),
            -((v[3] == v[4]) & (v[4] == K)).astype(int),
        )
        pat = sum(p.astype(int) for p in pattern)
        ok = live & (om5 != 0) & (pat != 0)
        val += np.where(ok, plan.sign_g * pat / np.where(ok, om5 * prod, 1.0), 0.0)
    return val


# ---------------------------------------------------------------- forms


@dataclass(frozen=True)
class FormTable:
    """Rows, targets and real weights of one multilinear form.

    ``with_D`` marks the S form, whose rows are multiplied by the modulus
    combination ``D = |d_1|^2 - |d_2|^2 + ... - |d_K|^2`` at evaluation.
    """

    name: str
    degree: int
    L: int
    rows: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    omega: np.ndarray  # quadratic form in lattice units
    with_D: bool = False

    @property
    def arity(self) -> int:
        return 2 * self.degree + 1

    def __len__(self) -> int:
        return self.rows.shape[0]

    def _mono(self, amps: np.ndarray, N: int) -> np.ndarray:
        idx = self.rows + N
        vals = amps[idx]
        vals[:, 1::2] = np.conj(vals[:, 1::2])
        return np.prod(vals, axis=1)

    def _dfactor(self, moduli2: np.ndarray, N: int) -> np.ndarray:
        sgn = _alt(self.arity)
        return moduli2[self.rows + N] @ sgn - moduli2[self.targets + N]

    def evaluate(self, amps: np.ndarray, N: int, t: float = 0.0, integrals: np.ndarray | None = None,
                 eps: float = 0.0) -> np.ndarray:
        """Value at every box target for a state given on the box ``|k| <= N``."""
        amps = np.asarray(amps, dtype=complex)
        M = 2 * N + 1
        out = np.zeros(M, dtype=complex)
        if not len(self):
            return out
        phase = self.omega * t
        if integrals is not None and eps:
            I = np.asarray(integrals, dtype=float)
            phase = phase - eps**2 / (2 * math.pi * self.L**2) * self._dfactor(I, N)
        terms = self.weights * self._mono(amps, N) * np.exp(2j * np.pi * phase)
        if self.with_D:
            terms = terms * self._dfactor(np.abs(amps) ** 2, N)
        np.add.at(out, self.targets + N, terms)
        return out

    def exp_terms(self, f0: np.ndarray, lam: np.ndarray, N: int, eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(targets, amplitudes, frequencies)`` of the form along ``exp(i lam s) f0``.

        Frequencies are angular (rad per unit time) and include the modulus
        correction ``-eps^2 D / L^2`` of the phase, D being constant in time.
        """
        if not len(self):
            return self.targets, np.zeros(0, complex), np.zeros(0)
        sgn = _alt(self.arity)
        p = np.abs(f0) ** 2
        D = self._dfactor(p, N)
        amp = self.weights * self._mono(np.asarray(f0, dtype=complex), N)
        if self.with_D:
            amp = amp * D
        freq = lam[self.rows + N] @ sgn + 2 * math.pi * self.omega - eps**2 / self.L**2 * D
        return self.targets, amp, freq


def build_form(name: str, d: int, support: Iterable[int], targets: Iterable[int], L: int) -> FormTable:
    """Tabulate one of the named forms over tuples drawn from ``support``.

    Names: ``H``/``G`` (resonant rows, weight H^d or G^d), ``F``/``E`` (nonresonant
    rows, weight H^d/(2 pi Omega) or G^d/(2 pi Omega)) and ``S`` (nonresonant
    rows of arity 2d+1, weight (H^d + G^d)/(2 pi Omega), multiplied by D; the
    S^3 form of Q_K is ``build_form("S", 2, ...)``).
    """
    support = sorted(set(int(k) for k in support))
    n = 2 * d + 1
    kind = "resonant" if name in ("H", "G") else "nonresonant"
    if name == "S" and d < 2:
        raise ValueError("the S form needs d >= 2")
    chunks_r, chunks_t = [], []
    for K in targets:
        E = support_tuples(n, support, int(K), kind)
        chunks_r.append(E)
        chunks_t.append(np.full(E.shape[0], int(K), dtype=np.int64))
    rows = np.concatenate(chunks_r) if chunks_r else np.empty((0, n), np.int64)
    tg = np.concatenate(chunks_t) if chunks_t else np.empty(0, np.int64)
    om_num = (rows * rows) @ _alt(n) - tg * tg if rows.size else np.zeros(0, np.int64)
    omega = om_num / L**2
    if name == "S":
        coef = h_values(d, rows, tg) + g_values(d, rows, tg) if rows.size else np.zeros(0)
    elif name in ("H", "F"):
        coef = h_values(d, rows, tg) if rows.size else np.zeros(0)
    elif name in ("G", "E"):
        coef = g_values(d, rows, tg) if rows.size else np.zeros(0)
    else:
        raise ValueError(f"unknown form {name!r}")
    coef = coef * (L ** (2 * (d - 1))) / (2 * math.pi) ** (d - 1)
    if name in ("F", "E", "S"):
        coef = coef / (2 * math.pi * np.where(omega == 0, 1.0, omega))
    keep = coef != 0
    return FormTable(name + str(d if name != "S" else d + 1), d, L, rows[keep], tg[keep], coef[keep], omega[keep],
                     with_D=name == "S")


# ---------------------------------------------------------------- exponential sums


def _phi1(w: np.ndarray, t: float) -> np.ndarray:
    """int_0^t exp(i w s) ds."""
    x = w * t
    small = np.abs(x) < 1e-6
    ws = np.where(small, 1.0, w)
    big = (np.exp(1j * x) - 1.0) / (1j * ws)
    ser = t * (1 + 1j * x / 2 - x * x / 6 - 1j * x**3 / 24)
    return np.where(small, ser, big)


def _phi2(w: np.ndarray, t: float) -> np.ndarray:
    """int_0^t int_0^s exp(i w r) dr ds."""
    x = w * t
    small = np.abs(x) < 1e-4
    ws = np.where(small, 1.0, w)
    big = ((np.exp(1j * x) - 1.0) / (1j * ws) - t) / (1j * ws)
    ser = t * t * (0.5 + 1j * x / 6 - x * x / 24 - 1j * x**3 / 120)
    return np.where(small, ser, big)


@dataclass(frozen=True)
class ExpSum:
    """``sum_j c_j exp(i w_j t)`` with helpers for its first two antiderivatives."""

    amps: np.ndarray
    freqs: np.ndarray

    def __call__(self, t: float) -> complex:
        return complex(np.sum(self.amps * np.exp(1j * self.freqs * t)))

    def integral(self, t: float) -> complex:
        return complex(np.sum(self.amps * _phi1(self.freqs, t)))

    def double_integral(self, t: float) -> complex:
        return complex(np.sum(self.amps * _phi2(self.freqs, t)))

    def __mul__(self, other: "ExpSum") -> "ExpSum":
        a = np.multiply.outer(self.amps, other.amps).ravel()
        w = np.add.outer(self.freqs, other.freqs).ravel()
        return ExpSum(a, w)

    def conj(self) -> "ExpSum":
        return ExpSum(np.conj(self.amps), -self.freqs)

    def __add__(self, other: "ExpSum") -> "ExpSum":
        return ExpSum(np.concatenate([self.amps, other.amps]), np.concatenate([self.freqs, other.freqs]))

    def compress(self, rtol: float = 1e-12) -> "ExpSum":
        """Merge terms whose frequencies agree to ``rtol`` (relative to the largest)."""
        if self.freqs.size == 0:
            return self
        q = rtol * max(1.0, float(np.abs(self.freqs).max()))
        key = np.round(self.freqs / q).astype(np.int64)
        uniq, inv = np.unique(key, return_inverse=True)
        amps = np.zeros(uniq.size, dtype=complex)
        np.add.at(amps, inv, self.amps)
        freqs = np.zeros(uniq.size)
        np.add.at(freqs, inv, self.freqs)
        freqs /= np.bincount(inv)
        keep = amps != 0
        return ExpSum(amps[keep], freqs[keep])

    def scale(self, c: complex) -> "ExpSum":
        return ExpSum(self.amps * c, self.freqs)

    @classmethod
    def empty(cls) -> "ExpSum":
        return cls(np.zeros(0, complex), np.zeros(0))


def _split(form: FormTable, f0: np.ndarray, lam: np.ndarray, N: int, eps: float) -> dict[int, ExpSum]:
    tg, amp, freq = form.exp_terms(f0, lam, N, eps)
    out: dict[int, ExpSum] = {}
    for K in np.unique(tg).tolist():
        sel = tg == K
        out[K] = ExpSum(amp[sel], freq[sel])
    return out


# ---------------------------------------------------------------- Q and P


@dataclass
class QFunctional:
    """Q_K and P_K of the limit profile, with closed-form time integrals.

    ``Q_K(t) = (2 eps^2/L^2) Re(F^1_K(f) conj f_K)
               - (2 eps^6/L^6) Im int_0^t [(H^3 + G^3 + S^3)_K(f) conj f_K
                                          + 2 H^2_K(f) conj F^1_K(f) + H^2_K(f) conj E^1_K(f)] ds``

    and ``P_K`` drops the boundary term.  ``F^1_K(conj f)`` is read as the
    conjugate of ``F^1_K(f)``; the cross term appears twice in the display and is
    kept twice.
    """

    L: int
    N: int
    eps: float
    T_R: float
    f0: np.ndarray
    lam: np.ndarray
    boundary: dict[int, ExpSum]
    integrand: dict[int, ExpSum]
    components: dict[str, dict[int, ExpSum]]

    def _get(self, table: dict[int, ExpSum], K: int) -> ExpSum:
        return table.get(K, ExpSum.empty())

    def q(self, K: int, t: float) -> float:
        c = 2 * self.eps**2 / self.L**2
        c6 = 2 * self.eps**6 / self.L**6
        return c * self._get(self.boundary, K)(t).real - c6 * self._get(self.integrand, K).integral(t).imag

    def p(self, K: int, t: float) -> float:
        c6 = 2 * self.eps**6 / self.L**6
        return -c6 * self._get(self.integrand, K).integral(t).imag

    def q_integral(self, K: int, t: float) -> float:
        """``int_0^t Q_K(s) ds``."""
        c = 2 * self.eps**2 / self.L**2
        c6 = 2 * self.eps**6 / self.L**6
        return c * self._get(self.boundary, K).integral(t).real - c6 * self._get(self.integrand, K).double_integral(t).imag

    def component(self, name: str, K: int, t: float) -> complex:
        """Value of one constituent form (F1, E1, H2, H3, G3, S3) along f at time t."""
        return self._get(self.components[name], K)(t)

    def series(self, K: int, times: Sequence[float], which: str = "Q") -> np.ndarray:
        fn = self.q if which == "Q" else self.p
        return np.array([fn(K, float(t)) for t in times])


def _check_box(f0: Mapping[int, complex] | np.ndarray, N: int | None, max_box: int) -> tuple[np.ndarray, int]:
    if isinstance(f0, Mapping):
        keys = [int(k) for k in f0]
        N = max([abs(k) for k in keys] + [0]) if N is None else N
        arr = np.zeros(2 * N + 1, dtype=complex)
        for k, v in f0.items():
            if abs(int(k)) > N:
                raise ValueError(f"mode {k} outside the box |k| <= {N}")
            arr[int(k) + N] = v
    else:
        arr = np.asarray(f0, dtype=complex)
        N = (arr.size - 1) // 2
    if N > max_box:
        raise CapacityError(f"mode box N={N} exceeds the Q-functional cap {max_box}")
    return arr, N


def build_q_functional(f0: Mapping[int, complex] | np.ndarray, L: int, eps: float, *, N: int | None = None,
                       targets: Iterable[int] | None = None, max_box: int = DEFAULT_MAX_BOX) -> QFunctional:
    """Tabulate every constituent form on the support of ``f0``."""
    arr, N = _check_box(f0, N, max_box)
    if eps <= 0:
        raise ValueError("Q needs eps > 0 (T_R = L^2 / eps^4)")
    T_R = L * L / eps**4
    lam = np.abs(arr) ** 4 / T_R
    support = [k for k in range(-N, N + 1) if arr[k + N] != 0]
    targets = list(range(-N, N + 1)) if targets is None else [int(k) for k in targets]
    fK = {K: ExpSum(np.array([np.conj(arr[K + N])]), np.array([-lam[K + N]])) for K in targets}
    if support:
        F1 = _split(build_form("F", 1, support, targets, L), arr, lam, N, eps)
        E1 = _split(build_form("E", 1, support, targets, L), arr, lam, N, eps)
        H2 = _split(build_form("H", 2, support, targets, L), arr, lam, N, eps)
        H3 = _split(build_form("H", 3, support, targets, L), arr, lam, N, eps)
        G3 = _split(build_form("G", 3, support, targets, L), arr, lam, N, eps)
        S3 = _split(build_form("S", 2, support, targets, L), arr, lam, N, eps)
    else:
        F1 = E1 = H2 = H3 = G3 = S3 = {}
    empty = ExpSum.empty()
    boundary, integrand = {}, {}
    for K in targets:
        f_bar = fK[K]
        g = lambda tab: tab.get(K, empty)  # noqa: E731
        boundary[K] = (g(F1) * f_bar).compress()
        j = (g(H3) + g(G3) + g(S3)) * f_bar
        cross = g(H2) * g(F1).conj()
        j = j + cross.scale(2.0) + g(H2) * g(E1).conj()
        integrand[K] = j.compress()
    comps = {"F1": F1, "E1": E1, "H2": H2, "H3": H3, "G3": G3, "S3": S3}
    return QFunctional(L, N, eps, T_R, arr, lam, boundary, integrand, comps)


def q_functional(f0: Mapping[int, complex] | np.ndarray, K: int, times: Sequence[float], L: int, eps: float,
                 **kw) -> np.ndarray:
    """Q_K(f) on a time grid."""
    return build_q_functional(f0, L, eps, targets=[K], **kw).series(K, times, "Q")


def p_functional(f0: Mapping[int, complex] | np.ndarray, K: int, times: Sequence[float], L: int, eps: float,
                 **kw) -> np.ndarray:
    """P_K(f) on a time grid."""
    return build_q_functional(f0, L, eps, targets=[K], **kw).series(K, times, "P")


def normal_form_c(ladder, P: int, *, support: Iterable[int] | None = None) -> np.ndarray:
    """``c_K = d_K - sum_{d <= P} (eps^2/L^2)^d (F^d_K + E^d_K)`` at every ladder sample.

    ``ladder`` is a :class:`~nlsnf.simulator.PhaseLadder` (anything with ``d``,
    ``times``, ``integrals``, ``L``, ``N`` and ``eps``).  The forms run over all
    in-box nonresonant tuples unless ``support`` restricts them.
    """
    if P not in (1, 2):
        raise ValueError("P must be 1 or 2")
    L, N, eps = ladder.L, ladder.N, ladder.eps
    d = np.atleast_2d(np.asarray(ladder.d, dtype=complex))
    c = d.copy()
    if eps == 0:
        return c
    sup = range(-N, N + 1) if support is None else support
    box = range(-N, N + 1)
    for deg in range(1, P + 1):
        scale = (eps**2 / L**2) ** deg
        forms = [build_form(name, deg, sup, box, L) for name in ("F", "E")]
        for i, t in enumerate(ladder.times):
            for form in forms:
                c[i] -= scale * form.evaluate(d[i], N, float(t), ladder.integrals[i], eps)
    return c
