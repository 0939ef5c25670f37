"""Galerkin-truncated cubic NLS on the lattice, in the interaction picture.

With ``u_K = e(K^2 t) a_K`` the profiles satisfy

    -i d/dt a_K = (eps^2 / L^2) sum_{S=0, in box} a_K1 conj(a_K2) a_K3 e(Omega t)

so the stiff linear rotation is removed exactly and only the slow nonlinear
dynamics is integrated.  The default scheme is the two-stage Gauss-Legendre
collocation method (order 4), which conserves the quadratic mass of the
truncated system up to the fixed-point tolerance; classical RK4 is available
for comparison.  The phase ladder a -> b -> d and the limit-profile
comparison live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import NumericalFailure
from .lattice import japanese_bracket
from .mainterm import quintic_rate
from .state import SpectralState

__all__ = [
    "SCHEMES",
    "Trajectory",
    "PhaseLadder",
    "LimitProfile",
    "evolve",
    "phase_ladder",
    "limit_profile_eval",
    "error_metric",
    "interaction_terms",
    "interaction_field",
    "kernel_field",
    "max_phase_step",
    "resonant_time",
]

SCHEMES = ("gauss4", "rk4")

_SQ3 = math.sqrt(3.0)
_C1 = 0.5 - _SQ3 / 6
_C2 = 0.5 + _SQ3 / 6
_A12 = 0.25 - _SQ3 / 6
_A21 = 0.25 + _SQ3 / 6


def resonant_time(L: int, eps: float) -> float:
    return L * L / eps**4


def interaction_terms(N: int) -> tuple[np.ndarray, ...]:
    """Flat term lists of the cubic sum, grouped by target index.

    The summand is symmetric under ``K1 <-> K3``, so only ``k1 <= k3`` is stored
    with weight 2 off the diagonal.  Returns ``(starts, i1, i2, i3, om, wt)``
    with box indices ``k + N`` and integer numerators ``om`` of the cubic form.
    """
    i1, i2, i3, om, wt = [], [], [], [], []
    starts = [0]
    for k in range(-N, N + 1):
        for k1 in range(-N, N + 1):
            for k3 in range(k1, N + 1):
                k2 = k1 + k3 - k
                if abs(k2) > N:
                    continue
                i1.append(k1 + N)
                i2.append(k2 + N)
                i3.append(k3 + N)
                om.append(k1 * k1 - k2 * k2 + k3 * k3 - k * k)
                wt.append(1.0 if k1 == k3 else 2.0)
        starts.append(len(i1))
    return (
        np.array(starts, dtype=np.int64),
        np.array(i1, dtype=np.int64),
        np.array(i2, dtype=np.int64),
        np.array(i3, dtype=np.int64),
        np.array(om, dtype=np.int64),
        np.array(wt, dtype=np.float64),
    )


def max_phase_step(N: int, L: int, dt: float) -> float:
    """Largest phase advance ``2 pi |Omega| dt`` of any in-box cubic term."""
    om = interaction_terms(N)[4]
    return 2 * math.pi * (int(np.abs(om).max()) if om.size else 0) / (L * L) * dt


def interaction_field(a: np.ndarray, t: float, L: int, eps: float) -> np.ndarray:
    """d/dt a_K from the flat term lists (reference path for the kernel)."""
    a = np.asarray(a, dtype=complex)
    N = (a.size - 1) // 2
    starts, i1, i2, i3, om, wt = interaction_terms(N)
    # integer Omega makes the phase L^2-periodic; reducing t keeps the argument small
    t = math.fmod(t, float(L * L))
    terms = wt * a[i1] * np.conj(a[i2]) * a[i3] * np.exp(2j * np.pi * om * t / (L * L))
    sums = np.add.reduceat(terms, starts[:-1]) if terms.size else np.zeros(a.size, complex)
    return 1j * eps**2 / (L * L) * sums


def kernel_field(a: np.ndarray, t: float, L: int, eps: float) -> np.ndarray:
    """The compiled right-hand side, exposed for testing."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    N = (a.size - 1) // 2
    pw = np.empty(2 * N * N + 1, np.complex128)
    _phase_table(float(t), L, N * N, pw)
    out = np.empty_like(a)
    _field(a, pw, N * N, N, eps**2 / (L * L), np.empty_like(a), np.empty(4 * N + 1, np.complex128), out)
    return out


# ---------------------------------------------------------------- kernels


@njit(cache=True)
def _phase_table(t, L, nmax, pw):
    # e(n t / L^2) is L^2-periodic in t for integer n, so reduce first
    period = float(L * L)
    th = 2.0 * math.pi * (t - period * math.floor(t / period)) / period
    z = complex(math.cos(th), math.sin(th))
    pw[nmax] = 1.0
    zz = 1.0 + 0.0j
    for n in range(1, nmax + 1):
        if n % 32 == 0:
            zz = complex(math.cos(th * n), math.sin(th * n))
        else:
            zz = zz * z
        pw[nmax + n] = zz
        pw[nmax - n] = zz.conjugate()


@njit(cache=True)
def _field(a, pw, nmax, N, coef, u, c, out):
    """i coef sum_{S=0, in box} a1 conj(a2) a3 e(Omega t), through the modes u = e(k^2 t) a.

    The phase factorizes over entries, and for fixed m = k1 - K the inner sum
    over k3 only depends on m, so it is tabulated once as ``c[m + 2N]``.
    """
    M = a.shape[0]
    for i in range(M):
        k = i - N
        u[i] = pw[nmax + k * k] * a[i]
    for m in range(-2 * N, 2 * N + 1):
        acc = 0.0j
        lo = max(-N, -N - m)
        hi = min(N, N - m)
        for k3 in range(lo, hi + 1):
            acc += u[k3 + m + N].conjugate() * u[k3 + N]
        c[m + 2 * N] = acc
    for i in range(M):
        k = i - N
        acc = 0.0j
        for j in range(M):
            acc += u[j] * c[j - i + 2 * N]
        out[i] = 1j * coef * pw[nmax - k * k] * acc


@njit(cache=True)
def _mass(a):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i].real ** 2 + a[i].imag ** 2
    return s


@njit(cache=True)
def _run(a0, t0, h, nsteps, stride, L, N, coef, scheme, tol, maxit, drift_tol):
    """Integrate ``nsteps`` steps; returns samples and a status word.

    status 0: done, 1: fixed-point iteration failed, 2: mass drift above tolerance,
    3: non-finite state.  ``fail_step`` is the step at which the run stopped.
    """
    M = a0.shape[0]
    nsamp = nsteps // stride + 1
    if nsteps % stride:
        nsamp += 1
    times = np.empty(nsamp)
    states = np.empty((nsamp, M), np.complex128)
    integ = np.empty((nsamp, M))
    a = a0.copy()
    I = np.zeros(M)
    nmax = N * N
    u = np.empty(M, np.complex128)
    c = np.empty(4 * N + 1, np.complex128)
    pw1 = np.empty(2 * nmax + 1, np.complex128)
    pw2 = np.empty(2 * nmax + 1, np.complex128)
    pw3 = np.empty(2 * nmax + 1, np.complex128)
    k1 = np.empty(M, np.complex128)
    k2 = np.empty(M, np.complex128)
    k3 = np.empty(M, np.complex128)
    k4 = np.empty(M, np.complex128)
    n1 = np.empty(M, np.complex128)
    n2 = np.empty(M, np.complex128)
    y1 = np.empty(M, np.complex128)
    y2 = np.empty(M, np.complex128)
    mass0 = _mass(a0)
    scale0 = max(mass0, 1e-300)
    max_drift = 0.0
    times[0] = t0
    states[0] = a
    integ[0] = I
    ns = 1
    status = 0
    fail_step = -1
    for s in range(nsteps):
        t = t0 + s * h
        if scheme == 0:
            _phase_table(t + _C1 * h, L, nmax, pw1)
            _phase_table(t + _C2 * h, L, nmax, pw2)
            _field(a, pw1, nmax, N, coef, u, c, k1)
            _field(a, pw2, nmax, N, coef, u, c, k2)
            amax = 0.0
            for i in range(M):
                amax = max(amax, abs(a[i]))
            converged = False
            prev = 1e300
            for it in range(maxit):
                for i in range(M):
                    y1[i] = a[i] + h * (0.25 * k1[i] + _A12 * k2[i])
                    y2[i] = a[i] + h * (_A21 * k1[i] + 0.25 * k2[i])
                _field(y1, pw1, nmax, N, coef, u, c, n1)
                _field(y2, pw2, nmax, N, coef, u, c, n2)
                diff = 0.0
                for i in range(M):
                    diff = max(diff, abs(n1[i] - k1[i]), abs(n2[i] - k2[i]))
                    k1[i] = n1[i]
                    k2[i] = n2[i]
                diff *= h
                if diff <= tol * (1.0 + amax):
                    converged = True
                    break
                # roundoff floor: stop once the increments stop shrinking
                if diff >= prev and diff <= 1e3 * tol * (1.0 + amax):
                    converged = True
                    break
                if not math.isfinite(diff) or (it > 3 and diff > 10.0 * prev):
                    break
                prev = diff
            if not converged:
                status = 1
                fail_step = s
                break
            for i in range(M):
                y1[i] = a[i] + h * (0.25 * k1[i] + _A12 * k2[i])
                y2[i] = a[i] + h * (_A21 * k1[i] + 0.25 * k2[i])
                I[i] += 0.5 * h * (abs(y1[i]) ** 2 + abs(y2[i]) ** 2)
                a[i] = a[i] + 0.5 * h * (k1[i] + k2[i])
        else:
            _phase_table(t, L, nmax, pw1)
            _phase_table(t + 0.5 * h, L, nmax, pw2)
            _phase_table(t + h, L, nmax, pw3)
            _field(a, pw1, nmax, N, coef, u, c, k1)
            for i in range(M):
                y1[i] = a[i] + 0.5 * h * k1[i]
            _field(y1, pw2, nmax, N, coef, u, c, k2)
            for i in range(M):
                y1[i] = a[i] + 0.5 * h * k2[i]
            _field(y1, pw2, nmax, N, coef, u, c, k3)
            for i in range(M):
                y1[i] = a[i] + h * k3[i]
            _field(y1, pw3, nmax, N, coef, u, c, k4)
            for i in range(M):
                an = a[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                I[i] += 0.5 * h * (abs(a[i]) ** 2 + abs(an) ** 2)
                a[i] = an
        last = s == nsteps - 1
        if (s + 1) % stride == 0 or last:
            m = _mass(a)
            if not math.isfinite(m):
                status = 3
                fail_step = s
                break
            drift = abs(m - mass0) / scale0
            if drift > max_drift:
                max_drift = drift
            times[ns] = t0 + (s + 1) * h
            states[ns] = a
            integ[ns] = I
            ns += 1
            if drift > drift_tol:
                status = 2
                fail_step = s
                break
    return times[:ns], states[:ns], integ[:ns], status, fail_step, max_drift


# ---------------------------------------------------------------- trajectory


@dataclass(frozen=True)
class Trajectory:
    """Sampled profiles ``a_K`` with the running integrals of ``|a_K|^2``."""

    L: int
    N: int
    eps: float
    times: np.ndarray
    profiles: np.ndarray
    integrals: np.ndarray
    scheme: str = "gauss4"
    dt: float = 0.0
    max_drift: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def numerators(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def fourier(self) -> np.ndarray:
        """``u_K(t) = e(K^2 t) a_K(t)`` at every sample."""
        k2 = self.numerators.astype(float) ** 2
        period = float(self.L * self.L)
        phase = np.exp(2j * np.pi * np.outer(np.fmod(self.times, period), k2) / period)
        return phase * self.profiles

    def masses(self) -> np.ndarray:
        return (np.abs(self.profiles) ** 2).sum(axis=1) / self.L

    def states(self) -> list[SpectralState]:
        u = self.fourier()
        return [SpectralState(self.L, self.N, u[i], float(t), self.eps) for i, t in enumerate(self.times)]


def evolve(initial: SpectralState, t_end: float, dt: float, *, stride: int = 1, scheme: str = "gauss4",
           drift_tol: float = 1e-8, tol: float = 1e-15, maxit: int = 60,
           phase_limit: float = 3.0, eps: float | None = None) -> Trajectory:
    """Integrate the truncated system from ``initial.t`` to ``t_end``.

    Samples every ``stride`` steps plus the final time.  Raises
    :class:`NumericalFailure` when the relative mass drift exceeds
    ``drift_tol``, when the collocation iteration does not converge, or when a
    step advances some in-box phase by more than ``phase_limit`` radians.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    eps = initial.eps if eps is None else eps
    if eps < 0:
        raise ValueError("eps must be >= 0")
    L, N = initial.L, initial.N
    span = t_end - initial.t
    if span < 0:
        raise ValueError("t_end precedes the initial time")
    nsteps = int(round(span / dt))
    if nsteps and abs(nsteps * dt - span) > 1e-9 * max(1.0, span):
        nsteps = int(math.ceil(span / dt))
    h = span / nsteps if nsteps else dt
    phase_step = max_phase_step(N, L, h)
    diagnostics = {"phase_step": phase_step, "dt": h, "N": N, "L": L, "eps": eps, "scheme": scheme}
    k = initial.numerators().astype(float)
    period = float(L * L)
    a0 = np.exp(-2j * np.pi * math.fmod(initial.t, period) * k * k / period) * initial.amplitudes
    a0 = np.ascontiguousarray(a0, dtype=np.complex128)
    coef = eps * eps / (L * L)
    if eps > 0 and phase_step > phase_limit:
        # one explicit probe step shows what the unresolved step does to the mass
        probe = _run(a0, float(initial.t), float(h), 1, 1, L, N, coef, 1, tol, maxit, math.inf)
        diagnostics["mass_drift"] = float(probe[5])
        raise NumericalFailure(
            f"step {h:g} advances the fastest phase by {phase_step:.3g} rad (> {phase_limit}); "
            "the run would be unresolved", diagnostics)
    times, states, integ, status, fail_step, drift = _run(
        a0, float(initial.t), float(h), nsteps, stride, L, N, coef,
        0 if scheme == "gauss4" else 1, tol, maxit, drift_tol,
    )
    if status:
        reason = {1: "collocation iteration did not converge", 2: "mass drift above tolerance",
                  3: "non-finite state"}[status]
        diagnostics.update(mass_drift=float(drift), failed_at_step=int(fail_step),
                           failed_at_time=float(initial.t + (fail_step + 1) * h))
        raise NumericalFailure(f"{reason} (relative mass drift {drift:.3e})", diagnostics)
    return Trajectory(L, N, eps, times, states, integ, scheme, h, float(drift))


# ---------------------------------------------------------------- phase ladder


@dataclass(frozen=True)
class PhaseLadder:
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    d: np.ndarray
    integrals: np.ndarray  # int_0^t |b_K|^2 ds per sample and mode
    mass_phase: np.ndarray  # (eps^2 / pi L^2) sum |a|^2 t
    L: int
    N: int
    eps: float


def _trapezoid_cumulative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values, dtype=float)
    if len(times) > 1:
        dt = np.diff(times)[:, None]
        out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]), axis=0)
    return out


def phase_ladder(traj: Trajectory, *, quadrature: str = "stepper") -> PhaseLadder:
    """``b = e(-eps^2/(pi L^2) sum|a|^2 t) a`` and ``d = b e(eps^2/(2 pi L^2) int |b|^2)``.

    ``quadrature="stepper"`` uses the integrals accumulated at every time step;
    ``"trapezoid"`` recomputes them on the sampling grid.
    """
    a = traj.profiles
    L, eps = traj.L, traj.eps
    p = np.abs(a) ** 2
    if quadrature == "stepper":
        integ = traj.integrals
    elif quadrature == "trapezoid":
        integ = _trapezoid_cumulative(traj.times, p)
    else:
        raise ValueError("quadrature must be 'stepper' or 'trapezoid'")
    mass_phase = eps**2 / (math.pi * L * L) * p.sum(axis=1) * traj.times
    b = np.exp(-2j * np.pi * mass_phase)[:, None] * a
    d = b * np.exp(2j * np.pi * eps**2 / (2 * math.pi * L * L) * integ)
    return PhaseLadder(traj.times, a, b, d, integ, mass_phase, L, traj.N, eps)


# ---------------------------------------------------------------- limit profile


def limit_profile_eval(f0: complex | dict, t: float, T_R: float, K: int | None = None) -> complex:
    """``f(t/T_R, K) = e(|f0(K)|^4 (t/T_R) / 2 pi) f0(K)``."""
    if isinstance(f0, dict):
        if K is None:
            raise ValueError("K is required when f0 is a mapping")
        v = complex(f0.get(K, 0.0))
    else:
        v = complex(f0)
    tau = t / T_R
    return np.exp(2j * np.pi * abs(v) ** 4 * tau / (2 * math.pi)) * v


@dataclass(frozen=True)
class LimitProfile:
    """Decoupled per-mode rotation ``f(tau, K) = exp(i w_K tau) f0(K)``.

    ``rule="stated"`` uses ``w_K = |f0(K)|^4``.  ``rule="resonant"`` uses the
    quintic resonant multiplier of the truncated system, ``w_K = m_K / L^2``,
    which is what the leading resonant term actually produces.
    """

    f0: np.ndarray
    L: int
    N: int
    rule: str = "stated"

    @property
    def rates(self) -> np.ndarray:
        if self.rule == "stated":
            return np.abs(self.f0) ** 4
        if self.rule == "resonant":
            m = quintic_rate(SpectralState(self.L, self.N, self.f0))
            return m / self.L**2
        raise ValueError("rule must be 'stated' or 'resonant'")

    def __call__(self, tau: float | np.ndarray) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        return np.exp(1j * np.multiply.outer(tau, self.rates)) * self.f0


def error_metric(d_states: np.ndarray | PhaseLadder, f0: np.ndarray | LimitProfile, ell: float,
                 times: Sequence[float] | None = None, *, T_R: float | None = None,
                 L: int | None = None) -> np.ndarray:
    """``sup_K <K>^ell |d_K(t) - f(t/T_R, K)|`` at every sample."""
    if ell <= 1:
        raise ValueError("ell must exceed 1")
    if isinstance(d_states, PhaseLadder):
        lad = d_states
        d, times, L = lad.d, lad.times, lad.L
        if T_R is None:
            T_R = resonant_time(lad.L, lad.eps) if lad.eps > 0 else math.inf
    else:
        d = np.atleast_2d(d_states)
        if times is None or L is None or T_R is None:
            raise ValueError("times, T_R and L are required with raw states")
    N = (d.shape[1] - 1) // 2
    if not isinstance(f0, LimitProfile):
        f0 = LimitProfile(np.asarray(f0, dtype=complex), L, N)
    tau = np.asarray(times, dtype=float) / T_R
    f = f0(tau)
    w = japanese_bracket(np.arange(-N, N + 1) / L) ** ell
    return np.max(w * np.abs(d - f), axis=1)
