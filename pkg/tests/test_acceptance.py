"""Acceptance criteria 1-10, each printing one PASS/FAIL line."""

import math
import random
import time
from pathlib import Path

import numpy as np
import pytest

from acceptance_log import record
from qoracle import q_bruteforce

from nlsnf.chains import admissible_partitions, chain_sum
from nlsnf.cli import run_simulate_config
from nlsnf.coefficients import (
    _h2_num,
    g_coeff_recurrence,
    g_coeff_trees,
    h_coeff_recurrence,
    h_coeff_trees,
    sample_resonance_point,
    verify_vanishing,
    verify_vanishing_sampled,
)
from nlsnf.config import load_config
from nlsnf.errors import DegenerateInputError
from nlsnf.counting import (
    brute_force_cubic,
    count_cubic_resonances,
    divisor_count,
    divisor_count_table,
    scaling_report,
)
from nlsnf.functionals import build_q_functional
from nlsnf.lattice import ModeTuple, enumerate_resonances
from nlsnf.mainterm import quintic_main_term
from nlsnf.simulator import evolve
from nlsnf.state import SpectralState, gaussian_profile

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


# ---------------------------------------------------------------- 1, 2


def test_criterion_1_quintic_vanishing():
    t0 = time.perf_counter()
    reports = [verify_vanishing(2, 8, L) for L in (4, 8)]
    elapsed = time.perf_counter() - t0
    ok = all(r.violations == 0 and r.constrained_points >= 50 for r in reports) and elapsed < 60
    pts = ", ".join(f"L={r.L}: {r.constrained_points} constrained, {r.violations} violations" for r in reports)
    record(1, ok, f"{pts}, {elapsed:.1f} s")
    assert ok


def test_criterion_2_higher_vanishing():
    box = verify_vanishing(3, 4)
    sampled = verify_vanishing_sampled(4, 200, seed=11)
    ok = box.violations == 0 and box.constrained_points > 0
    ok &= sampled.violations == 0 and sampled.constrained_points >= 200
    record(2, ok, f"d=3 box 4: {box.constrained_points} constrained, {box.violations} violations; "
                  f"d=4 sampled: {sampled.constrained_points} constrained, {sampled.violations} violations")
    assert ok


# ---------------------------------------------------------------- 3


def test_criterion_3_dual_paths():
    rng = random.Random(2024)
    mismatches = 0
    checked = 0
    for d in (2, 3):
        for i in range(10_000):
            L = rng.randint(1, 4)
            if i % 2:
                e, K = sample_resonance_point(d, rng, radius=8)
                t = ModeTuple(e, K, L)
            else:
                t = ModeTuple.resonant_target([rng.randint(-8, 8) for _ in range(2 * d + 1)], L)
            for rec, tree in ((h_coeff_recurrence, h_coeff_trees), (g_coeff_recurrence, g_coeff_trees)):
                a, b = rec(d, t), tree(d, t)
                checked += 1
                if a != b or a.two_pi_power != b.two_pi_power:
                    mismatches += 1
    ok = mismatches == 0
    record(3, ok, f"{checked} comparisons (H and G, d=2,3, 10^4 tuples each), {mismatches} mismatches")
    assert ok


# ---------------------------------------------------------------- 4


def _chain_checks(t, d):
    """(mismatches, checks, three-block sum) or None where a chain sum is undefined."""
    n = 2 * d + 1
    bad = checked = 0
    try:
        for k in range(1, d + 1):
            for p in admissible_partitions(n, 2 * k + 1):
                checked += 1
                bad += not chain_sum(k, p, t).equal
        total = sum(chain_sum(1, p, t).value for p in admissible_partitions(n, 3))
    except DegenerateInputError:
        return None
    return bad, checked, total


def test_criterion_4_chain_sums():
    rng = random.Random(4)
    checked = bad = sum_bad = tuples = redrawn = 0
    for d in (1, 2, 3):
        got = 0
        while got < 100:
            e, K = sample_resonance_point(d, rng, radius=12)
            res = _chain_checks(ModeTuple(e, K, rng.randint(1, 3)), d)
            if res is None:
                redrawn += 1
                continue
            got += 1
            bad += res[0]
            checked += res[1]
            sum_bad += d >= 2 and res[2] != 0
        tuples += got
    ok = bad == 0 and sum_bad == 0
    record(4, ok, f"{tuples} tuples (d=1,2,3), {checked} (k, P) checks, {bad} mismatches, "
                  f"{sum_bad} nonzero three-block sums, {redrawn} degenerate draws skipped")
    assert ok


# ---------------------------------------------------------------- 5


def test_criterion_5_main_term():
    N, L = 24, 4
    # direct sum over enumerate_resonances with exact H^2 weights, grouped by target
    by_target: dict[int, tuple[list, list]] = {}
    for t in enumerate_resonances(2, N, L):
        h, killed = _h2_num(t.entries, t.target)
        if killed or h == 0:
            continue
        rows, ws = by_target.setdefault(t.target, ([], []))
        rows.append(t.entries)
        ws.append(float(h))
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        amps = rng.normal(size=2 * N + 1) + 1j * rng.normal(size=2 * N + 1)
        s = SpectralState(L, N, amps)
        for K in range(-N, N + 1):
            rows, ws = by_target.get(K, ([], []))
            idx = np.asarray(rows, dtype=np.int64).reshape(-1, 5) + N
            v = amps[idx]
            mono = v[:, 0] * np.conj(v[:, 1]) * v[:, 2] * np.conj(v[:, 3]) * v[:, 4]
            ref = np.dot(np.asarray(ws), mono) * L * L / (2 * math.pi)
            got = quintic_main_term(s, K)
            worst = max(worst, abs(got - ref) / abs(ref))
    ok = worst < 1e-10
    record(5, ok, f"20 states, box {N}, max relative error {worst:.2e}")
    assert ok


# ---------------------------------------------------------------- 6


def _trial_division(n):
    c = 0
    i = 1
    while i * i <= n:
        if n % i == 0:
            c += 1 if i * i == n else 2
        i += 1
    return c


def test_criterion_6_counting():
    cubic_bad = 0
    mu2s = list(range(-40, 41))
    for mu in range(-40, 41):
        brute = brute_force_cubic(mu, mu2s)
        cubic_bad += sum(count_cubic_resonances(mu, m) != brute[m] for m in mu2s)
    table = divisor_count_table(10**6)
    div_bad = sum(divisor_count(n) != table[n] for n in range(1, 10**6 + 1))
    rng = random.Random(6)
    spot = [rng.randint(1, 10**6) for _ in range(2000)] + list(range(1, 2001)) + [10**6, 720720, 997 * 991]
    trial_bad = sum(divisor_count(n) != _trial_division(n) for n in spot)
    ok = cubic_bad == 0 and div_bad == 0 and trial_bad == 0
    record(6, ok, f"cubic |mu|,|mu'|<=40: {cubic_bad} mismatches; divisors n<=10^6 vs sieve: {div_bad}, "
                  f"vs trial division on {len(spot)} n: {trial_bad}")
    assert ok


# ---------------------------------------------------------------- 7


@pytest.mark.slow
def test_criterion_7_scaling_slope():
    t0 = time.perf_counter()
    rows = scaling_report(2, [4, 8, 16, 32], 2.0, seed=0)
    elapsed = time.perf_counter() - t0
    slope = rows[0].fitted_slope
    ok = slope <= 2.5 and elapsed < 300
    record(7, ok, f"fitted slope {slope:.3f} over L=4..32 (limit 2.5), {elapsed:.0f} s")
    assert ok


# ---------------------------------------------------------------- 8, 9


@pytest.fixture(scope="module")
def trend_run():
    cfg = load_config("simulate", CONFIGS / "trend.ini")
    t0 = time.perf_counter()
    rep = run_simulate_config(cfg)
    return rep, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_8_conservation(trend_run):
    parts = []
    ok = True
    reports = {"trend.ini": trend_run[0]}
    for path in sorted(CONFIGS.glob("*.ini")):
        if path.name not in reports:
            reports[path.name] = run_simulate_config(load_config("simulate", path))
    for name, rep in sorted(reports.items()):
        drift = max(r.mass_drift for r in rep.runs)
        ladder = max(r.ladder_modulus_error for r in rep.runs)
        ok &= drift < 1e-8 and ladder < 1e-12
        parts.append(f"{name}: drift {drift:.1e}, ladder {ladder:.1e}")
    s = SpectralState.from_function(8, 8, gaussian_profile(1.0), eps=0.0)
    traj = evolve(s, 2000.0, 0.1, stride=100)
    const = float(np.max(np.abs(traj.profiles - traj.profiles[0])))
    ok &= const < 1e-10
    parts.append(f"eps=0 profile change {const:.1e}")
    record(8, ok, "; ".join(parts))
    assert ok


@pytest.mark.slow
def test_criterion_9_trend(trend_run):
    rep, elapsed = trend_run
    sups = rep.diagnostics["sup_errors_L8"]
    factor = rep.diagnostics["reduction_factor_L8"]
    res = rep.diagnostics["resonant_rule"]
    ok = rep.flags["monotone_in_eps_L8"] and rep.flags["reduction_in_band_L8"] and elapsed < 1800
    record(9, ok, "sup errors " + ", ".join(f"{v:.4f}" for v in sups) + f", eps0->eps0/2 factor {factor:.3f}, "
           f"{elapsed:.0f} s (resonant-rule profile: " + ", ".join(f"{v:.4f}" for v in res["sup_errors_L8"])
           + f", factor {res['reduction_factor_L8']:.2f})")
    assert ok


# ---------------------------------------------------------------- 10


def test_criterion_10_q_consistency():
    single_max = 0.0
    for k, L, eps in ((0, 4, 0.5), (2, 8, 0.3), (-1, 3, 0.7)):
        f0 = {k: 0.9 - 0.4j}
        Q = build_q_functional(f0, L, eps, N=3)
        for K in range(-3, 4):
            for t in (0.0, 0.37 * Q.T_R, Q.T_R):
                single_max = max(single_max, abs(Q.q(K, t)))
                for name in Q.components:
                    single_max = max(single_max, abs(Q.component(name, K, t)))
    worst = 0.0
    for f0, L, eps in (({0: 1.0, 1: 0.7 - 0.2j}, 3, 0.5), ({-1: 0.5j, 0: 0.8 + 0.1j}, 4, 0.6)):
        Q = build_q_functional(f0, L, eps)
        # two-mode Q vanishes, so the relative floor is the boundary-term scale
        scale = 2 * eps**2 / L**2 * sum(abs(v) ** 2 for v in f0.values())
        for K in sorted(f0):
            for t in (0.13 * Q.T_R, 0.8 * Q.T_R):
                ref = q_bruteforce(f0, K, t, L, eps)
                worst = max(worst, abs(Q.q(K, t) - ref) / max(abs(ref), scale))
    f3 = {0: 1.0, 1: 0.6 + 0.3j, 2: 0.5j}
    Q3 = build_q_functional(f3, 4, 0.6)
    three = max(abs(Q3.q(K, 0.2 * Q3.T_R) - q_bruteforce(f3, K, 0.2 * Q3.T_R, 4, 0.6))
                / abs(q_bruteforce(f3, K, 0.2 * Q3.T_R, 4, 0.6)) for K in (0, 1, 2))
    ok = single_max == 0 and worst < 1e-9 and three < 1e-9
    record(10, ok, f"single-mode max |Q| and constituents {single_max:.1e}; two-mode relative gap {worst:.1e}; "
                   f"three-mode relative gap {three:.1e}")
    assert ok
