"""Command-line entry point.

Exit codes: 0 pass, 1 usage error, 2 verification failure, 3 numerical failure.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import random
import sys
from typing import Any, Callable

import click

from .chains import admissible_partitions, chain_sum
from .coefficients import (
    g_coeff_recurrence,
    g_coeff_trees,
    h_coeff_recurrence,
    h_coeff_trees,
    sample_resonance_point,
    verify_vanishing,
    verify_vanishing_sampled,
)
from .config import PARAMS, ConfigError, RunConfig, load_config
from .counting import (
    brute_force_cubic,
    constrained_histogram,
    count_constrained_tuples,
    count_cubic_resonances,
    divisor_count,
    divisor_count_table,
    scaling_report,
)
from .errors import CapacityError, DegenerateInputError, NumericalFailure
from .forest import DiagramTree
from .lattice import ModeTuple, alternating_sum, enumerate_resonances

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_NUMERIC = 0, 1, 2, 3

_MAX_COEFF_TUPLES = 2 * 10**5


def _clean(obj: Any) -> Any:
    """Make a report JSON-safe: tuples to lists, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalar
        return _clean(obj.item())
    return obj


def _dump_json(report: dict, path: str | None) -> None:
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _dump_csv(header: list[str], rows: list[list[Any]], path: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path is None:
        click.echo(buf.getvalue(), nl=False)
    else:
        with open(path, "w") as fh:
            fh.write(buf.getvalue())


class _Group(click.Group):
    """Maps click's usage errors to exit code 1 and returns command codes."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(*args, **kwargs)
        except click.exceptions.Exit as exc:
            sys.exit(exc.exit_code)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("aborted", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


@click.group(cls=_Group)
def cli() -> None:
    """Normal-form verification suites and NLS simulations."""


def _command(name: str, help: str):
    """Register a subcommand whose flags mirror the config table for ``name``."""

    def deco(fn: Callable[[RunConfig], int]):
        def run(config_path, **flags):
            try:
                cfg = load_config(name, config_path, flags)
            except ConfigError as exc:
                click.echo(f"error: {exc}", err=True)
                return EXIT_USAGE
            try:
                return fn(cfg)
            except (ConfigError, CapacityError, ValueError) as exc:
                click.echo(f"error: {exc}", err=True)
                return EXIT_USAGE

        run.__name__ = fn.__name__
        for p in reversed(PARAMS[name]):
            flag = p.name.replace("_", "-")
            text = p.help or p.name
            if p.kind == "bool":
                opt = click.option(f"--{flag}/--no-{flag}", p.name, default=None, help=text)
            else:
                opt = click.option(f"--{flag}", p.name, type=str, default=None,
                                   help=f"{text} [default: {_show(p.default)}]")
            run = opt(run)
        run = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                           help=f"INI file with a [{name}] section")(run)
        return cli.command(name, help=help)(run)

    return deco


def _show(v: Any) -> str:
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v) or "none"
    return "none" if v is None else str(v)


# ---------------------------------------------------------------- commands


@_command("verify-vanishing", "Check that H^d vanishes on the constrained resonance set.")
def verify_vanishing_cmd(cfg: RunConfig) -> int:
    if cfg.samples > 0:
        rep = verify_vanishing_sampled(cfg.d, cfg.samples, seed=cfg.seed, L=cfg.L, radius=cfg.radius)
        mode = "sampled"
    else:
        rep = verify_vanishing(cfg.d, cfg.box, cfg.L)
        mode = "exhaustive"
    out = {"config": cfg.to_dict(), "mode": mode, "passed": rep.passed, "vacuous": rep.constrained_points == 0,
           **rep.to_dict()}
    _dump_json(out, cfg.output)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _count_rows(cfg: RunConfig) -> tuple[list[str], list[list[Any]]]:
    if cfg.table == "cubic":
        header = ["mu", "mu2", "closed_form", "brute_force", "agree"]
        rows: list[list[Any]] = []
        mu2s = list(range(cfg.mu2_min, cfg.mu2_max + 1))
        for mu in range(cfg.mu_min, cfg.mu_max + 1):
            if not mu2s:
                break
            brute = brute_force_cubic(mu, mu2s)
            for m2 in mu2s:
                c = count_cubic_resonances(mu, m2)
                rows.append([mu, m2, c, brute[m2], c == brute[m2]])
        return header, rows
    if cfg.table == "divisor":
        header = ["n", "divisor_count", "sieve", "agree"]
        table = divisor_count_table(cfg.n_max)
        rows = []
        for n in range(1, cfg.n_max + 1):
            c = divisor_count(n)
            rows.append([n, c, int(table[n]), c == int(table[n])])
        return header, rows
    tree = DiagramTree(tuple(cfg.tree))
    header = ["tree", "mu", "count", "exhaustive", "agree"]
    lo = max(1, cfg.mu_min)
    levels = range(lo, cfg.mu_max + 1)
    hist = constrained_histogram(tree, cfg.box) if len(levels) else {}
    rows = []
    for mu in itertools.product(levels, repeat=tree.depth):
        c = count_constrained_tuples(tree, mu, cfg.box)
        e = hist.get(tuple(mu), 0)
        rows.append([tree.serialize(), " ".join(map(str, mu)), c, e, c == e])
    return header, rows


@_command("count", "Counting tables with closed-form versus brute-force agreement columns.")
def count_cmd(cfg: RunConfig) -> int:
    header, rows = _count_rows(cfg)
    _dump_csv(header, rows, cfg.output)
    ok = all(r[-1] for r in rows)
    if cfg.report:
        _dump_json({"config": cfg.to_dict(), "rows": len(rows), "all_agree": ok}, cfg.report)
    return EXIT_OK if ok else EXIT_FAIL


def _coeff_tuples(d: int, box: int, L: int, resonant: bool):
    if resonant:
        yield from enumerate_resonances(d, box, L)
        return
    for e in itertools.product(range(-box, box + 1), repeat=2 * d + 1):
        yield ModeTuple(e, alternating_sum(e), L)


@_command("coeff", "Dump a coefficient table computed by the recurrence and by the tree formula.")
def coeff_cmd(cfg: RunConfig) -> int:
    n = 2 * cfg.d + 1
    if (2 * cfg.box + 1) ** (n - (2 if cfg.resonant else 0)) > _MAX_COEFF_TUPLES:
        raise CapacityError(f"box {cfg.box} at d={cfg.d} exceeds the coefficient table cap")
    rec, tree = (h_coeff_recurrence, h_coeff_trees) if cfg.kind == "H" else (g_coeff_recurrence, g_coeff_trees)
    header = ["entries", "K", "recurrence", "trees", "two_pi_power", "killed", "agree"]
    rows = []
    for t in _coeff_tuples(cfg.d, cfg.box, cfg.L, cfg.resonant):
        a, b = rec(cfg.d, t), tree(cfg.d, t)
        rows.append([" ".join(map(str, t.entries)), t.target, str(a.value), str(b.value), a.two_pi_power,
                     a.killed, a == b])
    _dump_csv(header, rows, cfg.output)
    ok = all(r[-1] for r in rows)
    if cfg.report:
        _dump_json({"config": cfg.to_dict(), "rows": len(rows), "all_agree": ok}, cfg.report)
    return EXIT_OK if ok else EXIT_FAIL


@_command("chains", "Check chain sums against their closed form on random resonance tuples.")
def chains_cmd(cfg: RunConfig) -> int:
    rng = random.Random(cfg.seed)
    n = 2 * cfg.d + 1
    # k = 0 is the whole tuple, whose quadratic form vanishes on the surface
    parts = {k: admissible_partitions(n, 2 * k + 1) for k in range(1, cfg.d + 1)}
    checked = skipped = mismatches = sum_failures = 0
    witnesses: list[dict] = []
    points = 0
    draws = 0
    while points < cfg.points and draws < 100 * cfg.points:
        draws += 1
        e, K = sample_resonance_point(cfg.d, rng, cfg.radius)
        t = ModeTuple(e, K, cfg.L)
        try:
            results = {k: [chain_sum(k, p, t) for p in ps] for k, ps in parts.items()}
        except DegenerateInputError:
            skipped += 1
            continue
        points += 1
        for k, rs in results.items():
            for p, r in zip(parts[k], rs):
                checked += 1
                if not r.equal:
                    mismatches += 1
                    if len(witnesses) < 10:
                        witnesses.append({"entries": list(e), "K": K, "partition": [list(b) for b in p],
                                          "value": str(r.value), "closed_form": str(r.closed_form)})
        # for d = 1 the only three-block partition is the singletons
        if cfg.d >= 2 and sum((r.value for r in results[1]), start=0) != 0:
            sum_failures += 1
    passed = mismatches == 0 and sum_failures == 0 and points >= cfg.points
    _dump_json({"config": cfg.to_dict(), "points": points, "degenerate_draws": skipped, "checked": checked,
                "mismatches": mismatches, "three_block_sum_failures": sum_failures, "witnesses": witnesses,
                "passed": passed}, cfg.output)
    return EXIT_OK if passed else EXIT_FAIL


@_command("scaling", "Constrained resonant sums across L with a log-log slope fit.")
def scaling_cmd(cfg: RunConfig) -> int:
    rows = scaling_report(cfg.d, list(cfg.Ls), cfg.ell, cfg.trials, radius=cfg.radius, seed=cfg.seed)
    _dump_csv(["L", "sum_value", "bound_exponent", "fitted_slope"],
              [[r.L, repr(r.sum_value), r.bound_exponent, repr(r.fitted_slope)] for r in rows], cfg.output)
    slope = rows[0].fitted_slope if rows else float("nan")
    limit = 2.0 * (cfg.d - 1) + cfg.slack
    ok = bool(math.isfinite(slope) and slope <= limit) if len(rows) >= 2 else True
    if cfg.report:
        _dump_json({"config": cfg.to_dict(), "fitted_slope": slope, "slope_limit": limit, "passed": ok,
                    "rows": [[r.L, r.sum_value] for r in rows]}, cfg.report)
    return EXIT_OK if ok else EXIT_FAIL


def run_simulate_config(cfg: RunConfig):
    """Run the experiment described by a resolved ``simulate`` config."""
    from .experiment import SimulationSettings, theorem1_experiment

    settings = SimulationSettings(
        L=cfg.Ls[0], N=cfg.N, A=cfg.A, gamma=cfg.gamma, small=cfg.small, ell=cfg.ell, M=cfg.M, dt=cfg.dt,
        samples=cfg.samples, scheme=cfg.scheme, drift_tol=cfg.drift_tol, t_max=cfg.t_max, with_q=cfg.with_q,
        q_samples=cfg.q_samples, P=cfg.P, keep_trajectory=cfg.trajectory is not None,
    )
    return theorem1_experiment(settings, Ls=list(cfg.Ls), factors=list(cfg.factors),
                               eps_values=list(cfg.eps) or None, workers=cfg.workers)


@_command("simulate", "Evolve the truncated system over an (eps, L) grid and report trend flags.")
def simulate_cmd(cfg: RunConfig) -> int:
    try:
        rep = run_simulate_config(cfg)
    except NumericalFailure as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        _dump_json({"config": cfg.to_dict(), "status": "numerical_failure", "error": str(exc),
                    "diagnostics": exc.diagnostics}, cfg.output)
        return EXIT_NUMERIC
    if cfg.trajectory is not None:
        rows = []
        for r in rep.runs:
            for t, u in zip(r.times, r.u):
                for K, v in zip(range(-cfg.N, cfg.N + 1), u):
                    rows.append([r.L, repr(r.eps), repr(t), K, repr(float(v.real)), repr(float(v.imag))])
        _dump_csv(["L", "eps", "t", "K", "re_u", "im_u"], rows, cfg.trajectory)
    out = {"config": cfg.to_dict(), "status": "pass" if rep.passed else "fail", **rep.to_dict()}
    _dump_json(out, cfg.output)
    return EXIT_OK if rep.passed else EXIT_FAIL


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
