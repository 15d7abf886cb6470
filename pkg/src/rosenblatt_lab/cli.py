"""Command-line runner for configuration-driven experiments.

``rosenblatt-lab --config run.yaml [--out DIR] [--seed N] [--threads N] [--plot]``

Each run writes a CSV table, a JSON manifest that echoes the resolved
configuration, and optionally a PNG plot derived from the table. Exit
status: 0 pass, 1 configuration or domain error, 2 acceptance failure,
3 accuracy target unreachable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from . import cumulants as cum
from . import simulation as sim
from .config import ConfigError, ExperimentConfig, load_config
from .errors import AccuracyError, DomainError
from .limits import MIN_COVARIANCE_SAMPLES, MIN_KS_SAMPLES, cumulant_sweep, identity_approximation_check
from .power_counting import ExponentAssignment, FunctionalSet, check_integrability, critical_exponent_scan

__all__ = ["RunOutcome", "run", "main", "EXIT_OK", "EXIT_CONFIG", "EXIT_FAIL", "EXIT_ACCURACY"]

EXIT_OK, EXIT_CONFIG, EXIT_FAIL, EXIT_ACCURACY = 0, 1, 2, 3

DEFAULTS = {
    "trace_cells": cum.DEFAULT_CELLS,
    "trace_refinement_levels": 3,
    "trace_truncation_rel_tol": 1e-8,
    "trace_error_rel_floor": 1e-9,
    "cell_pair_far_field_ratio": 16.0,
    "quadrature_order": 24,
    "quadrature_error_order_step": 8,
    "quadrature_m4_collocation_cells": 512,
    "quadrature_m4_refinement_levels": 3,
    "quadrature_m4_cell_rule_order": 16,
    "simulation_cells": sim.DEFAULT_CELLS,
    "simulation_block_rows": sim.BLOCK_ROWS,
    "simulation_tail_tolerance": 1e-6,
    "ks_level": 0.01,
    "ks_min_samples": MIN_KS_SAMPLES,
    "covariance_min_samples": MIN_COVARIANCE_SAMPLES,
    "identity_noise_floor": 1e-10,
    "scan_tol": 1e-12,
    "csv_significant_digits": 12,
}


@dataclass
class _Table:
    header: list
    rows: list
    summary: dict = field(default_factory=dict)
    passed: bool = True


@dataclass(frozen=True)
class RunOutcome:
    status: int
    table: Optional[Path]
    manifest: Optional[Path]
    plot: Optional[Path]
    summary: dict


# ---------------------------------------------------------------------------
# formatting


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0.0:
            return "0"
        return format(v, ".12g")
    if isinstance(v, tuple):
        return "{" + " ".join(str(x) for x in v) + "}"
    return str(v)


def _csv_text(table: _Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for r in table.rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _sort_hm(rows: list, header: list) -> list:
    ih, im = header.index("H"), header.index("m")
    return sorted(rows, key=lambda r: (r[ih], r[im]))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _rel(value: float, target: float) -> float:
    return (value - target) / abs(target) if target != 0.0 else value - target


# ---------------------------------------------------------------------------
# commands


def _cmd_cumulants(cfg: ExperimentConfig, pmap: Callable) -> _Table:
    s = cfg.cumulants
    f = s.kernel.build()
    orders = tuple(s.orders)
    if s.backend == "trace":
        job = lambda h: cum.trace_cumulants(f, h, orders, cells=s.cells)  # noqa: E731
    else:
        job = lambda h: cum.quadrature_cumulants(f, h, orders, order=s.quadrature_order)  # noqa: E731
    vectors = list(pmap(job, s.H))
    rows = [[h, m, cv[m], cv.error(m)] for h, cv in zip(s.H, vectors) for m in orders]
    header = ["H", "m", "k_m", "error"]
    return _Table(header, _sort_hm(rows, header), {"backend": s.backend, "kernel": f.to_list()})


def _cmd_simulate(cfg: ExperimentConfig, pmap: Callable) -> _Table:
    s = cfg.simulate
    seed = sim.RngSeed(cfg.seed, s.stream_id)
    if s.process == "wr_integral":
        f = s.kernel.build()
        x = sim.simulate_wr_integral(f, s.H, grid=s.cells, n=s.n, seed=seed)
        ec = sim.empirical_cumulants(x)
        summary = {"empirical_cumulants": ec.entries, "standard_errors": ec.error_estimates}
        return _Table(["sample", "value"], [[i, v] for i, v in enumerate(x.tolist())], summary)
    t = s.time_grid()
    if s.process == "rosenblatt":
        ens = sim.simulate_rosenblatt_paths(s.H, t, grid=s.cells, n=s.n, seed=seed)
    elif s.process == "rou":
        ens = sim.simulate_rou(s.xi, s.lam, s.sigma, s.H, t, grid=s.cells, n=s.n, seed=seed)
    elif s.process == "stationary_rou":
        ens = sim.simulate_stationary_rou(s.lam, s.sigma, s.H, t, grid=s.cells, n=s.n, seed=seed,
                                          tolerance=s.tolerance)
    else:
        ens = sim.simulate_gaussian_ou(s.xi, s.lam, s.sigma, t, n=s.n, seed=seed, stationary=s.stationary)
    rows = [[i, float(tj), float(ens.values[i, j])] for i in range(ens.n_samples) for j, tj in enumerate(ens.times)]
    summary = {"meta": ens.meta, "mean": ens.mean().tolist(), "variance": ens.values.var(axis=0, ddof=1).tolist()}
    return _Table(["sample", "t", "value"], rows, summary)


def _cmd_sweep(cfg: ExperimentConfig, pmap: Callable) -> _Table:
    s = cfg.sweep
    f = s.kernel.build()
    res = cumulant_sweep(f, s.H, s.orders, cells=s.cells, map_fn=pmap)
    header = ["H", "m", "k_m", "error", "chi2_target", "chi2_deviation", "gaussian_target", "gaussian_deviation"]
    rows = [[r.H, r.m, r.value, r.error, r.chi2_target, r.chi2_deviation, r.gaussian_target, r.gaussian_deviation]
            for r in res.rows()]
    summary = {"fourth_order_integral": dict(zip(res.H_values, res.fourth_order_integral))}
    return _Table(header, _sort_hm(rows, header), summary)


def _broadcast(v, n: int, name: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.size == 1:
        return np.full(n, a[0])
    if a.size != n:
        raise DomainError(f"{name} has {a.size} entries for {n} functionals")
    return a


def _cmd_power_count(cfg: ExperimentConfig, pmap: Callable) -> _Table:
    s = cfg.power_count
    T = FunctionalSet.cyclic(s.cyclic) if s.cyclic is not None else FunctionalSet.from_rows(s.rows)
    n = len(T)
    a0, a1 = _broadcast(s.alpha.offset, n, "alpha.offset"), _broadcast(s.alpha.slope, n, "alpha.slope")
    b0, b1 = _broadcast(s.beta.offset, n, "beta.offset"), _broadcast(s.beta.slope, n, "beta.slope")

    def exps(x: float) -> ExponentAssignment:
        return ExponentAssignment(tuple(a0 + a1 * x), tuple(b0 + b1 * x))

    verdict = check_integrability(T, exps(s.at), s.which, s.shortcut)
    rows = [[r.subset, r.rank, r.closure, r.padded, r.d0, r.d_inf] for r in verdict.reports]
    summary = {"rank": T.rank(), "at": s.at, "integrable": verdict.integrable,
               "near_zero_ok": verdict.near_zero_ok, "at_infinity_ok": verdict.at_infinity_ok,
               "used_padded_shortcut": list(verdict.used_padded_shortcut)}
    if s.scan is not None:
        sc = critical_exponent_scan(T, exps, s.scan.lower, s.scan.upper, s.scan.which, s.scan.tol)
        summary["scan"] = {"threshold": sc.threshold, "verdict_below": sc.verdict_below,
                           "verdict_above": sc.verdict_above, "monotone": sc.monotone,
                           "iterations": sc.iterations}
    return _Table(["subset", "rank", "closure", "padded", "d0", "d_inf"], rows, summary)


def _cmd_verify(cfg: ExperimentConfig, pmap: Callable) -> _Table:
    s = cfg.verify
    f = s.kernel.build()
    schedule = s.schedule()
    tol = s.tol()
    res = cumulant_sweep(f, schedule, s.orders, cells=s.cells, map_fn=pmap)
    header = ["H", "m", "k_m", "target", "deviation"]
    rows = []
    checks = {}
    if s.recipe == "chi2_limit":
        targets = res.chi2_targets
        for h, cv in zip(res.H_values, res.cumulants):
            for m in s.orders:
                rows.append([h, m, cv[m], targets[m], _rel(cv[m], targets[m])])
        order = sorted(range(len(schedule)), key=lambda i: res.H_values[i])
        last = res.cumulants[order[-1]]
        checks["final_within_tolerance"] = all(abs(_rel(last[m], targets[m])) <= tol for m in s.orders)
        mono = True
        for m in s.orders:
            devs = [abs(res.cumulants[i][m] - targets[m]) for i in order]
            errs = [res.cumulants[i].error(m) for i in order]
            mono &= all(b <= a + ea + eb for a, b, ea, eb in zip(devs[:-1], devs[1:], errs[:-1], errs[1:]))
        checks["deviations_nonincreasing_toward_1"] = mono
    else:
        if res.gaussian_targets is None:
            raise DomainError("the gaussian_limit recipe needs a kernel supported in [0, inf)")
        targets = res.gaussian_targets
        for h, cv in zip(res.H_values, res.cumulants):
            for m in s.orders:
                rows.append([h, m, cv[m], targets[m], _rel(cv[m], targets[m])])
        order = sorted(range(len(schedule)), key=lambda i: -res.H_values[i])
        if 4 in s.orders:
            k4 = [res.cumulants[i][4] for i in order]
            checks["k4_strictly_decreasing_toward_half"] = all(b < a for a, b in zip(k4[:-1], k4[1:])) \
                or all(v == 0.0 for v in k4)
        ident = identity_approximation_check(f, [res.H_values[i] for i in order])
        lim = ident.limit
        final_dev = ident.deviations[-1] / lim if lim > 0 else ident.deviations[-1]
        checks["norm_deviation_within_tolerance"] = final_dev <= tol
        if s.k4_ratio is not None and 4 in s.orders and 2 in s.orders:
            last = res.cumulants[order[-1]]
            checks["k4_ratio_bound"] = last[4] <= s.k4_ratio * last[2] ** 2
    summary = {"recipe": s.recipe, "schedule": schedule, "tolerance": tol, "checks": checks,
               "fourth_order_integral": dict(zip(res.H_values, res.fourth_order_integral))}
    return _Table(header, _sort_hm(rows, header), summary, passed=all(checks.values()))


_COMMANDS = {
    "cumulants": _cmd_cumulants,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "power-count": _cmd_power_count,
    "verify": _cmd_verify,
}


# ---------------------------------------------------------------------------
# outputs


def _git_revision() -> Optional[str]:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=10,
                             cwd=Path(__file__).resolve().parent)
    except (OSError, subprocess.SubprocessError):
        return None
    if out.returncode != 0:
        return None
    return out.stdout.strip() or None


def _plot(table: _Table, path: Path) -> Optional[Path]:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("warning: matplotlib is not installed; --plot skipped", file=sys.stderr)
        return None
    h = table.header
    fig, ax = plt.subplots(figsize=(6, 4))
    if "H" in h and "m" in h:
        ih, im, ik = h.index("H"), h.index("m"), h.index("k_m")
        for m in sorted({r[im] for r in table.rows}):
            pts = sorted((r[ih], r[ik]) for r in table.rows if r[im] == m)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"k_{m}")
        ax.set_xlabel("H")
        ax.set_ylabel("cumulant")
    elif "t" in h:
        it, iv = h.index("t"), h.index("value")
        ts = sorted({r[it] for r in table.rows})
        var = [np.var([r[iv] for r in table.rows if r[it] == t], ddof=1) for t in ts]
        ax.plot(ts, var, marker="o", label="sample variance")
        ax.set_xlabel("t")
        ax.set_ylabel("variance")
    else:
        plt.close(fig)
        return None
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None, threads: int = 1,
        plot: bool = False) -> RunOutcome:
    """Execute one experiment and write its artifacts.

    Domain and accuracy errors propagate; `main` maps them to exit codes.
    """
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    threads = max(1, int(threads))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            table = _COMMANDS[cfg.command](cfg, ex.map)
    else:
        table = _COMMANDS[cfg.command](cfg, map)
    out.mkdir(parents=True, exist_ok=True)
    table_path = out / cfg.output.table
    with open(table_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_csv_text(table))
    plot_path = _plot(table, out / cfg.output.plot) if plot else None
    status = EXIT_OK if table.passed else EXIT_FAIL
    manifest = {
        "config": cfg.model_dump(mode="json"),
        "version": __version__,
        "seed": cfg.seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "git_revision": _git_revision(),
        "defaults": DEFAULTS,
        "threads": threads,
        "status": status,
        "summary": _jsonable(table.summary),
        "outputs": {"table": table_path.name, "plot": plot_path.name if plot_path else None},
    }
    manifest_path = out / cfg.output.manifest
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunOutcome(status, table_path, manifest_path, plot_path, table.summary)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rosenblatt-lab",
                                description="Run a configuration-driven Rosenblatt-process experiment.")
    p.add_argument("--config", required=True, help="experiment document (YAML or JSON)")
    p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, default=None, help="seed (overrides the config)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent H points")
    p.add_argument("--plot", action="store_true", help="also write a PNG plot of the table")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed: must be nonnegative, got {args.seed}")
            cfg = cfg.model_copy(update={"seed": args.seed})
        outcome = run(cfg, args.out, args.threads, args.plot)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    verdict = "pass" if outcome.status == EXIT_OK else "FAIL"
    print(f"{cfg.command}: {verdict}; table {outcome.table}; manifest {outcome.manifest}")
    return outcome.status
