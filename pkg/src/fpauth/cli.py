"""Command-line front end: ``fpauth sweep | factors | validate``.

Exit codes: 0 success, 1 configuration error, 2 invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace

import numpy as np

from .channel import ConfigError
from .invariants import run_invariant_suite
from .montecarlo import TrialPlan, run_trials
from .powerctl import InfeasibleError, allocate_from_factors, strategy_splits
from .scenario import ScenarioFile, load_scenario

log = logging.getLogger("fpauth")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2

SWEEP_COLUMNS = [
    "strategy", "strategy_value", "phi", "P_t", "psi", "omega", "P_Tx_dbm", "feasible", "note",
    "P_D", "P_K", "P_K_asymptotic", "sum_rate",
    "P_D_hat", "P_D_ci", "p_fa_hat", "p_fa_ci", "P_K_mc_space", "P_K_hat", "P_K_ci",
    "realizations", "trials", "seed", "N", "M", "K", "Z", "L_p", "L_t", "p_fa", "key_space_size",
    "mc_key_space", "beta",
]
FACTOR_COLUMNS = ["psi", "omega", "phi", "P_t", "feasible", "note"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_table(rows: list[dict], columns: list[str], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
    else:
        buf.write(json.dumps({"columns": columns}) + "\n")
        for row in rows:
            buf.write(json.dumps({c: row.get(c) for c in columns}, allow_nan=True) + "\n")
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
        log.info("wrote %s", path)


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def _pooled(records, counts_attr, n_attr):
    hits = sum(sum(getattr(r, counts_attr)) for r in records)
    if n_attr == "n_trials":
        n = sum(r.n_trials * len(getattr(r, counts_attr)) for r in records)
    else:
        n = sum(sum(getattr(r, n_attr)) for r in records)
    if n == 0:
        return None, None
    p = hits / n
    return p, 1.96 * math.sqrt(p * (1 - p) / n)


def sweep_rows(sc: ScenarioFile, workers: int = 1) -> list[dict]:
    """One row per (strategy, phi, P_Tx), averaged over realizations."""
    cfg = sc.system
    splits, labels, meta = [], [], []
    for s in sc.strategies:
        for sp in strategy_splits(s, sc.phi_grid):
            splits.append(sp)
            labels.append(s.label)
            meta.append(s)
    plan = TrialPlan(
        cfg=cfg, splits=splits, ptx_dbm=sc.ptx_dbm, n_realizations=sc.realizations,
        n_trials=max(sc.trials, 1), seed=sc.seed, analytic_only=sc.analytic_only or sc.trials == 0,
        with_false_alarm=sc.false_alarm, with_ml_attack=sc.ml_attack,
        eve_key_space_size_for_mc=sc.mc_key_space, labels=labels,
    )
    records = run_trials(plan, workers=workers)
    n_points = len(splits) * len(sc.ptx_dbm)
    rows = []
    for i in range(n_points):
        group = records[i::n_points]  # same (split, P_Tx) in every realization
        first = group[0]
        strat = meta[i // len(sc.ptx_dbm)]
        row = {
            "strategy": strat.kind, "strategy_value": strat.value, "phi": first.phi, "P_t": first.P_t,
            "psi": first.psi, "omega": first.omega, "P_Tx_dbm": first.P_Tx_dbm,
            "feasible": first.feasible, "note": first.reason,
            "realizations": sc.realizations, "trials": 0 if plan.analytic_only else sc.trials,
            "seed": sc.seed, "N": cfg.N, "M": cfg.M, "K": cfg.K, "Z": cfg.n_an, "L_p": cfg.L_p,
            "L_t": cfg.L_t, "p_fa": cfg.p_fa, "key_space_size": cfg.key_space_size,
            "mc_key_space": sc.mc_key_space, "beta": "auto" if cfg.beta is None else cfg.beta,
        }
        if first.feasible:
            for key in ("P_D", "P_K", "P_K_asymptotic", "sum_rate", "P_K_mc_space"):
                row[key] = _mean([getattr(r, key) for r in group])
            if not plan.analytic_only:
                row["P_D_hat"], row["P_D_ci"] = _pooled(group, "detections", "n_trials")
                if sc.false_alarm:
                    row["p_fa_hat"], row["p_fa_ci"] = _pooled(group, "false_alarms", "n_trials")
                if sc.ml_attack:
                    row["P_K_hat"], row["P_K_ci"] = _pooled(group, "key_hits", "key_attempts")
        rows.append(row)
    return rows


def factor_rows(psi_list, omega_grid) -> list[dict]:
    rows = []
    for psi in psi_list:
        for omega in omega_grid:
            row = {"psi": psi, "omega": omega, "feasible": True, "note": ""}
            try:
                row["phi"], row["P_t"] = allocate_from_factors(psi, omega)
            except InfeasibleError as exc:
                row.update(feasible=False, note=str(exc))
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------


def _scenario_from_args(args) -> ScenarioFile:
    sc = load_scenario(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.trials is not None:
        over["trials"] = args.trials
    if args.realizations is not None:
        over["realizations"] = args.realizations
    if args.analytic_only:
        over["analytic_only"] = True
    if args.out is not None:
        over["out_path"] = args.out
    if args.format is not None:
        over["out_format"] = args.format
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    sc = replace(sc, **over)
    sc.validate()
    return sc


def cmd_sweep(args) -> int:
    sc = _scenario_from_args(args)
    if not sc.strategies:
        raise ConfigError("no strategies to sweep")
    rows = sweep_rows(sc, workers=sc.workers)
    _emit(write_table(rows, SWEEP_COLUMNS, sc.out_format), sc.out_path)
    return EXIT_OK


def cmd_factors(args) -> int:
    sc = _scenario_from_args(args)
    psi = tuple(args.psi) if args.psi else sc.psi
    omega = tuple(args.omega) if args.omega else sc.omega
    if not psi or not omega:
        raise ConfigError("psi and omega grids must be non-empty")
    rows = factor_rows(psi, omega)
    if not any(r["feasible"] for r in rows):
        raise ConfigError("no feasible (psi, omega) pair in the requested grid")
    _emit(write_table(rows, FACTOR_COLUMNS, sc.out_format), sc.out_path)
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = _scenario_from_args(args)
    results = run_invariant_suite(sc.system, n_realizations=sc.realizations, seed=sc.seed,
                                  ptx_dbm=args.ptx_dbm)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}" for r in results]
    _emit("\n".join(lines) + "\n", sc.out_path)
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (INI sections: system, sweep, factors, output)")
    common.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    common.add_argument("--out", help="output path; '-' or omitted writes to stdout")
    common.add_argument("--format", choices=("csv", "jsonl"))
    common.add_argument("--trials", type=int, help="Monte Carlo trials per realization")
    common.add_argument("--realizations", type=int, help="channel realizations")
    common.add_argument("--analytic-only", action="store_true", help="skip Monte Carlo trials")
    common.add_argument("--workers", type=int, help="parallel realization workers")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fpauth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="strategy comparison over phi and transmit power")
    f = sub.add_parser("factors", parents=[common], help="(psi, omega) -> (phi, P_t) relation table")
    f.add_argument("--psi", type=float, nargs="+")
    f.add_argument("--omega", type=float, nargs="+")
    v = sub.add_parser("validate", parents=[common], help="run the structural invariant suite")
    v.add_argument("--ptx-dbm", type=float, default=10.0, help="transmit power for the checks")
    return p


COMMANDS = {"sweep": cmd_sweep, "factors": cmd_factors, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"fpauth: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
