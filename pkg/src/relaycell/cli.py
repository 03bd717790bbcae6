"""Command-line interface: subcommand dispatch and CSV/summary emission.

Subcommands: map-rea, map-eea, map-ici, gamma, psi, optimize, scheme-map,
validate.  Every CSV starts with a config-hash comment line followed by a
header row; identical configuration and seed produce byte-identical files.

Exit codes: 0 success, 1 configuration error, 2 infeasible (coverage),
3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from relaycell import eea, ici, oracle, planner, rea
from relaycell.config import ConfigError, RunConfig, parse_config
from relaycell.geometry import NO_RELAY, sector_grid
from relaycell.schemes import SchemeKind
from relaycell.stats import NegligibleMassError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3

THREADS_ENV = "RELAYCELL_THREADS"


class InfeasibleError(RuntimeError):
    pass


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _write_csv(path, header, rows, config_hash):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _point_model(run: RunConfig, uncapped=False):
    """Per-grid-point model values with relay association."""
    users = sector_grid(run.layout)
    metrics, idx = planner.gathered_metrics(users, run.layout, run.scenario, run.profile, run.scheme, uncapped)
    return users, metrics, idx


def cmd_map_rea(run: RunConfig, out_dir: str) -> int:
    users, metrics, idx = _point_model(run)
    thresholds = run.p_t or (0.5,)
    header = ["x_m", "y_m", "relay_index", "covered", "p_relaying"] + [f"member_pt_{_fmt(p)}" for p in thresholds]
    rows = []
    for i in range(len(users)):
        rows.append(
            [users[i, 0], users[i, 1], int(idx[i]), bool(metrics.covered[i]), metrics.relaying[i]]
            + [bool(metrics.relaying[i] >= p and metrics.covered[i]) for p in thresholds]
        )
    _write_csv(os.path.join(out_dir, "map_rea.csv"), header, rows, run.config_hash)
    return EXIT_OK


def cmd_map_eea(run: RunConfig, out_dir: str) -> int:
    users, metrics, idx = _point_model(run)
    thresholds = run.e_t or (0.5,)
    header = ["x_m", "y_m", "relay_index", "covered", "expected_rf_j"] + [f"member_et_{_fmt(e)}" for e in thresholds]
    rows = []
    for i in range(len(users)):
        rows.append(
            [users[i, 0], users[i, 1], int(idx[i]), bool(metrics.covered[i]), metrics.consumption[i]]
            + [bool(metrics.consumption[i] <= e and metrics.covered[i]) for e in thresholds]
        )
    _write_csv(os.path.join(out_dir, "map_eea.csv"), header, rows, run.config_hash)
    return EXIT_OK


def cmd_map_ici(run: RunConfig, out_dir: str) -> int:
    if run.layout.n_r == 0:
        raise InfeasibleError("map-ici requires at least one relay")
    users, metrics, idx = _point_model(run, uncapped=True)
    victims, victim_rf = planner.victim_profile(run.layout, run.scenario)
    interference = np.zeros(len(victims))
    for k, relay in enumerate(run.layout.relays):
        mean_radiated = float(np.mean(np.where(idx == k, metrics.relay_rf_raw, 0.0)))
        interference += np.asarray(ici.interference_at(victims, relay, mean_radiated, run.scenario))
    header = ["x_m", "y_m", "interference_j"]
    rows = [[victims[i, 0], victims[i, 1], interference[i]] for i in range(len(victims))]
    _write_csv(os.path.join(out_dir, "map_ici.csv"), header, rows, run.config_hash)
    return EXIT_OK


def cmd_gamma(run: RunConfig, out_dir: str) -> int:
    rep = planner.gamma(run.layout, run.scenario, run.profile, run.scheme)
    header = ["d_b_m", "n_r", "scheme", "upsilon_gain", "upsilon_loss", "gamma"]
    rows = [[rep.d_b, rep.n_r, run.scheme.value, rep.upsilon_gain, rep.upsilon_loss, rep.gamma]]
    _write_csv(os.path.join(out_dir, "gamma.csv"), header, rows, run.config_hash)
    _summary(out_dir, "gamma.txt", run, [
        f"upsilon_gain = {_fmt(rep.upsilon_gain)}",
        f"upsilon_loss = {_fmt(rep.upsilon_loss)}",
        f"gamma = {_fmt(rep.gamma)}",
        f"efficient = {rep.efficient}",
    ])
    return EXIT_OK


def cmd_psi(run: RunConfig, out_dir: str) -> int:
    rep = planner.psi(run.layout, run.scheme, run.scenario, run.profile)
    header = ["d_b_m", "n_r", "scheme", "feasible", "e_max_j", "e_idle_j", "psi_j_per_m2"]
    rows = [[rep.d_b, rep.n_r, run.scheme.value, rep.feasible, rep.e_max, rep.e_idle, rep.psi]]
    _write_csv(os.path.join(out_dir, "psi.csv"), header, rows, run.config_hash)
    if not rep.feasible:
        raise InfeasibleError(f"coverage hole at grid point {rep.failing_point}")
    _summary(out_dir, "psi.txt", run, [
        f"e_max = {_fmt(rep.e_max)} J",
        f"e_idle = {_fmt(rep.e_idle)} J",
        f"psi = {_fmt(rep.psi)} J/m^2",
    ])
    return EXIT_OK


def cmd_optimize(run: RunConfig, out_dir: str) -> int:
    res = planner.optimize(
        run.objective, run.opt_n_r, run.layout.d_b, run.scheme, run.scenario, run.profile,
        search_step=run.search_step, grid_step=run.layout.grid_step, symmetric=run.symmetric,
    )
    header = ["d_b_m", "n_r", "objective", "value"] + sum(
        ([f"relay{k}_x_m", f"relay{k}_y_m"] for k in range(run.opt_n_r)), []
    )
    if not res.feasible:
        raise InfeasibleError("no relay placement satisfies the coverage requirement")
    row = [run.layout.d_b, run.opt_n_r, run.objective, res.value]
    for x, y in res.layout.relays:
        row += [x, y]
    _write_csv(os.path.join(out_dir, "optimize.csv"), header, [row], run.config_hash)
    _summary(out_dir, "optimize.txt", run, [
        f"objective = {run.objective}",
        f"value = {_fmt(res.value)}",
        f"relays = {res.layout.relays}",
    ])
    return EXIT_OK


def cmd_scheme_map(run: RunConfig, out_dir: str) -> int:
    if run.layout.n_r == 0:
        raise InfeasibleError("scheme-map requires at least one relay")
    smap = planner.scheme_map(
        run.layout, run.scenario, run.profile, candidates=run.map_candidates,
        mc_samples=run.mc_samples, seed=run.seed,
    )
    header = ["x_m", "y_m", "scheme"]
    rows = [[smap.points[i, 0], smap.points[i, 1], smap.kinds[i].value] for i in range(len(smap.points))]
    _write_csv(os.path.join(out_dir, "scheme_map.csv"), header, rows, run.config_hash)
    return EXIT_OK


def cmd_validate(run: RunConfig, out_dir: str, threads: int = 1) -> int:
    if run.layout.n_r != 1:
        raise InfeasibleError("validate compares model vs oracle for a single-relay layout")
    thresholds = {"p_t": list(run.p_t), "e_t": list(run.e_t), "e_t_r": list(run.e_t_r)}
    if not any(thresholds.values()):
        raise ConfigError("validate: provide at least one of thresholds.p_t / e_t / e_t_r")
    users = sector_grid(run.layout)
    rep = oracle.error_ratios(
        users, np.asarray(run.layout.relays[0]), run.scenario, run.profile, run.layout,
        thresholds, n=run.samples, seed=run.seed, scheme=run.scheme, threads=threads,
    )
    header = ["kind", "threshold", "zeta"]
    rows = [[kind, thr, z] for kind, thr, z in rep.rows()]
    _write_csv(os.path.join(out_dir, "validate.csv"), header, rows, run.config_hash)
    _summary(out_dir, "validate.txt", run, [
        f"zeta_r = {_fmt(rep.zeta_r)}",
        f"zeta_e = {_fmt(rep.zeta_e)}",
        f"zeta_i = {_fmt(rep.zeta_i)}",
        f"grid_points = {rep.grid_points}",
        f"samples = {rep.samples}",
        f"seed = {rep.seed}",
    ])
    return EXIT_OK


def _summary(out_dir, name, run: RunConfig, lines):
    with open(os.path.join(out_dir, name), "w", newline="\n") as fh:
        fh.write(f"# config_hash={run.config_hash}\n")
        for line in lines:
            fh.write(line + "\n")


_COMMANDS = {
    "map-rea": cmd_map_rea,
    "map-eea": cmd_map_eea,
    "map-ici": cmd_map_ici,
    "gamma": cmd_gamma,
    "psi": cmd_psi,
    "optimize": cmd_optimize,
    "scheme-map": cmd_scheme_map,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaycell", description="Relay-aided cell energy/interference planning")
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", required=True, help="output directory for CSV/summary artifacts")
    parser.add_argument("--seed", type=int, default=None, help="override oracle.seed")
    parser.add_argument("--grid-step", type=float, default=None, help="override layout.grid_step (meters)")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker thread cap (default 1; env {THREADS_ENV} overrides)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            print(f"config error: {THREADS_ENV} must be an integer", file=sys.stderr)
            return EXIT_CONFIG
    if threads is not None and threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))

    try:
        run = parse_config(args.config)
        if args.seed is not None:
            run = _replace(run, seed=args.seed)
        if args.grid_step is not None:
            if args.grid_step <= 0:
                raise ConfigError("--grid-step must be > 0")
            run = _replace(run, layout=_replace(run.layout, grid_step=args.grid_step))
        os.makedirs(args.out, exist_ok=True)
        if args.subcommand == "validate":
            return cmd_validate(run, args.out, threads=threads or 1)
        return _COMMANDS[args.subcommand](run, args.out)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NegligibleMassError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _replace(obj, **kwargs):
    import dataclasses

    return dataclasses.replace(obj, **kwargs)


if __name__ == "__main__":
    sys.exit(main())
