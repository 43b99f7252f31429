"""Command line experiment runner.

Usage::

    levysync <subcommand> [--config FILE] [--seed N] [--out DIR]
                          [--format csv|json|both] [--step H]

Subcommands: ``simulate``, ``sweep``, ``attractor``, ``averaged``,
``eigen``, ``verify-all``.

Exit status: 0 pass, 1 verdict failure, 2 usage or configuration error,
3 numerical divergence.  ``LEVYSYNC_OUT`` sets the output directory when
``--out`` is absent and ``LEVYSYNC_LOG_LEVEL`` the logging level.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, attractor, averaged, bounds, config as cfgmod, reporting, verification
from .coupled_system import integrate_coupled_rode, integrate_coupled_sode, ou_for_paths, stack_ou
from .errors import ConfigError, DivergenceError, LevySyncError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3
COMMANDS = ("simulate", "sweep", "attractor", "averaged", "eigen", "verify-all")

log = logging.getLogger("levysync")


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"step must be > 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment file")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory (default: $LEVYSYNC_OUT or the config)")
    common.add_argument("--format", choices=cfgmod.FORMATS, help="report formats")
    common.add_argument("--step", type=_positive_float, help="integration step (overrides the config)")
    parser = argparse.ArgumentParser(prog="levysync", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "simulate": "integrate the coupled random and stochastic systems",
        "sweep": "coupling sweep: spread, averaged gap and Skorohod distance",
        "attractor": "pullback attractor, absorbing radius and stationary-orbit residual",
        "averaged": "averaged system attractor, decay and stationary reconstruction",
        "eigen": "coupling-matrix spectra against closed forms",
        "verify-all": "run the ten acceptance criteria",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


class Run:
    """Resolved configuration plus the report writer for one command."""

    def __init__(self, kind, cfg: cfgmod.ExperimentConfig):
        self.kind = kind
        self.cfg = cfg
        out = cfg.data["output"]
        self.out_dir = Path(out["dir"])
        self.formats = ("csv", "json") if out["format"] == "both" else (out["format"],)
        self.written = []

    def header(self) -> dict:
        return reporting.header(self.kind, self.cfg.data, self.cfg.seed)

    def json(self, body: dict):
        if "json" in self.formats:
            report = {"header": self.header(), **body}
            reporting.validate_report(report)
            self.written.append(reporting.write_json(self.out_dir / f"{self.kind}.json", report))

    def csv(self, name, columns, rows):
        if "csv" in self.formats:
            self.written.append(reporting.write_csv(self.out_dir / f"{name}.csv", columns, rows))


def _paths_for(cfg, t_start, t_end, step):
    return cfg.noise_paths(t_start, t_end, step)


def cmd_simulate(run: Run) -> bool:
    cfg = run.cfg
    system = cfg.system()
    grid = system.grid
    paths = _paths_for(cfg, grid.t_start, grid.t_end, grid.step)
    ou = ou_for_paths(system, paths)
    x0 = cfg.x0()
    rode = integrate_coupled_rode(system, ou, x0)
    ou_values = stack_ou(ou, grid, system.N)
    sode = integrate_coupled_sode(system, paths, x0 + ou_values[0], ou=ou)
    gap = sode.states - (rode.states + ou_values)
    discrepancy = float(np.linalg.norm(gap.reshape(gap.shape[0], -1), axis=1).max())
    spread, _ = analysis.component_spread(rode)
    cols = reporting.trajectory_columns(system.N, system.d)
    run.csv("simulate_rode", cols, reporting.trajectory_rows(grid.times, rode.states))
    run.csv("simulate_sode", cols, reporting.trajectory_rows(grid.times, sode.states))
    run.json({
        "N": system.N, "d": system.d, "lambda": system.lam, "step": grid.step,
        "t_start": grid.t_start, "t_end": grid.t_end,
        "final_rode": rode.final.tolist(), "final_sode": sode.final.tolist(),
        "transform_discrepancy": discrepancy, "component_spread": spread, "passed": True,
    })
    return True


def cmd_sweep(run: Run) -> bool:
    cfg = run.cfg
    sw = cfg.section("sweep")
    template = cfg.system()
    lambdas, window, base = sw["lambdas"], sw["window"], sw["base_step"]
    rows = []
    slope = None
    if lambdas:
        fine = analysis.fine_step(lambdas, template.l, base)
        paths = _paths_for(cfg, window[0], window[1], fine)
        res = analysis.lambda_sweep(template, lambdas, window, paths, x0=cfg.x0(), base_step=base)
        rows = res.rows
        slope = res.top_decade_slope()
    spread = [r.spread for r in rows]
    gaps = [r.averaged_gap for r in rows]
    passed = all(b < a for a, b in zip(spread, spread[1:])) and all(b < a for a, b in zip(gaps, gaps[1:]))
    columns = ["lambda", "step", "refined", "spread", "spread_sq", "averaged_gap", "dj1", "uniform"]
    run.csv("sweep", columns, ([r.to_dict()[c] for c in columns] for r in rows))
    run.json({"rows": [r.to_dict() for r in rows], "window": window, "spread_sq_slope": slope, "passed": passed})
    return passed


def cmd_attractor(run: Run) -> bool:
    cfg = run.cfg
    at = cfg.section("attractor")
    system = cfg.system()
    horizons, anchors = at["horizons"], at["anchors"]
    step = system.grid.step
    paths = _paths_for(cfg, min(horizons), max(max(anchors), step), step)
    x0 = cfg.x0()
    x1 = x0.copy()
    x1.flat[0] += 1.0
    est = attractor.pullback_fixed_point(system, paths, horizons, np.stack([x0, x1]), at["tol"])
    residual = attractor.stationary_orbit_residual(system, paths, anchors, horizon=min(horizons))
    passed = est.converged and bool(est.contained)
    run.csv(
        "attractor_point", ["component", "coordinate", "value"],
        ([j, k, float(est.point[j, k])] for j in range(system.N) for k in range(system.d)),
    )
    run.json({"attractor": est.to_dict(), "stationary_orbit_residual": residual, "anchors": anchors, "passed": passed})
    return passed


def cmd_averaged(run: Run) -> bool:
    cfg = run.cfg
    at = cfg.section("attractor")
    system = cfg.system()
    avg = averaged.AveragedConfig.from_system(system)
    grid = system.grid
    horizons = at["horizons"]
    paths = _paths_for(cfg, min(min(horizons), grid.t_start), max(grid.t_end, grid.step), grid.step)
    z0 = np.zeros((2, system.d))
    z0[1, 0] = 1.0
    est = averaged.averaged_pullback_point(avg, paths, horizons, z0, at["tol"])
    gap = averaged.two_solution_gap(avg, paths, z0[0], z0[1])
    span = grid.t_end - grid.t_start
    bound = float(np.exp((2 - 2 * avg.l) * span) * gap[0] * 1.15)
    horizon = min(horizons)
    residual = z = None
    if horizon < grid.t_start:
        residual = averaged.averaged_sode_residual(avg, paths, horizon=horizon)
        z, _ = averaged.stationary_reconstruction(avg, paths, horizon)
    passed = (
        est.converged and bool(est.contained) and gap[-1] <= bound
        and (residual is None or residual <= 10 * grid.step)
    )
    if z is not None:
        run.csv("averaged_reconstruction", ["time"] + [f"z_{k}" for k in range(system.d)],
                reporting.trajectory_rows(grid.times, z))
    run.json({
        "attractor": est.to_dict(), "final_gap": float(gap[-1]), "gap_bound": bound,
        "sode_residual": residual, "step": grid.step, "passed": passed,
    })
    return passed


def cmd_eigen(run: Run) -> bool:
    e = run.cfg.section("eigen")
    records = []
    for variant in e["variants"]:
        for N in e["N"]:
            beta = e["beta"]
            if beta is None and variant in ("H", "H_tilde"):
                _, beta = bounds.admissible_beta_range(N)
            for lam in e["lambda"]:
                spec = bounds.CouplingMatrixSpec(variant, N, lam, l=e["l"], beta=beta)
                records.append(bounds.closed_form_eigenvalues(spec).to_dict())
    passed = all(r["agrees"] for r in records)
    run.csv(
        "eigen", ["variant", "N", "lambda", "k", "eigenvalue", "closed_form"],
        ([r["variant"], r["N"], r["lambda"], k, v, c]
         for r in records for k, (v, c) in enumerate(zip(r["eigenvalues"], r["closed_form_values"]))),
    )
    run.json({"records": records, "passed": passed})
    return passed


def cmd_verify_all(run: Run) -> bool:
    results = verification.run_all(report=lambda r: print(r.line(), flush=True))
    passed = all(r.passed for r in results)
    run.csv("verify-all", ["criterion", "name", "passed"], ([r.number, r.name, r.passed] for r in results))
    run.json({"criteria": [r.to_dict() for r in results], "passed": passed})
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return passed


HANDLERS = {
    "simulate": cmd_simulate, "sweep": cmd_sweep, "attractor": cmd_attractor,
    "averaged": cmd_averaged, "eigen": cmd_eigen, "verify-all": cmd_verify_all,
}


def resolve_config(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.default_config()
    out = args.out if args.out is not None else os.environ.get("LEVYSYNC_OUT")
    cfg = cfgmod.apply_overrides(cfg, seed=args.seed, step=args.step, fmt=args.format, out=out)
    cfgmod.check_buildable(cfg)
    return cfg


def run_experiment(kind, cfg: cfgmod.ExperimentConfig) -> int:
    run = Run(kind, cfg)
    try:
        passed = HANDLERS[kind](run)
    except DivergenceError as exc:
        print(f"levysync: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, LevySyncError) as exc:
        print(f"levysync: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"levysync: cannot write reports: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for path in run.written:
        log.info("wrote %s", path)
    return EXIT_PASS if passed else EXIT_FAIL


def main(argv=None) -> int:
    level = os.environ.get("LEVYSYNC_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"levysync: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run_experiment(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
