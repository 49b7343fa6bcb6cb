"""Command-line front end.

Subcommands dispatch the analyses and write plot-ready CSV plus JSON
reports; every run leaves a manifest listing its outputs.  `reproduce`
bundles the whole benchmark study and asserts the acceptance checks, so a
single command ties every headline number to a pass/fail line.

Exit codes: 0 success, 1 failed acceptance assertion (reproduce),
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, acceptance
from .bifurcation import locate_fold, sweep
from .equilibrium import (EquilibriumPoint, SizeGrid, find_equilibria,
                          net_reproduction)
from .expressions import ExpressionError, parse_rate
from .model import ModelIngredients, builtin_example, from_expressions
from .numerics import Quadrature, RootScanConfig
from .output import RunManifest, write_csv, write_json
from .simulator import SimulationConfig, simulate
from .spectral import (MARGINAL_ZERO_EIGENVALUE, StabilityReport,
                       UnsupportedModelError, classify, marginal_diagnosis)

logger = logging.getLogger(__name__)


class CliError(Exception):
    """Configuration or usage problem; maps to exit code 2."""


@dataclass
class AppConfig:
    model: ModelIngredients
    model_echo: dict
    C: float = 0.0
    grid: SizeGrid = field(default_factory=SizeGrid)
    quadrature: Quadrature = field(default_factory=Quadrature)
    scan: RootScanConfig = field(default_factory=RootScanConfig)
    cfl: float = 0.9
    T: float = 100.0
    output_every: float = 0.5


def _get(parser: configparser.ConfigParser, section: str, key: str,
         cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise CliError(f"config [{section}] {key}={raw!r}: {exc}") from exc


def load_config(path: str) -> AppConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise CliError(f"cannot read config file {path!r}")

    echo = {section: dict(parser.items(section)) for section in parser.sections()}
    family = parser.get("model", "family", fallback=None)
    if family == "example":
        model = builtin_example()
    elif family is not None:
        raise CliError(f"unknown model family {family!r} (only 'example')")
    else:
        for key in ("m", "beta", "mu", "gamma"):
            if not parser.has_option("model", key):
                raise CliError(f"config [model] is missing {key!r}")
        try:
            model = from_expressions(
                m=float(parser.get("model", "m")),
                beta=parse_rate(parser.get("model", "beta")),
                mu=parse_rate(parser.get("model", "mu")),
                gamma=parse_rate(parser.get("model", "gamma")),
            )
        except ExpressionError as exc:
            raise CliError(f"config [model]: {exc}") from exc
        except ValueError as exc:
            raise CliError(f"config [model]: {exc}") from exc

    try:
        grid = SizeGrid(_get(parser, "grid", "N", int, 1024))
        quadrature = Quadrature(_get(parser, "numerics", "panels", int, 4096))
        scan = RootScanConfig(abs_tol=_get(parser, "numerics", "abs_tol", float, 1e-10))
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return AppConfig(
        model=model,
        model_echo=echo,
        C=_get(parser, "inflow", "C", float, 0.0),
        grid=grid,
        quadrature=quadrature,
        scan=scan,
        cfl=_get(parser, "sim", "cfl", float, 0.9),
        T=_get(parser, "sim", "T", float, 100.0),
        output_every=_get(parser, "sim", "output_every", float, 0.5),
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CliError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _conditions_payload(report: StabilityReport) -> dict:
    c = report.conditions
    return {
        "boundary_kernel_nonneg": c.boundary_kernel_nonneg,
        "boundary_kernel_margin": c.boundary_kernel_margin,
        "bulk_kernel_nonneg": c.bulk_kernel_nonneg,
        "bulk_kernel_margin": c.bulk_kernel_margin,
        "sensitivity_bounded": c.sensitivity_bounded,
        "sensitivity_margin": c.sensitivity_margin,
    }


def _stability_payload(config: AppConfig, eq: EquilibriumPoint) -> dict:
    report = classify(config.model, eq, quadrature=config.quadrature,
                      grid=config.grid, scan=config.scan)
    payload = {
        "P_star": eq.P_star,
        "p0": eq.p0,
        "dQ": eq.dQ,
        "tangent": eq.tangent,
        "classification": report.classification,
        "K0": report.K0,
        "dominant_real_eigenvalue": report.dominant_real_eigenvalue,
        "conditions": _conditions_payload(report),
        "marginal_diagnosis": None,
    }
    if report.classification == MARGINAL_ZERO_EIGENVALUE:
        try:
            diag = marginal_diagnosis(config.model, eq, quadrature=config.quadrature)
            payload["marginal_diagnosis"] = {
                "Rpp": diag.Rpp,
                "one_sided_sign": diag.one_sided_sign,
                "verdict": diag.verdict,
            }
        except UnsupportedModelError as exc:
            payload["marginal_diagnosis"] = {"unsupported": str(exc)}
    return payload


def _equilibria(config: AppConfig, C: float, P_hi: float) -> list[EquilibriumPoint]:
    return find_equilibria(config.model, C, P_hi=P_hi, quadrature=config.quadrature,
                           grid=config.grid, scan=config.scan)


def cmd_equilibria(args) -> int:
    config = load_config(args.config)
    C = args.C if args.C is not None else config.C
    out = _out_dir(args)
    manifest = RunManifest("equilibria", args.config,
                           {"C": C, "P_hi": args.P_hi}, versions=__version__).start()
    points = _equilibria(config, C, args.P_hi)
    write_csv(manifest.record(out / "equilibria.csv"),
              ["P_star", "p0", "dQ", "tangent"],
              [(eq.P_star, eq.p0, eq.dQ, eq.tangent) for eq in points])
    write_json(manifest.record(out / "equilibria.json"), {
        "C": C,
        "P_hi": args.P_hi,
        "model": config.model_echo,
        "net_reproduction_at_P_hi": net_reproduction(config.model, args.P_hi,
                                                     config.quadrature),
        "equilibria": [{"P_star": eq.P_star, "p0": eq.p0, "dQ": eq.dQ,
                        "tangent": eq.tangent} for eq in points],
    })
    manifest.finish(out)
    return 0


def cmd_stability(args) -> int:
    config = load_config(args.config)
    C = args.C if args.C is not None else config.C
    out = _out_dir(args)
    manifest = RunManifest("stability", args.config, {"C": C},
                           versions=__version__).start()
    payload = [_stability_payload(config, eq) for eq in _equilibria(config, C, args.P_hi)]
    write_json(manifest.record(out / "stability.json"),
               {"C": C, "model": config.model_echo, "reports": payload})
    manifest.finish(out)
    return 0


def _initial_density(config: AppConfig, spec: str, C: float) -> np.ndarray:
    nodes = config.grid.nodes(config.model.m)
    if spec.startswith("equilibrium:"):
        try:
            index = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise CliError(f"bad initial spec {spec!r}") from exc
        points = _equilibria(config, C, P_hi=50.0)
        if not 0 <= index < len(points):
            raise CliError(f"equilibrium index {index} out of range "
                           f"({len(points)} found)")
        return points[index].profile
    try:
        expr = parse_rate(spec)
    except ExpressionError as exc:
        raise CliError(f"initial condition: {exc}") from exc
    if expr.uses_variable("P"):
        raise CliError("initial condition may only depend on s")
    values = np.asarray(expr(nodes, 0.0), dtype=float)
    if values.ndim == 0:
        values = np.full(nodes.shape, float(values))
    if not np.isfinite(values).all():
        raise CliError("initial condition evaluates to non-finite values")
    if values.min() < 0.0:
        raise CliError("initial condition is negative somewhere on the grid")
    return values


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    C = args.C if args.C is not None else config.C
    T = args.T if args.T is not None else config.T
    grid = SizeGrid(args.N) if args.N is not None else config.grid
    config.grid = grid
    out = _out_dir(args)
    manifest = RunManifest("simulate", args.config,
                           {"C": C, "T": T, "N": grid.N, "initial": args.initial},
                           versions=__version__).start()
    initial = _initial_density(config, args.initial, C)
    sim_config = SimulationConfig(model=config.model, C=C, T_final=T, grid=grid,
                                  cfl=config.cfl, output_every=config.output_every)
    trajectory = simulate(sim_config, initial)
    write_csv(manifest.record(out / "trajectory.csv"),
              ["t", "P", "balance_residual"],
              zip(trajectory.times, trajectory.totals, trajectory.balance_residuals))
    nodes = grid.nodes(config.model.m)
    write_csv(manifest.record(out / "terminal_density.csv"), ["s", "p"],
              zip(nodes, trajectory.terminal.density))
    manifest.finish(out)
    return 0


def cmd_bifurcate(args) -> int:
    config = load_config(args.config)
    if args.steps <= 0:
        raise CliError("steps must be a positive integer")
    if not 0.0 <= args.C_lo < args.C_hi:
        raise CliError("require 0 <= C_lo < C_hi")
    out = _out_dir(args)
    manifest = RunManifest(
        "bifurcate", args.config,
        {"C_lo": args.C_lo, "C_hi": args.C_hi, "steps": args.steps},
        versions=__version__).start()
    C_values = [float(c) for c in np.linspace(args.C_lo, args.C_hi, args.steps + 1)]
    diagram = sweep(config.model, C_values, quadrature=config.quadrature,
                    grid=config.grid, scan=config.scan)
    rows = []
    for C, branch in diagram.entries:
        for point in branch:
            rows.append((C, point.P_star, point.classification, point.tangent))
    write_csv(manifest.record(out / "branches.csv"),
              ["C", "P_star", "classification", "tangent_flag"], rows)
    write_csv(manifest.record(out / "folds.csv"), ["C_star", "P_fold"],
              [(f.C_star, f.P_fold) for f in diagram.folds])
    manifest.finish(out)
    return 0


def _downsample(trajectory, every: float = 0.5):
    rows = [(trajectory.times[0], trajectory.totals[0])]
    mark = every
    for t, P in zip(trajectory.times[1:], trajectory.totals[1:]):
        if t >= mark:
            rows.append((float(t), float(P)))
            while mark <= t:
                mark += every
    if rows[-1][0] != trajectory.times[-1]:
        rows.append((float(trajectory.times[-1]), float(trajectory.totals[-1])))
    return rows


def cmd_reproduce(args) -> int:
    out = _out_dir(args)
    opts = (acceptance.AcceptanceOptions.coarse(args.N) if args.N is not None
            else acceptance.AcceptanceOptions())
    manifest = RunManifest("reproduce", "<builtin example>",
                           {"N": opts.grid_N, "panels": opts.panels},
                           versions=__version__).start()
    model = builtin_example()
    config = AppConfig(model=model, model_echo={"model": {"family": "example"}},
                       grid=opts.grid, quadrature=opts.quadrature)

    for C in (0.0, 0.2):
        tag = f"c{C:.2f}"
        points = _equilibria(config, C, P_hi=50.0)
        write_csv(manifest.record(out / f"equilibria_{tag}.csv"),
                  ["P_star", "p0", "dQ", "tangent"],
                  [(eq.P_star, eq.p0, eq.dQ, eq.tangent) for eq in points])
        write_json(manifest.record(out / f"stability_{tag}.json"),
                   {"C": C, "reports": [_stability_payload(config, eq)
                                        for eq in points]})

    C_values = [float(c) for c in np.linspace(0.0, 0.6, 25)]
    diagram = sweep(model, C_values, quadrature=opts.quadrature, grid=opts.grid)
    write_csv(manifest.record(out / "branches.csv"),
              ["C", "P_star", "classification", "tangent_flag"],
              [(C, b.P_star, b.classification, b.tangent)
               for C, branch in diagram.entries for b in branch])
    write_csv(manifest.record(out / "folds.csv"), ["C_star", "P_fold"],
              [(f.C_star, f.P_fold) for f in diagram.folds])

    N = opts.sim_Ns[-1]
    for name in ("decay", "approach"):
        trajectory = acceptance._scenario(name, N, opts.panels)
        write_csv(manifest.record(out / f"trajectory_{name}.csv"), ["t", "P"],
                  _downsample(trajectory))
        write_csv(manifest.record(out / f"terminal_{name}.csv"), ["s", "p"],
                  zip(SizeGrid(N).nodes(model.m), trajectory.terminal.density))

    results = acceptance.run_all(opts)
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'}  {result.name}  "
              f"[{result.runtime_s:.1f}s/{result.budget_s:.0f}s]")
    write_json(manifest.record(out / "summary.json"), {
        "all_passed": all(r.passed for r in results),
        "criteria": [r.as_dict() for r in results],
    })
    manifest.finish(out)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sizepop",
        description="Equilibria, stability, bifurcations, and simulation for "
                    "a size-structured population model with inflow.")
    parser.add_argument("--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="model config file (INI)")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("equilibria", help="positive equilibria at one inflow value")
    common(p)
    p.add_argument("--C", type=float, default=None, help="inflow override")
    p.add_argument("--P-hi", dest="P_hi", type=float, default=50.0,
                   help="upper bound of the equilibrium scan window")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("stability", help="stability report per equilibrium")
    common(p)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--P-hi", dest="P_hi", type=float, default=50.0)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("simulate", help="time-integrate the model")
    common(p)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--T", type=float, default=None, help="final time override")
    p.add_argument("--N", type=int, default=None, help="grid cells override")
    p.add_argument("--initial", required=True,
                   help="density expression in s, or equilibrium:<index>")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bifurcate", help="sweep the inflow and locate folds")
    common(p)
    p.add_argument("--C-lo", dest="C_lo", type=float, default=0.0)
    p.add_argument("--C-hi", dest="C_hi", type=float, default=0.6)
    p.add_argument("--steps", type=int, default=60)
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("reproduce",
                       help="run the complete benchmark study and the "
                            "acceptance checks")
    common(p, config=False)
    p.add_argument("--N", type=int, default=None,
                   help="coarse grid override (loosens the identity check "
                        "tolerance to 1e-4; convergence-sensitive checks may fail)")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExpressionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
