"""Configuration-driven experiment runner.

Commands: measure, simulate, solve, contraction, verify.  Every run echoes
its configuration into the output directory, writes a machine-parseable
report.json plus a grep-friendly summary.txt, and exits 0 iff all requested
checks passed.  Config files are flat ``key = value`` text; command-line
flags win over file values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cameron_martin import CMPath
from .errors import EnsembleTooSmallError, Error, SpecParseError
from .grid import build_grid
from .sde import (
    clarke_solve,
    estimate_contraction,
    inverse_map,
    parse_drift,
    solve_forward,
    strong_solution_map,
)
from .timescale import lebesgue_decomposition, measure_of_interval, parse_timescale
from .verify import (
    brownianity_suite,
    filtration_prefix_check,
    girsanov_mean_check,
    law_equivalence_check,
)
from .wiener import sample_ensemble, write_ensemble, write_ensemble_meta


@dataclass
class ExperimentConfig:
    """Flat run configuration; every field maps to a config key and a flag."""

    timescale: str = "cantor:4"
    mesh: float = 1.0
    drift: str = "zero"
    rho_mode: str = "exact"
    n_paths: int = 1000
    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 100
    trials: int = 20
    probes: int = 200
    shift_norm: float = 1.0
    workers: int = 1
    out: str = "out"


def _coerce(field: dataclasses.Field, raw: str):
    if field.type in ("int", int):
        return int(raw)
    if field.type in ("float", float):
        return float(raw)
    return raw


def load_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecParseError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if getattr(args, "config", None):
        for key, raw in load_config_file(args.config).items():
            if key not in fields:
                raise SpecParseError(f"unknown config key {key!r}")
            setattr(cfg, key, _coerce(fields[key], raw))
    for name in fields:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if cfg.n_paths < 1:
        raise SpecParseError("n_paths must be >= 1")
    if cfg.tol <= 0:
        raise SpecParseError("tol must be positive")
    return cfg


def _prepare_outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{f.name} = {getattr(cfg, f.name)}" for f in dataclasses.fields(ExperimentConfig)
    ]
    (out / "config.txt").write_text("\n".join(lines) + "\n")
    return out


def _write_report(out: Path, payload: dict) -> None:
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _finish(out: Path, lines: list[str]) -> int:
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    return 0 if all(line.startswith("PASS") or line.startswith("#") for line in lines) else 1


def _check_line(name: str, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} {name} {detail}"


# -- commands -----------------------------------------------------------------


def cmd_measure(cfg: ExperimentConfig) -> int:
    out = _prepare_outdir(cfg)
    ts = parse_timescale(cfg.timescale)
    decomp = lebesgue_decomposition(ts)

    with open(out / "decomposition.csv", "w") as fh:
        fh.write("kind,left,right,mass\n")
        for a, b in decomp.continuous_segments:
            fh.write("segment,%.17g,%.17g,%.17g\n" % (a, b, b - a))
        for loc, wgt in decomp.atoms:
            fh.write("atom,%.17g,%.17g,%.17g\n" % (loc, loc, wgt))

    endpoints = sorted({p for seg in ts.segments for p in seg})
    k = len(endpoints)
    spots = {(endpoints[0], endpoints[-1]), (endpoints[0], endpoints[k // 2])}
    spots.add((endpoints[k // 3], endpoints[(2 * k) // 3]))
    spot_rows = []
    worst = 0.0
    for s, t in sorted(spots):
        if s > t:
            continue
        direct = measure_of_interval(ts, s, t)
        from_parts = decomp.interval_measure(s, t)
        worst = max(worst, abs(direct - from_parts))
        spot_rows.append({"s": s, "t": t, "measure": direct, "from_parts": from_parts})

    mass = decomp.total_mass()
    lines = [
        _check_line("measure-total-mass", abs(mass - 1.0) <= 1e-12, f"mass={mass!r}"),
        _check_line("measure-spot-checks", worst <= 1e-12, f"max_disagreement={worst:.3g}"),
        f"# atoms={len(decomp.atoms)} atomic_mass={decomp.atomic_mass()!r} "
        f"continuous_mass={decomp.continuous_mass()!r}",
    ]
    _write_report(
        out,
        {
            "command": "measure",
            "timescale_spec": cfg.timescale,
            "segments": [list(s) for s in ts.segments],
            "atoms": [list(a) for a in decomp.atoms],
            "continuous_segments": [list(s) for s in decomp.continuous_segments],
            "total_mass": mass,
            "atomic_mass": decomp.atomic_mass(),
            "continuous_mass": decomp.continuous_mass(),
            "spot_checks": spot_rows,
        },
    )
    return _finish(out, lines)


def _sampled_ensemble(cfg: ExperimentConfig, out: Path):
    ts = parse_timescale(cfg.timescale)
    grid = build_grid(ts, cfg.mesh)
    ens = sample_ensemble(grid, cfg.n_paths, cfg.seed, workers=cfg.workers)
    with open(out / "paths.csv", "w") as fh:
        write_ensemble(ens, fh)
    with open(out / "paths.meta.json", "w") as fh:
        write_ensemble_meta(ens, fh)
    return grid, ens


def cmd_simulate(cfg: ExperimentConfig) -> int:
    out = _prepare_outdir(cfg)
    _, ens = _sampled_ensemble(cfg, out)
    try:
        reports = brownianity_suite(ens)
    except EnsembleTooSmallError as exc:
        lines = [f"FAIL brownianity {exc}"]
        _write_report(out, {"command": "simulate", "error": str(exc), "reports": []})
        return _finish(out, lines)
    _write_report(out, {"command": "simulate", "reports": [r.to_dict() for r in reports]})
    return _finish(out, [r.summary_line() for r in reports])


def cmd_solve(cfg: ExperimentConfig) -> int:
    out = _prepare_outdir(cfg)
    grid, ens = _sampled_ensemble(cfg, out)
    drift = parse_drift(cfg.drift, rho_mode=cfg.rho_mode)
    report = clarke_solve(drift, ens, cfg.tol, cfg.max_iter)

    with open(out / "residuals.csv", "w") as fh:
        fh.write("iteration,residual,log10_residual,epsilon\n")
        for i, res in enumerate(report.residuals):
            log_res = math.log10(res) if res > 0 else -math.inf
            eps = report.epsilons[i - 1] if i > 0 else math.nan
            fh.write("%d,%.17g,%.17g,%.17g\n" % (i, res, log_res, eps))

    lines = [
        _check_line(
            "solve-converged",
            report.converged,
            f"iterations={report.iterations} residual={report.residuals[-1]:.3e}",
        )
    ]
    payload = {"command": "solve", **report.to_json_dict()}
    if report.converged:
        cross_tol = max(1e-9, 10.0 * cfg.tol)
        x_fixed = strong_solution_map(drift, ens, report)
        x_fwd = solve_forward(grid, drift, ens)
        cross = float(np.abs(x_fixed.values - x_fwd.values).max())
        back = float(np.abs(inverse_map(drift, x_fixed).values - ens.values).max())
        ratios = [
            b / a
            for a, b, e in zip(report.residuals, report.residuals[1:], report.epsilons)
            if e == 1.0 and a > 0
        ]
        payload.update(
            {
                "cross_check_sup": cross,
                "inverse_identity_sup": back,
                "max_full_step_ratio": max(ratios) if ratios else None,
            }
        )
        lines.append(
            _check_line("solve-cross-check", cross <= cross_tol, f"sup_diff={cross:.3e}")
        )
        lines.append(
            _check_line(
                "solve-inverse-identity", back <= cross_tol, f"sup_diff={back:.3e}"
            )
        )
        if ratios:
            lines.append(f"# max full-step residual ratio {max(ratios):.4f}")
        with open(out / "x_paths.csv", "w") as fh:
            write_ensemble(x_fixed, fh)
    _write_report(out, payload)
    return _finish(out, lines)


def cmd_contraction(cfg: ExperimentConfig) -> int:
    out = _prepare_outdir(cfg)
    grid, ens = _sampled_ensemble(cfg, out)
    drift = parse_drift(cfg.drift, rho_mode=cfg.rho_mode)
    rng = np.random.default_rng([cfg.seed, 0xC0])
    est = estimate_contraction(drift, ens, cfg.trials, rng)
    with open(out / "contraction.csv", "w") as fh:
        fh.write("trial,epsilon,numerator,denominator,ratio\n")
        for trial, eps, num, den, ratio in est.rows:
            fh.write("%d,%.17g,%.17g,%.17g,%.17g\n" % (trial, eps, num, den, ratio))
    _write_report(
        out,
        {
            "command": "contraction",
            "k_hat": est.k_hat,
            "trials": cfg.trials,
            "drift": drift.describe(),
            "timescale_spec": cfg.timescale,
            "seed": cfg.seed,
            "n_paths": cfg.n_paths,
        },
    )
    lines = [
        _check_line("contraction-admissible", est.k_hat < 1.0, f"k_hat={est.k_hat:.6g}")
    ]
    return _finish(out, lines)


def cmd_verify(cfg: ExperimentConfig) -> int:
    out = _prepare_outdir(cfg)
    grid, ens = _sampled_ensemble(cfg, out)
    drift = parse_drift(cfg.drift, rho_mode=cfg.rho_mode)
    reports = []
    try:
        reports.extend(brownianity_suite(ens))
    except EnsembleTooSmallError as exc:
        lines = [f"FAIL brownianity {exc}"]
        _write_report(out, {"command": "verify", "error": str(exc), "reports": []})
        return _finish(out, lines)

    density = np.ones(grid.n_cells)
    h = CMPath(grid, density * (cfg.shift_norm / CMPath(grid, density).norm()))
    reports.append(girsanov_mean_check(h, ens))

    solve_report = clarke_solve(drift, ens, cfg.tol, cfg.max_iter)
    lines = []
    if solve_report.converged:
        reports.extend(law_equivalence_check(drift, ens, solve_report))
        reports.append(
            filtration_prefix_check(drift, ens, solve_report, cfg.probes, seed=cfg.seed)
        )
    else:
        lines.append(
            f"FAIL solve-converged iterations={solve_report.iterations} "
            f"residual={solve_report.residuals[-1]:.3e}"
        )
    _write_report(
        out,
        {
            "command": "verify",
            "reports": [r.to_dict() for r in reports],
            "solve": solve_report.to_json_dict(),
        },
    )
    lines = [r.summary_line() for r in reports] + lines
    return _finish(out, lines)


COMMANDS = {
    "measure": cmd_measure,
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "contraction": cmd_contraction,
    "verify": cmd_verify,
}


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--timescale", help="time-scale spec (interval, uniform:n, geometric:q,n, cantor:n, explicit:[...])")
    p.add_argument("--mesh", type=float, help="max node spacing inside segments")
    p.add_argument("--drift", help="drift spec (zero, const:c, sin:a)")
    p.add_argument("--rho-mode", dest="rho_mode", choices=("exact", "mesh"), help="backward jump convention at left-dense nodes")
    p.add_argument("--n-paths", dest="n_paths", type=int, help="ensemble size")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--tol", type=float, help="solver tolerance")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="solver iteration cap")
    p.add_argument("--trials", type=int, help="contraction trial shifts")
    p.add_argument("--probes", type=int, help="filtration perturbation probes")
    p.add_argument("--shift-norm", dest="shift_norm", type=float, help="norm of the density-check shift")
    p.add_argument("--workers", type=int, help="sampling worker threads")
    p.add_argument("--out", help="output directory")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tscalc",
        description="Stochastic calculus on time scales: measure tables, path "
        "simulation, fixed-point drift-SDE solves, and verification suites.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_common_flags(sub.add_parser(name))
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (Error, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
