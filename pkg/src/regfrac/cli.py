"""Command-line driver: subcommand dispatch, CSV/JSON emission, exit codes.

Every run writes its experiment CSV plus a summary.json holding the
command name, the effective configuration echo, the verdict list, and
work counters.  The counters stand in for timings so that repeated runs
with the same config, seed, and thread count are byte-identical; numbers
are printed with 17 significant digits for the same reason.

Exit status: 0 when every verdict passes, 1 on a failed verdict, 2 on an
error (reported as one JSON object on stdout).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .fields import make_grid, write_field
from .forms import CoeffProfile, CoeffSpec, ScopeSpec
from .energies import ProblemSpec, check_concentration_gap, frozen_level
from .solver import reference_level, solve_ground_state
from .experiments import (
    norm_equivalence_audit,
    concentration_sweep,
    scan_frozen_levels,
    verify_scaling_law,
)
from .config import RunConfig, parse_config, parse_config_string

SCALING_TOL = 0.02
SPOT_TOL = 0.02
LOWER_BOUND_TOL = 0.01
UPPER_BOUND_TOL = 0.05


def _g(x) -> str:
    if x is None:
        return ""
    return f"{x:.17g}"


def _b(flag: bool) -> str:
    return "true" if flag else "false"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _center_scalar(center: np.ndarray, n: int) -> float:
    # one CSV column for any dimension: the coordinate in 1-d, the
    # distance from the origin in 2-d
    return float(center[0]) if n == 1 else float(np.linalg.norm(center))


def _base_grid(cfg: RunConfig):
    ladder = cfg.reference_ladder()
    return make_grid(cfg.n, ladder[0][0], ladder[0][1])


def _bare_opts(cfg: RunConfig):
    return replace(cfg.solver, restart_centers=())


def _run_solve(cfg: RunConfig, out: Path):
    opts = cfg.solver
    if not opts.restart_centers:
        gap = check_concentration_gap(cfg.coeffs, cfg.alpha, cfg.p, cfg.n,
                                      halfwidth=cfg.gap_halfwidth,
                                      points=cfg.gap_points)
        center = gap.argmin[0] if cfg.n == 1 else tuple(gap.argmin)
        opts = replace(opts, restart_centers=(center,))
    st = solve_ground_state(cfg.problem(), opts=opts)
    write_field(st.u, out / "ground_state.rsfld")
    _write_csv(out / "solve.csv",
               ("iter", "quotient", "level", "grad_norm", "step"),
               [(str(it), _g(q), _g(lvl), _g(gn), _g(s))
                for it, q, lvl, gn, s in st.trace])
    verdicts = [
        ("converged", st.converged,
         f"gradient norm {_g(st.gradient_norm)} after {st.iterations} iterations"),
        ("level_positive", st.level > 0, f"level {_g(st.level)}"),
    ]
    results = {
        "level": st.level,
        "gradient_norm": st.gradient_norm,
        "nehari_residual": st.nehari_residual,
        "iterations": st.iterations,
        "restart_index": st.restart_index,
        "field_file": "ground_state.rsfld",
    }
    return verdicts, {"solves": 1, "iterations": st.iterations}, results


def _run_sweep(cfg: RunConfig, out: Path):
    if len(cfg.radii) != 2:
        raise ValueError("radii must list exactly two values (sweep CSV schema)")
    rep = concentration_sweep(cfg.problem(), cfg.eps_list, radii=cfg.radii,
                              opts=cfg.solver,
                              localization_radius=cfg.localization_radius,
                              gap_halfwidth=cfg.gap_halfwidth,
                              gap_points=cfg.gap_points)
    r1, r2 = cfg.radii
    _write_csv(out / "sweep.csv",
               ("epsilon", "level", "mass_center", "eps_times_center",
                "frac_r1", "frac_r2", "localization_R"),
               [(_g(rec.eps), _g(rec.level),
                 _g(_center_scalar(rec.mass_center, cfg.n)),
                 _g(_center_scalar(rec.eps_times_center, cfg.n)),
                 _g(rec.fractions[r1]), _g(rec.fractions[r2]),
                 _g(rec.localization))
                for rec in rep.rows])

    # level-bound chain at the smallest eps: the comparison problem with
    # the uniform coefficient bounds from below, the frozen-level minimum
    # from above
    comp_prob = ProblemSpec(
        alpha=cfg.alpha, p=cfg.p, n=cfg.n, eps=1.0, frame="rescaled",
        scope=ScopeSpec(kind="constant", rho0=cfg.scope.rho0),
        coeffs=CoeffSpec(q=CoeffProfile(kind="constant", base=cfg.coeffs.a1),
                         k=CoeffProfile(kind="constant", base=cfg.coeffs.a2)),
        grid=cfg.grid(), tail_correction=cfg.tail_correction,
        shell_correction=cfg.shell_correction,
    )
    comp = solve_ground_state(comp_prob,
                              opts=replace(_bare_opts(cfg), symmetrize=True))
    ref = reference_level(cfg.alpha, cfg.p, cfg.n, cfg.reference_ladder(),
                          opts=_bare_opts(cfg),
                          tail_correction=cfg.tail_correction,
                          shell_correction=cfg.shell_correction)
    xi_grid = np.linspace(cfg.xi_min, cfg.xi_max, cfg.xi_points)
    if cfg.n == 2:
        xi_grid = np.stack([xi_grid, np.zeros_like(xi_grid)], axis=1)
    frozen_min = float(np.min(np.atleast_1d(
        frozen_level(xi_grid, cfg.coeffs, cfg.alpha, cfg.p, cfg.n, ref.level))))

    last = rep.rows[-1]
    ok_rows = all(rec.converged and rec.error is None for rec in rep.rows)
    monotone = all(rep.monotone.values())
    lower_ok = comp.level * (1.0 - LOWER_BOUND_TOL) <= last.level
    upper_ok = last.level <= frozen_min * (1.0 + UPPER_BOUND_TOL)
    verdicts = [
        ("all_converged", ok_rows, f"{len(rep.rows)} epsilon values"),
        ("fractions_nondecreasing", monotone,
         "radii " + ", ".join(_g(r) for r in cfg.radii)),
        ("level_lower_bound", lower_ok,
         f"comparison level {_g(comp.level)} vs smallest-eps level {_g(last.level)}"),
        ("level_upper_bound", upper_ok,
         f"smallest-eps level {_g(last.level)} vs frozen minimum {_g(frozen_min)}"),
    ]
    results = {
        "xi_star": [float(v) for v in np.atleast_1d(rep.xi_star)],
        "comparison_level": comp.level,
        "frozen_min_level": frozen_min,
        "reference_level": ref.level,
        "smallest_eps_level": last.level,
    }
    solves = len(rep.rows) + 1 + len(cfg.ladder)
    iters = sum(rec.iterations for rec in rep.rows) + comp.iterations
    return verdicts, {"solves": solves, "iterations": iters}, results


def _run_scaling(cfg: RunConfig, out: Path):
    ref = reference_level(cfg.alpha, cfg.p, cfg.n, cfg.reference_ladder(),
                          opts=_bare_opts(cfg),
                          tail_correction=cfg.tail_correction,
                          shell_correction=cfg.shell_correction)
    rep = verify_scaling_law(cfg.alpha, cfg.p, cfg.n, cfg.pairs,
                             _base_grid(cfg), opts=_bare_opts(cfg),
                             reference=ref,
                             tail_correction=cfg.tail_correction,
                             shell_correction=cfg.shell_correction)
    _write_csv(out / "scaling.csv",
               ("Q", "K", "computed_level", "predicted_level", "rel_error"),
               [(_g(r.q), _g(r.k), _g(r.computed_level), _g(r.predicted_level),
                 _g(r.rel_error))
                for r in rep.rows])
    ok_rows = all(r.converged for r in rep.rows)
    within = rep.max_rel_error <= SCALING_TOL
    verdicts = [
        ("all_converged", ok_rows, f"{len(rep.rows)} coefficient pairs"),
        ("scaling_within_tolerance", within,
         f"max relative error {_g(rep.max_rel_error)} (tolerance {_g(SCALING_TOL)})"),
    ]
    results = {
        "reference_level": rep.ref_level,
        "unit_grid_level": rep.unit_ref_level,
        "reference_error_estimate": ref.error_estimate,
        "theta": rep.theta,
        "sigma": rep.sigma,
        "max_rel_error": rep.max_rel_error,
    }
    solves = len(cfg.ladder) + len(cfg.pairs)
    return verdicts, {"solves": solves}, results


def _run_scan(cfg: RunConfig, out: Path):
    if cfg.n != 1:
        raise ValueError("the level-curve scan is one-dimensional (n = 1)")
    ref = reference_level(cfg.alpha, cfg.p, cfg.n, cfg.reference_ladder(),
                          opts=_bare_opts(cfg),
                          tail_correction=cfg.tail_correction,
                          shell_correction=cfg.shell_correction)
    xi_values = np.linspace(cfg.xi_min, cfg.xi_max, cfg.xi_points)
    rep = scan_frozen_levels(cfg.coeffs, cfg.alpha, cfg.p, cfg.n, xi_values,
                             ref, spot_checks=cfg.spot_checks,
                             grid=_base_grid(cfg), opts=_bare_opts(cfg),
                             tail_correction=cfg.tail_correction,
                             shell_correction=cfg.shell_correction)
    _write_csv(out / "cxi.csv",
               ("xi", "C_analytic", "C_spotcheck", "rel_error"),
               [(_g(r.xi), _g(r.analytic), _g(r.spot), _g(r.rel_error))
                for r in rep.rows])
    spot_errs = [abs(r.rel_error) for r in rep.rows if r.rel_error is not None]
    spots_ok = all(e <= SPOT_TOL for e in spot_errs)
    detail = (f"worst deviation {_g(max(spot_errs))} over {len(spot_errs)} solves"
              if spot_errs else "no spot checks requested")
    verdicts = [("spot_checks_within_tolerance", spots_ok, detail)]
    results = {
        "argmin_xi": rep.argmin_xi,
        "min_level": rep.min_level,
        "reference_level": ref.level,
        "reference_error_estimate": ref.error_estimate,
    }
    return verdicts, {"solves": len(cfg.ladder) + len(spot_errs)}, results


def _run_norm(cfg: RunConfig, out: Path):
    rep = norm_equivalence_audit(cfg.problem(), samples=cfg.samples,
                                 seed=cfg.solver.seed)
    _write_csv(out / "norm.csv",
               ("sample", "lhs", "rhs", "ratio", "holds"),
               [(str(r.sample), _g(r.lhs), _g(r.rhs), _g(r.ratio), _b(r.holds))
                for r in rep.rows])
    verdicts = [
        ("zero_violations", rep.failures == 0,
         f"{rep.failures} of {len(rep.rows)} samples failed, "
         f"worst ratio {_g(rep.worst_ratio)}"),
    ]
    results = {"worst_ratio": rep.worst_ratio, "samples": len(rep.rows)}
    return verdicts, {"samples": len(rep.rows)}, results


def _run_oracle(cfg: RunConfig, out: Path):
    ref = reference_level(cfg.alpha, cfg.p, cfg.n, cfg.reference_ladder(),
                          opts=_bare_opts(cfg),
                          tail_correction=cfg.tail_correction,
                          shell_correction=cfg.shell_correction)
    _write_csv(out / "oracle.csv",
               ("L", "N", "h", "level", "converged"),
               [(_g(L), str(N), _g(h), _g(lvl), _b(conv))
                for L, N, h, lvl, conv in ref.rungs])
    rung_gap = abs(ref.rungs[-1][3] - ref.rungs[-2][3])
    converged = all(conv for *_, conv in ref.rungs)
    consistent = rung_gap > ref.error_estimate
    verdicts = [
        ("all_rungs_converged", converged, f"{len(ref.rungs)} rungs"),
        ("extrapolation_consistent", consistent,
         f"rung gap {_g(rung_gap)} vs residual {_g(ref.error_estimate)}"),
    ]
    results = {
        "reference_level": ref.level,
        "error_estimate": ref.error_estimate,
        "order": ref.order,
    }
    return verdicts, {"solves": len(ref.rungs)}, results


_RUNNERS = {
    "solve": _run_solve,
    "sweep-eps": _run_sweep,
    "verify-scaling": _run_scaling,
    "scan-cxi": _run_scan,
    "check-norm": _run_norm,
    "oracle-d": _run_oracle,
}

_HELP = {
    "solve": "compute one ground state and store the field",
    "sweep-eps": "run the small-eps concentration sweep with level bounds",
    "verify-scaling": "check computed levels against the level law",
    "scan-cxi": "tabulate the frozen-coefficient level curve",
    "check-norm": "audit the norm comparison on random fields",
    "oracle-d": "extrapolate the unit-coefficient reference level",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regfrac",
        description="Ground states of Schrodinger equations with regional "
                    "fractional diffusion.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="run configuration file (defaults used when omitted)")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (overrides [output] dir)")
    common.add_argument("--seed", type=int, metavar="U64",
                        help="override [solver] seed")
    common.add_argument("--threads", type=int, metavar="N",
                        help="override [solver] threads")
    common.add_argument("--quiet", action="store_true",
                        help="suppress per-verdict lines")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner_help in _HELP.items():
        sub.add_parser(name, parents=[common], help=runner_help)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = (parse_config(args.config) if args.config
               else parse_config_string("", origin="<defaults>"))
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if overrides:
            cfg = replace(cfg, solver=replace(cfg.solver, **overrides))
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        verdicts, timings, results = _RUNNERS[args.command](cfg, out)
        summary = {
            "command": args.command,
            "config_echo": cfg.echo(),
            "verdicts": [{"name": name, "pass": ok, "detail": detail}
                         for name, ok, detail in verdicts],
            "timings": timings,
            "results": results,
        }
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc)}))
        return 2
    if not args.quiet:
        for name, ok, detail in verdicts:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return 0 if all(ok for _, ok, _ in verdicts) else 1


if __name__ == "__main__":
    sys.exit(main())
