"""Run configuration: flat INI sections mapped onto typed run parameters.

Sections are problem, scope, coeffs, solver, sweep, and output; every key
is checked against the schema and unknown keys are hard errors, as are
violations of the standing hypotheses on the coefficients and exponents.
The effective configuration (with defaults filled in) echoes into every
run summary and re-parses to an equivalent RunConfig.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .fields import Grid, make_grid
from .forms import CoeffProfile, CoeffSpec, ScopeSpec
from .energies import ProblemSpec
from .solver import SolverOptions

_SENTINEL_INF = ("inf", "+inf", "infinity")


def _parse_bool(text: str, where: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{where}: expected a boolean, got '{text}'")


def _parse_float(text: str, where: str) -> float:
    t = text.strip().lower()
    if t in _SENTINEL_INF:
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{where}: expected a number, got '{text}'") from None


def _parse_int(text: str, where: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"{where}: expected an integer, got '{text}'") from None


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_floats(text: str, where: str) -> tuple[float, ...]:
    return tuple(_parse_float(part, where) for part in _split(text))


def _parse_ints(text: str, where: str) -> tuple[int, ...]:
    return tuple(_parse_int(part, where) for part in _split(text))


def _parse_pairs(text: str, where: str) -> tuple[tuple[float, float], ...]:
    """Comma-separated q:k pairs, e.g. '2:1, 1:2, 0.5:1.5'."""
    pairs = []
    for part in _split(text):
        halves = part.split(":")
        if len(halves) != 2:
            raise ValueError(f"{where}: expected q:k pairs, got '{part}'")
        pairs.append((_parse_float(halves[0], where), _parse_float(halves[1], where)))
    return tuple(pairs)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, int):
        return str(value)
    return str(value)


def _fmt_list(values) -> str:
    return ", ".join(_fmt(v) for v in values)


def _fmt_pairs(pairs) -> str:
    return ", ".join(f"{_fmt(q)}:{_fmt(k)}" for q, k in pairs)


# schema: section -> key -> (kind, default); kinds name the parser
_SCHEMA = {
    "problem": {
        "alpha": ("float", 0.4),
        "p": ("float", 2.0),
        "n": ("int", 1),
        "eps": ("float", 1.0),
        "frame": ("str", "original"),
        "box_half_width": ("float", 12.0),
        "points_per_dim": ("int", 401),
        "tail_correction": ("bool", True),
        "shell_correction": ("bool", False),
    },
    "scope": {
        "kind": ("str", "constant"),
        "rho0": ("float", 1.0),
        "rho_inf": ("float", math.inf),
        "width": ("float", 1.0),
    },
    "coeffs": {
        "q_kind": ("str", "lorentz_dip"),
        "q_base": ("float", 2.0),
        "q_amplitude": ("float", 1.0),
        "q_center": ("float", 0.0),
        "q_width": ("float", 1.0),
        "k_kind": ("str", "constant"),
        "k_base": ("float", 1.0),
        "k_amplitude": ("float", 0.0),
        "k_center": ("float", 0.0),
        "k_width": ("float", 1.0),
    },
    "solver": {
        "max_iters": ("int", 20000),
        "tol_g": ("float", 1e-8),
        "tol_c_rel": ("float", 1e-9),
        "init_step": ("float", 1.0),
        "max_backtracks": ("int", 60),
        "clip_negative": ("bool", True),
        "restart_centers": ("floats", ()),
        "init_width": ("float", 1.0),
        "init_amplitude": ("float", 1.0),
        "symmetrize": ("bool", False),
        "seed": ("int", 0),
        "threads": ("int", 1),
    },
    "sweep": {
        "eps_list": ("floats", (1.0, 0.5, 0.25)),
        "radii": ("floats", (1.0, 2.0)),
        "localization_radius": ("float", 1.0),
        "pairs": ("pairs", ((2.0, 1.0), (1.0, 2.0), (0.5, 1.5))),
        "ladder": ("ints", (401, 801)),
        "ladder_half_width": ("opt_float", None),
        "xi_min": ("float", -6.0),
        "xi_max": ("float", 6.0),
        "xi_points": ("int", 121),
        "spot_checks": ("floats", (0.0, 2.0)),
        "samples": ("int", 1000),
        "gap_halfwidth": ("float", 50.0),
        "gap_points": ("int", 2001),
    },
    "output": {
        "dir": ("str", "out"),
    },
}

_PARSERS = {
    "float": _parse_float,
    "opt_float": lambda text, where: (None if text.strip().lower() in ("", "none")
                                      else _parse_float(text, where)),
    "int": _parse_int,
    "bool": _parse_bool,
    "str": lambda text, where: text.strip(),
    "floats": _parse_floats,
    "ints": _parse_ints,
    "pairs": _parse_pairs,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters; construction enforces the hypotheses."""

    alpha: float
    p: float
    n: int
    eps: float
    frame: str
    box_half_width: float
    points_per_dim: int
    tail_correction: bool
    shell_correction: bool
    scope: ScopeSpec
    coeffs: CoeffSpec
    solver: SolverOptions
    eps_list: tuple
    radii: tuple
    localization_radius: float
    pairs: tuple
    ladder: tuple
    ladder_half_width: float | None
    xi_min: float
    xi_max: float
    xi_points: int
    spot_checks: tuple
    samples: int
    gap_halfwidth: float
    gap_points: int
    out_dir: str

    def __post_init__(self):
        # building a throwaway problem runs every hypothesis check
        self.problem()

    def grid(self) -> Grid:
        return make_grid(self.n, self.box_half_width, self.points_per_dim)

    def problem(self, eps: float | None = None) -> ProblemSpec:
        return ProblemSpec(
            alpha=self.alpha, p=self.p, n=self.n,
            eps=self.eps if eps is None else eps,
            frame=self.frame, scope=self.scope, coeffs=self.coeffs,
            grid=self.grid(),
            tail_correction=self.tail_correction,
            shell_correction=self.shell_correction,
        )

    def reference_ladder(self) -> list[tuple[float, int]]:
        L = self.box_half_width if self.ladder_half_width is None else self.ladder_half_width
        return [(L, N) for N in self.ladder]

    def echo(self) -> dict:
        """Effective configuration as {section: {key: string}}; re-parseable."""
        sol = self.solver
        values = {
            "problem": {
                "alpha": self.alpha, "p": self.p, "n": self.n,
                "eps": self.eps, "frame": self.frame,
                "box_half_width": self.box_half_width,
                "points_per_dim": self.points_per_dim,
                "tail_correction": self.tail_correction,
                "shell_correction": self.shell_correction,
            },
            "scope": {
                "kind": self.scope.kind, "rho0": self.scope.rho0,
                "rho_inf": self.scope.rho_inf, "width": self.scope.width,
            },
            "coeffs": {
                "q_kind": self.coeffs.q.kind, "q_base": self.coeffs.q.base,
                "q_amplitude": self.coeffs.q.amplitude,
                "q_center": self.coeffs.q.center, "q_width": self.coeffs.q.width,
                "k_kind": self.coeffs.k.kind, "k_base": self.coeffs.k.base,
                "k_amplitude": self.coeffs.k.amplitude,
                "k_center": self.coeffs.k.center, "k_width": self.coeffs.k.width,
            },
            "solver": {
                "max_iters": sol.max_iters, "tol_g": sol.tol_g,
                "tol_c_rel": sol.tol_c_rel, "init_step": sol.init_step,
                "max_backtracks": sol.max_backtracks,
                "clip_negative": sol.clip_negative,
                "restart_centers": _fmt_list(sol.restart_centers),
                "init_width": sol.init_width,
                "init_amplitude": sol.init_amplitude,
                "symmetrize": sol.symmetrize,
                "seed": sol.seed, "threads": sol.threads,
            },
            "sweep": {
                "eps_list": _fmt_list(self.eps_list),
                "radii": _fmt_list(self.radii),
                "localization_radius": self.localization_radius,
                "pairs": _fmt_pairs(self.pairs),
                "ladder": _fmt_list(self.ladder),
                "ladder_half_width": "none" if self.ladder_half_width is None
                                     else _fmt(self.ladder_half_width),
                "xi_min": self.xi_min, "xi_max": self.xi_max,
                "xi_points": self.xi_points,
                "spot_checks": _fmt_list(self.spot_checks),
                "samples": self.samples,
                "gap_halfwidth": self.gap_halfwidth,
                "gap_points": self.gap_points,
            },
            "output": {"dir": self.out_dir},
        }
        return {
            sec: {key: _fmt(val) if not isinstance(val, str) else val
                  for key, val in keys.items()}
            for sec, keys in values.items()
        }


def _build(merged: dict) -> RunConfig:
    prob, scope, co, sol, sw = (merged["problem"], merged["scope"],
                                merged["coeffs"], merged["solver"],
                                merged["sweep"])
    scope_kwargs = {"kind": scope["kind"], "rho0": scope["rho0"],
                    "width": scope["width"]}
    if scope["kind"] == "saturating" or math.isfinite(scope["rho_inf"]):
        scope_kwargs["rho_inf"] = scope["rho_inf"]
    coeffs = CoeffSpec(
        q=CoeffProfile(kind=co["q_kind"], base=co["q_base"],
                       amplitude=co["q_amplitude"], center=co["q_center"],
                       width=co["q_width"]),
        k=CoeffProfile(kind=co["k_kind"], base=co["k_base"],
                       amplitude=co["k_amplitude"], center=co["k_center"],
                       width=co["k_width"]),
    )
    solver = SolverOptions(
        max_iters=sol["max_iters"], tol_g=sol["tol_g"],
        tol_c_rel=sol["tol_c_rel"], init_step=sol["init_step"],
        max_backtracks=sol["max_backtracks"],
        clip_negative=sol["clip_negative"],
        restart_centers=sol["restart_centers"],
        init_width=sol["init_width"], init_amplitude=sol["init_amplitude"],
        symmetrize=sol["symmetrize"],
        seed=sol["seed"], threads=sol["threads"],
    )
    return RunConfig(
        alpha=prob["alpha"], p=prob["p"], n=prob["n"], eps=prob["eps"],
        frame=prob["frame"], box_half_width=prob["box_half_width"],
        points_per_dim=prob["points_per_dim"],
        tail_correction=prob["tail_correction"],
        shell_correction=prob["shell_correction"],
        scope=ScopeSpec(**scope_kwargs), coeffs=coeffs, solver=solver,
        eps_list=sw["eps_list"], radii=sw["radii"],
        localization_radius=sw["localization_radius"], pairs=sw["pairs"],
        ladder=sw["ladder"], ladder_half_width=sw["ladder_half_width"],
        xi_min=sw["xi_min"], xi_max=sw["xi_max"], xi_points=sw["xi_points"],
        spot_checks=sw["spot_checks"], samples=sw["samples"],
        gap_halfwidth=sw["gap_halfwidth"], gap_points=sw["gap_points"],
        out_dir=merged["output"]["dir"],
    )


def parse_config_string(text: str, origin: str = "<config>") -> RunConfig:
    cp = configparser.RawConfigParser()
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ValueError(f"{origin}: {exc}") from None

    merged = {sec: {key: default for key, (_, default) in keys.items()}
              for sec, keys in _SCHEMA.items()}
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ValueError(f"{origin}: unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in _SCHEMA[sec]:
                raise ValueError(f"{origin}: unknown key '{key}' in [{sec}]")
            kind = _SCHEMA[sec][key][0]
            where = f"{origin}: [{sec}] {key}"
            merged[sec][key] = _PARSERS[kind](raw, where)
    return _build(merged)


def parse_config(path) -> RunConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValueError(f"cannot read config: {exc}") from None
    return parse_config_string(text, origin=str(path))


def echo_to_text(echo: dict) -> str:
    """Render an echo dict back to INI text (the round-trip direction)."""
    lines = []
    for sec, keys in echo.items():
        lines.append(f"[{sec}]")
        for key, val in keys.items():
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)
