"""Problem definitions, energies, gradients, and Nehari-manifold algebra.

The energy functional is

    E(u) = 1/2 * (pref * u^T A u + sum_i h^n Q_i u_i^2)
           - 1/(p+1) * sum_i h^n K_i |u_i|^{p+1}

where pref = eps^{2*alpha} in the original frame and 1 in the rescaled
frame.  The prefactor is attached here at evaluation time, never baked into
the assembled form, so one assembly serves a whole eps sweep.

Gradients are taken with respect to the h^n-weighted Euclidean inner
product on nodal values (discrete L^2 gradient).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Field, Grid
from .forms import (
    CoeffSpec,
    FRAMES,
    QuadForm,
    ScopeSpec,
    assemble_full_form,
    assemble_regional_form,
    eval_scope,
)


def _check_exponents(alpha: float, p: float, n: int) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} must be in (0, 1)")
    if not n > 2 * alpha:
        raise ValueError(f"n > 2*alpha violated: n={n}, alpha={alpha}")
    crit = (n + 2 * alpha) / (n - 2 * alpha)
    if not 1.0 < p < crit:
        raise ValueError(
            f"p={p} violates 1 < p < (n+2*alpha)/(n-2*alpha)={crit:g}"
        )


@dataclass(frozen=True)
class ProblemSpec:
    """Variable-coefficient problem on a grid, in either frame."""

    alpha: float
    p: float
    n: int
    eps: float
    frame: str
    scope: ScopeSpec
    coeffs: CoeffSpec
    grid: Grid
    tail_correction: bool = True
    shell_correction: bool = False

    def __post_init__(self):
        _check_exponents(self.alpha, self.p, self.n)
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame '{self.frame}'")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.n != self.grid.n:
            raise ValueError("problem dimension does not match grid dimension")

    def quad_prefactor(self) -> float:
        return self.eps ** (2 * self.alpha) if self.frame == "original" else 1.0

    def _frame_points(self) -> np.ndarray:
        x = self.grid.coords
        return self.eps * x if self.frame == "rescaled" else x

    def scope_values(self) -> np.ndarray:
        return eval_scope(self.scope, self.grid.coords, self.eps, self.frame)

    def q_values(self) -> np.ndarray:
        return self.coeffs.q.evaluate(self._frame_points())

    def k_values(self) -> np.ndarray:
        return self.coeffs.k.evaluate(self._frame_points())


@dataclass(frozen=True)
class ConstCoeffProblem:
    """Constant-coefficient comparison problem with the full-range operator."""

    q_val: float
    k_val: float
    alpha: float
    p: float
    n: int
    grid: Grid
    tail_correction: bool = True
    shell_correction: bool = False

    def __post_init__(self):
        _check_exponents(self.alpha, self.p, self.n)
        if not (self.q_val > 0 and self.k_val > 0):
            raise ValueError("constant coefficients must be positive")
        if self.n != self.grid.n:
            raise ValueError("problem dimension does not match grid dimension")

    def quad_prefactor(self) -> float:
        return 1.0

    def q_values(self) -> np.ndarray:
        return np.full(self.grid.num_nodes, self.q_val)

    def k_values(self) -> np.ndarray:
        return np.full(self.grid.num_nodes, self.k_val)


def assemble_for(problem) -> QuadForm:
    """Assemble the frame-appropriate quadratic form for a problem."""
    if isinstance(problem, ConstCoeffProblem) or problem.scope.kind == "infinite":
        return assemble_full_form(
            problem.grid, problem.alpha,
            tail_correction=problem.tail_correction,
            shell_correction=problem.shell_correction,
        )
    return assemble_regional_form(
        problem.grid, problem.scope_values(), problem.alpha,
        shell_correction=problem.shell_correction,
    )


@dataclass(frozen=True)
class EnergyReport:
    """Energy split; total = (quadratic + potential)/2 - nonlinear/(p+1)."""

    total: float
    quadratic: float
    potential: float
    nonlinear: float


def _pieces(problem, form: QuadForm, u: Field):
    if form.grid != u.grid or problem.grid != u.grid:
        raise ValueError("grid mismatch between problem, form, and field")
    w = u.grid.weight
    au = form.matrix @ u.values
    quadratic = problem.quad_prefactor() * float(u.values @ au)
    potential = w * float(np.sum(problem.q_values() * u.values**2))
    nonlinear = w * float(
        np.sum(problem.k_values() * np.abs(u.values) ** (problem.p + 1))
    )
    return au, quadratic, potential, nonlinear


def energy(problem, form: QuadForm, u: Field) -> EnergyReport:
    _, quadratic, potential, nonlinear = _pieces(problem, form, u)
    total = 0.5 * (quadratic + potential) - nonlinear / (problem.p + 1)
    return EnergyReport(total=total, quadratic=quadratic,
                        potential=potential, nonlinear=nonlinear)


def gradient(problem, form: QuadForm, u: Field) -> Field:
    """Discrete L^2 gradient of the energy at u."""
    if form.grid != u.grid or problem.grid != u.grid:
        raise ValueError("grid mismatch between problem, form, and field")
    w = u.grid.weight
    au = form.matrix @ u.values
    g = (
        problem.quad_prefactor() * au / w
        + problem.q_values() * u.values
        - problem.k_values() * np.abs(u.values) ** (problem.p - 1) * u.values
    )
    return Field(u.grid, g)


def norm_squared(problem, form: QuadForm, u: Field) -> float:
    """The solution-space norm: pref * u^T A u + int Q u^2."""
    _, quadratic, potential, _ = _pieces(problem, form, u)
    return quadratic + potential


def nonlinear_integral(problem, u: Field) -> float:
    return u.grid.weight * float(
        np.sum(problem.k_values() * np.abs(u.values) ** (problem.p + 1))
    )


def nehari_scale(problem, form: QuadForm, u: Field) -> float:
    """The unique t > 0 with E'(t*u)(t*u) = 0: t = (||u||^2 / int K|u|^{p+1})^{1/(p-1)}."""
    _, quadratic, potential, nonlinear = _pieces(problem, form, u)
    s = quadratic + potential
    if s <= 0.0:
        raise ValueError("zero field")
    if nonlinear <= 0.0:
        raise ValueError("vanishing nonlinear integral")
    return (s / nonlinear) ** (1.0 / (problem.p - 1.0))


def quotient(problem, form: QuadForm, u: Field) -> float:
    """Scale-invariant Nehari quotient (||u||^2)^{(p+1)/(p-1)} / (int K|u|^{p+1})^{2/(p-1)}."""
    _, quadratic, potential, nonlinear = _pieces(problem, form, u)
    s = quadratic + potential
    if s <= 0.0:
        raise ValueError("zero field")
    if nonlinear <= 0.0:
        raise ValueError("vanishing nonlinear integral")
    p = problem.p
    return s ** ((p + 1.0) / (p - 1.0)) / nonlinear ** (2.0 / (p - 1.0))


def level_from_field(problem, form: QuadForm, u: Field) -> float:
    """Energy at the Nehari projection of u: (1/2 - 1/(p+1)) * quotient(u)."""
    return (0.5 - 1.0 / (problem.p + 1.0)) * quotient(problem, form, u)


def level_exponents(alpha: float, p: float, n: int) -> tuple[float, float]:
    """Exponents (theta, sigma) of the frozen-coefficient level law.

    The ground level of the constant-coefficient full-range problem with
    potential q and weight k is q^theta / k^sigma times the unit-coefficient
    level, theta = (p+1)/(p-1) - n/(2*alpha), sigma = 2/(p-1).  theta can
    have either sign, so no monotonicity in q may be assumed.
    """
    _check_exponents(alpha, p, n)
    theta = (p + 1.0) / (p - 1.0) - n / (2.0 * alpha)
    sigma = 2.0 / (p - 1.0)
    return theta, sigma


def frozen_level(xi, coeffs: CoeffSpec, alpha: float, p: float, n: int,
                 ref_level: float):
    """Ground level of the problem with coefficients frozen at xi.

    Scalar xi (or length-n point) gives a float; an (M,) or (M, n) array of
    points gives an (M,) array.  ref_level is the unit-coefficient level.
    """
    theta, sigma = level_exponents(alpha, p, n)
    pts = np.asarray(xi, dtype=np.float64)
    if pts.ndim == 0:
        scalar, pts = True, np.full((1, n), float(pts))
    elif pts.ndim == 1 and n > 1:
        if pts.shape != (n,):
            raise ValueError(f"point must have {n} components")
        scalar, pts = True, pts.reshape(1, n)
    elif pts.ndim == 1:
        scalar, pts = False, pts[:, None]
    else:
        scalar = False
    vals = (
        coeffs.q.evaluate(pts) ** theta
        / coeffs.k.evaluate(pts) ** sigma
        * ref_level
    )
    return float(vals[0]) if scalar else vals


@dataclass(frozen=True, eq=False)
class GapReport:
    """Result of the strict-gap scan of the frozen-level landscape."""

    holds: bool
    argmin: np.ndarray
    min_ratio: float
    limit_ratio: float
    margin: float


def check_concentration_gap(coeffs: CoeffSpec, alpha: float, p: float, n: int,
                            halfwidth: float = 50.0,
                            points: int = 2001) -> GapReport:
    """Scan Q^theta/K^sigma on a uniform grid of [-S, S]^n against its limit.

    The strict inequality min < limit (positive margin) is the existence and
    concentration condition; the argmin (smallest index on ties) is the
    predicted concentration point.
    """
    theta, sigma = level_exponents(alpha, p, n)
    axis = np.linspace(-halfwidth, halfwidth, points)
    if n == 1:
        pts = axis[:, None]
    else:
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    ratio = coeffs.q.evaluate(pts) ** theta / coeffs.k.evaluate(pts) ** sigma
    limit = coeffs.q_limit**theta / coeffs.k_limit**sigma
    idx = int(np.argmin(ratio))
    min_ratio = float(ratio[idx])
    margin = limit - min_ratio
    return GapReport(
        holds=margin > 0.0,
        argmin=pts[idx].copy(),
        min_ratio=min_ratio,
        limit_ratio=float(limit),
        margin=float(margin),
    )
