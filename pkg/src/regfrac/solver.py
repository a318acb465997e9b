"""Ground-state computation by descent on the Nehari quotient.

The quotient M(u) = (||u||^2)^{(p+1)/(p-1)} / (int K|u|^{p+1})^{2/(p-1)} is
scale invariant and its minimum over nonzero fields is the ground level up
to the factor (1/2 - 1/(p+1)), so the solver runs plain gradient descent on
M with an adaptive two-point (secant) step and backtracking halving.  The
gradient of M is parallel to the energy gradient at the Nehari projection,
which is what the convergence test measures.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .fields import Field, localization_profile, make_grid, mass_center, mass_in_ball, sample_profile
from .forms import QuadForm
from .energies import (
    ConstCoeffProblem,
    ProblemSpec,
    assemble_for,
    check_concentration_gap,
)

_STEP_MIN = 1e-12
_STEP_MAX = 1e6
# accept backtracking candidates up to this relative quotient increase, so
# the iteration can keep following the gradient below float resolution of M
_ACCEPT_SLACK = 1e-13


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 20000
    tol_g: float = 1e-8
    tol_c_rel: float = 1e-9
    init_step: float = 1.0
    max_backtracks: int = 60
    clip_negative: bool = True
    restart_centers: tuple = ()
    init_width: float = 1.0
    init_amplitude: float = 1.0
    symmetrize: bool = False
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.tol_g > 0 and self.tol_c_rel > 0 and self.init_step > 0):
            raise ValueError("tolerances and step sizes must be positive")


@dataclass(frozen=True, eq=False)
class GroundState:
    u: Field
    level: float
    quotient: float
    gradient_norm: float
    nehari_residual: float
    iterations: int
    converged: bool
    restart_index: int
    trace: list = field(default_factory=list, repr=False)


class DegenerateFieldError(ValueError):
    pass


class _State:
    """Cached energy pieces at the current iterate (one matvec per update)."""

    __slots__ = ("u", "au", "s", "nl", "quot", "grad_m", "grad_i_proj")

    def __init__(self, problem, form, w, pref, qv, kv, u):
        p = problem.p
        self.u = u
        self.au = form.matrix @ u
        self.s = pref * float(u @ self.au) + w * float(np.sum(qv * u * u))
        self.nl = w * float(np.sum(kv * np.abs(u) ** (p + 1)))
        if not (self.s > 0 and math.isfinite(self.s)):
            raise DegenerateFieldError("zero field")
        if not (self.nl > 0 and math.isfinite(self.nl)):
            raise DegenerateFieldError("vanishing nonlinear integral")
        self.quot = self.s ** ((p + 1) / (p - 1)) / self.nl ** (2 / (p - 1))
        # grad S / (2 h^n) and grad P / ((p+1) h^n)
        gs = pref * self.au / w + qv * u
        gp = kv * np.abs(u) ** (p - 1) * u
        a = (p + 1) / (p - 1)
        b = 2 / (p - 1)
        self.grad_m = self.quot * (2 * a * gs / self.s - b * (p + 1) * gp / self.nl)
        # energy gradient at the Nehari projection t*u
        t = (self.s / self.nl) ** (1 / (p - 1))
        self.grad_i_proj = t * gs - t**p * gp


def _h_norm(g: np.ndarray, w: float) -> float:
    return math.sqrt(w * float(g @ g))


def _reflect(u: np.ndarray, grid) -> np.ndarray:
    """Point reflection x -> -x on the node values (the axis is exactly centered)."""
    if grid.n == 1:
        return u[::-1]
    return np.flip(u.reshape(grid.N, grid.N)).ravel()


def _minimize(problem, form: QuadForm, u0: np.ndarray, opts: SolverOptions):
    w = problem.grid.weight
    pref = problem.quad_prefactor()
    qv = problem.q_values()
    kv = problem.k_values()
    p = problem.p
    lvl_factor = 0.5 - 1.0 / (p + 1.0)

    def state(u):
        return _State(problem, form, w, pref, qv, kv, u)

    u0 = u0.copy()
    if opts.symmetrize:
        u0 = 0.5 * (u0 + _reflect(u0, problem.grid))
    cur = state(u0)
    step = opts.init_step
    trace = []
    converged = False
    iterations = 0
    for it in range(opts.max_iters):
        iterations = it
        gnorm = _h_norm(cur.grad_i_proj, w)
        trace.append((it, cur.quot, lvl_factor * cur.quot, gnorm, step))
        if gnorm <= opts.tol_g:
            converged = True
            break
        accepted = None
        s_try = step
        for _ in range(opts.max_backtracks):
            cand = cur.u - s_try * cur.grad_m
            if opts.clip_negative:
                cand = np.maximum(cand, 0.0)
            if opts.symmetrize:
                # for a reflection-invariant problem the exact descent
                # never leaves the even subspace; averaging out matvec
                # round-off keeps the iteration off the symmetry-broken
                # edge branch created by the uniform exterior charge
                cand = 0.5 * (cand + _reflect(cand, problem.grid))
            try:
                nxt = state(cand)
            except DegenerateFieldError:
                s_try *= 0.5
                continue
            if nxt.quot <= cur.quot * (1.0 + _ACCEPT_SLACK):
                accepted = nxt
                break
            s_try *= 0.5
        if accepted is None:
            break
        du = accepted.u - cur.u
        dg = accepted.grad_m - cur.grad_m
        num = float(du @ du)
        den = float(du @ dg)
        if den > 0 and np.isfinite(den):
            step = min(max(num / den, _STEP_MIN), _STEP_MAX)
        else:
            step = min(2.0 * s_try, _STEP_MAX)
        cur = accepted
    else:
        iterations = opts.max_iters

    # report at the Nehari projection of the final iterate
    t = (cur.s / cur.nl) ** (1.0 / (p - 1.0))
    u_final = t * cur.u
    fin = state(u_final)
    gnorm = _h_norm(fin.grad_i_proj, w)
    if not converged:
        converged = gnorm <= opts.tol_g
    residual = abs(fin.s - fin.nl)
    level = lvl_factor * fin.quot
    if converged and residual > opts.tol_c_rel * level:
        converged = False
    return fin.u, level, fin.quot, gnorm, residual, iterations, converged, trace


def _initial_guesses(problem, opts: SolverOptions, initial):
    if initial is not None:
        vals = initial.values if isinstance(initial, Field) else np.asarray(initial, float)
        return [np.array(vals, dtype=float)]
    centers = list(opts.restart_centers) if opts.restart_centers else [0.0]
    out = []
    for c in centers:
        g = sample_profile(problem.grid, "gaussian", center=c,
                           width=opts.init_width, amplitude=opts.init_amplitude)
        out.append(g.values.copy())
    return out


def solve_ground_state(problem, form: QuadForm | None = None,
                       opts: SolverOptions = SolverOptions(),
                       initial: Field | None = None) -> GroundState:
    """Minimize the Nehari quotient; restart from each configured center.

    The returned state is clipped nonnegative (when enabled), sits on the
    Nehari manifold to round-off, and carries a per-iteration trace of
    (iter, quotient, level, gradient norm, step).
    """
    if form is None:
        form = assemble_for(problem)
    guesses = _initial_guesses(problem, opts, initial)

    def run(idx_guess):
        idx, guess = idx_guess
        try:
            return idx, _minimize(problem, form, guess, opts), None
        except DegenerateFieldError:
            rng = np.random.default_rng(opts.seed + 7919 * (idx + 1))
            retry = np.abs(guess + 0.1 * rng.standard_normal(guess.size))
            retry += 1e-8
            try:
                return idx, _minimize(problem, form, retry, opts), None
            except DegenerateFieldError as exc:
                return idx, None, exc

    items = list(enumerate(guesses))
    if opts.threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]

    states = []
    for idx, res, _ in sorted(results, key=lambda r: r[0]):
        if res is None:
            continue
        uvals, level, quot, gnorm, residual, iters, conv, trace = res
        states.append(GroundState(
            u=Field(problem.grid, uvals), level=level, quotient=quot,
            gradient_norm=gnorm, nehari_residual=residual, iterations=iters,
            converged=conv, restart_index=idx, trace=trace,
        ))
    if not states:
        raise ValueError("nonlinear integral underflow in every restart")
    converged = [s for s in states if s.converged]
    pool_states = converged if converged else states
    return min(pool_states, key=lambda s: (s.level, s.restart_index))


@dataclass(frozen=True)
class ReferenceLevel:
    """Extrapolated unit-coefficient ground level with its grid ladder."""

    level: float
    error_estimate: float
    order: float
    rungs: tuple  # of (L, N, h, level, converged)

    def rung_level(self, L: float, N: int) -> float | None:
        for rl, rn, _, lvl, _ in self.rungs:
            if rn == N and rl == L:
                return lvl
        return None


def reference_level(alpha: float, p: float, n: int, ladder,
                    opts: SolverOptions = SolverOptions(), *,
                    tail_correction: bool = True,
                    shell_correction: bool = False) -> ReferenceLevel:
    """Ground level of the Q = K = 1 full-range problem, Richardson-extrapolated.

    `ladder` is a sequence of (L, N) rungs with fixed L and strictly
    increasing N.  The extrapolation assumes the punched-hole consistency
    order 2 - 2*alpha and uses the two finest rungs; the reported error
    estimate is the distance between the finest rung and the extrapolated
    value.  Rung solves run in the even-symmetry subspace: the problem is
    reflection invariant, and symmetrizing keeps descent on the centered
    branch instead of the spurious edge branch of the truncated box.
    """
    ladder = [(float(L), int(N)) for L, N in ladder]
    if len(ladder) < 2 or any(b[1] <= a[1] for a, b in zip(ladder, ladder[1:])):
        raise ValueError(
            "refinement ladder must be strictly increasing (two rungs or more)"
        )
    if any(L != ladder[0][0] for L, _ in ladder):
        raise ValueError("refinement ladder must keep the box fixed")

    sym_opts = replace(opts, symmetrize=True)
    rungs = []
    for L, N in ladder:
        grid = make_grid(n, L, N)
        prob = ConstCoeffProblem(1.0, 1.0, alpha, p, n, grid,
                                 tail_correction=tail_correction,
                                 shell_correction=shell_correction)
        st = solve_ground_state(prob, opts=sym_opts)
        rungs.append((L, N, grid.h, st.level, st.converged))

    order = 2.0 - 2.0 * alpha
    (_, nc, hc, lc, _), (_, nf, hf, lf, _) = rungs[-2], rungs[-1]
    ratio = hc / hf
    extrap = lf + (lf - lc) / (ratio**order - 1.0)
    return ReferenceLevel(
        level=extrap,
        error_estimate=abs(extrap - lf),
        order=order,
        rungs=tuple(rungs),
    )


@dataclass(frozen=True, eq=False)
class SweepRecord:
    """Per-epsilon solve outcome with concentration diagnostics.

    `level` is normalized to the rescaled-frame ground level (the solver
    level divided by eps^n when the sweep runs in the original frame), so
    records are comparable across frames and against frozen-level bounds.
    """

    eps: float
    level: float
    raw_level: float
    mass_center: np.ndarray
    eps_times_center: np.ndarray
    fractions: dict
    localization: float
    gradient_norm: float
    iterations: int
    converged: bool
    error: str | None = None


def sweep_epsilon(problem: ProblemSpec, eps_list, opts: SolverOptions = SolverOptions(), *,
                  xi_star=None, radii=(1.0, 2.0),
                  localization_radius: float = 1.0) -> list[SweepRecord]:
    """Solve along a descending list of eps values, warm-starting each solve.

    Mass fractions are measured in balls around xi_star (the gap-scan argmin
    when not supplied).  Solver failures are recorded per eps and the sweep
    continues cold on the next value.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise ValueError("epsilon list must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon list must be descending")
    if xi_star is None:
        gap = check_concentration_gap(problem.coeffs, problem.alpha, problem.p, problem.n)
        xi_star = gap.argmin
    xi_star = np.atleast_1d(np.asarray(xi_star, dtype=float))

    base_opts = opts
    if not opts.restart_centers:
        center = xi_star[0] if problem.n == 1 else tuple(xi_star)
        base_opts = replace(opts, restart_centers=(center,))

    records = []
    warm = None
    cached_scope = None
    form = None
    for eps in eps_list:
        prob = replace(problem, eps=eps)
        scope_vals = prob.scope_values()
        if form is None or cached_scope is None or not np.array_equal(cached_scope, scope_vals):
            form = assemble_for(prob)
            cached_scope = scope_vals
        try:
            st = solve_ground_state(prob, form, base_opts, initial=warm)
        except ValueError as exc:
            records.append(SweepRecord(
                eps=eps, level=math.nan, raw_level=math.nan,
                mass_center=np.full(problem.n, math.nan),
                eps_times_center=np.full(problem.n, math.nan),
                fractions={r: math.nan for r in radii},
                localization=math.nan, gradient_norm=math.nan,
                iterations=0, converged=False, error=str(exc),
            ))
            warm = None
            continue
        warm = st.u
        center = mass_center(st.u)
        fractions = {r: mass_in_ball(st.u, xi_star, r) for r in radii}
        norm_level = st.level / eps**problem.n if prob.frame == "original" else st.level
        records.append(SweepRecord(
            eps=eps, level=norm_level, raw_level=st.level,
            mass_center=center, eps_times_center=eps * center,
            fractions=fractions,
            localization=localization_profile(st.u, localization_radius),
            gradient_norm=st.gradient_norm, iterations=st.iterations,
            converged=st.converged, error=None,
        ))
    return records
