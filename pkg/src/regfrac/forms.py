"""Interaction scopes, coefficient profiles, and nonlocal quadratic forms.

The quadratic form is the lattice double sum

    u^T A u = sum_i sum_z h^{2n} (u(x_i + z) - u(x_i))^2 / |z|^{n + 2*alpha}

over lattice offsets 0 < |z| < rho(x_i), with the |z| = 0 cell punched out
(leading consistency error O(h^{2-2*alpha}) for smooth u).  Offsets landing
outside the box see the zero extension and contribute (u_i - 0)^2 on the
diagonal.  Every ordered-pair term is distributed symmetrically over the
entries (i,i), (j,j), (i,j), (j,i), so the assembled matrix is exactly
symmetric and positive semidefinite by construction.

Scope radii are capped at the box-covering radius: beyond it no in-box pair
exists, and exterior contributions past it are only accounted for by the
full form's analytic tail term.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fields import Field, Grid, ball_offsets

SCOPE_KINDS = ("constant", "saturating", "infinite")
PROFILE_KINDS = ("constant", "lorentz_dip", "lorentz_bump")
FRAMES = ("original", "rescaled")


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1}: 2 for n=1, 2*pi for n=2."""
    if n == 1:
        return 2.0
    if n == 2:
        return 2.0 * math.pi
    raise ValueError(f"unsupported dimension n={n}")


def cover_radius(grid: Grid) -> float:
    """Smallest scope radius that reaches every node pair of the box (plus h)."""
    return 2.0 * grid.L * math.sqrt(grid.n) + grid.h


@dataclass(frozen=True)
class ScopeSpec:
    """Interaction radius rho(x) of the regional operator.

    Kinds: 'constant' (rho = rho0 everywhere), 'saturating'
    (rho(x) = rho_inf - (rho_inf - rho0) * g(|x|) with g(0) = 1, g -> 0,
    so rho rises from rho0 at the origin to rho_inf far out), and
    'infinite' (full-range operator).
    """

    kind: str
    rho0: float
    rho_inf: float = math.inf
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in SCOPE_KINDS:
            raise ValueError(f"unknown scope kind '{self.kind}'")
        if not self.rho0 > 0:
            raise ValueError(f"invalid scope radius: rho0={self.rho0} must be positive")
        if self.kind == "saturating":
            if not (self.rho_inf > self.rho0 and math.isfinite(self.rho_inf)):
                raise ValueError(
                    f"invalid scope radius: rho_inf={self.rho_inf} must satisfy "
                    "rho0 < rho_inf < inf for a saturating scope"
                )
            if not self.width > 0:
                raise ValueError("scope width must be positive")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Scope radius at points x, shape (M, n) -> (M,)."""
        x = np.asarray(x, dtype=np.float64)
        m = x.shape[0]
        if self.kind == "constant":
            return np.full(m, self.rho0)
        if self.kind == "infinite":
            return np.full(m, math.inf)
        r2 = np.sum(x**2, axis=1)
        g = 1.0 / (1.0 + r2 / self.width**2)
        return self.rho_inf - (self.rho_inf - self.rho0) * g


def eval_scope(spec: ScopeSpec, x: np.ndarray, eps: float, frame: str) -> np.ndarray:
    """Frame-aware scope radii: rho(x) in the original frame, rho(eps*x)/eps rescaled."""
    if frame not in FRAMES:
        raise ValueError(f"unknown frame '{frame}'")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if frame == "original":
        return spec.evaluate(x)
    if not eps > 0:
        raise ValueError("eps must be positive")
    return spec.evaluate(eps * x) / eps


@dataclass(frozen=True)
class CoeffProfile:
    """Analytic coefficient profile with a limit at infinity.

    'constant': base.  'lorentz_dip': base - amplitude / (1 + |x-c|^2/width^2),
    a smooth well of depth `amplitude` at `center`.  'lorentz_bump': the
    corresponding smooth excess.  Both saturate to `base` at infinity.
    """

    kind: str
    base: float
    amplitude: float = 0.0
    center: tuple[float, ...] | float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown coefficient profile '{self.kind}'")
        if self.kind != "constant":
            if not self.amplitude >= 0:
                raise ValueError("profile amplitude must be nonnegative")
            if not self.width > 0:
                raise ValueError("profile width must be positive")

    def _center(self, n: int) -> np.ndarray:
        c = np.atleast_1d(np.asarray(self.center, dtype=np.float64))
        if c.size == 1 and n > 1:
            c = np.full(n, c[0])
        return c

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if self.kind == "constant":
            return np.full(x.shape[0], self.base)
        d2 = np.sum((x - self._center(x.shape[1])) ** 2, axis=1)
        g = 1.0 / (1.0 + d2 / self.width**2)
        if self.kind == "lorentz_dip":
            return self.base - self.amplitude * g
        return self.base + self.amplitude * g

    @property
    def limit(self) -> float:
        return self.base

    @property
    def lower(self) -> float:
        return self.base - self.amplitude if self.kind == "lorentz_dip" else self.base

    @property
    def upper(self) -> float:
        return self.base + self.amplitude if self.kind == "lorentz_bump" else self.base


@dataclass(frozen=True)
class CoeffSpec:
    """Potential Q and nonlinearity weight K with their uniform bounds.

    a1 and a2 are the global lower/upper bounds of both coefficients;
    q_limit and k_limit are the values at infinity.
    """

    q: CoeffProfile
    k: CoeffProfile
    a1: float = field(init=False)
    a2: float = field(init=False)
    q_limit: float = field(init=False)
    k_limit: float = field(init=False)

    def __post_init__(self):
        a1 = min(self.q.lower, self.k.lower)
        a2 = max(self.q.upper, self.k.upper)
        if not a1 > 0:
            raise ValueError(
                f"coefficient lower bound a1={a1} must be positive "
                "(need 0 < a1 <= Q, K <= a2)"
            )
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "q_limit", self.q.limit)
        object.__setattr__(self, "k_limit", self.k.limit)


@dataclass(frozen=True, eq=False)
class QuadForm:
    """Assembled sparse quadratic form with its assembly metadata."""

    matrix: sp.csr_matrix
    grid: Grid
    alpha: float
    scope_key: str
    truncation_radius: float
    tail_corrected: bool
    zero_extension: bool
    shell_corrected: bool


def first_shell_multiplier(n: int, alpha: float) -> float:
    """Weight multiplier on the |z| = h shell compensating the punched-out cell.

    Matches the omitted integral over |z| < h for smooth u:
    1 + 1/(2-2*alpha) in n=1, 1 + pi/(2*(2-2*alpha)) in n=2.
    """
    if n == 1:
        return 1.0 + 1.0 / (2.0 - 2.0 * alpha)
    return 1.0 + math.pi / (2.0 * (2.0 - 2.0 * alpha))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} must be in (0, 1)")


def assemble_regional_form(grid: Grid, scope, alpha: float, *,
                           zero_extension: bool = True,
                           shell_correction: bool = False) -> QuadForm:
    """Assemble the regional form for per-node scope radii (scalar broadcasts).

    A node pair enters iff |x_j - x_i| < rho(x_i), evaluated strictly at the
    row node; radii are capped at the box-covering radius.
    """
    _check_alpha(alpha)
    radii = np.broadcast_to(
        np.asarray(scope, dtype=np.float64), (grid.num_nodes,)
    ).copy()
    if not np.all(radii > 0):
        raise ValueError("scope radii must be positive")
    cap = cover_radius(grid)
    np.minimum(radii, cap, out=radii)

    n, N, h = grid.n, grid.N, grid.h
    mi = grid.multi_index
    strides = (N, 1) if n == 2 else (1,)
    shell_mult = first_shell_multiplier(n, alpha) if shell_correction else 1.0

    diag = np.zeros(grid.num_nodes)
    rows_acc, cols_acc, vals_acc = [], [], []
    for k, dist in ball_offsets(n, h, float(radii.max())):
        w = h ** (2 * n) / dist ** (n + 2 * alpha)
        if dist == h:
            w *= shell_mult
        in_scope = radii > dist
        valid = in_scope
        delta = 0
        for ax, kk in enumerate(k):
            t = mi[:, ax] + kk
            valid = valid & (t >= 0) & (t < N)
            delta += kk * strides[ax]
        i_pair = np.nonzero(valid)[0]
        if i_pair.size:
            # i_pair and the shifted j_pair are each free of duplicates;
            # every ordered pair writes all four symmetric entries
            j_pair = i_pair + delta
            diag[i_pair] += w
            diag[j_pair] += w
            rows_acc.append(i_pair)
            cols_acc.append(j_pair)
            rows_acc.append(j_pair)
            cols_acc.append(i_pair)
            vals_acc.append(np.full(2 * i_pair.size, -w))
        if zero_extension:
            i_ghost = np.nonzero(in_scope & ~valid)[0]
            if i_ghost.size:
                diag[i_ghost] += w

    m = grid.num_nodes
    if rows_acc:
        off = sp.coo_matrix(
            (np.concatenate(vals_acc),
             (np.concatenate(rows_acc), np.concatenate(cols_acc))),
            shape=(m, m),
        ).tocsr()
        matrix = (off + sp.diags(diag, format="csr")).tocsr()
    else:
        matrix = sp.diags(diag, format="csr")
    matrix.sort_indices()

    key = hashlib.blake2b(radii.tobytes(), digest_size=8).hexdigest()
    return QuadForm(
        matrix=matrix,
        grid=grid,
        alpha=alpha,
        scope_key=key,
        truncation_radius=float(radii.max()),
        tail_corrected=False,
        zero_extension=zero_extension,
        shell_corrected=shell_correction,
    )


def assemble_full_form(grid: Grid, alpha: float, *,
                       tail_correction: bool = True,
                       shell_correction: bool = False) -> QuadForm:
    """Full-range form: every in-box pair interacts.

    With tail_correction off, the exterior is handled exactly like the
    regional form at box-covering scope (discrete zero-extension ghosts), so
    the two assemblies agree to the bit.  With tail_correction on, the
    discrete ghosts are replaced by the analytic two-sided exterior term

        sum_i h^n u_i^2 * |S^{n-1}| / (alpha * R_tail^{2*alpha}),

    R_tail = L uniformly, which accounts for all pairs with one end outside
    the box (integral 1/(2*alpha*R^{2*alpha}) per unit sphere measure per
    side).  The uniform radius overestimates near the boundary, erring
    conservatively where fields are expected to be small.
    """
    base = assemble_regional_form(
        grid, math.inf, alpha,
        zero_extension=not tail_correction,
        shell_correction=shell_correction,
    )
    if not tail_correction:
        return base
    tail = grid.weight * sphere_area(grid.n) / (alpha * grid.L ** (2 * alpha))
    matrix = (base.matrix + sp.diags(np.full(grid.num_nodes, tail), format="csr")).tocsr()
    matrix.sort_indices()
    return QuadForm(
        matrix=matrix,
        grid=grid,
        alpha=alpha,
        scope_key=base.scope_key,
        truncation_radius=base.truncation_radius,
        tail_corrected=True,
        zero_extension=False,
        shell_corrected=shell_correction,
    )


def _check_grid(form: QuadForm, u: Field) -> None:
    if form.grid != u.grid:
        raise ValueError("grid mismatch between form and field")


def apply_form(form: QuadForm, u: Field) -> Field:
    _check_grid(form, u)
    return Field(u.grid, form.matrix @ u.values)


def quad_energy(form: QuadForm, u: Field) -> float:
    """Value of the quadratic form, u^T A u."""
    _check_grid(form, u)
    return float(u.values @ (form.matrix @ u.values))


def dump_form(form: QuadForm, path) -> None:
    """Write the form as 'i j value' lines, sorted by (i, j), 17 digits."""
    coo = form.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i} {j} {v:.17g}\n")


@dataclass(frozen=True)
class NormEquivalenceReport:
    lhs: float
    rhs: float
    factor: float
    holds: bool


def norm_equivalence_factor(a1: float, alpha: float, rho0: float, n: int) -> float:
    """Constant S with ||u||_full <= S * ||u||_regional, from the uniform bounds.

    S = max(a1, 1 + 2|S^{n-1}|/(alpha*rho0^{2*alpha})) / a1.
    """
    big_a = max(a1, 1.0 + 2.0 * sphere_area(n) / (alpha * rho0 ** (2 * alpha)))
    return big_a / a1


def check_norm_equivalence(u: Field, regional: QuadForm, q_values, a1: float,
                           alpha: float, rho0: float, n: int,
                           full: QuadForm | None = None) -> NormEquivalenceReport:
    """Compare the full norm against the scaled regional norm for one field.

    lhs = (full form + plain L^2)^(1/2) with the analytic tail on, i.e. a
    conservative overestimate of the unrestricted norm; rhs = S * (regional
    form + weighted L^2)^(1/2).
    """
    if isinstance(q_values, Field):
        q_values = q_values.values
    q_values = np.broadcast_to(np.asarray(q_values, float), (u.grid.num_nodes,))
    l2 = u.grid.weight * np.sum(u.values**2)
    if l2 <= 0.0:
        raise ValueError("zero field")
    if full is None:
        full = assemble_full_form(u.grid, alpha, tail_correction=True)
    factor = norm_equivalence_factor(a1, alpha, rho0, n)
    lhs = math.sqrt(quad_energy(full, u) + l2)
    rhs = factor * math.sqrt(
        quad_energy(regional, u) + u.grid.weight * np.sum(q_values * u.values**2)
    )
    return NormEquivalenceReport(lhs=lhs, rhs=rhs, factor=factor, holds=lhs <= rhs)
