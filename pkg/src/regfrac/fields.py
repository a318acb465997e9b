"""Uniform box grids and scalar lattice fields.

All quadrature downstream uses the rectangle rule: every node of the
uniform lattice on [-L, L]^n carries weight h^n.  Fields are flat float64
arrays in row-major node order and are treated as zero outside the box.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

FIELD_MAGIC = b"RSFLD1"

_SUPPORTED_DIMS = (1, 2)


@dataclass(frozen=True)
class Grid:
    """Uniform lattice on [-L, L]^n, N nodes per axis, N odd so 0 is a node."""

    n: int
    L: float
    N: int
    h: float

    @property
    def num_nodes(self) -> int:
        return self.N**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        # centered so reflection negates coordinates exactly in floats
        return self.h * (np.arange(self.N) - (self.N - 1) // 2)

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape (num_nodes, n), row-major."""
        if self.n == 1:
            return self.axis[:, None]
        gx, gy = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    @cached_property
    def multi_index(self) -> np.ndarray:
        """Per-axis integer index of every node, shape (num_nodes, n)."""
        if self.n == 1:
            return np.arange(self.N)[:, None]
        ix, iy = np.divmod(np.arange(self.num_nodes), self.N)
        return np.stack([ix, iy], axis=1)

    @property
    def weight(self) -> float:
        """Quadrature weight per node."""
        return self.h**self.n


def make_grid(n: int, L: float, N: int) -> Grid:
    if n not in _SUPPORTED_DIMS:
        raise ValueError(f"unsupported dimension n={n}; expected 1 or 2")
    if not L > 0:
        raise ValueError("L must be positive")
    if N < 3:
        raise ValueError("N must be at least 3")
    if N % 2 == 0:
        raise ValueError("N must be odd")
    h = 2.0 * L / (N - 1)
    return Grid(n=n, L=float(L), N=int(N), h=h)


@dataclass(frozen=True, eq=False)
class Field:
    """Immutable nodal values attached to a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.num_nodes,):
            raise ValueError(
                f"field has {v.size} values, grid has {self.grid.num_nodes} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    def reshape(self) -> np.ndarray:
        """Values as an n-dimensional array (view)."""
        return self.values.reshape((self.grid.N,) * self.grid.n)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.num_nodes))


def _as_center(center, n: int) -> np.ndarray:
    c = np.atleast_1d(np.asarray(center, dtype=np.float64))
    if c.size == 1 and n > 1:
        c = np.full(n, c[0])
    if c.shape != (n,):
        raise ValueError(f"center must have {n} components")
    return c


def sample_profile(grid: Grid, kind: str, *, center=0.0, width: float = 1.0,
                   radius: float = 1.0, amplitude: float = 1.0) -> Field:
    """Sample an analytic profile at the grid nodes.

    Kinds: 'gaussian' (center, width, amplitude), 'bump' (compactly supported
    mollifier; center, radius, amplitude), 'zero'.
    """
    if kind == "zero":
        return zero_field(grid)
    c = _as_center(center, grid.n)
    d2 = np.sum((grid.coords - c) ** 2, axis=1)
    if kind == "gaussian":
        if not width > 0:
            raise ValueError("width must be positive")
        return Field(grid, amplitude * np.exp(-d2 / (2.0 * width**2)))
    if kind == "bump":
        if not radius > 0:
            raise ValueError("radius must be positive")
        vals = np.zeros(grid.num_nodes)
        inside = d2 < radius**2
        # exp(1 - r^2/(r^2 - d^2)) is 1 at the center and vanishes smoothly at d = r
        vals[inside] = amplitude * np.exp(1.0 - radius**2 / (radius**2 - d2[inside]))
        return Field(grid, vals)
    raise ValueError(f"unknown profile kind '{kind}'")


def _weight_array(weight, grid: Grid) -> np.ndarray:
    if isinstance(weight, Field):
        if weight.grid != grid:
            raise ValueError("grid mismatch between field and weight")
        w = weight.values
    else:
        w = np.broadcast_to(np.asarray(weight, dtype=np.float64), (grid.num_nodes,))
    if not np.all(w > 0):
        raise ValueError("weight must be strictly positive")
    return w


def lp_norm_weighted(u: Field, q: float, weight=1.0) -> float:
    """Weighted lattice L^q norm, (sum_i h^n w_i |u_i|^q)^(1/q)."""
    if not q >= 1:
        raise ValueError("q must be >= 1")
    w = _weight_array(weight, u.grid)
    return float(np.sum(u.grid.weight * w * np.abs(u.values) ** q) ** (1.0 / q))


def l2_norm(u: Field) -> float:
    return lp_norm_weighted(u, 2.0)


def mass_in_ball(u: Field, center, radius: float) -> float:
    """L^2 mass fraction inside the open ball of given center and radius."""
    total = u.grid.weight * np.sum(u.values**2)
    if total <= 0.0:
        raise ValueError("zero field")
    c = _as_center(center, u.grid.n)
    d2 = np.sum((u.grid.coords - c) ** 2, axis=1)
    inside = d2 < radius**2
    return float(u.grid.weight * np.sum(u.values[inside] ** 2) / total)


def mass_center(u: Field) -> np.ndarray:
    """Centroid of the L^2 density u^2, shape (n,)."""
    dens = u.values**2
    total = np.sum(dens)
    if total <= 0.0:
        raise ValueError("zero field")
    return np.asarray(u.grid.coords.T @ dens / total)


def ball_offsets(n: int, h: float, radius: float) -> list[tuple[tuple[int, ...], float]]:
    """Lattice offsets z = k*h with |z| < radius (strict), origin excluded.

    Returns (k, |z|) pairs in lexicographic k order.
    """
    m = int(np.ceil(radius / h)) - 1
    if m < 0:
        return []
    out = []
    rng = range(-m, m + 1)
    if n == 1:
        for k in rng:
            if k == 0:
                continue
            d = abs(k) * h
            if d < radius:
                out.append(((k,), d))
    else:
        for kx in rng:
            for ky in rng:
                if kx == 0 and ky == 0:
                    continue
                d = h * float(np.hypot(kx, ky))
                if d < radius:
                    out.append(((kx, ky), d))
    return out


def _shifted_window_sum(dens: np.ndarray, grid: Grid, radius: float) -> np.ndarray:
    """For every node y, sum of dens over nodes within the open ball B(y, radius)."""
    shape = (grid.N,) * grid.n
    d = dens.reshape(shape)
    acc = d.copy()
    for k, _ in ball_offsets(grid.n, grid.h, radius):
        src = [slice(None)] * grid.n
        dst = [slice(None)] * grid.n
        for ax, kk in enumerate(k):
            if kk > 0:
                src[ax] = slice(kk, None)
                dst[ax] = slice(None, -kk)
            elif kk < 0:
                src[ax] = slice(None, kk)
                dst[ax] = slice(-kk, None)
        acc[tuple(dst)] += d[tuple(src)]
    return acc.ravel()


def localization_profile(u: Field, radius: float) -> float:
    """Largest L^2 mass captured by a radius-R ball centered at any lattice node.

    This is the concentration diagnostic sup_y int_{B(y,R)} u^2; the sup runs
    over node centers only.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    dens = u.values**2
    return float(u.grid.weight * np.max(_shifted_window_sum(dens, u.grid, radius)))


def write_field(u: Field, path) -> None:
    """Binary field format: magic, u32 n, u64 N, f64 L, f64 h, then N^n f64 values.

    Little-endian throughout, values in row-major node order.
    """
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<IQdd", g.n, g.N, g.L, g.h))
        fh.write(u.values.astype("<f8").tobytes())


def read_field(path) -> Field:
    data = Path(path).read_bytes()
    if len(data) < len(FIELD_MAGIC) or data[: len(FIELD_MAGIC)] != FIELD_MAGIC:
        raise ValueError("not a field file")
    off = len(FIELD_MAGIC)
    header = struct.calcsize("<IQdd")
    if len(data) < off + header:
        raise ValueError("unexpected end of field file")
    n, N, L, h = struct.unpack_from("<IQdd", data, off)
    off += header
    if n not in _SUPPORTED_DIMS:
        raise ValueError(f"dimension mismatch in field file: n={n}")
    grid = make_grid(n, L, N)
    if grid.h != h:
        raise ValueError("dimension mismatch in field file: inconsistent spacing")
    count = grid.num_nodes
    if len(data) < off + 8 * count:
        raise ValueError("unexpected end of field file")
    if len(data) > off + 8 * count:
        raise ValueError("trailing data in field file")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=off).copy()
    return Field(grid, values)
