"""Structured box grids, node-indexed fields, discrete norms and truncations.

Conventions (frozen here, relied on everywhere else):

* The domain is an axis-aligned box, by default the unit box.  Axis d is
  split into ``cells[d]`` equal cells of width ``spacing[d]``; the interior
  nodes are the cells[d]-1 points strictly inside, and homogeneous
  Dirichlet values on the boundary are implicit (never stored).
* Field values are a flat float64 vector in C (row-major) order over the
  interior lattice; arrays are frozen after construction.
* L^p norms use the rectangle rule: (sum |u_i|^p * cell_volume)^(1/p),
  with cell_volume = prod(spacing).  p = inf is the max nodal value.
* The W^{1,2} seminorm squares forward differences across every face
  (boundary faces difference against 0) weighted by cell_volume:
  |u|_{1,2}^2 = sum_d sum_faces (du/h_d)^2 * cell_volume.  This equals
  cell_volume * u.(A1 u) for the unit-coefficient operator of the assembly
  module, which tests assert.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FIELD_FORMAT_VERSION = 1


def _as_tuple(value, dim, kind=float):
    if np.isscalar(value):
        return tuple(kind(value) for _ in range(dim))
    out = tuple(kind(v) for v in value)
    if len(out) != dim:
        raise ValueError(f"expected {dim} per-axis values, got {len(out)}")
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on a box with eliminated Dirichlet boundary."""

    dim: int
    cells: tuple[int, ...]
    side_lengths: tuple[float, ...]

    def __init__(self, dim, cells, side_lengths=1.0):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        cells = _as_tuple(cells, dim, int)
        if any(c < 2 for c in cells):
            raise ValueError(f"need at least 2 cells per axis, got {cells}")
        sides = _as_tuple(side_lengths, dim, float)
        if any(s <= 0 for s in sides):
            raise ValueError(f"side lengths must be positive, got {sides}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "side_lengths", sides)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(s / c for s, c in zip(self.side_lengths, self.cells))

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(c - 1 for c in self.cells)

    @property
    def num_interior(self) -> int:
        return int(np.prod(self.interior_shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coords(self, d: int) -> np.ndarray:
        """Interior node coordinates along axis d."""
        h = self.spacing[d]
        return h * np.arange(1, self.cells[d])

    def interior_points(self) -> np.ndarray:
        """(num_interior, dim) array of interior node coordinates, C order."""
        axes = [self.axis_coords(d) for d in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel(order="C") for m in mesh], axis=1)


@dataclass(frozen=True)
class ScalarField:
    """Immutable nodal values over a grid's interior (boundary = 0)."""

    grid: Grid
    values: np.ndarray

    def __init__(self, grid, values):
        values = np.ascontiguousarray(values, dtype=np.float64).copy()
        if values.shape != (grid.num_interior,):
            if values.shape == grid.interior_shape:
                values = values.ravel(order="C").copy()
            else:
                raise ValueError(
                    f"field has {values.size} values, grid expects {grid.num_interior}"
                )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def lattice(self) -> np.ndarray:
        return self.values.reshape(self.grid.interior_shape, order="C")

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)


def zero_field(grid: Grid) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.num_interior))


def constant_field(grid: Grid, value: float) -> ScalarField:
    return ScalarField(grid, np.full(grid.num_interior, float(value)))


def field_from_function(grid: Grid, fn) -> ScalarField:
    """Sample fn(points) (vectorized over an (n, dim) array) at interior nodes."""
    return ScalarField(grid, np.asarray(fn(grid.interior_points()), dtype=float))


@dataclass(frozen=True)
class InteriorSubdomain:
    """Nodes at distance >= margin from the boundary in every axis."""

    grid: Grid
    margin: float
    mask: np.ndarray = field(init=False)

    def __init__(self, grid, margin):
        margin = float(margin)
        if margin < 0:
            raise ValueError("margin must be nonnegative")
        pts = grid.interior_points()
        ok = np.ones(len(pts), dtype=bool)
        for d in range(grid.dim):
            lo, hi = margin - 1e-12, grid.side_lengths[d] - margin + 1e-12
            ok &= (pts[:, d] >= lo) & (pts[:, d] <= hi)
        mask = ok
        mask.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "margin", margin)
        object.__setattr__(self, "mask", mask)

    @property
    def num_nodes(self) -> int:
        return int(self.mask.sum())


def truncate_T(s, k: float):
    """Clamp at level k: max(-k, min(s, k)).  Works on scalars and arrays."""
    if not k > 0:
        raise ValueError(f"truncation level k must be positive, got {k}")
    return np.clip(s, -k, k)


def truncate_G(s, k: float):
    """Excess over level k, computed as s - T_k(s) so T_k + G_k = id exactly."""
    if not k > 0:
        raise ValueError(f"truncation level k must be positive, got {k}")
    return s - np.clip(s, -k, k)


def truncate_field(field: ScalarField, k: float, which: str = "T") -> ScalarField:
    op = truncate_T if which == "T" else truncate_G
    return field.with_values(op(field.values, k))


def lp_norm(f: ScalarField, p: float) -> float:
    """Rectangle-rule L^p norm; p = inf gives the max nodal magnitude."""
    if p == np.inf or p == float("inf"):
        return float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if p < 1:
        raise ValueError(f"lp_norm requires p >= 1 or inf, got {p}")
    vol = f.grid.cell_volume
    return float((np.sum(np.abs(f.values) ** p) * vol) ** (1.0 / p))


def _face_differences(f: ScalarField, d: int) -> np.ndarray:
    """Differences across the faces orthogonal to axis d, boundary included."""
    lat = f.lattice()
    pad = [(0, 0)] * f.grid.dim
    pad[d] = (1, 1)
    padded = np.pad(lat, pad, mode="constant")
    return np.diff(padded, axis=d)


def h1_seminorm(f: ScalarField) -> float:
    """Discrete Dirichlet seminorm; a norm here thanks to the zero boundary."""
    vol = f.grid.cell_volume
    total = 0.0
    for d in range(f.grid.dim):
        h = f.grid.spacing[d]
        diffs = _face_differences(f, d)
        total += float(np.sum((diffs / h) ** 2)) * vol
    return float(np.sqrt(total))


def weighted_dirichlet_energy(f: ScalarField, weight: np.ndarray) -> float:
    """sum_d sum_faces (du/h_d)^2 * avg(face weight) * cell_volume.

    ``weight`` is nodal (interior); boundary nodes weigh 0.  Face weights are
    arithmetic means of the two adjacent nodal weights.
    """
    grid = f.grid
    w_lat = np.asarray(weight, dtype=float).reshape(grid.interior_shape, order="C")
    vol = grid.cell_volume
    total = 0.0
    for d in range(grid.dim):
        h = grid.spacing[d]
        pad = [(0, 0)] * grid.dim
        pad[d] = (1, 1)
        u_pad = np.pad(f.lattice(), pad, mode="constant")
        w_pad = np.pad(w_lat, pad, mode="constant")
        diffs = np.diff(u_pad, axis=d)
        sl_lo = [slice(None)] * grid.dim
        sl_hi = [slice(None)] * grid.dim
        sl_lo[d] = slice(0, -1)
        sl_hi[d] = slice(1, None)
        w_face = 0.5 * (w_pad[tuple(sl_lo)] + w_pad[tuple(sl_hi)])
        total += float(np.sum((diffs / h) ** 2 * w_face)) * vol
    return total


def interior_min(f: ScalarField, sub: InteriorSubdomain) -> float:
    if sub.grid is not f.grid and sub.grid != f.grid:
        raise ValueError("subdomain and field live on different grids")
    if sub.num_nodes == 0:
        raise ValueError(f"interior subdomain with margin {sub.margin} is empty")
    return float(np.min(f.values[sub.mask]))


def save_field(f: ScalarField, path) -> None:
    """Text dump: header (version, dim, cells, side lengths) + row-major values."""
    lines = [
        f"singmax-field {FIELD_FORMAT_VERSION}",
        str(f.grid.dim),
        " ".join(str(c) for c in f.grid.cells),
        " ".join(format(s, ".17g") for s in f.grid.side_lengths),
    ]
    lines.extend(format(v, ".17g") for v in f.values)
    Path(path).write_text("\n".join(lines) + "\n")


def load_field(path) -> ScalarField:
    lines = Path(path).read_text().splitlines()
    tag, version = lines[0].rsplit(" ", 1)
    if tag != "singmax-field" or int(version) != FIELD_FORMAT_VERSION:
        raise ValueError(f"unrecognized field header: {lines[0]!r}")
    dim = int(lines[1])
    cells = tuple(int(c) for c in lines[2].split())
    sides = tuple(float(s) for s in lines[3].split())
    grid = Grid(dim, cells, sides)
    values = np.array([float(v) for v in lines[4 : 4 + grid.num_interior]])
    return ScalarField(grid, values)
