"""Sparse SPD operators for -div(c(x) grad .) with eliminated Dirichlet boundary.

Scalar coefficients a(x) and diagonal matrix coefficients use the flux-form
stencil with face values obtained by arithmetic averaging of the two adjacent
nodal samples; off-diagonal matrix entries are supported for constant-in-space
M only (a fixed cross-derivative stencil), since the cross stencil loses the
discrete maximum principle for variable skew coefficients.

The assembled matrix is the PDE operator itself (no quadrature volume): for
a = 1 on a square grid it is the classical 2*dim/h^2-diagonal stencil, and
u.(A u) * cell_volume reproduces the discrete Dirichlet energy of grid.h1_seminorm.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import kernels
from .errors import ConvergenceError
from .grid import Grid, ScalarField

SCALAR = "scalar"
MATRIX = "matrix"


@dataclass(frozen=True)
class CoefficientField:
    """A coefficient preset with its ellipticity envelope [alpha, beta]."""

    kind: str
    alpha: float
    beta: float
    preset: str
    params: dict

    def __post_init__(self):
        if self.kind not in (SCALAR, MATRIX):
            raise ValueError(f"kind must be scalar or matrix, got {self.kind}")
        if not 0 < self.alpha <= self.beta:
            raise ValueError(f"need 0 < alpha <= beta, got ({self.alpha}, {self.beta})")

    # -- sampling -----------------------------------------------------------
    def scalar_at(self, points: np.ndarray) -> np.ndarray:
        if self.kind != SCALAR:
            raise ValueError("not a scalar coefficient")
        p = self.params
        if self.preset == "constant":
            return np.full(len(points), float(p["value"]))
        if self.preset == "checkerboard":
            blocks = p["blocks"]
            idx = np.zeros(len(points), dtype=np.int64)
            for d in range(points.shape[1]):
                idx += np.floor(points[:, d] * blocks - 1e-12).astype(np.int64)
            return np.where(idx % 2 == 0, self.alpha, self.beta)
        if self.preset == "random_cells":
            blocks = p["blocks"]
            rng = np.random.default_rng(p["seed"])
            dim = points.shape[1]
            table = self.alpha + (self.beta - self.alpha) * rng.random((blocks,) * dim)
            cell = tuple(
                np.clip(np.floor(points[:, d] * blocks - 1e-12).astype(int), 0, blocks - 1)
                for d in range(dim)
            )
            return table[cell]
        raise ValueError(f"unknown scalar preset {self.preset!r}")

    def matrix_diag_at(self, points: np.ndarray, dim: int) -> np.ndarray:
        """(n, dim) diagonal entries at the sample points."""
        if self.kind != MATRIX:
            raise ValueError("not a matrix coefficient")
        if self.preset == "identity":
            return np.ones((len(points), dim)) * float(self.params.get("scale", 1.0))
        if self.preset == "diag":
            entries = np.asarray(self.params["entries"], dtype=float)
            if len(entries) != dim:
                raise ValueError(f"diag preset has {len(entries)} entries, grid dim is {dim}")
            return np.broadcast_to(entries, (len(points), dim)).copy()
        if self.preset == "constant_matrix":
            mat = self.constant_matrix(dim)
            return np.broadcast_to(np.diag(mat), (len(points), dim)).copy()
        raise ValueError(f"unknown matrix preset {self.preset!r}")

    def constant_matrix(self, dim: int) -> np.ndarray | None:
        """The full dim x dim matrix for constant presets, else None."""
        if self.kind != MATRIX:
            return None
        if self.preset == "identity":
            return np.eye(dim) * float(self.params.get("scale", 1.0))
        if self.preset == "diag":
            entries = np.asarray(self.params["entries"], dtype=float)
            if len(entries) != dim:
                raise ValueError(f"diag preset has {len(entries)} entries, grid dim is {dim}")
            return np.diag(entries)
        if self.preset == "constant_matrix":
            mat = np.asarray(self.params["matrix"], dtype=float)
            if mat.shape != (dim, dim):
                raise ValueError(f"matrix shape {mat.shape} does not match dim {dim}")
            return mat
        return None

    @property
    def is_symmetric(self) -> bool:
        if self.kind == SCALAR or self.preset in ("identity", "diag"):
            return True
        mat = np.asarray(self.params["matrix"], dtype=float)
        return bool(np.array_equal(mat, mat.T))


def scalar_constant(value: float = 1.0) -> CoefficientField:
    return CoefficientField(SCALAR, value, value, "constant", {"value": float(value)})


def scalar_checkerboard(alpha: float, beta: float, blocks: int = 4) -> CoefficientField:
    return CoefficientField(SCALAR, alpha, beta, "checkerboard", {"blocks": int(blocks)})


def scalar_random_cells(alpha: float, beta: float, blocks: int = 4, seed: int = 0) -> CoefficientField:
    return CoefficientField(
        SCALAR, alpha, beta, "random_cells", {"blocks": int(blocks), "seed": int(seed)}
    )


def matrix_identity(scale: float = 1.0) -> CoefficientField:
    return CoefficientField(MATRIX, scale, scale, "identity", {"scale": float(scale)})


def matrix_diag(entries) -> CoefficientField:
    entries = [float(e) for e in entries]
    return CoefficientField(MATRIX, min(entries), max(entries), "diag", {"entries": entries})


def matrix_constant(matrix) -> CoefficientField:
    mat = np.asarray(matrix, dtype=float)
    sym = 0.5 * (mat + mat.T)
    eigs = np.linalg.eigvalsh(sym)
    alpha = float(eigs.min())
    beta = float(np.linalg.norm(mat, 2))
    if alpha <= 0:
        raise ValueError(f"constant matrix is not elliptic (min eig {alpha})")
    return CoefficientField(MATRIX, alpha, beta, "constant_matrix", {"matrix": mat.tolist()})


@dataclass
class DiscreteOperator:
    """CSR matrix over interior nodes for -div(c grad .), Dirichlet boundary."""

    grid: Grid
    matrix: sp.csr_matrix
    symmetric: bool
    alpha: float
    beta: float
    is_m_matrix: bool
    coefficient: CoefficientField = dc_field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def dot(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n)
        kernels.csr_matvec(self.matrix.data, self.matrix.indices, self.matrix.indptr, vec, out)
        return out

    def quadratic_form(self, vec: np.ndarray) -> float:
        return float(np.dot(vec, self.dot(vec)))


def _axis_face_values(grid: Grid, coeff: CoefficientField, d: int, component: int | None):
    """Face coefficients across axis d: averages of the adjacent nodal samples.

    Returns an array shaped like the interior lattice but with cells[d]
    entries along axis d (one per face, boundary faces included).
    """
    axes = []
    for e in range(grid.dim):
        if e == d:
            h = grid.spacing[e]
            axes.append(h * np.arange(0, grid.cells[e] + 1))  # all node lines
        else:
            axes.append(grid.axis_coords(e))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel(order="C") for m in mesh], axis=1)
    if coeff.kind == SCALAR:
        samples = coeff.scalar_at(pts)
    else:
        samples = coeff.matrix_diag_at(pts, grid.dim)[:, component]
    shape = list(grid.interior_shape)
    shape[d] = grid.cells[d] + 1
    nodal = samples.reshape(shape, order="C")
    lo = [slice(None)] * grid.dim
    hi = [slice(None)] * grid.dim
    lo[d] = slice(0, -1)
    hi[d] = slice(1, None)
    return 0.5 * (nodal[tuple(lo)] + nodal[tuple(hi)]), pts, samples


def _check_scalar_bounds(coeff, pts, samples):
    bad = np.where((samples < coeff.alpha - 1e-12) | (samples > coeff.beta + 1e-12))[0]
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"coefficient value {samples[i]} at {pts[i]} violates "
            f"[{coeff.alpha}, {coeff.beta}] (sample index {i})"
        )


def _check_matrix_bounds(coeff: CoefficientField, grid: Grid, seed: int = 1234):
    """Ellipticity / norm check on canonical basis + 10 random unit vectors per cell."""
    dim = grid.dim
    centers_axes = [
        (np.arange(grid.cells[d]) + 0.5) * grid.spacing[d] for d in range(dim)
    ]
    mesh = np.meshgrid(*centers_axes, indexing="ij")
    pts = np.stack([m.ravel(order="C") for m in mesh], axis=1)
    rng = np.random.default_rng(seed)
    xi = rng.normal(size=(10, dim))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)

    mat = coeff.constant_matrix(dim)
    if mat is not None and coeff.preset == "constant_matrix":
        rayleigh = np.einsum("kd,de,ke->k", xi, 0.5 * (mat + mat.T), xi)
        cand = np.concatenate([np.diag(0.5 * (mat + mat.T)), rayleigh])
        if cand.min() < coeff.alpha - 1e-12:
            raise ValueError(f"matrix coefficient below ellipticity floor {coeff.alpha}")
        if np.linalg.norm(mat, 2) > coeff.beta + 1e-12:
            raise ValueError(f"matrix coefficient norm exceeds {coeff.beta}")
        return
    diags = coeff.matrix_diag_at(pts, dim)  # (ncells, dim)
    rayleigh = diags @ (xi.T**2)  # (ncells, 10)
    worst = min(float(diags.min()), float(rayleigh.min()))
    if worst < coeff.alpha - 1e-12:
        bad = int(np.argmin(diags.min(axis=1)))
        raise ValueError(
            f"matrix coefficient below ellipticity floor {coeff.alpha} at cell {bad} ({pts[bad]})"
        )
    if float(diags.max()) > coeff.beta + 1e-12:
        bad = int(np.argmax(diags.max(axis=1)))
        raise ValueError(f"matrix coefficient above bound {coeff.beta} at cell {bad} ({pts[bad]})")


def assemble(grid: Grid, coeff: CoefficientField) -> DiscreteOperator:
    """Flux-form finite-difference operator for -div(coeff grad .)."""
    shape = grid.interior_shape
    n = grid.num_interior
    lin = np.arange(n).reshape(shape, order="C")

    if coeff.kind == MATRIX:
        _check_matrix_bounds(coeff, grid)

    diag = np.zeros(shape)
    rows, cols, vals = [], [], []
    for d in range(grid.dim):
        comp = d if coeff.kind == MATRIX else None
        faces, pts, samples = _axis_face_values(grid, coeff, d, comp)
        if coeff.kind == SCALAR:
            _check_scalar_bounds(coeff, pts, samples)
        h2 = grid.spacing[d] ** 2
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[d] = slice(0, -1)
        hi[d] = slice(1, None)
        diag += (faces[tuple(lo)] + faces[tuple(hi)]) / h2
        # interior faces couple node k and k+1 along axis d
        inner = [slice(None)] * grid.dim
        inner[d] = slice(1, -1)
        f_in = faces[tuple(inner)]
        left = [slice(None)] * grid.dim
        right = [slice(None)] * grid.dim
        left[d] = slice(0, -1)
        right[d] = slice(1, None)
        i_idx = lin[tuple(left)].ravel()
        j_idx = lin[tuple(right)].ravel()
        v = (-f_in / h2).ravel()
        rows.extend([i_idx, j_idx])
        cols.extend([j_idx, i_idx])
        vals.extend([v, v])

    has_cross = False
    if coeff.kind == MATRIX:
        mat = coeff.constant_matrix(grid.dim)
        if mat is None:
            raise ValueError("variable matrix coefficients must be diagonal")
        off = 0.5 * (mat + mat.T) - np.diag(np.diag(mat))
        for d in range(grid.dim):
            for e in range(d + 1, grid.dim):
                c = off[d, e]
                if c == 0.0:
                    continue
                has_cross = True
                w = c / (2.0 * grid.spacing[d] * grid.spacing[e])
                for sd, se, sign in ((1, 1, -1.0), (-1, -1, -1.0), (1, -1, 1.0), (-1, 1, 1.0)):
                    src = [slice(None)] * grid.dim
                    dst = [slice(None)] * grid.dim
                    src[d] = slice(1, None) if sd > 0 else slice(0, -1)
                    dst[d] = slice(0, -1) if sd > 0 else slice(1, None)
                    src[e] = slice(1, None) if se > 0 else slice(0, -1)
                    dst[e] = slice(0, -1) if se > 0 else slice(1, None)
                    i_idx = lin[tuple(dst)].ravel()
                    j_idx = lin[tuple(src)].ravel()
                    rows.append(i_idx)
                    cols.append(j_idx)
                    vals.append(np.full(i_idx.size, sign * w))

    rows.append(lin.ravel())
    cols.append(lin.ravel())
    vals.append(diag.ravel())
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    A.sum_duplicates()
    A.indices = A.indices.astype(np.int32)
    A.indptr = A.indptr.astype(np.int32)

    off_max = (A - sp.diags(A.diagonal())).max() if n > 1 else 0.0
    is_m_matrix = not has_cross and (n == 1 or off_max <= 0.0)
    sym = coeff.is_symmetric and (A != A.T).nnz == 0
    return DiscreteOperator(
        grid=grid,
        matrix=A,
        symmetric=bool(sym),
        alpha=coeff.alpha,
        beta=coeff.beta,
        is_m_matrix=bool(is_m_matrix),
        coefficient=coeff,
    )


def apply(op: DiscreteOperator, f: ScalarField) -> ScalarField:
    if f.grid != op.grid:
        raise ValueError("operator and field live on different grids")
    return ScalarField(op.grid, op.dot(f.values))


def solve_shifted(
    op: DiscreteOperator,
    shift: np.ndarray,
    rhs: np.ndarray,
    tol: float,
    max_iters: int | None = None,
    x0: np.ndarray | None = None,
):
    """CG solve of (A + diag(shift)) x = rhs on raw arrays.

    ``tol`` is relative to ||rhs||_2.  Returns (x, iterations, relres);
    raises ConvergenceError past the iteration cap (default 20 * unknowns).
    """
    n = op.n
    cap = max_iters if max_iters is not None else 20 * n
    x = np.array(x0, dtype=float, copy=True) if x0 is not None else np.zeros(n)
    shift = np.ascontiguousarray(shift, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    iters, relres = kernels.cg_shifted(
        op.matrix.data, op.matrix.indices, op.matrix.indptr, shift, rhs, x, tol, cap
    )
    if relres > tol:
        raise ConvergenceError(
            f"CG did not reach tol={tol} in {cap} iterations (relres={relres:.3e})",
            details={"relres": relres, "iterations": iters},
        )
    return x, iters, relres


def solve_spd(op: DiscreteOperator, rhs: ScalarField, tol: float, max_iters: int | None = None) -> ScalarField:
    """Solve A x = rhs to relative residual tol; deterministic for fixed inputs."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if rhs.grid != op.grid:
        raise ValueError("operator and rhs live on different grids")
    x, _, _ = solve_shifted(op, np.zeros(op.n), rhs.values, tol, max_iters)
    return ScalarField(op.grid, x)


def definiteness_probe(op: DiscreteOperator, iterations: int = 30, seed: int = 0) -> float:
    """Smallest Ritz value from a Lanczos run; positive for SPD operators."""
    n = op.n
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    steps = min(iterations, n)
    Q = np.zeros((steps, n))
    alphas, betas = [], []
    beta = 0.0
    q_prev = np.zeros(n)
    for j in range(steps):
        Q[j] = q
        w = op.dot(q) - beta * q_prev
        alpha = float(np.dot(w, q))
        w -= alpha * q
        w -= Q[: j + 1].T @ (Q[: j + 1] @ w)  # full reorthogonalization
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        if beta < 1e-14:
            break
        betas.append(beta)
        q_prev = q
        q = w / beta
    betas = betas[: len(alphas) - 1]
    ritz = scipy.linalg.eigh_tridiagonal(alphas, betas, eigvals_only=True)
    return float(ritz[0])
