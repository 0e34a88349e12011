"""Named datum and coefficient presets used by configs and the test matrix."""

from __future__ import annotations

import numpy as np

from . import assembly
from .grid import Grid, ScalarField, constant_field, zero_field

SINGULAR_CAP_DEFAULT = 1e6


def datum_singular_power(
    grid: Grid,
    m: float,
    cap: float = SINGULAR_CAP_DEFAULT,
    strength: float = 1.0,
) -> ScalarField:
    """f(x) = strength * min(|x - x0|^(-0.9 dim / m), cap).

    The exponent keeps f strictly inside L^m; the pole x0 sits at the box
    center shifted by a third of a cell per axis so no node samples it.
    """
    a = 0.9 * grid.dim / m
    x0 = np.array(
        [0.5 * s + h / 3.0 for s, h in zip(grid.side_lengths, grid.spacing)]
    )
    pts = grid.interior_points()
    dist = np.linalg.norm(pts - x0, axis=1)
    vals = strength * np.minimum(dist ** (-a), cap)
    return ScalarField(grid, vals)


def datum_field(grid: Grid, preset: str, params: dict, m: float = 1.5) -> ScalarField:
    if preset == "zero":
        return zero_field(grid)
    if preset == "constant":
        value = float(params.get("value", 1.0))
        if value < 0:
            raise ValueError("constant datum must be nonnegative")
        return constant_field(grid, value)
    if preset == "singular_power":
        return datum_singular_power(
            grid,
            m=float(params.get("m", m)),
            cap=float(params.get("cap", SINGULAR_CAP_DEFAULT)),
            strength=float(params.get("strength", 1.0)),
        )
    raise ValueError(f"unknown datum preset {preset!r}")


def scalar_coefficient(preset: str, params: dict, seed: int = 0) -> assembly.CoefficientField:
    if preset == "constant":
        return assembly.scalar_constant(float(params.get("value", 1.0)))
    if preset == "checkerboard":
        return assembly.scalar_checkerboard(
            float(params.get("alpha", 0.5)),
            float(params.get("beta", 2.0)),
            int(params.get("blocks", 4)),
        )
    if preset == "random_cells":
        return assembly.scalar_random_cells(
            float(params.get("alpha", 0.5)),
            float(params.get("beta", 2.0)),
            int(params.get("blocks", 4)),
            int(params.get("seed", seed)),
        )
    raise ValueError(f"unknown scalar coefficient preset {preset!r}")


def matrix_coefficient(preset: str, params: dict) -> assembly.CoefficientField:
    if preset == "identity":
        return assembly.matrix_identity(float(params.get("scale", 1.0)))
    if preset == "diag":
        return assembly.matrix_diag(params["entries"])
    if preset == "anisotropic":
        # diag(1, ..., 1, beta): the last axis carries the strong direction
        dim = int(params.get("dim", 3))
        beta = float(params.get("beta", 2.0))
        return assembly.matrix_diag([1.0] * (dim - 1) + [beta])
    if preset == "constant_matrix":
        return assembly.matrix_constant(params["matrix"])
    raise ValueError(f"unknown matrix coefficient preset {preset!r}")
