import numpy as np
import pytest

from singmax import assembly
from singmax.grid import (
    Grid,
    InteriorSubdomain,
    ScalarField,
    constant_field,
    field_from_function,
    h1_seminorm,
    interior_min,
    load_field,
    lp_norm,
    save_field,
    truncate_G,
    truncate_T,
    zero_field,
)


def test_grid_basics():
    g = Grid(2, 4)
    assert g.spacing == (0.25, 0.25)
    assert g.interior_shape == (3, 3)
    assert g.num_interior == 9
    g3 = Grid(3, (4, 5, 6), (1.0, 2.0, 3.0))
    assert g3.num_interior == 3 * 4 * 5
    assert g3.spacing == (0.25, 0.4, 0.5)
    with pytest.raises(ValueError):
        Grid(1, 4)
    with pytest.raises(ValueError):
        Grid(2, 1)


def test_field_validation():
    g = Grid(2, 4)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros(5))
    bad = np.zeros(9)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, bad)
    f = constant_field(g, 2.0)
    with pytest.raises(ValueError):
        f.values[0] = 1.0  # frozen


def test_truncations_pointwise():
    assert truncate_T(0.5, 1.0) == 0.5
    assert truncate_T(-3.0, 1.0) == -1.0
    assert truncate_T(7.0, 7.0) == 7.0
    assert truncate_G(3.0, 1.0) == 2.0
    assert truncate_G(-3.0, 1.0) == -2.0
    assert truncate_G(0.5, 1.0) == 0.0
    with pytest.raises(ValueError):
        truncate_T(1.0, 0.0)


def test_truncation_identity_exact():
    # Exact-zero identity needs inputs whose differences are representable;
    # dyadic samples (multiples of 2^-20) make every intermediate exact.
    rng = np.random.default_rng(3)
    scale = 2.0**20
    s = np.round(rng.uniform(-100, 100, 10000) * scale) / scale
    k = np.round(rng.uniform(1e-3, 10, 10000) * scale) / scale
    k = np.maximum(k, 1.0 / scale)
    for si, ki in zip(s, k):
        assert truncate_T(si, ki) + truncate_G(si, ki) - si == 0.0
        assert abs(truncate_T(si, ki)) <= ki
        assert truncate_G(si, ki) * si >= 0.0


def test_truncation_identity_continuous_samples():
    # On arbitrary doubles the identity holds to one rounding of the sum.
    rng = np.random.default_rng(33)
    s = rng.uniform(-100, 100, 10000)
    k = rng.uniform(1e-3, 10, 10000)
    gap = np.abs(truncate_T(s, 10.0) + truncate_G(s, 10.0) - s)
    assert np.max(gap) == 0.0  # scalar k = 10.0 is dyadic, so still exact
    for si, ki in zip(s[:2000], k[:2000]):
        err = abs(truncate_T(si, ki) + truncate_G(si, ki) - si)
        assert err <= np.spacing(abs(si)) * 2
    # G agrees with the closed form (|s|-k)^+ sign(s) up to rounding
    closed = np.maximum(np.abs(s) - 2.5, 0.0) * np.sign(s)
    assert np.allclose(truncate_G(s, 2.5), closed, atol=1e-12)


def test_lp_norm_constant_field():
    # 9 interior nodes, weight h^2 = 1/16: ||1||_2 = sqrt(9/16) = 0.75
    g = Grid(2, 4)
    u = constant_field(g, 1.0)
    assert abs(lp_norm(u, 2.0) - 0.75) < 1e-15
    assert lp_norm(zero_field(g), 3.7) == 0.0
    assert lp_norm(u, np.inf) == 1.0
    with pytest.raises(ValueError):
        lp_norm(u, 0.5)


def test_lp_norm_against_loop_oracle():
    g = Grid(3, (3, 4, 5))
    rng = np.random.default_rng(5)
    u = ScalarField(g, rng.normal(size=g.num_interior))
    vol = g.cell_volume
    for p in (1.0, 2.0, 2.5, 7.0):
        expected = sum(abs(v) ** p for v in u.values) * vol
        expected = expected ** (1.0 / p)
        assert abs(lp_norm(u, p) - expected) <= 1e-12 * max(1.0, expected)


def test_lp_norm_homogeneity():
    g = Grid(2, 8)
    rng = np.random.default_rng(6)
    u = ScalarField(g, rng.normal(size=g.num_interior))
    for p in (1.0, 2.0, 4.0, np.inf):
        a = lp_norm(u.with_values(-3.5 * u.values), p)
        b = 3.5 * lp_norm(u, p)
        assert abs(a - b) <= 1e-12 * max(1.0, b)


def test_h1_seminorm_zero_and_single_node():
    g = Grid(2, 2)  # one interior node, h = 1/2
    assert h1_seminorm(zero_field(g)) == 0.0
    v = 1.7
    u = ScalarField(g, [v])
    # 2 faces per axis, each (v/h)^2, times h^2: 4 v^2 h^{dim-2} = 4 v^2 in dim 2
    assert abs(h1_seminorm(u) ** 2 - 4 * v * v) < 1e-14


def test_h1_seminorm_matches_operator_quadratic_form():
    rng = np.random.default_rng(9)
    for g in (Grid(2, 5), Grid(3, 4), Grid(2, (4, 6), (1.0, 2.0))):
        op = assembly.assemble(g, assembly.scalar_constant(1.0))
        for _ in range(50):
            u = ScalarField(g, rng.normal(size=g.num_interior))
            sq = h1_seminorm(u) ** 2
            quad = g.cell_volume * op.quadratic_form(u.values)
            assert abs(sq - quad) <= 1e-10 * max(1.0, quad)


def test_h1_seminorm_smooth_field_convergence():
    # For a boundary-compatible smooth field the face-difference energy
    # converges to the Dirichlet integral; sin(pi x) sin(pi y) has energy pi^2/2.
    errs = []
    for cells in (16, 32):
        g = Grid(2, cells)
        u = field_from_function(g, lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]))
        errs.append(abs(h1_seminorm(u) ** 2 - np.pi**2 / 2.0))
    assert errs[0] < 0.05
    assert errs[1] < errs[0] / 2.0


def test_interior_min():
    g = Grid(2, 8)
    sub = InteriorSubdomain(g, 0.25)
    assert 0 < sub.num_nodes < g.num_interior
    assert interior_min(constant_field(g, 1.0), sub) == 1.0
    vals = np.ones(g.num_interior)
    vals[np.where(sub.mask)[0][0]] = 0.2
    assert interior_min(ScalarField(g, vals), sub) == 0.2
    # outside-the-mask values are ignored
    vals2 = np.ones(g.num_interior)
    vals2[np.where(~sub.mask)[0][0]] = -5.0
    assert interior_min(ScalarField(g, vals2), sub) == 1.0


def test_interior_min_empty_mask():
    g = Grid(2, 3)  # nodes at 1/3, 2/3
    sub = InteriorSubdomain(g, 0.49)
    assert sub.num_nodes == 0
    with pytest.raises(ValueError):
        interior_min(constant_field(g, 1.0), sub)


def test_field_serialization_roundtrip(tmp_path):
    g = Grid(3, (3, 4, 5), (1.0, 0.5, 2.0))
    rng = np.random.default_rng(13)
    u = ScalarField(g, rng.normal(size=g.num_interior))
    path = tmp_path / "u.field"
    save_field(u, path)
    v = load_field(path)
    assert v.grid == g
    assert np.array_equal(v.values, u.values)
