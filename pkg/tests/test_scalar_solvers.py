import numpy as np
import pytest

import oracles
from singmax import assembly
from singmax.errors import InvariantViolation
from singmax.grid import Grid, ScalarField, constant_field, field_from_function, lp_norm, zero_field
from singmax.scalar_solvers import (
    SingularEquationSpec,
    monotone_ladder,
    solve_S,
    solve_T,
)


def unit_op(grid):
    return assembly.assemble(grid, assembly.scalar_constant(1.0))


def make_spec(grid, g=1.0, f=1.0, n=1, r=2.0, theta=0.5, k=None):
    return SingularEquationSpec(
        diffusion=unit_op(grid),
        g=constant_field(grid, g),
        f=constant_field(grid, f),
        n=n,
        r=r,
        theta=theta,
        inner_truncation_k=k,
    )


def test_spec_validation():
    g = Grid(2, 4)
    with pytest.raises(ValueError):
        make_spec(g, g=-1.0)
    with pytest.raises(ValueError):
        make_spec(g, f=-0.5)
    with pytest.raises(ValueError):
        make_spec(g, n=0)
    with pytest.raises(ValueError):
        make_spec(g, r=1.0)
    with pytest.raises(ValueError):
        make_spec(g, theta=1.2)


def test_zero_datum_gives_zero_in_one_iteration():
    u, trace = solve_S(make_spec(Grid(2, 4), f=0.0), 1e-12)
    assert np.all(u.values == 0.0)
    assert trace.iterations == 1
    assert trace.final_residual_inf == 0.0


def test_single_node_matches_bisection():
    # one interior node: d = 2*dim/h^2 = 16 for dim=2, h=1/2
    g = Grid(2, 2)
    u, trace = solve_S(make_spec(g), 1e-12)
    expected = oracles.single_node_root(16.0, 1.0, 1.0, 1, 2.0, 0.5)
    assert abs(u.values[0] - expected) <= 1e-10
    assert trace.final_residual_inf <= 1e-12


@pytest.mark.parametrize("theta", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("r", [1.5, 2.0, 3.0])
def test_small_grid_matches_dense_newton(theta, r):
    g = Grid(2, 4)  # 9 interior nodes
    spec = make_spec(g, g=0.8, f=2.0, n=2, r=r, theta=theta)
    u, _ = solve_S(spec, 1e-12)
    A = oracles.dense_diffusion((4, 4))
    expected = oracles.newton_dense_singular(
        A, np.full(9, 0.8), np.full(9, 2.0), 2, r, theta
    )
    assert np.max(np.abs(u.values - expected)) <= 1e-8


def test_solution_nonnegative_and_capped():
    g = Grid(3, 4)
    rng = np.random.default_rng(40)
    f = ScalarField(g, rng.uniform(0.0, 3.0, g.num_interior))
    spec = SingularEquationSpec(
        diffusion=unit_op(g), g=constant_field(g, 0.5), f=f, n=4, r=2.5, theta=0.3
    )
    u, trace = solve_S(spec, 1e-11)
    assert np.min(u.values) >= 0.0
    assert trace.final_residual_inf <= 1e-11


def test_comparison_principle_in_datum():
    g = Grid(2, 6)
    spec1 = make_spec(g, f=1.0, r=2.5, theta=0.4)
    spec2 = make_spec(g, f=2.0, r=2.5, theta=0.4)
    u1, _ = solve_S(spec1, 1e-12)
    u2, _ = solve_S(spec2, 1e-12)
    assert np.all(u2.values >= u1.values - 1e-8)


def test_truncation_consistency_above_solution_range():
    g = Grid(2, 5)
    spec_plain = make_spec(g, f=2.0, r=3.0, theta=0.5)
    tol = 1e-12
    u_plain, _ = solve_S(spec_plain, tol)
    k = lp_norm(u_plain, np.inf) ** 2.0 + 1.0  # >= ||u||_inf^(r-1) + 1
    spec_trunc = make_spec(g, f=2.0, r=3.0, theta=0.5, k=k)
    u_trunc, _ = solve_S(spec_trunc, tol)
    assert np.max(np.abs(u_trunc.values - u_plain.values)) <= 10 * tol


def test_truncation_active_changes_solution():
    # a tiny truncation level weakens the absorption, so u grows
    g = Grid(2, 2)
    u_plain, _ = solve_S(make_spec(g, g=50.0, f=20.0, r=3.0), 1e-12)
    u_trunc, _ = solve_S(make_spec(g, g=50.0, f=20.0, r=3.0, k=1e-6), 1e-12)
    assert u_trunc.values[0] > u_plain.values[0]


def test_uniqueness_probe_two_starts():
    g = Grid(2, 5)
    spec = make_spec(g, f=1.5, r=2.0, theta=0.6)
    tol = 1e-12
    u_a, _ = solve_S(spec, tol)
    u_b, _ = solve_S(spec, tol, u0=constant_field(g, 5.0))
    assert np.max(np.abs(u_a.values - u_b.values)) <= 10 * tol


def test_solve_T_zero_and_manufactured():
    g = Grid(2, 16)
    op = assembly.assemble(g, assembly.matrix_identity())
    assert np.all(solve_T(op, zero_field(g), 2.0, 1e-12).values == 0.0)
    # |u|^r manufactured as 2 pi^2 sin sin -> psi = sin sin up to O(h^2)
    target = field_from_function(g, lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]))
    source = ScalarField(g, (2.0 * np.pi**2 * target.values) ** (1.0 / 2.0))  # |u|^2 = rhs
    psi = solve_T(op, source, 2.0, 1e-12)
    assert np.max(np.abs(psi.values - target.values)) < 5e-3


def test_solve_T_positivity_random_trials():
    g = Grid(2, 6)
    op = assembly.assemble(g, assembly.matrix_identity())
    rng = np.random.default_rng(44)
    for _ in range(100):
        u = ScalarField(g, rng.uniform(0.0, 1.0, g.num_interior))
        psi = solve_T(op, u, 2.5, 1e-12)
        assert np.min(psi.values) >= 0.0


def test_monotone_ladder_zero_datum():
    g = Grid(2, 4)
    ladder = monotone_ladder(make_spec(g, f=0.0), [1, 2, 4], 1e-12)
    assert all(np.all(u.values == 0.0) for u in ladder)


def test_monotone_ladder_single_node_matches_bisection():
    g = Grid(2, 2)
    ladder = monotone_ladder(make_spec(g, f=1.0), [1, 2, 4], 1e-12, margin=0.25)
    roots = [oracles.single_node_root(16.0, 1.0, 1.0, n, 2.0, 0.5) for n in (1, 2, 4)]
    for u, root in zip(ladder, roots):
        assert abs(u.values[0] - root) <= 1e-10
    assert roots[0] < roots[1] < roots[2]


def test_monotone_ladder_enforces_order():
    g = Grid(2, 5)
    ladder = monotone_ladder(make_spec(g, f=3.0, r=2.5, theta=0.7), [1, 2, 4, 8], 1e-11)
    for a, b in zip(ladder, ladder[1:]):
        assert np.max(a.values - b.values) <= 1e-8
    with pytest.raises(ValueError):
        monotone_ladder(make_spec(g), [2, 2], 1e-10)


def test_ladder_interior_floor_recorded():
    g = Grid(3, 4)
    ladder = monotone_ladder(make_spec(g, f=1.0, r=2.0, theta=0.5), [1, 4], 1e-11)
    assert np.min(ladder[0].values) > 0.0  # strictly positive off the boundary
