"""Full-system driver: fixed-point composition of the two half solvers.

One fixed-point sweep at regularization index n iterates

    u_j   = S(psi_j)        (singular equation with frozen weight psi_j)
    psi_{j+1} = (1-rho) psi_j + rho T(u_j)

until the Dirichlet seminorm of the psi increment and both fresh PDE
residuals drop below fp_tol.  There is no contraction guarantee; a
non-decreasing increment history over 10 consecutive sweeps aborts with the
history attached instead of accepting a cycling iteration.

continuation_solve wraps the sweep in the increasing n-schedule with
f_n = T_n(f) and warm-started potentials, recording per-rung monotonicity
defects and interior minima.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .assembly import CoefficientField, DiscreteOperator, assemble
from .errors import ConvergenceError
from .exponents import ExponentInputs, RegularityVerdict, regime_classify
from .grid import (
    Grid,
    InteriorSubdomain,
    ScalarField,
    h1_seminorm,
    interior_min,
    truncate_T,
    zero_field,
)
from .scalar_solvers import SingularEquationSpec, solve_S, solve_T


@dataclass(frozen=True)
class CoupledProblem:
    grid: Grid
    coeff_a: CoefficientField
    coeff_M: CoefficientField
    f: ScalarField
    theta: float
    r: float
    m: float  # metadata for verification; the solver never reads it
    n_schedule: tuple[int, ...]
    fp_tol: float = 1e-10
    inner_tol: float = 1e-12
    max_fp_iters: int = 60
    relaxation: float = 1.0
    margin: float = 0.125
    max_newton: int = 200

    def __post_init__(self):
        sched = tuple(int(n) for n in self.n_schedule)
        object.__setattr__(self, "n_schedule", sched)
        if not sched or any(n < 1 for n in sched):
            raise ValueError("n_schedule must be nonempty positive integers")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("n_schedule must be strictly increasing")
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0,1), got {self.theta}")
        if not self.r > 1:
            raise ValueError(f"r must exceed 1, got {self.r}")
        if np.min(self.f.values) < 0:
            raise ValueError("datum f must be nonnegative")
        if not 0 < self.relaxation <= 1:
            raise ValueError("relaxation must lie in (0, 1]")
        if self.fp_tol <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be positive")

    def verdict(self) -> RegularityVerdict | None:
        """Exponent-theory verdict; None (not applicable) off dimension 3."""
        if self.grid.dim != 3:
            return None
        return regime_classify(ExponentInputs(N=3, m=self.m, r=self.r, theta=self.theta))

    def operators(self) -> tuple[DiscreteOperator, DiscreteOperator]:
        return assemble(self.grid, self.coeff_a), assemble(self.grid, self.coeff_M)


@dataclass
class FixedPointRecord:
    n: int
    iterations: int
    increments: list[float]
    residual_u: float
    residual_psi: float
    newton_iterations: int
    damping_events: int
    monotonicity_defect: float = 0.0
    interior_min: float = 0.0
    min_u: float = 0.0
    min_psi: float = 0.0


@dataclass
class CoupledSolution:
    problem: CoupledProblem
    u: ScalarField
    psi: ScalarField
    per_n: list[FixedPointRecord]
    ladder_u: list[ScalarField] = dc_field(default_factory=list)
    ladder_psi: list[ScalarField] = dc_field(default_factory=list)

    @property
    def final_record(self) -> FixedPointRecord:
        return self.per_n[-1]


def residual_singular(
    A_a: DiscreteOperator, u: ScalarField, psi: ScalarField, f_n: ScalarField, n: int, r: float, theta: float
) -> float:
    """Max-norm residual of the singular equation at (u, psi), evaluated fresh."""
    uv = np.maximum(u.values, 0.0)
    res = A_a.dot(uv) + psi.values * uv ** (r - 1.0) - f_n.values / (uv + 1.0 / n) ** theta
    return float(np.max(np.abs(res)))


def residual_potential(A_M: DiscreteOperator, psi: ScalarField, u: ScalarField, r: float) -> float:
    res = A_M.dot(psi.values) - np.abs(u.values) ** r
    return float(np.max(np.abs(res)))


def fixed_point_solve(
    prob: CoupledProblem,
    n: int,
    psi_init: ScalarField,
    A_a: DiscreteOperator | None = None,
    A_M: DiscreteOperator | None = None,
) -> tuple[ScalarField, ScalarField, FixedPointRecord]:
    """One Schauder-style sweep at fixed n; raises rather than under-converging."""
    if np.min(psi_init.values) < 0:
        raise ValueError("psi_init must be nonnegative")
    if A_a is None or A_M is None:
        A_a, A_M = prob.operators()
    f_n = prob.f.with_values(truncate_T(prob.f.values, float(n)))

    psi = psi_init
    increments: list[float] = []
    newton_total = 0
    damping_total = 0
    solver_tol = 0.1 * prob.fp_tol

    for _ in range(prob.max_fp_iters):
        spec = SingularEquationSpec(
            diffusion=A_a, g=psi, f=f_n, n=n, r=prob.r, theta=prob.theta
        )
        u, trace = solve_S(
            spec,
            solver_tol,
            max_newton=prob.max_newton,
            inner_tol=prob.inner_tol,
        )
        newton_total += trace.iterations
        damping_total += trace.damping_events
        psi_raw = solve_T(A_M, u, prob.r, prob.inner_tol)
        if prob.relaxation < 1.0:
            mixed = (1.0 - prob.relaxation) * psi.values + prob.relaxation * psi_raw.values
            psi_new = psi.with_values(mixed)
        else:
            psi_new = psi_raw
        increments.append(h1_seminorm(psi_new.with_values(psi_new.values - psi.values)))

        res_u = residual_singular(A_a, u, psi_new, f_n, n, prob.r, prob.theta)
        res_psi = residual_potential(A_M, psi_new, u, prob.r)
        psi = psi_new
        if increments[-1] <= prob.fp_tol and res_u <= prob.fp_tol and res_psi <= prob.fp_tol:
            rec = FixedPointRecord(
                n=n,
                iterations=len(increments),
                increments=increments,
                residual_u=res_u,
                residual_psi=res_psi,
                newton_iterations=newton_total,
                damping_events=damping_total,
                min_u=float(np.min(u.values)),
                min_psi=float(np.min(psi.values)),
            )
            return u, psi, rec
        if len(increments) >= 10 and all(
            b >= a for a, b in zip(increments[-10:], increments[-9:])
        ):
            raise ConvergenceError(
                "fixed-point iteration is cycling (increments non-decreasing over 10 sweeps)",
                details={"increments": increments},
            )

    raise ConvergenceError(
        f"fixed point not reached in {prob.max_fp_iters} sweeps",
        details={"increments": increments},
    )


def continuation_solve(prob: CoupledProblem) -> CoupledSolution:
    """Run the n-schedule with warm-started potentials; final pair is the last rung."""
    A_a, A_M = prob.operators()
    sub = InteriorSubdomain(prob.grid, prob.margin)
    psi = zero_field(prob.grid)
    prev_u: ScalarField | None = None
    records: list[FixedPointRecord] = []
    ladder_u: list[ScalarField] = []
    ladder_psi: list[ScalarField] = []
    u = zero_field(prob.grid)
    for n in prob.n_schedule:
        try:
            u, psi, rec = fixed_point_solve(prob, n, psi, A_a, A_M)
        except ConvergenceError as err:
            err.details["partial_records"] = records
            raise
        if prev_u is not None:
            rec.monotonicity_defect = float(
                np.max(prev_u.values - u.values, initial=0.0)
            )
        rec.interior_min = interior_min(u, sub) if sub.num_nodes else float("nan")
        records.append(rec)
        ladder_u.append(u)
        ladder_psi.append(psi)
        prev_u = u
    return CoupledSolution(
        problem=prob, u=u, psi=psi, per_n=records, ladder_u=ladder_u, ladder_psi=ladder_psi
    )
