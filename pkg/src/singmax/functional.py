"""The indefinite two-slot energy and its saddle inequalities.

The functional evaluated here is

    J(u, phi) = 1/2 int a |grad u|^2  -  1/(2r) int M grad phi . grad phi
              + 1/r int phi^+ |u|^r   -  1/(1-theta) int f (u^+)^{1-theta},

discretized with the assembled quadratic forms and the rectangle rule (every
part carries the cell-volume weight).  On a finite grid the coupling term is
always integrable, so the +infinity branch never triggers; its magnitude is
still recorded for reporting.

A converged coupled solution should sit at a saddle: J decreases under
potential-slot perturbations and increases under state-slot perturbations,
within a regime gate on (r, m).  saddle_check samples seeded random
perturbations of prescribed Dirichlet seminorm and reports the worst
violation of each inequality; eligibility is reported, never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import DiscreteOperator
from .coupled import CoupledProblem
from .exponents import regime_threshold, saddle_bound_alternative, saddle_eligible
from .grid import ScalarField, h1_seminorm


@dataclass(frozen=True)
class FunctionalValue:
    total: float
    dirichlet_u: float
    dirichlet_psi_negated: float
    coupling: float
    data_term: float
    integrability_flag: bool
    coupling_magnitude: float


@dataclass
class SaddleReport:
    eligible: bool
    reason: str
    num_perturbations: int
    magnitude: float
    seed: int
    left_defect_max: float
    right_defect_max: float
    r_bound_used: float
    r_bound_alternative: float
    J_at_solution: float


def eval_J(
    u: ScalarField,
    phi: ScalarField,
    data: CoupledProblem,
    operators: tuple[DiscreteOperator, DiscreteOperator] | None = None,
) -> FunctionalValue:
    """Evaluate J(u, phi) with the problem's coefficients and datum."""
    A_a, A_M = operators if operators is not None else data.operators()
    vol = data.grid.cell_volume
    r, theta = data.r, data.theta

    dirichlet_u = 0.5 * vol * A_a.quadratic_form(u.values)
    dirichlet_psi = (0.5 / r) * vol * A_M.quadratic_form(phi.values)
    phi_plus = np.maximum(phi.values, 0.0)
    coupling_mag = vol * float(np.sum(phi_plus * np.abs(u.values) ** r))
    coupling = coupling_mag / r
    u_plus = np.maximum(u.values, 0.0)
    data_term = vol * float(np.sum(data.f.values * u_plus ** (1.0 - theta))) / (1.0 - theta)

    total = dirichlet_u - dirichlet_psi + coupling - data_term
    return FunctionalValue(
        total=total,
        dirichlet_u=dirichlet_u,
        dirichlet_psi_negated=dirichlet_psi,
        coupling=coupling,
        data_term=data_term,
        integrability_flag=True,
        coupling_magnitude=coupling_mag,
    )


def _scaled_perturbation(rng, grid, magnitude):
    w = rng.standard_normal(grid.num_interior)
    f = ScalarField(grid, w)
    norm = h1_seminorm(f)
    return f.with_values(w * (magnitude / norm))


def saddle_check(
    u: ScalarField,
    psi: ScalarField,
    data: CoupledProblem,
    num_perturbations: int = 1000,
    magnitude: float = 1e-3,
    seed: int = 0,
    operators: tuple[DiscreteOperator, DiscreteOperator] | None = None,
) -> SaddleReport:
    """Sample both saddle inequalities around (u, psi).

    Left:  J(u, psi + w)        <= J(u, psi)   for sign-indefinite w.
    Right: J(u, psi)            <= J(v, psi)   for v = u + w, clamped at 0
           with probability 1/2 to bias the admissible cone.
    Violations are data; thresholds are applied by the caller's tests.
    """
    A = operators if operators is not None else data.operators()
    dim = data.grid.dim
    bound_alt = saddle_bound_alternative(3, data.theta)
    if dim != 3:
        return SaddleReport(
            eligible=False,
            reason=f"regime gate needs dimension 3, grid has dim={dim}",
            num_perturbations=0,
            magnitude=magnitude,
            seed=seed,
            left_defect_max=float("nan"),
            right_defect_max=float("nan"),
            r_bound_used=float("nan"),
            r_bound_alternative=bound_alt,
            J_at_solution=eval_J(u, psi, data, A).total,
        )
    bound = regime_threshold(3, data.theta)
    if not saddle_eligible(3, data.m, data.r, data.theta) or not data.coeff_M.is_symmetric:
        reason = (
            f"needs symmetric M, 1 < r <= {bound:.6g} and m >= {bound:.6g}; "
            f"got r={data.r}, m={data.m}"
        )
        return SaddleReport(
            eligible=False,
            reason=reason,
            num_perturbations=0,
            magnitude=magnitude,
            seed=seed,
            left_defect_max=float("nan"),
            right_defect_max=float("nan"),
            r_bound_used=bound,
            r_bound_alternative=bound_alt,
            J_at_solution=eval_J(u, psi, data, A).total,
        )

    rng = np.random.default_rng(seed)
    J_center = eval_J(u, psi, data, A).total
    left_max = 0.0
    right_max = 0.0
    for k in range(num_perturbations):
        w = _scaled_perturbation(rng, data.grid, magnitude)
        phi = psi.with_values(psi.values + w.values)
        left_max = max(left_max, eval_J(u, phi, data, A).total - J_center)

        w2 = _scaled_perturbation(rng, data.grid, magnitude)
        v_vals = u.values + w2.values
        if rng.random() < 0.5:
            v_vals = np.maximum(v_vals, 0.0)
        v = u.with_values(v_vals)
        right_max = max(right_max, J_center - eval_J(v, psi, data, A).total)

    return SaddleReport(
        eligible=True,
        reason="",
        num_perturbations=num_perturbations,
        magnitude=magnitude,
        seed=seed,
        left_defect_max=left_max,
        right_defect_max=right_max,
        r_bound_used=bound,
        r_bound_alternative=bound_alt,
        J_at_solution=J_center,
    )


def phi_slot_gap(
    u: ScalarField,
    psi: ScalarField,
    phi: ScalarField,
    data: CoupledProblem,
    operators: tuple[DiscreteOperator, DiscreteOperator] | None = None,
) -> tuple[float, float]:
    """(J(u,psi) - J(u,phi), quadratic gap (1/2r) vol (psi-phi).A_M(psi-phi)).

    The two coincide exactly (up to the potential equation's residual) for
    phi >= 0, since the potential slot is quadratic.
    """
    A = operators if operators is not None else data.operators()
    _, A_M = A
    vol = data.grid.cell_volume
    left = eval_J(u, psi, data, A).total - eval_J(u, phi, data, A).total
    diff = psi.values - phi.values
    right = (0.5 / data.r) * vol * float(np.dot(diff, A_M.dot(diff)))
    return left, right


def state_slot_derivative(
    u: ScalarField,
    psi: ScalarField,
    data: CoupledProblem,
    direction: ScalarField,
    step: float = 1e-6,
    operators: tuple[DiscreteOperator, DiscreteOperator] | None = None,
) -> float:
    """Central-difference directional derivative of v -> J(v, psi) at u."""
    A = operators if operators is not None else data.operators()
    up = u.with_values(u.values + step * direction.values)
    um = u.with_values(u.values - step * direction.values)
    return (eval_J(up, psi, data, A).total - eval_J(um, psi, data, A).total) / (2.0 * step)
