"""The two half-problem solvers.

solve_S handles the singular semilinear equation

    A_a u + g(x) u^{r-1} = f(x) / (u + 1/n)^theta,   u >= 0,

for a frozen nonnegative weight g (the potential in the coupled run, or a
fixed field).  The scheme is damped Newton on the nodal residual with
iterates projected to u >= 0, falling back to a lagged-coefficient Picard
step when the line search stalls.  The initial guess is the linear solve
A_a u = f n^theta clamped at zero: a discrete supersolution, since the
regularized right-hand side never exceeds f n^theta, so the returned
solution is also capped by it (checked).

solve_T handles the linear potential equation A_M psi = |u|^r and inherits
nonnegativity from the discrete maximum principle when A_M is an M-matrix.

monotone_ladder runs solve_S over an increasing regularization schedule
with f_n = T_n(f) and enforces (not just measures) nodal monotonicity and
the interior positivity floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .assembly import DiscreteOperator, solve_shifted, solve_spd
from .errors import ConvergenceError, InvariantViolation
from .grid import InteriorSubdomain, ScalarField, interior_min, truncate_T

EPS_MONO = 1e-8


@dataclass(frozen=True)
class SingularEquationSpec:
    """Data for one instance of the singular equation."""

    diffusion: DiscreteOperator
    g: ScalarField
    f: ScalarField
    n: int
    r: float
    theta: float
    inner_truncation_k: float | None = None

    def __post_init__(self):
        if np.min(self.g.values) < 0:
            raise ValueError("lower-order weight g must be nonnegative nodally")
        if np.min(self.f.values) < 0:
            raise ValueError("datum f must be nonnegative nodally")
        if self.n < 1:
            raise ValueError(f"regularization index n must be >= 1, got {self.n}")
        if not self.r > 1:
            raise ValueError(f"coupling power r must exceed 1, got {self.r}")
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0,1), got {self.theta}")
        if self.inner_truncation_k is not None and not self.inner_truncation_k > 0:
            raise ValueError("inner truncation level must be positive")

    @property
    def g_min(self) -> float:
        """Measured nodal floor of the weight (no positivity is enforced)."""
        return float(np.min(self.g.values))


@dataclass
class NonlinearSolveTrace:
    iterations: int
    residual_history: list[float]
    final_residual_inf: float
    damping_events: int
    g_min: float = 0.0


def _absorption(spec: SingularEquationSpec, u: np.ndarray) -> np.ndarray:
    """g * u^{r-1}, truncated at the inner level when enabled (u >= 0)."""
    powered = u ** (spec.r - 1.0)
    if spec.inner_truncation_k is not None:
        powered = np.minimum(powered, spec.inner_truncation_k)
    return spec.g.values * powered


def _residual(spec: SingularEquationSpec, u: np.ndarray) -> np.ndarray:
    denom = (u + 1.0 / spec.n) ** spec.theta
    return spec.diffusion.dot(u) + _absorption(spec, u) - spec.f.values / denom


def _jacobian_diagonal(spec: SingularEquationSpec, u: np.ndarray) -> np.ndarray:
    """Diagonal of dF/du minus the linear part; nonnegative, so A + D stays SPD.

    For r < 2 the absorption derivative blows up at u = 0; a floor on u in
    the derivative only (never in the residual) keeps the diagonal finite.
    """
    guarded = np.maximum(u, 1e-12 * max(1.0, float(np.max(u, initial=0.0))))
    d_abs = spec.g.values * (spec.r - 1.0) * guarded ** (spec.r - 2.0)
    if spec.inner_truncation_k is not None:
        active = u ** (spec.r - 1.0) >= spec.inner_truncation_k
        d_abs = np.where(active, 0.0, d_abs)
    d_sing = spec.theta * spec.f.values / (u + 1.0 / spec.n) ** (spec.theta + 1.0)
    return d_abs + d_sing


def solve_S(
    spec: SingularEquationSpec,
    tol: float,
    max_newton: int = 200,
    inner_tol: float = 1e-12,
    u0: ScalarField | None = None,
) -> tuple[ScalarField, NonlinearSolveTrace]:
    """Solve the singular equation to max-norm residual <= tol, u >= 0 nodally."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = spec.diffusion
    n_scaled = spec.f.values * float(spec.n) ** spec.theta
    u_lin, _, _ = solve_shifted(op, np.zeros(op.n), n_scaled, inner_tol)
    cap = float(np.max(u_lin, initial=0.0))

    u = np.maximum(u0.values.copy() if u0 is not None else u_lin, 0.0)
    res = _residual(spec, u)
    res_inf = float(np.max(np.abs(res)))
    history = [res_inf]
    damping = 0

    while res_inf > tol:
        if len(history) > max_newton:
            raise ConvergenceError(
                f"singular solve stalled at residual {res_inf:.3e} after {max_newton} steps",
                details={"trace": history},
            )
        diag = _jacobian_diagonal(spec, u)
        delta, _, _ = solve_shifted(op, diag, -res, inner_tol)

        lam, accepted = 1.0, False
        for _ in range(30):
            trial = np.maximum(u + lam * delta, 0.0)
            trial_res = _residual(spec, trial)
            trial_inf = float(np.max(np.abs(trial_res)))
            if trial_inf < res_inf * (1.0 - 1e-4 * lam) or trial_inf <= tol:
                if lam < 1.0:
                    damping += 1
                u, res, res_inf, accepted = trial, trial_res, trial_inf, True
                break
            lam *= 0.5
        if not accepted:
            # lagged-coefficient Picard step: freeze the denominator and the
            # absorption coefficient, solve the resulting linear problem
            damping += 1
            guarded = np.maximum(u, 1e-12 * max(1.0, float(np.max(u, initial=0.0))))
            coef = spec.g.values * guarded ** (spec.r - 2.0)
            rhs = spec.f.values / (u + 1.0 / spec.n) ** spec.theta
            if spec.inner_truncation_k is not None:
                active = u ** (spec.r - 1.0) >= spec.inner_truncation_k
                rhs = rhs - np.where(active, spec.g.values * spec.inner_truncation_k, 0.0)
                coef = np.where(active, 0.0, coef)
            u_new, _, _ = solve_shifted(op, coef, rhs, inner_tol, x0=u)
            u = np.maximum(u_new, 0.0)
            res = _residual(spec, u)
            res_inf = float(np.max(np.abs(res)))
        history.append(res_inf)

    if float(np.max(u, initial=0.0)) > cap + 1e-6 * (1.0 + cap):
        raise InvariantViolation(
            "solution exceeds the linear supersolution cap",
            details={"max_u": float(np.max(u)), "cap": cap},
        )
    final = float(np.max(np.abs(_residual(spec, u))))  # re-evaluated, not the loop value
    trace = NonlinearSolveTrace(
        iterations=len(history),
        residual_history=history,
        final_residual_inf=final,
        damping_events=damping,
        g_min=spec.g_min,
    )
    return ScalarField(op.grid, u), trace


def solve_T(M_op: DiscreteOperator, u: ScalarField, r: float, tol: float) -> ScalarField:
    """Solve A_M psi = |u|^r; psi >= 0 nodally when A_M is an M-matrix."""
    rhs = ScalarField(M_op.grid, np.abs(u.values) ** r)
    psi = solve_spd(M_op, rhs, tol)
    if M_op.is_m_matrix:
        floor = float(np.min(psi.values))
        scale = max(1.0, float(np.max(np.abs(psi.values))))
        if floor < -1e-8 * scale:
            raise InvariantViolation(
                "maximum principle violated: potential went negative",
                details={"min_psi": floor},
            )
        if floor < 0.0:
            psi = psi.with_values(np.maximum(psi.values, 0.0))
    return psi


def monotone_ladder(
    spec: SingularEquationSpec,
    n_list,
    tol: float,
    margin: float = 0.125,
    max_newton: int = 200,
    inner_tol: float = 1e-12,
) -> list[ScalarField]:
    """solve_S over an increasing schedule with f_n = T_n(f); monotone by construction.

    ``spec.f`` is the untruncated datum and ``spec.n`` is ignored.  Nodal
    monotonicity and the interior positivity floor of the first rung are
    enforced within EPS_MONO; violations raise, they are not warnings.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or not n_list:
        raise ValueError("n_list must be nonempty and strictly increasing")
    sub = InteriorSubdomain(spec.diffusion.grid, margin)
    out: list[ScalarField] = []
    floor = None
    prev = None
    warm = None
    for n in n_list:
        spec_n = SingularEquationSpec(
            diffusion=spec.diffusion,
            g=spec.g,
            f=spec.f.with_values(truncate_T(spec.f.values, float(n))),
            n=n,
            r=spec.r,
            theta=spec.theta,
            inner_truncation_k=spec.inner_truncation_k,
        )
        u, _ = solve_S(spec_n, tol, max_newton=max_newton, inner_tol=inner_tol, u0=warm)
        if prev is not None:
            defect = float(np.max(prev.values - u.values, initial=0.0))
            if defect > EPS_MONO:
                raise InvariantViolation(
                    f"ladder monotonicity defect {defect:.3e} exceeds {EPS_MONO}",
                    details={"n": n, "defect": defect},
                )
        if sub.num_nodes:
            m = interior_min(u, sub)
            if floor is None:
                floor = m
            elif m < floor - EPS_MONO:
                raise InvariantViolation(
                    f"interior floor dropped from {floor:.3e} to {m:.3e} at n={n}",
                    details={"n": n, "floor": floor, "min": m},
                )
        out.append(u)
        prev = u
        warm = u
    return out
