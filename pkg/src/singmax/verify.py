"""Discrete audits of the a priori estimate chain, and the run report.

Each audit compares a computed left side against a computed right side of
one inequality from the estimate chain.  Audits that hold without unknown
constants (``constant_free``) must pass: their right side already includes
a residual-sized slack of 10 * fp_tol * scale, and the pass rule is
lhs <= rhs * (1 + 1e-10).  Inequalities whose constants the theory leaves
unquantified are downgraded to tracked ratios (``constant_free=False``)
that acceptance checks for stability, never for a specific value.

The audited chain, per regularization rung:

* energy:      alpha (E(u) + E(psi)) <= int f_n u^(1-theta)
               alpha E(psi)          <= int psi u^r
* tails:       alpha E(G_k(u))       <= int f G_k(u)         (k >= 1)
               plus the measured tail volumes |{u >= k}|
* gamma chain: alpha (2g-1) int |grad u|^2 u^(2g-2) <= int |f_n| u^(2g-1-theta)
               int u^(r+g) = (u^g).(A_M psi)                 (identity)
               [int u^(r+g)]^(1/m) / ||f||_m                 (tracked ratio)

and per ladder: the summability ratio stability, the uniform-bound proxy
for m > N/2, and the vanishing-small-sets proxy for psi u^r.

E is the unit-coefficient discrete Dirichlet energy (h1_seminorm squared),
so every left side is coefficient-free and the ellipticity floor alpha
multiplies it explicitly.  The weighted energy uses arithmetic face
averages of u^(2g-2); that makes the gamma inequality a discrete theorem
only for g <= 1.5 (the chord of x^(2g-1) can undershoot the averaged
weight for larger g), so the audit is constant_free exactly there.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .coupled import CoupledProblem, CoupledSolution
from .errors import InvariantViolation
from .exponents import (
    Regime,
    RegularityVerdict,
    conjugate,
    gamma_choice,
)
from .functional import SaddleReport
from .grid import (
    ScalarField,
    h1_seminorm,
    lp_norm,
    truncate_G,
    truncate_T,
    weighted_dirichlet_energy,
)

REPORT_FORMAT_VERSION = 1

TABLE_COLUMNS = [
    "n",
    "h",
    "dim",
    "theta",
    "r",
    "m",
    "regime",
    "fp_iters",
    "res_u",
    "res_psi",
    "min_u_interior",
    "norm_u_sigma",
    "norm_f_m",
    "ratio_sigma",
    "J_value",
    "saddle_left_defect",
    "saddle_right_defect",
    "audit_pass_count",
    "audit_total",
]

PASS_MARGIN = 1e-10


@dataclass
class EstimateAudit:
    name: str
    lhs: float
    rhs: float
    constant_free: bool
    ratio: float
    slack: float = 0.0
    note: str = ""

    @property
    def passed(self) -> bool:
        if not self.constant_free:
            return True
        return self.lhs <= self.rhs * (1.0 + PASS_MARGIN) + 1e-300

    @property
    def applicable(self) -> bool:
        return "not applicable" not in self.note


def _slack(fp_tol: float, *scales: float) -> float:
    return 10.0 * fp_tol * max(1.0, *scales)


def _f_n(prob: CoupledProblem, n: int) -> np.ndarray:
    return truncate_T(prob.f.values, float(n))


def audit_energy(
    u: ScalarField, psi: ScalarField, prob: CoupledProblem, n: int
) -> list[EstimateAudit]:
    vol = prob.grid.cell_volume
    alpha = prob.coeff_a.alpha
    uv = u.values
    fn = _f_n(prob, n)

    e_u = h1_seminorm(u) ** 2
    e_psi = h1_seminorm(psi) ** 2
    rhs_data = vol * float(np.sum(np.abs(fn) * uv ** (1.0 - prob.theta)))
    rhs_coupling = vol * float(np.sum(psi.values * uv**prob.r))
    scale = max(lp_norm(u, 1.0), lp_norm(psi, 1.0), rhs_data, e_u + e_psi)
    s1 = _slack(prob.fp_tol, scale)
    # the potential half uses its own ellipticity floor
    alpha_m = prob.coeff_M.alpha
    s2 = _slack(prob.fp_tol, scale)
    return [
        EstimateAudit(
            name="energy_combined",
            lhs=alpha * e_u + alpha_m * e_psi,
            rhs=rhs_data + s1,
            constant_free=True,
            ratio=(alpha * e_u + alpha_m * e_psi) / rhs_data if rhs_data > 0 else 0.0,
            slack=s1,
        ),
        EstimateAudit(
            name="energy_potential",
            lhs=alpha_m * e_psi,
            rhs=rhs_coupling + s2,
            constant_free=True,
            ratio=alpha_m * e_psi / rhs_coupling if rhs_coupling > 0 else 0.0,
            slack=s2,
        ),
    ]


def audit_tail(
    u: ScalarField, prob: CoupledProblem, n: int, k_list
) -> tuple[list[EstimateAudit], dict[float, float]]:
    """Stampacchia tail audits (k >= 1) plus the measured tail volumes."""
    vol = prob.grid.cell_volume
    alpha = prob.coeff_a.alpha
    audits = []
    measures: dict[float, float] = {}
    for k in k_list:
        k = float(k)
        if k < 1.0 - 1e-12:
            raise ValueError(f"tail audits need k >= 1, got {k}")
        gk = truncate_G(u.values, k)
        lhs = alpha * h1_seminorm(u.with_values(gk)) ** 2
        rhs = vol * float(np.sum(prob.f.values * gk))
        s = _slack(prob.fp_tol, vol * float(np.sum(np.abs(gk))), rhs)
        audits.append(
            EstimateAudit(
                name=f"tail_k={k:g}",
                lhs=lhs,
                rhs=rhs + s,
                constant_free=True,
                ratio=lhs / rhs if rhs > 0 else 0.0,
                slack=s,
            )
        )
        measures[k] = vol * float(np.sum(u.values >= k))
    return audits, measures


GAMMA_FACE_AVERAGE_LIMIT = 1.5


def audit_gamma_chain(
    u: ScalarField,
    psi: ScalarField,
    prob: CoupledProblem,
    n: int,
    gamma: float,
    A_M=None,
) -> list[EstimateAudit]:
    if gamma < 1.0 - 1e-12:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    vol = prob.grid.cell_volume
    alpha = prob.coeff_a.alpha
    uv = np.maximum(u.values, 0.0)
    fn = np.abs(_f_n(prob, n))

    if abs(2.0 * gamma - 2.0) < 1e-14:
        weight = np.ones_like(uv)
    else:
        weight = uv ** (2.0 * gamma - 2.0)
    w_energy = weighted_dirichlet_energy(u, weight)
    rhs_a = vol * float(np.sum(fn * uv ** (2.0 * gamma - 1.0 - prob.theta)))
    s_a = _slack(prob.fp_tol, rhs_a, w_energy, vol * float(np.sum(uv ** (2 * gamma - 1))))
    face_ok = gamma <= GAMMA_FACE_AVERAGE_LIMIT + 1e-12
    audit_a = EstimateAudit(
        name="gamma_weighted_gradient",
        lhs=alpha * (2.0 * gamma - 1.0) * w_energy,
        rhs=rhs_a + s_a,
        constant_free=face_ok,
        ratio=alpha * (2.0 * gamma - 1.0) * w_energy / rhs_a if rhs_a > 0 else 0.0,
        slack=s_a,
        note=""
        if face_ok
        else "tracked only: face-averaged weights are not a discrete theorem for gamma > 1.5",
    )

    s_exp = prob.r + gamma
    lhs_power = vol * float(np.sum(uv**s_exp))
    if A_M is None:
        A_M = prob.operators()[1]
    pairing = vol * float(np.dot(uv**gamma, A_M.dot(psi.values)))
    s_b = _slack(prob.fp_tol, lhs_power, vol * float(np.sum(uv**gamma)))
    audit_b = EstimateAudit(
        name="gamma_coupling_identity",
        lhs=abs(lhs_power - pairing),
        rhs=s_b,
        constant_free=True,
        ratio=lhs_power / pairing if pairing > 0 else 0.0,
        slack=s_b,
    )

    norm_f_m = lp_norm(prob.f, prob.m)
    lhs_c = lhs_power ** (1.0 / prob.m)
    audit_c = EstimateAudit(
        name="gamma_final_bound",
        lhs=lhs_c,
        rhs=norm_f_m,
        constant_free=False,
        ratio=lhs_c / norm_f_m if norm_f_m > 0 else 0.0,
        slack=0.0,
        note="tracked ratio: the constant C is unquantified",
    )
    return [audit_a, audit_b, audit_c]


def sigma_norm(u: ScalarField, sigma: float) -> float:
    return lp_norm(u, np.inf if np.isinf(sigma) else sigma)


def audit_sigma_boundedness(
    solution: CoupledSolution, verdict: RegularityVerdict | None
) -> EstimateAudit:
    prob = solution.problem
    if prob.grid.dim != 3 or verdict is None or verdict.regime is Regime.OUT_OF_THEOREM:
        return EstimateAudit(
            name="sigma_ratio_stability",
            lhs=float("nan"),
            rhs=float("nan"),
            constant_free=False,
            ratio=float("nan"),
            note="not applicable (needs dim=3 and an in-theorem verdict)",
        )
    norm_f = lp_norm(prob.f, prob.m)
    ratios = [sigma_norm(u, verdict.sigma) / norm_f for u in solution.ladder_u]
    if len(ratios) == 1:
        return EstimateAudit(
            name="sigma_ratio_stability",
            lhs=ratios[0],
            rhs=1.1 * ratios[0],
            constant_free=True,
            ratio=ratios[0],
            note="single rung: stability holds trivially",
        )
    last, earlier = ratios[-1], max(ratios[:-1])
    return EstimateAudit(
        name="sigma_ratio_stability",
        lhs=last,
        rhs=1.1 * earlier,
        constant_free=True,
        ratio=last,
        note=f"per-rung ratios: {[format(x, '.6g') for x in ratios]}",
    )


def audit_linf_boundedness(
    solution: CoupledSolution, verdict: RegularityVerdict | None
) -> EstimateAudit:
    if verdict is None or not verdict.bounded:
        return EstimateAudit(
            name="linf_boundedness",
            lhs=float("nan"),
            rhs=float("nan"),
            constant_free=False,
            ratio=float("nan"),
            note="not applicable (uniform bound predicted only for m > N/2)",
        )
    sups = [lp_norm(u, np.inf) for u in solution.ladder_u]
    if len(sups) == 1:
        return EstimateAudit(
            name="linf_boundedness",
            lhs=sups[0],
            rhs=1.05 * sups[0],
            constant_free=True,
            ratio=1.0,
            note="single rung: stability holds trivially",
        )
    last, earlier = sups[-1], max(sups[:-1])
    return EstimateAudit(
        name="linf_boundedness",
        lhs=last,
        rhs=1.05 * earlier,
        constant_free=True,
        ratio=last / earlier if earlier > 0 else 0.0,
        note=f"per-rung sup norms: {[format(x, '.6g') for x in sups]}",
    )


@dataclass
class EquiIntegrabilityReport:
    fractions: list[float]
    sup_integrals: list[float]
    passed: bool
    degenerate: bool
    note: str = ""


def audit_equiintegrability(
    solution: CoupledSolution, fractions=(0.2, 0.05, 0.0125)
) -> EquiIntegrabilityReport:
    """Vanishing-small-sets proxy for psi u^r over adversarially chosen sets.

    For each volume fraction q, each rung contributes the integral of
    psi_n u_n^r over its own worst ceil(q N) nodes; the proxy tracks the sup
    over rungs and passes when the smallest fraction's value is at most half
    the largest fraction's.
    """
    if len(solution.ladder_u) < 2:
        raise ValueError("equi-integrability proxy needs at least 2 rungs")
    prob = solution.problem
    vol = prob.grid.cell_volume
    n_nodes = prob.grid.num_interior
    fractions = sorted((float(q) for q in fractions), reverse=True)
    if n_nodes == 1:
        return EquiIntegrabilityReport(
            fractions=list(fractions),
            sup_integrals=[float("nan")] * len(fractions),
            passed=True,
            degenerate=True,
            note="single-node grid: every nonempty set is the whole domain",
        )
    sups = []
    for q in fractions:
        count = max(1, int(np.ceil(q * n_nodes)))
        worst = 0.0
        for u, psi in zip(solution.ladder_u, solution.ladder_psi):
            dens = psi.values * np.maximum(u.values, 0.0) ** prob.r
            top = np.sort(dens)[::-1][:count]
            worst = max(worst, vol * float(np.sum(top)))
        sups.append(worst)
    if sups[0] == 0.0:
        return EquiIntegrabilityReport(
            fractions=list(fractions), sup_integrals=sups, passed=True, degenerate=False,
            note="identically zero coupling density",
        )
    return EquiIntegrabilityReport(
        fractions=list(fractions),
        sup_integrals=sups,
        passed=sups[-1] <= 0.5 * sups[0],
        degenerate=False,
    )


@dataclass
class RungReport:
    n: int
    fp_iters: int
    res_u: float
    res_psi: float
    min_u: float
    min_u_interior: float
    monotonicity_defect: float
    norms: dict[str, float]
    seminorm_u: float
    seminorm_psi: float
    tail_measures: dict[float, float]
    audits: list[EstimateAudit]

    @property
    def audit_pass_count(self) -> int:
        return sum(1 for a in self.audits if a.passed and a.applicable)

    @property
    def audit_total(self) -> int:
        return sum(1 for a in self.audits if a.applicable)


@dataclass
class SolveReport:
    format_version: int
    problem: dict
    regime: str
    verdict: dict | None
    rungs: list[RungReport]
    ladder_audits: list[EstimateAudit]
    equiintegrability: EquiIntegrabilityReport | None
    saddle: SaddleReport | None
    seed: int
    J_value: float


def _norm_labels(prob: CoupledProblem, verdict: RegularityVerdict | None):
    """The report's norm battery: p in {1, 2, m', sigma, s, inf}."""
    labels = {"L1": 1.0, "L2": 2.0, "Lm_conj": conjugate(prob.m), "Linf": np.inf}
    if verdict is not None and not np.isnan(verdict.sigma):
        labels["Lsigma"] = verdict.sigma
    try:
        _, s = gamma_choice(prob.m, prob.r, prob.theta)
        labels["Ls"] = s
    except ValueError:
        pass
    return labels


def build_report(
    solution: CoupledSolution,
    k_list=(1.0, 2.0, 4.0),
    e_fractions=(0.2, 0.05, 0.0125),
    saddle: SaddleReport | None = None,
    seed: int = 0,
    J_value: float = float("nan"),
) -> SolveReport:
    prob = solution.problem
    verdict = prob.verdict()
    try:
        gamma, _ = gamma_choice(prob.m, prob.r, prob.theta)
    except ValueError:
        gamma = None

    labels = _norm_labels(prob, verdict)
    norm_f = lp_norm(prob.f, prob.m)
    A_M = prob.operators()[1] if gamma is not None else None
    rungs = []
    for rec, u, psi in zip(solution.per_n, solution.ladder_u, solution.ladder_psi):
        audits = audit_energy(u, psi, prob, rec.n)
        tail_audits, tail_measures = audit_tail(u, prob, rec.n, k_list)
        audits.extend(tail_audits)
        if gamma is not None:
            audits.extend(audit_gamma_chain(u, psi, prob, rec.n, gamma, A_M))
        norms = {label: lp_norm(u, p) for label, p in labels.items()}
        rungs.append(
            RungReport(
                n=rec.n,
                fp_iters=rec.iterations,
                res_u=rec.residual_u,
                res_psi=rec.residual_psi,
                min_u=rec.min_u,
                min_u_interior=rec.interior_min,
                monotonicity_defect=rec.monotonicity_defect,
                norms=norms,
                seminorm_u=h1_seminorm(u),
                seminorm_psi=h1_seminorm(psi),
                tail_measures=tail_measures,
                audits=audits,
            )
        )

    ladder_audits = [
        audit_sigma_boundedness(solution, verdict),
        audit_linf_boundedness(solution, verdict),
    ]
    equi = audit_equiintegrability(solution, e_fractions) if len(solution.ladder_u) >= 2 else None

    problem_echo = {
        "dim": prob.grid.dim,
        "cells": list(prob.grid.cells),
        "side_lengths": list(prob.grid.side_lengths),
        "theta": prob.theta,
        "r": prob.r,
        "m": prob.m,
        "n_schedule": list(prob.n_schedule),
        "fp_tol": prob.fp_tol,
        "inner_tol": prob.inner_tol,
        "relaxation": prob.relaxation,
        "coeff_a": {"preset": prob.coeff_a.preset, "alpha": prob.coeff_a.alpha, "beta": prob.coeff_a.beta},
        "coeff_M": {"preset": prob.coeff_M.preset, "alpha": prob.coeff_M.alpha, "beta": prob.coeff_M.beta},
        "norm_f_m": norm_f,
    }
    verdict_dict = None
    regime = "NotApplicable"
    if verdict is not None:
        regime = verdict.regime.value
        verdict_dict = {
            "regime": verdict.regime.value,
            "r_threshold": verdict.r_threshold,
            "m_lower": verdict.m_lower,
            "bounded": verdict.bounded,
            "sigma": verdict.sigma,
            "m_double_star": verdict.m_double_star,
            "candidates": list(verdict.candidates) if verdict.candidates else None,
            "diagnostic": verdict.diagnostic,
        }
    return SolveReport(
        format_version=REPORT_FORMAT_VERSION,
        problem=problem_echo,
        regime=regime,
        verdict=verdict_dict,
        rungs=rungs,
        ladder_audits=ladder_audits,
        equiintegrability=equi,
        saddle=saddle,
        seed=seed,
        J_value=J_value,
    )


def assert_constant_free_audits(report: SolveReport) -> None:
    """Abort (with the audit embedded) on any failed constant-free audit."""
    for rung in report.rungs:
        for audit in rung.audits:
            if audit.constant_free and audit.applicable and not audit.passed:
                raise InvariantViolation(
                    f"audit {audit.name} failed at n={rung.n}: "
                    f"lhs={audit.lhs:.12e} > rhs={audit.rhs:.12e}",
                    details={"audit": asdict(audit), "n": rung.n},
                )


def _fmt(x) -> str:
    if isinstance(x, float):
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def report_to_json(report: SolveReport) -> str:
    def encode(obj):
        if isinstance(obj, (EstimateAudit, RungReport, EquiIntegrabilityReport, SaddleReport)):
            d = asdict(obj)
            if isinstance(obj, EstimateAudit):
                d["passed"] = obj.passed
            if isinstance(obj, RungReport):
                d["audit_pass_count"] = obj.audit_pass_count
                d["audit_total"] = obj.audit_total
            return d
        raise TypeError(f"cannot encode {type(obj)}")

    payload = {
        "format_version": report.format_version,
        "problem": report.problem,
        "regime": report.regime,
        "verdict": report.verdict,
        "rungs": report.rungs,
        "ladder_audits": report.ladder_audits,
        "equiintegrability": report.equiintegrability,
        "saddle": report.saddle,
        "seed": report.seed,
        "J_value": report.J_value,
    }
    return json.dumps(payload, indent=2, sort_keys=True, default=encode)


def load_report_json(path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("format_version") != REPORT_FORMAT_VERSION:
        raise ValueError(
            f"unsupported report format version {data.get('format_version')!r}"
        )
    return data


def report_table_rows(report: SolveReport) -> list[dict]:
    prob = report.problem
    h = max(
        s / c for s, c in zip(prob["side_lengths"], prob["cells"])
    )
    rows = []
    last = len(report.rungs) - 1
    for i, rung in enumerate(report.rungs):
        sigma_label = "Lsigma" if "Lsigma" in rung.norms else "Linf"
        norm_u_sigma = rung.norms.get(sigma_label, float("nan"))
        norm_f_m = prob["norm_f_m"]
        is_final = i == last
        saddle_left = saddle_right = float("nan")
        if report.saddle is not None and is_final and report.saddle.eligible:
            saddle_left = report.saddle.left_defect_max
            saddle_right = report.saddle.right_defect_max
        rows.append(
            {
                "n": rung.n,
                "h": h,
                "dim": prob["dim"],
                "theta": prob["theta"],
                "r": prob["r"],
                "m": prob["m"],
                "regime": report.regime,
                "fp_iters": rung.fp_iters,
                "res_u": rung.res_u,
                "res_psi": rung.res_psi,
                "min_u_interior": rung.min_u_interior,
                "norm_u_sigma": norm_u_sigma,
                "norm_f_m": norm_f_m,
                "ratio_sigma": norm_u_sigma / norm_f_m if norm_f_m > 0 else float("nan"),
                "J_value": report.J_value if is_final else float("nan"),
                "saddle_left_defect": saddle_left,
                "saddle_right_defect": saddle_right,
                "audit_pass_count": rung.audit_pass_count,
                "audit_total": rung.audit_total,
            }
        )
    return rows


def report_to_table(report: SolveReport) -> str:
    lines = [",".join(TABLE_COLUMNS)]
    for row in report_table_rows(report):
        lines.append(",".join(_fmt(row[c]) for c in TABLE_COLUMNS))
    return "\n".join(lines) + "\n"


def write_report(report: SolveReport, json_path=None, table_path=None) -> None:
    if json_path is not None:
        Path(json_path).write_text(report_to_json(report) + "\n")
    if table_path is not None:
        Path(table_path).write_text(report_to_table(report))
