"""Exponent and regime arithmetic for the singular coupled system.

Everything here is plain double-precision arithmetic on the four problem
parameters

    N      spatial dimension (integer, N >= 3),
    m      Lebesgue exponent of the datum f (m > 1),
    r      power of the coupling nonlinearity (r > 1),
    theta  strength of the singular term 1/u^theta (0 < theta < 1),

and the derived quantities that steer the a priori estimates:

    2*        = 2N/(N-2)                  Sobolev critical exponent,
    p'        = p/(p-1)                   Hoelder conjugate,
    m**       = Nm/(N-2m)                 second-order Sobolev improvement,
    tau       = 2N/(theta(N-2)+N+2)       regime threshold for r,
    gamma     test-power weight used by the summability estimates,
    sigma     predicted summability exponent of the solution u.

The regime split is decided by a single threshold tau: large coupling
powers (r >= tau) admit the absorption-assisted estimate chain, small ones
(r < tau) only the plain chain, with regime-specific lower bounds on m.
Boundary comparisons use an absolute tolerance of 1e-12 so that
user-supplied decimals land on the intended side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

_TOL = 1e-12

INF = float("inf")


class Regime(Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    OUT_OF_THEOREM = "OutOfTheorem"


@dataclass(frozen=True)
class ExponentInputs:
    """Validated problem parameters (N, m, r, theta)."""

    N: int
    m: float
    r: float
    theta: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ValueError(f"dimension N must be an integer >= 3, got {self.N}")
        if not self.m > 1:
            raise ValueError(f"datum exponent m must exceed 1, got {self.m}")
        if not self.r > 1:
            raise ValueError(f"coupling power r must exceed 1, got {self.r}")
        if not 0 < self.theta < 1:
            raise ValueError(f"singularity exponent theta must lie in (0,1), got {self.theta}")


@dataclass(frozen=True)
class RegularityVerdict:
    """Outcome of the regime classifier.

    ``sigma`` is the predicted summability exponent of u (``inf`` means a
    uniform bound, i.e. an L^infinity prediction, and then ``bounded`` is
    True).  ``candidates`` holds the two competing finite formulas
    ((1+theta)m**, m(2r+1+theta)/(m+1)) whenever m < N/2.  The excluded
    boundary m = N/2 keeps its regime gate but carries a non-empty
    ``diagnostic`` and reports sigma as the two-sided limit +inf with
    ``bounded`` still False (the uniform bound is only predicted for
    m > N/2 strictly).
    """

    regime: Regime
    r_threshold: float
    m_lower: float
    bounded: bool
    sigma: float
    m_double_star: float
    candidates: tuple[float, float] | None = None
    diagnostic: str = ""


def conjugate(p: float) -> float:
    """Hoelder conjugate p' = p/(p-1); an involution on (1, inf)."""
    if not p > 1:
        raise ValueError(f"conjugate requires p > 1, got {p}")
    return p / (p - 1.0)


def sobolev_exponents(N: int) -> tuple[float, float]:
    """Return (2*, (2*)') = (2N/(N-2), 2N/(N+2)) for dimension N >= 3."""
    if int(N) != N or N < 3:
        raise ValueError(f"Sobolev exponent needs an integer dimension N >= 3, got {N}")
    two_star = 2.0 * N / (N - 2.0)
    return two_star, 2.0 * N / (N + 2.0)


def double_star(N: int, m: float) -> float:
    """Second-order improvement exponent m** = Nm/(N-2m); inf for m >= N/2."""
    if not m > 1:
        raise ValueError(f"double_star requires m > 1, got {m}")
    if int(N) != N or N < 3:
        raise ValueError(f"double_star needs an integer dimension N >= 3, got {N}")
    if m >= N / 2.0 - _TOL:
        return INF
    return N * m / (N - 2.0 * m)


def regime_threshold(N: int, theta: float) -> float:
    """The single r-threshold tau = 2N/(theta(N-2)+N+2) splitting the regimes."""
    return 2.0 * N / (theta * (N - 2.0) + N + 2.0)


def regime_classify(inputs: ExponentInputs) -> RegularityVerdict:
    """Classify (N, m, r, theta) and predict the summability of u.

    CaseI:  r >= tau and m >= ((r+1)/(1-theta))' = (r+1)/(r+theta).
            For m < N/2 the prediction is the larger of the two candidate
            exponents; for m > N/2 it is a uniform (L^infinity) bound.
    CaseII: r < tau and m >= tau.  For m < N/2 only the Sobolev-route
            candidate (1+theta)m** is predicted.
    Anything else is OutOfTheorem (m_lower still reports the bound that was
    missed).  Ties r = tau count as CaseI.
    """
    N, m, r, theta = inputs.N, inputs.m, inputs.r, inputs.theta
    tau = regime_threshold(N, theta)

    if r >= tau - _TOL:
        m_lower = (r + 1.0) / (r + theta)
        regime = Regime.CASE_I if m >= m_lower - _TOL else Regime.OUT_OF_THEOREM
    else:
        m_lower = tau
        regime = Regime.CASE_II if m >= tau - _TOL else Regime.OUT_OF_THEOREM

    if regime is Regime.OUT_OF_THEOREM:
        return RegularityVerdict(
            regime=regime,
            r_threshold=tau,
            m_lower=m_lower,
            bounded=False,
            sigma=float("nan"),
            m_double_star=double_star(N, m),
            candidates=None,
            diagnostic=f"m={m} below the admissibility bound {m_lower}",
        )

    half_N = N / 2.0
    if m > half_N + _TOL:
        return RegularityVerdict(
            regime=regime,
            r_threshold=tau,
            m_lower=m_lower,
            bounded=True,
            sigma=INF,
            m_double_star=INF,
            candidates=None,
        )
    if m < half_N - _TOL:
        mds = double_star(N, m)
        cand = ((1.0 + theta) * mds, m * (2.0 * r + 1.0 + theta) / (m + 1.0))
        sigma = max(cand) if regime is Regime.CASE_I else cand[0]
        return RegularityVerdict(
            regime=regime,
            r_threshold=tau,
            m_lower=m_lower,
            bounded=False,
            sigma=sigma,
            m_double_star=mds,
            candidates=cand,
        )
    # m = N/2 exactly: the theory is silent; report the two-sided limit.
    return RegularityVerdict(
        regime=regime,
        r_threshold=tau,
        m_lower=m_lower,
        bounded=False,
        sigma=INF,
        m_double_star=INF,
        candidates=None,
        diagnostic=(
            f"m={m} equals N/2: the summability prediction is stated only for "
            "m strictly above or below N/2; sigma=+inf is the two-sided limit"
        ),
    )


def gamma_choice(m: float, r: float, theta: float) -> tuple[float, float]:
    """Test-power weight for the absorption-assisted estimate chain.

    Returns (gamma, s) with

        gamma = (r(m-1) + m(theta+1)) / (m+1) >= 1,
        s     = r + gamma = m(2r+1+theta)/(m+1) = (2 gamma - 1 - theta) m'.

    Requires the admissibility bound m >= (r+1)/(r+theta), which is exactly
    what makes gamma >= 1.
    """
    m_lower = (r + 1.0) / (r + theta)
    if m < m_lower - _TOL:
        raise ValueError(
            f"gamma_choice requires m >= (r+1)/(r+theta) = {m_lower}, got m={m}"
        )
    gamma = (r * (m - 1.0) + m * (theta + 1.0)) / (m + 1.0)
    return gamma, r + gamma


def gamma_choice_no_lower_order(N: int, m: float, theta: float) -> float:
    """Test-power weight for the plain (Sobolev-route) estimate chain.

    gamma = (1+theta) m** / 2*, which is >= 1 whenever
    m >= 2N/(theta(N-2)+N+2) and m < N/2.
    """
    tau = regime_threshold(N, theta)
    if m < tau - _TOL:
        raise ValueError(f"requires m >= {tau}, got m={m}")
    if m >= N / 2.0 - _TOL:
        raise ValueError(f"requires m < N/2 = {N / 2.0}, got m={m}")
    two_star, _ = sobolev_exponents(N)
    gamma = (1.0 + theta) * double_star(N, m) / two_star
    if gamma < 1.0 - _TOL:
        raise AssertionError(f"gamma={gamma} < 1 under the admissibility bounds")
    return gamma


def saddle_eligible(N: int, m: float, r: float, theta: float) -> bool:
    """Gate for the saddle-point characterization: 1 < r <= tau and m >= (2*/(1-theta))'.

    Both bounds reduce to the same threshold tau = 2N/(N+2+(N-2)theta).
    """
    tau = regime_threshold(N, theta)
    two_star, _ = sobolev_exponents(N)
    m_gate = conjugate(two_star / (1.0 - theta))
    return (1.0 < r <= tau + _TOL) and (m >= m_gate - _TOL)


def saddle_bound_alternative(N: int, theta: float) -> float:
    """The alternative (stronger) r-bound (N+2+(N-2)theta)/(N-2), reported alongside
    the gate for transparency; the gate itself uses ``regime_threshold``."""
    return (N + 2.0 + (N - 2.0) * theta) / (N - 2.0)
