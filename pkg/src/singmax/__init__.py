"""singmax: a desk-scale lab for coupled elliptic systems with a singular term.

The package solves, on structured box grids, the coupled pair

    -div(a(x) grad u) + psi |u|^{r-2} u = f(x) / (u + 1/n)^theta,
    -div(M(x) grad psi)                 = |u|^r,

by a fixed-point composition of the two half-problem solvers, ramped over
the regularization index n, and then audits every checkable estimate
(energy, truncation tails, weighted chains, summability ratios, saddle
inequalities) on the computed fields.
"""

__version__ = "0.1.0"

from .exponents import (  # noqa: F401
    ExponentInputs,
    Regime,
    RegularityVerdict,
    conjugate,
    double_star,
    gamma_choice,
    gamma_choice_no_lower_order,
    regime_classify,
    sobolev_exponents,
)
