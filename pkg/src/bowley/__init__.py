"""Equilibrium insurance contracts between a distortion-risk policyholder and a pricing insurer."""

from .choquet import Contract, Indemnity
from .distortion import (
    VaR,
    Composed,
    Identity,
    PiecewiseLinear,
    Tabulated,
    TVaR,
    TverskyKahneman,
    crossing_set,
)
from .equilibrium import PreconditionError, TiePolicy, best_response, compare, solve
from .loss import Kumaraswamy, TabulatedLoss, TruncatedExponential, Uniform
from .pareto import equilibrium_from_pareto, is_pareto_optimal

__all__ = [
    "Composed",
    "Contract",
    "Identity",
    "Indemnity",
    "Kumaraswamy",
    "PiecewiseLinear",
    "PreconditionError",
    "TVaR",
    "Tabulated",
    "TabulatedLoss",
    "TiePolicy",
    "TruncatedExponential",
    "TverskyKahneman",
    "Uniform",
    "VaR",
    "best_response",
    "compare",
    "crossing_set",
    "equilibrium_from_pareto",
    "is_pareto_optimal",
    "solve",
]
