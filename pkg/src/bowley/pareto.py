"""Pareto optimality and individual rationality of contracts.

A contract is Pareto optimal iff it minimises ``ρ(I, π) - V(I, π)``, which
does not depend on the premium and reduces to ``∫ [(1-κ) T(S) + κ S] dy``.
The pointwise minimiser is bang-bang, so the minimum is ``∫ min(T(S), S) dy``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .choquet import (
    Contract,
    Indemnity,
    choquet_of_indemnity,
    choquet_of_retention,
    drm_of_loss,
    expected_indemnity,
    insurer_profit,
    integrate_layers,
    loss_cuts,
    policyholder_objective,
)
from .distortion import DEFAULT_RESOLUTION, Distortion, crossing_set
from .equilibrium import (
    EquilibriumResult,
    PreconditionError,
    Region,
    SignRegionPartition,
    equilibrium_profit_quantile_form,
)
from .loss import LossModel

PARETO_TOL = 1e-7
INDIFFERENCE_TOL = 1e-7


@dataclass(frozen=True)
class WelfareReport:
    pareto_objective: float
    policyholder_risk: float
    insurer_value: float
    is_individually_rational: tuple[bool, bool]
    indifference_gap: float


@dataclass(frozen=True)
class ParetoCertificate:
    objective: float
    minimum: float
    gap: float
    sampled_minimum: float | None = None

    @property
    def optimal(self) -> bool:
        return self.gap <= PARETO_TOL

    def __bool__(self) -> bool:
        return self.optimal


def pareto_objective(c: Contract, m: LossModel, T: Distortion) -> float:
    """``ρ(R(X)) + E[I(X)]``; the premium cancels."""
    ind = c.indemnity
    cuts = loss_cuts(m, [T], indemnity=ind)

    def f(y, s):
        k = ind.kappa(y)
        return (1.0 - k) * T(s) + k * s

    return integrate_layers(f, m, cuts)


def pareto_minimum(m: LossModel, T: Distortion, resolution: int = DEFAULT_RESOLUTION) -> float:
    cs = crossing_set(T, resolution)
    cuts = loss_cuts(m, [T], t_points=cs.points)
    return integrate_layers(lambda y, s: np.minimum(T(s), s), m, cuts)


def welfare(c: Contract, m: LossModel, T: Distortion) -> WelfareReport:
    rho = choquet_of_retention(c.indemnity, m, T) + c.premium
    value = c.premium - expected_indemnity(c.indemnity, m)
    rho0 = drm_of_loss(m, T)
    return WelfareReport(
        pareto_objective=pareto_objective(c, m, T),
        policyholder_risk=rho,
        insurer_value=value,
        is_individually_rational=(rho <= rho0 + INDIFFERENCE_TOL, value >= -INDIFFERENCE_TOL),
        indifference_gap=rho - rho0,
    )


def _random_indemnity(M: float, rng: np.random.Generator, segments: int = 20) -> Indemnity:
    cuts = np.sort(rng.uniform(0.0, M, segments - 1))
    bounds = tuple(np.unique(np.append(cuts, M)))
    return Indemnity(bounds, tuple(rng.uniform(0.0, 1.0, len(bounds))))


def is_pareto_optimal(
    c: Contract,
    m: LossModel,
    T: Distortion,
    resolution: int = DEFAULT_RESOLUTION,
    samples: int = 0,
    seed: int = 0,
) -> ParetoCertificate:
    """Compare the contract's objective with the bang-bang minimum.

    With ``samples > 0`` random feasible contracts are also scored; their best
    objective is recorded as a sanity bound (it can never beat the minimum).
    """
    obj = pareto_objective(c, m, T)
    low = pareto_minimum(m, T, resolution)
    sampled = None
    if samples:
        rng = np.random.default_rng(seed)
        sampled = min(
            pareto_objective(Contract(_random_indemnity(m.M, rng), 0.0), m, T) for _ in range(samples)
        )
    return ParetoCertificate(objective=obj, minimum=low, gap=obj - low, sampled_minimum=sampled)


def _levels_partition(ind: Indemnity, crossing) -> SignRegionPartition:
    labels = tuple(
        Region.FULL if k == 1.0 else Region.NONE if k == 0.0 else Region.TIE for k in ind.levels
    )
    return SignRegionPartition(ind.bounds, labels, crossing)


def equilibrium_from_pareto(
    c: Contract,
    m: LossModel,
    T: Distortion,
    resolution: int = DEFAULT_RESOLUTION,
) -> EquilibriumResult:
    """Equilibrium (pricing ``T``) inducing a Pareto-optimal contract that leaves no surplus."""
    cert = is_pareto_optimal(c, m, T, resolution)
    if not cert.optimal:
        raise PreconditionError(
            f"contract is not Pareto optimal (gap {cert.gap:.3g} > {PARETO_TOL:g})",
            condition="pareto",
            gap=cert.gap,
        )
    report = welfare(c, m, T)
    if abs(report.indifference_gap) > INDIFFERENCE_TOL:
        raise PreconditionError(
            f"policyholder is not indifferent to the contract "
            f"(gap {report.indifference_gap:.12g}, tolerance {INDIFFERENCE_TOL:g})",
            condition="indifference",
            gap=report.indifference_gap,
        )
    premium = choquet_of_indemnity(c.indemnity, m, T)
    if abs(premium - c.premium) > INDIFFERENCE_TOL:
        raise PreconditionError(
            f"premium {c.premium:.12g} is not the distortion premium {premium:.12g}",
            condition="premium",
            gap=c.premium - premium,
        )
    cs = crossing_set(T, resolution)
    return EquilibriumResult(
        pricing=T,
        indemnity=c.indemnity,
        premium=premium,
        profit=insurer_profit(c.indemnity, m, T),
        profit_layer=equilibrium_profit_quantile_form(T, m, resolution, cs=cs),
        policyholder_risk=policyholder_objective(c.indemnity, m, T, T),
        partition=_levels_partition(c.indemnity, cs),
        crossing_set=cs,
    )
