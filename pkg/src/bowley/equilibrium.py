"""Policyholder best responses and the canonical Stackelberg equilibrium.

The insurer moves first with a pricing distortion ``g``; the policyholder
answers with a layer contract: full cover where ``g(S) < T(S)``, none where
``g(S) > T(S)``. In equilibrium the insurer prices with ``g* = T`` and the
policyholder cedes exactly the layers where ``T(S) > S``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .choquet import (
    Contract,
    Indemnity,
    choquet_of_indemnity,
    insurer_profit,
    integrate_layers,
    loss_cuts,
    policyholder_objective,
)
from .distortion import (
    DEFAULT_RESOLUTION,
    CrossingSet,
    Distortion,
    crossing_set,
    dominates,
    sign_regions,
)
from .loss import LossModel

ROUTE_TOL = 1e-7
COMPARE_SLACK = 1e-8


class PreconditionError(ValueError):
    """An operation was called on inputs outside its contract.

    ``condition`` names the failed check and ``gap`` reports by how much.
    """

    def __init__(self, message: str, condition: str | None = None, gap: float | None = None):
        super().__init__(message)
        self.condition = condition
        self.gap = gap


class RouteDisagreementError(RuntimeError):
    """Two independent evaluations of the equilibrium profit disagree."""

    def __init__(self, layer: float, direct: float):
        self.layer, self.direct = layer, direct
        super().__init__(
            f"profit routes disagree: layer {layer:.12g} vs contract {direct:.12g} "
            f"(gap {abs(layer - direct):.3g} > {ROUTE_TOL:g})"
        )


class Region(enum.Enum):
    FULL = "FULL"
    NONE = "NONE"
    TIE = "TIE"


class TiePolicy(enum.Enum):
    RETAIN = "retain"
    CEDE = "cede"
    INSURER_OPTIMAL = "insurer"


_LABEL = {1: Region.FULL, -1: Region.NONE, 0: Region.TIE}


@dataclass(frozen=True)
class SignRegionPartition:
    """Labelled partition of [0, M]; ``bounds[i]`` closes segment ``i``."""

    bounds: tuple[float, ...]
    labels: tuple[Region, ...]
    crossing: CrossingSet

    def rows(self) -> list[tuple[float, float, Region]]:
        lower = (0.0, *self.bounds[:-1])
        return list(zip(lower, self.bounds, self.labels))

    def describe(self) -> str:
        parts = []
        rows = self.rows()
        for i, (lo, hi, lab) in enumerate(rows):
            close = "]" if i == len(rows) - 1 else ")"
            parts.append(f"[{lo:.6g},{hi:.6g}{close}: {lab.value}")
        return "; ".join(parts)


@dataclass(frozen=True)
class EquilibriumResult:
    pricing: Distortion
    indemnity: Indemnity
    premium: float
    profit: float
    profit_layer: float
    policyholder_risk: float
    partition: SignRegionPartition
    crossing_set: CrossingSet

    @property
    def contract(self) -> Contract:
        return Contract(self.indemnity, self.premium)


@dataclass(frozen=True)
class ComparisonReport:
    xs: np.ndarray
    indemnity_1: np.ndarray
    indemnity_2: np.ndarray
    profit_1: float
    profit_2: float
    max_indemnity_excess: float

    @property
    def indemnity_ok(self) -> bool:
        return self.max_indemnity_excess <= COMPARE_SLACK

    @property
    def profit_ok(self) -> bool:
        return self.profit_1 <= self.profit_2 + COMPARE_SLACK


def _segments(cs: CrossingSet, m: LossModel) -> list[tuple[float, float, int]]:
    """t-intervals of ``cs`` mapped to ascending y-intervals via ``y = F⁻¹(1 - t)``."""
    out = []
    for t_lo, t_hi, s in reversed(cs.intervals()):
        y_lo = 0.0 if t_hi >= 1.0 else float(m.quantile(1.0 - t_hi))
        y_hi = m.M if t_lo <= 0.0 else float(m.quantile(1.0 - t_lo))
        if y_hi > y_lo:
            out.append((y_lo, y_hi, s))
    return out


def _partition(cs: CrossingSet, m: LossModel) -> SignRegionPartition:
    segs = _segments(cs, m)
    return SignRegionPartition(
        tuple(hi for _, hi, _ in segs), tuple(_LABEL[s] for _, _, s in segs), cs
    )


# tie intervals refined by the sign of g(t) - t
_TIE_LOADED, _TIE_UNLOADED = 2, 3


def _refine(main: CrossingSet, aux: CrossingSet) -> CrossingSet:
    """Split the tie intervals of ``main`` by the sign of ``aux``."""
    pts = sorted(set(main.points) | set(aux.points))
    edges = [0.0, *pts, 1.0]
    signs = []
    for a, b in zip(edges, edges[1:]):
        mid = 0.5 * (a + b)
        s = main.sign_at(mid)
        if s == 0:
            s = _TIE_LOADED if aux.sign_at(mid) > 0 else _TIE_UNLOADED
        signs.append(s)
    return CrossingSet(tuple(pts), tuple(signs))


def _tie_level(tie: TiePolicy, code: int) -> float:
    if tie is TiePolicy.RETAIN:
        return 0.0
    if tie is TiePolicy.CEDE:
        return 1.0
    # insurer-optimal: cede only where the pricing loads the layer
    return 1.0 if code == _TIE_LOADED else 0.0


def _indemnity(cs: CrossingSet, m: LossModel, tie: TiePolicy) -> Indemnity:
    bounds, levels = [], []
    for _, hi, s in _segments(cs, m):
        if s == 1:
            level = 1.0
        elif s == -1:
            level = 0.0
        else:
            level = _tie_level(tie, s)
        bounds.append(hi)
        levels.append(level)
    return Indemnity(tuple(bounds), tuple(levels)).simplified()


def best_response(
    T: Distortion,
    g: Distortion,
    m: LossModel,
    tie: TiePolicy = TiePolicy.RETAIN,
    resolution: int = DEFAULT_RESOLUTION,
) -> tuple[Indemnity, SignRegionPartition]:
    """Optimal indemnity of a policyholder with distortion ``T`` facing pricing ``g``."""
    snap = tuple(sorted(set(T.breakpoints()) | set(g.breakpoints())))
    cs = sign_regions(lambda t: np.asarray(T(t)) - np.asarray(g(t)), resolution, snap=snap)
    partition = _partition(cs, m)
    if tie is TiePolicy.INSURER_OPTIMAL and 0 in cs.signs:
        aux = crossing_set(g, resolution)
        refined = _refine(cs, aux)
        return _indemnity(refined, m, tie), partition
    return _indemnity(cs, m, tie), partition


def equilibrium_profit_quantile_form(
    T: Distortion,
    m: LossModel,
    resolution: int = DEFAULT_RESOLUTION,
    cs: CrossingSet | None = None,
) -> float:
    """Equilibrium profit ``∫ (F⁻¹)'(t) (t - T̃(t))⁺ dt``, evaluated in layer form ``∫ (T(S) - S)⁺ dy``."""
    if cs is None:
        cs = crossing_set(T, resolution)
    cuts = loss_cuts(m, [T], t_points=cs.points)
    return integrate_layers(lambda y, s: np.maximum(T(s) - s, 0.0), m, cuts)


def _quantile_slope(m: LossModel, t: float) -> float:
    # five-point stencil; the step shrinks with the distance to 0 and 1, where
    # quantile slopes of bounded models may blow up
    h = min(1e-3, 0.01 * t, 0.01 * (1.0 - t))
    if h <= 0.0:
        return 0.0
    q = m.quantile(np.array([t - 2 * h, t - h, t + h, t + 2 * h]))
    return float((q[0] - 8.0 * q[1] + 8.0 * q[2] - q[3]) / (12.0 * h))


def profit_by_quantile_integral(
    T: Distortion,
    m: LossModel,
    resolution: int = DEFAULT_RESOLUTION,
) -> float:
    """Cross-check route: the t-integral with a finite-difference quantile slope.

    Independent of the layer rule; uses adaptive QUADPACK on the pieces
    between crossings and kinks of the conjugate distortion.
    """
    Tc = T.conjugate()
    cs = crossing_set(T, resolution)
    pts = {0.0, 1.0}
    pts.update(1.0 - p for p in cs.points)
    pts.update(Tc.breakpoints())
    pts.update(1.0 - float(m.cdf(x)) for x in m.breakpoints())
    # steep quantiles near the ends: help QUADPACK see the scale
    pts.update(10.0**-k for k in range(1, 15))
    pts.update(1.0 - 10.0**-k for k in range(1, 15))
    edges = sorted(p for p in pts if 0.0 <= p <= 1.0)

    def f(t):
        gap = t - float(Tc(t))
        return _quantile_slope(m, t) * gap if gap > 0 else 0.0

    total = 0.0
    with warnings.catch_warnings():
        # roundoff notices near steep ends; the pieces are still accurate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges, edges[1:]):
            if b - a > 1e-14:
                val, _ = integrate.quad(f, a, b, epsabs=1e-11, epsrel=1e-11, limit=500)
                total += val
    return total


def solve(
    T: Distortion,
    m: LossModel,
    tie: TiePolicy = TiePolicy.RETAIN,
    resolution: int = DEFAULT_RESOLUTION,
) -> EquilibriumResult:
    """Canonical equilibrium: pricing ``g* = T``, cover the layers where ``T(S) > S``."""
    cs = crossing_set(T, resolution)
    partition = _partition(cs, m)
    # with g* = T the insurer-optimal tie rule cedes nothing on {T(S) = S}
    indemnity = _indemnity(cs, m, tie)
    premium = choquet_of_indemnity(indemnity, m, T)
    layer = equilibrium_profit_quantile_form(T, m, resolution, cs=cs)
    direct = insurer_profit(indemnity, m, T)
    if abs(layer - direct) > ROUTE_TOL:
        raise RouteDisagreementError(layer, direct)
    return EquilibriumResult(
        pricing=T,
        indemnity=indemnity,
        premium=premium,
        profit=direct,
        profit_layer=layer,
        policyholder_risk=policyholder_objective(indemnity, m, T, T),
        partition=partition,
        crossing_set=cs,
    )


def compare(
    T1: Distortion,
    T2: Distortion,
    m: LossModel,
    resolution: int = DEFAULT_RESOLUTION,
    grid_points: int = 1001,
) -> ComparisonReport:
    """Equilibria of a policyholder ``T1`` and a more risk-averse ``T2``."""
    if not dominates(T2, T1, resolution):
        raise PreconditionError(
            "T2 does not dominate T1 pointwise; comparison undefined", condition="dominance"
        )
    e1 = solve(T1, m, TiePolicy.RETAIN, resolution)
    e2 = solve(T2, m, TiePolicy.RETAIN, resolution)
    xs = np.linspace(0.0, m.M, grid_points)
    i1, i2 = np.asarray(e1.indemnity(xs)), np.asarray(e2.indemnity(xs))
    return ComparisonReport(
        xs=xs,
        indemnity_1=i1,
        indemnity_2=i2,
        profit_1=e1.profit,
        profit_2=e2.profit,
        max_indemnity_excess=float(np.max(i1 - i2)),
    )

