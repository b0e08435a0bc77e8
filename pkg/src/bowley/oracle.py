"""Brute-force checks that do not rely on the closed-form characterisation.

The discrete searches here use their own quadrature: a uniform cell grid on
[0, M] that knows nothing about crossings or distortion kinks, so their
accuracy is O(1/n) and independent of the main layer rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .choquet import Indemnity, insurer_profit
from .distortion import Distortion, PiecewiseLinear
from .equilibrium import TiePolicy, best_response
from .loss import LossModel

CELL_ORDER = 8
_X, _W = np.polynomial.legendre.leggauss(CELL_ORDER)
_X, _W = 0.5 * (_X + 1.0), 0.5 * _W


@dataclass(frozen=True)
class DiscreteGrid:
    n: int
    M: float
    levels: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid needs at least 16 cells")
        lv = tuple(sorted(set(float(v) for v in self.levels)))
        if not lv or lv[0] < 0.0 or lv[-1] > 1.0:
            raise ValueError("levels must lie in [0, 1]")
        object.__setattr__(self, "levels", lv)

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.M, self.n + 1)

    def cell_integrals(self, m: LossModel, f) -> np.ndarray:
        """``∫_cell f(S(y)) dy`` for every cell."""
        e = self.edges
        w = np.diff(e)[:, None]
        y = e[:-1, None] + w * _X
        return (f(np.asarray(m.survival(y))) * _W * w).sum(axis=1)

    def indemnity(self, levels: np.ndarray) -> Indemnity:
        return Indemnity(tuple(self.edges[1:]), tuple(float(v) for v in levels)).simplified()


def _pick(coef: np.ndarray, levels: tuple[float, ...]) -> np.ndarray:
    # argmin returns the first minimiser, i.e. the lowest level on exact ties
    lv = np.asarray(levels)
    return lv[np.argmin(coef[:, None] * lv[None, :], axis=1)]


def discrete_best_response(
    T: Distortion, g: Distortion, m: LossModel, grid: DiscreteGrid
) -> tuple[Indemnity, float]:
    """Exhaustive per-cell minimisation of the policyholder objective."""
    base = grid.cell_integrals(m, T)
    slope = grid.cell_integrals(m, lambda s: g(s) - T(s))
    chosen = _pick(slope, grid.levels)
    return grid.indemnity(chosen), float(base.sum() + (chosen * slope).sum())


def discrete_pareto_scan(m: LossModel, T: Distortion, grid: DiscreteGrid) -> float:
    """Minimum of ``ρ(R) + E[I]`` over contracts with cell-wise constant levels."""
    base = grid.cell_integrals(m, T)
    slope = grid.cell_integrals(m, lambda s: s - T(s))
    chosen = _pick(slope, grid.levels)
    return float(base.sum() + (chosen * slope).sum())


def random_pricing(rng: np.random.Generator, knots: int) -> PiecewiseLinear:
    """Monotone piecewise-linear distortion with sorted uniform values at fixed abscissae."""
    ts = np.linspace(0.0, 1.0, knots)
    vs = np.concatenate(([0.0], np.sort(rng.uniform(0.0, 1.0, knots - 2)), [1.0]))
    return PiecewiseLinear(tuple(zip(ts.tolist(), vs.tolist())))


@dataclass(frozen=True)
class SearchResult:
    best_profit: float
    best_pricing: PiecewiseLinear | None
    trace: tuple[float, ...] = field(repr=False)


def response_profit(T: Distortion, g: Distortion, m: LossModel, resolution: int) -> float:
    """Insurer profit when the policyholder answers ``g`` with insurer-optimistic ties."""
    ind, _ = best_response(T, g, m, TiePolicy.INSURER_OPTIMAL, resolution)
    return insurer_profit(ind, m, g)


def random_pricing_search(
    T: Distortion,
    m: LossModel,
    trials: int,
    knots: int = 16,
    seed: int = 0,
    resolution: int = 1024,
) -> SearchResult:
    """Falsification search: best profit over random monotone pricing distortions."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if knots < 4:
        raise ValueError("knots must be at least 4")
    rng = np.random.default_rng(seed)
    best, best_g, trace = -np.inf, None, []
    for _ in range(trials):
        g = random_pricing(rng, knots)
        v = response_profit(T, g, m, resolution)
        trace.append(v)
        if v > best:
            best, best_g = v, g
    return SearchResult(float(best), best_g, tuple(trace))
