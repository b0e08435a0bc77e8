"""Functionals of indemnities, evaluated in layer form over y in [0, M].

Every functional here is an integral of the shape
``∫_0^M w(κ(y), S(y)) dy`` with ``S`` the loss survival function and ``κ`` the
marginal indemnity. The integrands are piecewise smooth with known breaks, so
the rule splits [0, M] at every break, grades the two end cells geometrically
(power-type behaviour of distorted survivals at 0 and M) and applies fixed
order Gauss-Legendre on each piece.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .distortion import Distortion, Identity
from .loss import LossModel

GAUSS_ORDER = 16
GRADING_RATIO = 0.3
GRADING_LEVELS = 30
INTERIOR_SPLITS = 8


@dataclass(frozen=True)
class Indemnity:
    """Piecewise-constant marginal indemnity.

    ``levels[i]`` is the marginal indemnity on ``(bounds[i-1], bounds[i]]``
    (with ``bounds[-1] = 0``); the last bound is the loss cap ``M``.
    """

    bounds: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(x) for x in self.bounds)
        lv = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "levels", lv)
        if len(b) != len(lv) or not b:
            raise ValueError("bounds and levels must be non-empty and of equal length")
        if b[0] <= 0 or any(y2 <= y1 for y1, y2 in zip(b, b[1:])):
            raise ValueError("segment bounds must be positive and strictly increasing")
        if any(not 0.0 <= k <= 1.0 for k in lv):
            raise ValueError("marginal indemnity levels must lie in [0, 1]")

    @property
    def M(self) -> float:
        return self.bounds[-1]

    @classmethod
    def full(cls, M: float) -> Indemnity:
        return cls((M,), (1.0,))

    @classmethod
    def zero(cls, M: float) -> Indemnity:
        return cls((M,), (0.0,))

    @classmethod
    def layer(cls, M: float, lo: float, hi: float, level: float = 1.0) -> Indemnity:
        """``level`` on ``(lo, hi]``, nothing elsewhere."""
        bounds, levels = [], []
        if lo > 0:
            bounds.append(lo)
            levels.append(0.0)
        bounds.append(hi)
        levels.append(level)
        if hi < M:
            bounds.append(M)
            levels.append(0.0)
        return cls(tuple(bounds), tuple(levels))

    @classmethod
    def deductible(cls, M: float, d: float) -> Indemnity:
        return cls.layer(M, d, M)

    @classmethod
    def limit(cls, M: float, cap: float) -> Indemnity:
        return cls.layer(M, 0.0, cap)

    def simplified(self) -> Indemnity:
        """Merge neighbouring segments with equal levels."""
        bounds, levels = [], []
        for b, k in zip(self.bounds, self.levels):
            if levels and levels[-1] == k:
                bounds[-1] = b
            else:
                bounds.append(b)
                levels.append(k)
        return Indemnity(tuple(bounds), tuple(levels))

    def kappa(self, y):
        y = np.asarray(y, dtype=float)
        i = np.clip(np.searchsorted(self.bounds, y, side="left"), 0, len(self.bounds) - 1)
        out = np.asarray(self.levels)[i]
        return out if out.ndim else float(out)

    def __call__(self, x):
        """The indemnity ``I(x) = ∫_0^x κ``."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.M)
        lower = np.concatenate(([0.0], self.bounds[:-1]))
        widths = np.asarray(self.bounds) - lower
        cum = np.concatenate(([0.0], np.cumsum(widths * np.asarray(self.levels))))
        i = np.clip(np.searchsorted(self.bounds, x, side="left"), 0, len(self.bounds) - 1)
        out = cum[i] + np.asarray(self.levels)[i] * (x - lower[i])
        return out if out.ndim else float(out)

    def retention(self, x):
        out = np.asarray(x, dtype=float) - np.asarray(self(x))
        return out if out.ndim else float(out)

    def retention_quantile(self, m: LossModel, t):
        """Quantile of ``R(X)``: ``F⁻¹(t) - I(F⁻¹(t))``."""
        return self.retention(m.quantile(t))

    def ceded(self) -> Indemnity:
        """The retention viewed as an indemnity (``1 - κ``)."""
        return Indemnity(self.bounds, tuple(1.0 - k for k in self.levels))


@dataclass(frozen=True)
class Contract:
    indemnity: Indemnity
    premium: float

    def __post_init__(self):
        if not np.isfinite(self.premium):
            raise ValueError("premium must be finite")

    def shifted(self, c: float) -> Contract:
        return Contract(self.indemnity, self.premium + c)


def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


_GX, _GW = _gauss(GAUSS_ORDER)


def _cells(M: float, cuts: tuple[float, ...]) -> list[tuple[float, float]]:
    # geometric grading toward both ends of the support, merged with the cuts,
    # so every cell stays a fixed fraction of its distance to 0 and to M
    graded = [M * GRADING_RATIO**k for k in range(1, GRADING_LEVELS + 1)]
    edges = set(np.linspace(0.0, M, INTERIOR_SPLITS + 1))
    edges.update(graded)
    edges.update(M - g for g in graded)
    edges.update(c for c in cuts if 0.0 < c < M)
    edges = sorted(edges)
    cells = []
    for a, b in zip(edges, edges[1:]):
        if b - a > 1e-14 * M:
            cells.append((a, b))
    return cells


@lru_cache(maxsize=4096)
def layer_rule(m: LossModel, cuts: tuple[float, ...]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes, weights and survival values on [0, m.M] honouring ``cuts``."""
    cells = np.array(_cells(m.M, cuts))
    a, b = cells[:, :1], cells[:, 1:]
    nodes = (a + (b - a) * _GX).ravel()
    weights = ((b - a) * _GW).ravel()
    surv = np.asarray(m.survival(nodes))
    for arr in (nodes, weights, surv):
        arr.setflags(write=False)
    return nodes, weights, surv


def loss_cuts(
    m: LossModel,
    distortions: Iterable[Distortion] = (),
    t_points: Iterable[float] = (),
    indemnity: Indemnity | None = None,
) -> tuple[float, ...]:
    """Loss-space cut points: images ``y = F⁻¹(1 - t)`` of distortion breaks, plus model and segment breaks."""
    ts = set(t_points)
    for d in distortions:
        ts.update(d.breakpoints())
    ys = set(m.breakpoints())
    ys.update(float(m.quantile(1.0 - t)) for t in ts if 0.0 < t < 1.0)
    if indemnity is not None:
        ys.update(indemnity.bounds[:-1])
    return tuple(sorted(round(y, 15) for y in ys))


def integrate_layers(
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
    m: LossModel,
    cuts: tuple[float, ...] = (),
) -> float:
    """``∫_0^M integrand(y, S(y)) dy`` on the breakpoint-aware rule."""
    nodes, weights, surv = layer_rule(m, cuts)
    return float(np.dot(weights, integrand(nodes, surv)))


def drm_of_loss(m: LossModel, T: Distortion) -> float:
    """Distortion risk measure of the loss: ``∫_0^M T(S(y)) dy``."""
    return integrate_layers(lambda y, s: T(s), m, loss_cuts(m, [T]))


def choquet_of_indemnity(ind: Indemnity, m: LossModel, d: Distortion) -> float:
    """Choquet integral of ``I(X)`` under ``d ∘ P``: ``∫ κ d(S) dy``."""
    cuts = loss_cuts(m, [d], indemnity=ind)
    return integrate_layers(lambda y, s: ind.kappa(y) * d(s), m, cuts)


def choquet_of_retention(ind: Indemnity, m: LossModel, T: Distortion) -> float:
    cuts = loss_cuts(m, [T], indemnity=ind)
    return integrate_layers(lambda y, s: (1.0 - ind.kappa(y)) * T(s), m, cuts)


def expected_indemnity(ind: Indemnity, m: LossModel) -> float:
    return choquet_of_indemnity(ind, m, Identity())


def policyholder_objective(ind: Indemnity, m: LossModel, T: Distortion, g: Distortion) -> float:
    """Retained risk under ``T`` plus the premium priced with ``g``."""
    cuts = loss_cuts(m, [T, g], indemnity=ind)

    def f(y, s):
        k = ind.kappa(y)
        return (1.0 - k) * T(s) + k * g(s)

    return integrate_layers(f, m, cuts)


def insurer_profit(ind: Indemnity, m: LossModel, g: Distortion) -> float:
    """Premium under ``g`` minus expected indemnity: ``∫ κ (g(S) - S) dy``."""
    cuts = loss_cuts(m, [g], indemnity=ind)
    return integrate_layers(lambda y, s: ind.kappa(y) * (g(s) - s), m, cuts)
