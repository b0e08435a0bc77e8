"""Distortion functions on [0, 1] and their algebra.

A distortion is a non-decreasing map ``T: [0, 1] -> [0, 1]`` with
``T(0) = 0`` and ``T(1) = 1``. Every family here is a frozen dataclass whose
``__call__`` evaluates vectorized over numpy arrays; :func:`evaluate` is the
checked scalar entry point.

Sign analysis of ``T(t) - t`` (or of any difference of distortions) is done by
:func:`sign_regions`: a uniform scan followed by bisection of every bracket.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DOMAIN_SLACK = 1e-12
SIGN_TOL = 1e-10
BISECT_TOL = 1e-10
DEFAULT_RESOLUTION = 4096


class Distortion:
    """Base class. Subclasses implement ``_raw`` on arrays."""

    def _raw(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.clip(self._raw(np.clip(t, 0.0, 1.0)), 0.0, 1.0)
        out = np.where(t <= 0.0, 0.0, out)
        out = np.where(t >= 1.0, 1.0, out)
        return out if out.ndim else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        """Interior t-values where the function is not smooth."""
        return ()

    def conjugate(self) -> Distortion:
        return Conjugate(self)


@dataclass(frozen=True)
class Identity(Distortion):
    def _raw(self, t):
        return t

    def conjugate(self):
        return self


@dataclass(frozen=True)
class TVaR(Distortion):
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha: must lie in (0, 1), got {self.alpha}")

    def _raw(self, t):
        return np.minimum(1.0, t / (1.0 - self.alpha))

    def breakpoints(self):
        return (1.0 - self.alpha,)


@dataclass(frozen=True)
class VaR(Distortion):
    """Indicator of ``(1 - alpha, 1]``; the jump point itself maps to 0."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha: must lie in (0, 1), got {self.alpha}")

    def _raw(self, t):
        return np.where(t > 1.0 - self.alpha, 1.0, 0.0)

    def breakpoints(self):
        return (1.0 - self.alpha,)


@dataclass(frozen=True)
class TverskyKahneman(Distortion):
    """Inverse-S weighting ``t^θ / (t^θ + (1-t)^θ)^(1/θ)``.

    Only shapes for which the curve is non-decreasing are accepted; below
    roughly θ = 0.28 the formula stops being monotone.
    """

    theta: float

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta: must lie in (0, 1], got {self.theta}")
        grid = np.linspace(0.0, 1.0, 8193)
        if np.any(np.diff(self(grid)) < -1e-12):
            raise ValueError(f"theta: {self.theta} gives a non-monotone weighting function")

    def _raw(self, t):
        th = self.theta
        with np.errstate(divide="ignore", invalid="ignore"):
            a = t**th
            return a / (a + (1.0 - t) ** th) ** (1.0 / th)


def _check_table(ts: np.ndarray, vs: np.ndarray, name: str) -> None:
    if ts.size < 2:
        raise ValueError(f"{name}: need at least two points")
    if np.any(np.diff(ts) <= 0):
        raise ValueError(f"{name}: abscissae must be strictly increasing")
    if ts[0] != 0.0 or ts[-1] != 1.0:
        raise ValueError(f"{name}: abscissae must run from 0 to 1")
    if vs[0] != 0.0 or vs[-1] != 1.0:
        raise ValueError(f"{name}: values must start at 0 and end at 1")
    if np.any(np.diff(vs) < 0):
        bad = int(np.argmax(np.diff(vs) < 0))
        raise ValueError(f"{name}: values must be non-decreasing (violated after index {bad})")
    if np.any(vs < 0) or np.any(vs > 1):
        raise ValueError(f"{name}: values must lie in [0, 1]")


@dataclass(frozen=True)
class PiecewiseLinear(Distortion):
    """Linear interpolation through ``knots`` = ((t0, T0), ..., (1, 1))."""

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        object.__setattr__(self, "knots", knots)
        arr = np.array(knots, dtype=float).reshape(-1, 2)
        _check_table(arr[:, 0], arr[:, 1], "knots")

    @property
    def ts(self) -> np.ndarray:
        return np.array([k[0] for k in self.knots])

    @property
    def values(self) -> np.ndarray:
        return np.array([k[1] for k in self.knots])

    def _raw(self, t):
        return np.interp(t, self.ts, self.values)

    def breakpoints(self):
        return tuple(k[0] for k in self.knots[1:-1])


@dataclass(frozen=True)
class Tabulated(Distortion):
    """Values on the uniform grid ``t_i = i / (len(values) - 1)``."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        vs = np.array(vals)
        _check_table(np.linspace(0.0, 1.0, vs.size), vs, "values")

    def _raw(self, t):
        vs = np.array(self.values)
        return np.interp(t, np.linspace(0.0, 1.0, vs.size), vs)

    def breakpoints(self):
        n = len(self.values) - 1
        return tuple(i / n for i in range(1, n))


@dataclass(frozen=True)
class Conjugate(Distortion):
    """``1 - base(1 - t)``."""

    base: Distortion

    def _raw(self, t):
        return 1.0 - self.base(1.0 - t)

    def __call__(self, t):
        # endpoints and clipping are inherited from the base, so the double
        # conjugate is exact
        t = np.asarray(t, dtype=float)
        out = 1.0 - self.base(1.0 - np.clip(t, 0.0, 1.0))
        return out if np.ndim(out) else float(out)

    def breakpoints(self):
        return tuple(sorted(1.0 - b for b in self.base.breakpoints()))

    def conjugate(self):
        return self.base


@dataclass(frozen=True)
class Composed(Distortion):
    """``outer(inner(t))``; a concave ``outer`` makes this more risk averse than ``inner``."""

    outer: Distortion
    inner: Distortion

    def _raw(self, t):
        return self.outer(self.inner(t))

    def breakpoints(self):
        pts = set(self.inner.breakpoints())
        # preimages of the outer kinks under a monotone inner map
        for b in self.outer.breakpoints():
            t = _preimage(self.inner, b)
            if t is not None:
                pts.add(t)
        return tuple(sorted(p for p in pts if 0.0 < p < 1.0))


def _preimage(d: Distortion, level: float) -> float | None:
    lo, hi = 0.0, 1.0
    if d(hi) <= level:
        return None
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if d(mid) <= level:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return hi


def evaluate(d: Distortion, t: float) -> float:
    """Checked scalar evaluation."""
    if not (-DOMAIN_SLACK <= t <= 1.0 + DOMAIN_SLACK):
        raise ValueError(f"t={t} outside [0, 1]")
    return float(d(min(max(t, 0.0), 1.0)))


def conjugate(d: Distortion) -> Distortion:
    return d.conjugate()


@dataclass(frozen=True)
class CrossingSet:
    """Ordered sign-change points in (0, 1) and the sign on each interval.

    ``signs[i]`` is the sign on ``(points[i-1], points[i])`` with the
    conventions ``points[-1] = 0`` and ``points[len] = 1``.
    """

    points: tuple[float, ...]
    signs: tuple[int, ...] = field(default=(0,))

    def __post_init__(self):
        if len(self.signs) != len(self.points) + 1:
            raise ValueError("need exactly one sign per interval")

    def intervals(self) -> list[tuple[float, float, int]]:
        edges = (0.0, *self.points, 1.0)
        return [(edges[i], edges[i + 1], s) for i, s in enumerate(self.signs)]

    def sign_at(self, t: float) -> int:
        i = int(np.searchsorted(np.asarray(self.points), t, side="right"))
        return self.signs[i]


def _classify(values: np.ndarray, tol: float) -> np.ndarray:
    s = np.sign(values).astype(int)
    s[np.abs(values) <= tol] = 0
    return s


def _bisect(h: Callable, a: float, b: float, sa: int, sb: int, tol: float, snap: Sequence[float]) -> float:
    """Locate the sign change between ``a`` (sign ``sa``) and ``b`` (sign ``sb``)."""
    for p in snap:
        if a <= p <= b:
            left = _classify(np.array([h(max(a, p - 1e-9))]), tol)[0]
            right = _classify(np.array([h(min(b, p + 1e-9))]), tol)[0]
            if left == sa and right == sb:
                # known kink or jump of the inputs; bisection would converge here anyway
                return float(p)
    while b - a > BISECT_TOL:
        mid = 0.5 * (a + b)
        if _classify(np.array([h(mid)]), tol)[0] == sa:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def sign_regions(
    h: Callable,
    resolution: int = DEFAULT_RESOLUTION,
    tol: float = SIGN_TOL,
    snap: Sequence[float] = (),
) -> CrossingSet:
    """Partition (0, 1) by the sign of ``h``.

    ``h`` is scanned on ``resolution + 1`` uniform points; every bracket where
    the classified sign differs is bisected to ``BISECT_TOL``. Runs of two or
    more grid points with ``|h| <= tol`` become sign-0 intervals; an isolated
    zero is an exact crossing if the sign flips across it and is ignored
    otherwise.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    grid = np.linspace(0.0, 1.0, resolution + 1)[1:-1]
    s = _classify(np.asarray(h(grid), dtype=float), tol)

    # runs of equal sign: [first index, last index, sign, exact crossing before run]
    runs: list[list] = []
    for i, v in enumerate(s):
        if runs and runs[-1][2] == v:
            runs[-1][1] = i
        else:
            runs.append([i, i, int(v), None])

    cleaned: list[list] = []
    for k, run in enumerate(runs):
        isolated_zero = run[2] == 0 and run[0] == run[1] and len(runs) > 1
        if not isolated_zero:
            if cleaned and cleaned[-1][2] == run[2]:
                cleaned[-1][1] = run[1]
            else:
                cleaned.append(run)
            continue
        prev = cleaned[-1][2] if cleaned else None
        nxt = runs[k + 1][2] if k + 1 < len(runs) else None
        if prev is not None and nxt is not None and prev != nxt:
            runs[k + 1][3] = float(grid[run[0]])
        elif prev is None and k + 1 < len(runs):
            runs[k + 1][0] = run[0]

    points: list[float] = []
    for left, right in zip(cleaned, cleaned[1:]):
        if right[3] is not None:
            points.append(right[3])
        else:
            a, b = float(grid[left[1]]), float(grid[right[0]])
            points.append(_bisect(h, a, b, left[2], right[2], tol, snap))
    return CrossingSet(tuple(points), tuple(r[2] for r in cleaned) or (0,))


def crossing_set(d: Distortion, resolution: int = DEFAULT_RESOLUTION) -> CrossingSet:
    """Where ``d(t) - t`` changes sign on (0, 1)."""
    return sign_regions(lambda t: d(t) - np.asarray(t), resolution, snap=d.breakpoints())


def is_weakly_risk_averse(d: Distortion, resolution: int = DEFAULT_RESOLUTION) -> bool:
    t = np.linspace(0.0, 1.0, resolution + 1)
    return bool(np.all(d(t) >= t - SIGN_TOL))


def dominates(d2: Distortion, d1: Distortion, resolution: int = DEFAULT_RESOLUTION) -> bool:
    """True iff ``d2 >= d1`` on the grid (``d2`` is more weakly risk averse)."""
    t = np.linspace(0.0, 1.0, resolution + 1)
    return bool(np.all(d2(t) >= d1(t) - SIGN_TOL))


def is_concave(d: Distortion, resolution: int = DEFAULT_RESOLUTION) -> bool:
    t = np.linspace(0.0, 1.0, resolution + 1)
    return bool(np.all(np.diff(d(t), 2) <= 1e-10))


def _number(block: dict, key: str, prefix: str) -> float:
    if key not in block:
        raise ValueError(f"{prefix}.{key}: missing for kind {block.get('kind')!r}")
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{prefix}.{key}: expected a number, got {value!r}")
    return float(value)


def from_config(block: dict) -> Distortion:
    """Build a distortion from a ``distortion`` config block."""
    kind = block.get("kind")
    try:
        if kind == "identity":
            return Identity()
        if kind == "tvar":
            return TVaR(_number(block, "alpha", "distortion"))
        if kind == "var":
            return VaR(_number(block, "alpha", "distortion"))
        if kind == "tk":
            return TverskyKahneman(_number(block, "theta", "distortion"))
        if kind == "piecewise":
            return PiecewiseLinear(tuple(tuple(k) for k in block["knots"]))
        if kind == "tabulated":
            return Tabulated(tuple(block["values"]))
    except KeyError as exc:
        raise ValueError(f"distortion.{exc.args[0]}: missing for kind {kind!r}") from None
    except ValueError as exc:
        msg = str(exc)
        raise ValueError(msg if msg.startswith("distortion.") else f"distortion.{msg}") from None
    except TypeError as exc:
        raise ValueError(f"distortion: malformed table ({exc})") from None
    raise ValueError(f"distortion.kind: unknown kind {kind!r}")
