"""Bounded loss models on [0, M] with strictly increasing CDFs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_CELL_SLOPE = 1e-10


class LossModel:
    """Base class; subclasses supply ``M`` and the vectorized ``_cdf``, ``_quantile``, ``_density``."""

    M: float

    def _cdf(self, x):
        raise NotImplementedError

    def _quantile(self, t):
        raise NotImplementedError

    def _density(self, x):
        raise NotImplementedError

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.clip(self._cdf(np.clip(x, 0.0, self.M)), 0.0, 1.0)
        out = np.where(x <= 0.0, 0.0, np.where(x >= self.M, 1.0, out))
        return out if out.ndim else float(out)

    def survival(self, x):
        out = 1.0 - np.asarray(self.cdf(x))
        return out if out.ndim else float(out)

    def quantile(self, t):
        t = np.asarray(t, dtype=float)
        out = np.clip(self._quantile(np.clip(t, 0.0, 1.0)), 0.0, self.M)
        out = np.where(t <= 0.0, 0.0, np.where(t >= 1.0, self.M, out))
        return out if out.ndim else float(out)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = self._density(np.clip(x, 0.0, self.M))
        return out if out.ndim else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        """Interior x-values where the CDF is not smooth."""
        return ()

    def mean(self) -> float:
        from .choquet import drm_of_loss
        from .distortion import Identity

        return drm_of_loss(self, Identity())


def _check_bound(M: float) -> None:
    if not (np.isfinite(M) and M > 0):
        raise ValueError(f"M: must be a positive finite bound, got {M}")


@dataclass(frozen=True)
class Uniform(LossModel):
    M: float

    def __post_init__(self):
        _check_bound(self.M)

    def _cdf(self, x):
        return x / self.M

    def _quantile(self, t):
        return t * self.M

    def _density(self, x):
        return np.full_like(x, 1.0 / self.M)


@dataclass(frozen=True)
class TruncatedExponential(LossModel):
    lam: float
    M: float

    def __post_init__(self):
        _check_bound(self.M)
        if not self.lam > 0:
            raise ValueError(f"lambda: must be positive, got {self.lam}")

    @property
    def _norm(self) -> float:
        return -np.expm1(-self.lam * self.M)

    def _cdf(self, x):
        return -np.expm1(-self.lam * x) / self._norm

    def _quantile(self, t):
        return -np.log1p(-t * self._norm) / self.lam

    def _density(self, x):
        return self.lam * np.exp(-self.lam * x) / self._norm


@dataclass(frozen=True)
class Kumaraswamy(LossModel):
    a: float
    b: float
    M: float

    def __post_init__(self):
        _check_bound(self.M)
        for name in ("a", "b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name}: shape must be positive, got {getattr(self, name)}")

    def _cdf(self, x):
        with np.errstate(divide="ignore"):
            return -np.expm1(self.b * np.log1p(-((x / self.M) ** self.a)))

    def _quantile(self, t):
        with np.errstate(divide="ignore"):
            return self.M * (-np.expm1(np.log1p(-t) / self.b)) ** (1.0 / self.a)

    def _density(self, x):
        z = x / self.M
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.a * self.b / self.M * z ** (self.a - 1) * (1.0 - z**self.a) ** (self.b - 1)


@dataclass(frozen=True)
class TabulatedLoss(LossModel):
    """CDF values on the uniform grid ``x_i = i M / (len(cdf_values) - 1)``, linearly interpolated."""

    M: float
    cdf_values: tuple[float, ...]

    def __post_init__(self):
        _check_bound(self.M)
        vals = tuple(float(v) for v in self.cdf_values)
        object.__setattr__(self, "cdf_values", vals)
        v = np.array(vals)
        if v.size < 2:
            raise ValueError("cdf_values: need at least two points")
        if v[0] != 0.0 or v[-1] != 1.0:
            raise ValueError("cdf_values: must start at 0 and end at 1")
        if np.any(np.diff(v) < MIN_CELL_SLOPE):
            bad = int(np.argmax(np.diff(v) < MIN_CELL_SLOPE))
            raise ValueError(f"cdf_values: not strictly increasing after index {bad}")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(0.0, self.M, len(self.cdf_values))

    def _cdf(self, x):
        return np.interp(x, self.xs, np.array(self.cdf_values))

    def _quantile(self, t):
        return np.interp(t, np.array(self.cdf_values), self.xs)

    def _density(self, x):
        xs, v = self.xs, np.array(self.cdf_values)
        slopes = np.diff(v) / np.diff(xs)
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, slopes.size - 1)
        return slopes[i]

    def breakpoints(self):
        return tuple(self.xs[1:-1])


def from_config(block: dict) -> LossModel:
    """Build a loss model from a ``loss`` config block."""
    from .distortion import _number

    kind = block.get("kind")
    if kind not in ("uniform", "truncexp", "kumaraswamy", "tabulated"):
        raise ValueError(f"loss.kind: unknown kind {kind!r}")
    try:
        M = _number(block, "M", "loss")
        if kind == "uniform":
            return Uniform(M)
        if kind == "truncexp":
            return TruncatedExponential(_number(block, "lambda", "loss"), M)
        if kind == "kumaraswamy":
            return Kumaraswamy(_number(block, "a", "loss"), _number(block, "b", "loss"), M)
        if kind == "tabulated":
            return TabulatedLoss(M, tuple(block["cdf_values"]))
    except KeyError as exc:
        raise ValueError(f"loss.{exc.args[0]}: missing for kind {kind!r}") from None
    except ValueError as exc:
        msg = str(exc)
        raise ValueError(msg if msg.startswith("loss.") else f"loss.{msg}") from None
    except TypeError as exc:
        raise ValueError(f"loss: malformed table ({exc})") from None
    raise ValueError(f"loss.kind: unknown kind {kind!r}")
