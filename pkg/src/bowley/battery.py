"""Reference (distortion, loss model) pairs shared by `verify`, the scripts and the tests."""

from __future__ import annotations

from .distortion import VaR, Distortion, Identity, PiecewiseLinear, TVaR, TverskyKahneman
from .loss import Kumaraswamy, LossModel, TruncatedExponential, Uniform

CAP = 10.0

LOSSES: tuple[tuple[str, LossModel], ...] = (
    ("uniform", Uniform(CAP)),
    ("truncexp-lambda0.1", TruncatedExponential(0.1, CAP)),
    ("truncexp-lambda0.5", TruncatedExponential(0.5, CAP)),
    ("truncexp-lambda1", TruncatedExponential(1.0, CAP)),
    ("kumaraswamy-a1.5-b1", Kumaraswamy(1.5, 1.0, CAP)),
    ("kumaraswamy-a1.5-b0.5", Kumaraswamy(1.5, 0.5, CAP)),
    ("kumaraswamy-a2-b0.3", Kumaraswamy(2.0, 0.3, CAP)),
)

DISTORTIONS: tuple[Distortion, ...] = (
    Identity(),
    TVaR(0.9),
    TVaR(0.5),
    VaR(0.9),
    VaR(0.5),
    TverskyKahneman(0.5),
    TverskyKahneman(0.7),
    PiecewiseLinear(((0.0, 0.0), (0.2, 0.35), (0.6, 0.55), (1.0, 1.0))),
)


def is_jump_family(d: Distortion) -> bool:
    return isinstance(d, VaR)


def pairs(
    distortions=DISTORTIONS, losses=LOSSES
) -> list[tuple[Distortion, str, LossModel]]:
    return [(d, name, m) for d in distortions for name, m in losses]
