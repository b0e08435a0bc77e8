"""More risk-averse policyholders buy more cover and pay the insurer more.

Draws random dominated pairs per family and reports the worst violations.
"""

import numpy as np

from bowley import Composed, TVaR, TverskyKahneman, VaR, compare
from bowley.battery import LOSSES

rng = np.random.default_rng(11)


def draw(family):
    if family == "tvar":
        a1, a2 = np.sort(rng.uniform(0.05, 0.95, 2))
        return TVaR(a1), TVaR(a2)
    if family == "var":
        a1, a2 = np.sort(rng.uniform(0.05, 0.95, 2))
        return VaR(a1), VaR(a2)
    base = TverskyKahneman(rng.uniform(0.35, 0.9))
    return base, Composed(TVaR(rng.uniform(0.1, 0.9)), base)


for family in ("tvar", "var", "tk"):
    worst_i = worst_p = -np.inf
    for _ in range(50):
        T1, T2 = draw(family)
        _, m = LOSSES[rng.integers(len(LOSSES))]
        rep = compare(T1, T2, m)
        worst_i = max(worst_i, rep.max_indemnity_excess)
        worst_p = max(worst_p, rep.profit_1 - rep.profit_2)
    print(f"{family:5s} max I1-I2 {worst_i:.3g}   max profit1-profit2 {worst_p:.3g}")
