"""Equilibrium summaries for the reference policyholders on Uniform(10)."""

from bowley import Identity, TVaR, TverskyKahneman, Uniform, VaR, solve
from bowley.equilibrium import profit_by_quantile_integral

m = Uniform(10.0)
for T in (TVaR(0.9), VaR(0.9), TverskyKahneman(0.5), Identity()):
    res = solve(T, m)
    print(f"{T!r}")
    print(f"  regions   {res.partition.describe()}")
    print(f"  premium   {res.premium:.9f}")
    print(f"  profit    {res.profit:.9f} (quantile route {profit_by_quantile_integral(T, m):.9f})")
