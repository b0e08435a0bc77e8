"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest
from scipy import integrate

from bowley import battery
from bowley.choquet import Indemnity, drm_of_loss, policyholder_objective
from bowley.cli import SweepSpec, main, sweep_rows
from bowley.distortion import VaR, Composed, TVaR, TverskyKahneman
from bowley.equilibrium import PreconditionError, TiePolicy, best_response, compare, profit_by_quantile_integral, solve
from bowley.loss import Kumaraswamy, TruncatedExponential, Uniform
from bowley.oracle import DiscreteGrid, discrete_best_response, random_pricing, random_pricing_search
from bowley.pareto import equilibrium_from_pareto, is_pareto_optimal

GRID = SweepSpec(start=0.30, stop=0.80, step=0.01)
M = 10.0


@lru_cache(maxsize=None)
def curve(m):
    rows = sweep_rows(m, GRID, TiePolicy.RETAIN, 4096)
    t1 = np.array([r[1] for r in rows])
    profit = np.array([r[4] for r in rows])
    return t1, profit


def argmax_t1(m):
    t1, profit = curve(m)
    return t1[int(np.argmax(profit))], int(np.argmax(profit))


@lru_cache(maxsize=None)
def solved(T, m):
    return solve(T, m)


def test_criterion_01_uniform_sweep(acceptance):
    start = time.perf_counter()
    sweep_rows(Uniform(M), GRID, TiePolicy.RETAIN, 4096)
    elapsed = time.perf_counter() - start
    t1, k = argmax_t1(Uniform(M))
    n = len(GRID.grid())
    ok = 0.29 <= t1 <= 0.35 and 0 < k < n - 1 and elapsed < 10.0
    acceptance(1, ok, f"uniform argmax t1={t1:.4f} (row {k} of {n}), sweep {elapsed:.2f}s")
    assert ok


def test_criterion_02_truncated_exponential(acceptance):
    a01, _ = argmax_t1(TruncatedExponential(0.1, M))
    a05, _ = argmax_t1(TruncatedExponential(0.5, M))
    t1, profit = curve(TruncatedExponential(1.0, M))
    k = int(np.argmax(profit))
    tail_ok = bool(np.all(np.diff(profit[k:]) <= 1e-9))
    ok = 0.27 <= a01 <= 0.33 and 0.19 <= a05 <= 0.25 and t1[k] < a05 and tail_ok
    acceptance(
        2, ok,
        f"lambda=0.1 t1={a01:.4f}, lambda=0.5 t1={a05:.4f}, lambda=1 t1={t1[k]:.4f} non-increasing after: {tail_ok}",
    )
    assert ok


def test_criterion_03_kumaraswamy(acceptance):
    a, _ = argmax_t1(Kumaraswamy(1.5, 1.0, M))
    b, _ = argmax_t1(Kumaraswamy(1.5, 0.5, M))
    c, _ = argmax_t1(Kumaraswamy(2.0, 0.3, M))
    # t1 depends only on theta, so rows with the same index are t1-matched
    _, p_base = curve(Kumaraswamy(1.5, 1.0, M))
    _, p_risky = curve(Kumaraswamy(1.5, 0.5, M))
    below = float(np.max(p_risky - p_base))
    ok = 0.29 <= a <= 0.35 and 0.34 <= b <= 0.40 and 0.37 <= c <= 0.43 and below <= 1e-9
    acceptance(3, ok, f"argmax t1 = {a:.4f}, {b:.4f}, {c:.4f}; max riskier-minus-base profit {below:.3g}")
    assert ok


def test_criterion_04_spot_values(acceptance):
    m = Uniform(M)
    # oracle: piecewise adaptive integration of (T(S) - S)+ with S = 1 - y/10
    tvar_oracle = sum(
        integrate.quad(lambda y: min((1 - y / M) / 0.1, 1.0) - (1 - y / M), a, b, epsabs=1e-13)[0]
        for a, b in ((0.0, 9.0), (9.0, M))
    )
    var_oracle = integrate.quad(lambda y: 1.0 - (1 - y / M), 0.0, 9.0, epsabs=1e-13)[0]
    tv, va = solved(TVaR(0.9), m), solved(VaR(0.9), m)
    full = tv.indemnity == Indemnity.full(M)
    cap = va.indemnity.bounds[0] if va.indemnity.levels == (1.0, 0.0) else float("nan")
    ok = (
        abs(tv.profit - 4.5) <= 1e-7
        and abs(tv.profit - tvar_oracle) <= 1e-7
        and full
        and abs(va.profit - 4.05) <= 1e-6
        and abs(va.profit - var_oracle) <= 1e-6
        and abs(cap - 9.0) <= 1e-6
    )
    acceptance(4, ok, f"TVaR profit {tv.profit:.10f} full={full}; VaR profit {va.profit:.10f} cap {cap:.10f}")
    assert ok


def test_criterion_05_indifference(acceptance):
    worst = 0.0
    for T, _, m in battery.pairs():
        res = solved(T, m)
        no_trade = policyholder_objective(Indemnity.zero(m.M), m, T, T)
        worst = max(worst, abs(res.policyholder_risk - no_trade), abs(no_trade - drm_of_loss(m, T)))
    ok = worst <= 1e-7
    acceptance(5, ok, f"{len(battery.pairs())} pairs, worst indifference gap {worst:.3g}")
    assert ok


def test_criterion_06_route_agreement(acceptance):
    worst = {"smooth": 0.0, "jump": 0.0}
    for T, _, m in battery.pairs():
        key = "jump" if battery.is_jump_family(T) else "smooth"
        gap = abs(solved(T, m).profit - profit_by_quantile_integral(T, m))
        worst[key] = max(worst[key], gap)
    ok = worst["smooth"] <= 1e-6 and worst["jump"] <= 1e-4
    acceptance(6, ok, f"worst layer-vs-quantile gap smooth {worst['smooth']:.3g}, VaR {worst['jump']:.3g}")
    assert ok


@pytest.mark.slow
def test_criterion_07_oracle_non_falsification(acceptance):
    cases = battery.pairs()
    chosen = cases[:: len(cases) // 20][:20]
    worst_gain, worst_discrete = -np.inf, 0.0
    rng = np.random.default_rng(2024)
    for k, (T, _, m) in enumerate(chosen):
        search = random_pricing_search(T, m, trials=1000, knots=16, seed=k, resolution=1024)
        worst_gain = max(worst_gain, search.best_profit - solved(T, m).profit)
        g = random_pricing(rng, 16)
        _, disc = discrete_best_response(T, g, m, DiscreteGrid(4096, m.M))
        ind, _ = best_response(T, g, m)
        worst_discrete = max(worst_discrete, abs(disc - policyholder_objective(ind, m, T, g)))
    ok = len(chosen) == 20 and worst_gain <= 1e-6 and worst_discrete <= 1e-3
    acceptance(
        7, ok,
        f"20 pairs x 1000 pricings: max profit over theory {worst_gain:.3g}; discrete gap {worst_discrete:.3g}",
    )
    assert ok


def _dominated_pair(family, rng):
    if family == "tvar":
        a1, a2 = np.sort(rng.uniform(0.02, 0.98, 2))
        return TVaR(a1), TVaR(a2)
    if family == "var":
        a1, a2 = np.sort(rng.uniform(0.02, 0.98, 2))
        return VaR(a1), VaR(a2)
    if family == "tk":
        base = TverskyKahneman(rng.uniform(0.3, 1.0))
    else:
        base = random_pricing(rng, 8)
    # composing with a TVaR lifts the curve pointwise
    return base, Composed(TVaR(rng.uniform(0.05, 0.95)), base)


def test_criterion_08_comparative_statics(acceptance):
    rng = np.random.default_rng(8)
    losses = [m for _, m in battery.LOSSES]
    worst_i, worst_p, count = -np.inf, -np.inf, 0
    for family in ("tvar", "var", "tk", "piecewise"):
        for _ in range(50):
            T1, T2 = _dominated_pair(family, rng)
            rep = compare(T1, T2, losses[rng.integers(len(losses))])
            worst_i = max(worst_i, rep.max_indemnity_excess)
            worst_p = max(worst_p, rep.profit_1 - rep.profit_2)
            count += 1
    ok = worst_i <= 1e-8 and worst_p <= 1e-8
    acceptance(8, ok, f"{count} pairs: max I1-I2 {worst_i:.3g}, max profit1-profit2 {worst_p:.3g}")
    assert ok


def test_criterion_09_pareto_round_trip(acceptance):
    worst_gap = worst_premium = worst_shift = 0.0
    for T, _, m in battery.pairs():
        res = solved(T, m)
        cert = is_pareto_optimal(res.contract, m, T)
        worst_gap = max(worst_gap, abs(cert.gap))
        back = equilibrium_from_pareto(res.contract, m, T)
        worst_premium = max(worst_premium, abs(back.premium - res.premium))
        try:
            equilibrium_from_pareto(res.contract.shifted(0.1), m, T)
            worst_shift = np.inf
        except PreconditionError as err:
            ok_class = err.condition == "indifference"
            worst_shift = max(worst_shift, abs(err.gap - 0.1) if ok_class else np.inf)
    ok = worst_gap <= 1e-7 and worst_premium <= 1e-7 and worst_shift <= 1e-9
    acceptance(
        9, ok,
        f"pareto gap {worst_gap:.3g}, premium round trip {worst_premium:.3g}, +0.1 shift error {worst_shift:.3g}",
    )
    assert ok


def test_criterion_10_determinism(acceptance, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        '[[loss]]\nkind = "uniform"\nM = 10.0\n\n[[loss]]\nkind = "kumaraswamy"\na = 1.5\nb = 0.5\nM = 10.0\n\n'
        "[sweep]\nstart = 0.30\nstop = 0.80\nstep = 0.01\n\n[verify]\ntrials = 20\npairs = 6\n"
    )

    def run(tag, fresh):
        sweep = ["sweep", "--config", str(cfg), "--out", str(tmp_path / f"sweep_{tag}.csv")]
        verify = ["verify", "--config", str(cfg), "--seed", "17", "--out", str(tmp_path / f"verify_{tag}.json")]
        for args in (sweep, verify):
            if fresh:
                subprocess.run([sys.executable, "-m", "bowley", *args], check=True)
            else:
                main(args)
        csvs = [p.read_bytes() for p in sorted(tmp_path.glob(f"sweep_{tag}_*.csv"))]
        return csvs, (tmp_path / f"verify_{tag}.json").read_bytes()

    a, b, c = run("a", False), run("b", False), run("c", True)
    sweep_ok = len(a[0]) == 2 and a[0] == b[0] == c[0]
    verify_ok = a[1] == b[1] == c[1]
    ok = sweep_ok and verify_ok
    acceptance(10, ok, f"byte-identical reruns (two in-process, one fresh): sweep={sweep_ok}, verify={verify_ok}")
    assert ok
