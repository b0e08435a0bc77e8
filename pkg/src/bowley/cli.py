"""Command-line driver: ``solve``, ``sweep`` and ``verify``.

Configs are TOML files with ``[loss]`` (or several ``[[loss]]``),
``[distortion]``, ``[solver]``, ``[sweep]``, ``[verify]`` and ``[output]``
tables. Exit codes: 0 success, 2 config error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import io
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import battery
from . import distortion as dist
from . import loss as lossmod
from .choquet import drm_of_loss, policyholder_objective
from .distortion import DEFAULT_RESOLUTION, Distortion, TverskyKahneman
from .equilibrium import (
    RouteDisagreementError,
    TiePolicy,
    best_response,
    profit_by_quantile_integral,
    solve,
)
from .loss import LossModel
from .oracle import DiscreteGrid, discrete_best_response, random_pricing, random_pricing_search
from .pareto import is_pareto_optimal

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3
CSV_HEADER = "theta,t1,deductible,premium,profit,is_argmax"

INDIFFERENCE_TOL = 1e-7
PARETO_TOL = 1e-7
ROUTE_TOL_SMOOTH = 1e-6
ROUTE_TOL_JUMP = 1e-4
FALSIFICATION_TOL = 1e-6
DISCRETE_TOL = 1e-3


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        self.source, self.line = source, line
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str = "theta"
    start: float = 0.30
    stop: float = 0.80
    step: float = 0.01

    def grid(self) -> list[float]:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + k * self.step, 12) for k in range(n)]


@dataclass(frozen=True)
class VerifySpec:
    seed: int = 0
    trials: int = 50
    knots: int = 16
    pairs: int = 20
    cells: int = 4096


@dataclass(frozen=True)
class RunConfig:
    losses: tuple[tuple[str, LossModel], ...] = ()
    distortion: Distortion | None = None
    resolution: int = DEFAULT_RESOLUTION
    tie: TiePolicy = TiePolicy.RETAIN
    sweep: SweepSpec | None = None
    verify: VerifySpec = field(default_factory=VerifySpec)
    output: str | None = None


# ---------------------------------------------------------------- config


def _line_of(text: str, table: str, key: str | None, index: int = 0) -> int | None:
    """Line of ``key`` inside the ``index``-th occurrence of ``[table]`` / ``[[table]]``."""
    header = re.compile(rf"^\s*\[\[?\s*{re.escape(table)}\s*\]\]?\s*(#.*)?$")
    any_header = re.compile(r"^\s*\[")
    seen, inside, found = -1, False, None
    for no, line in enumerate(text.splitlines(), start=1):
        if header.match(line):
            seen += 1
            inside = seen == index
            if inside:
                found = no
            continue
        if any_header.match(line):
            inside = False
            continue
        if inside and key and re.match(rf"^\s*{re.escape(key)}\s*=", line):
            return no
    return found


def _field_of(message: str) -> str | None:
    m = re.match(r"^\w+\.(\w+):", message)
    return m.group(1) if m else None


def _auto_label(block: dict) -> str:
    parts = [str(block.get("kind", "loss"))]
    for k in sorted(block):
        if k not in ("kind", "M", "label", "cdf_values"):
            parts.append(f"{k}{block[k]:g}" if isinstance(block[k], (int, float)) else f"{k}{block[k]}")
    return "-".join(parts)


def _int(block: dict, key: str, default: int, table: str, lo: int) -> int:
    v = block.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ValueError(f"{table}.{key}: expected an integer >= {lo}, got {v!r}")
    return v


def _float(block: dict, key: str, default: float, table: str) -> float:
    v = block.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{table}.{key}: expected a number, got {v!r}")
    return float(v)


def _tie(value: str, where: str = "solver.tie") -> TiePolicy:
    try:
        return TiePolicy(value)
    except ValueError:
        raise ValueError(f"{where}: expected one of retain, cede, insurer; got {value!r}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", source, int(m.group(1)) if m else None) from None

    def fail(table: str, exc: Exception, index: int = 0):
        msg = str(exc)
        return ConfigError(msg, source, _line_of(text, table, _field_of(msg), index))

    known = {"loss", "distortion", "solver", "sweep", "verify", "output"}
    for name in raw:
        if name not in known:
            raise ConfigError(f"{name}: unknown table", source, _line_of(text, name, None))

    blocks = raw.get("loss", [])
    if isinstance(blocks, dict):
        blocks = [blocks]
    losses = []
    for i, block in enumerate(blocks):
        try:
            losses.append((str(block.get("label", _auto_label(block))), lossmod.from_config(block)))
        except ValueError as exc:
            raise fail("loss", exc, i) from None
    labels = [name for name, _ in losses]
    if len(set(labels)) != len(labels):
        raise ConfigError("loss.label: variant labels must be distinct", source, _line_of(text, "loss", "label"))

    d = None
    if "distortion" in raw:
        try:
            d = dist.from_config(raw["distortion"])
        except ValueError as exc:
            raise fail("distortion", exc) from None

    try:
        solver = raw.get("solver", {})
        resolution = _int(solver, "resolution", DEFAULT_RESOLUTION, "solver", 64)
        tie = _tie(solver.get("tie", "retain"))
    except ValueError as exc:
        raise fail("solver", exc) from None

    sweep = None
    if "sweep" in raw:
        s = raw["sweep"]
        try:
            sweep = SweepSpec(
                parameter=str(s.get("parameter", "theta")),
                start=_float(s, "start", 0.30, "sweep"),
                stop=_float(s, "stop", 0.80, "sweep"),
                step=_float(s, "step", 0.01, "sweep"),
            )
            if sweep.parameter != "theta":
                raise ValueError(f"sweep.parameter: only 'theta' can be swept, got {sweep.parameter!r}")
            if not sweep.step > 0 or sweep.stop < sweep.start:
                raise ValueError("sweep.step: need step > 0 and stop >= start")
            for theta in sweep.grid():
                try:
                    TverskyKahneman(theta)
                except ValueError as exc:
                    raise ValueError(f"sweep.start: grid value {theta:g} is invalid ({exc})") from None
        except ValueError as exc:
            raise fail("sweep", exc) from None

    try:
        v = raw.get("verify", {})
        verify = VerifySpec(
            seed=_int(v, "seed", 0, "verify", 0),
            trials=_int(v, "trials", 50, "verify", 1),
            knots=_int(v, "knots", 16, "verify", 4),
            pairs=_int(v, "pairs", 20, "verify", 0),
            cells=_int(v, "cells", 4096, "verify", 16),
        )
    except ValueError as exc:
        raise fail("verify", exc) from None

    output = raw.get("output", {}).get("path")
    return RunConfig(tuple(losses), d, resolution, tie, sweep, verify, output)


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config ({exc.strerror})", str(p)) from None
    return parse_config(text, str(p))


# ---------------------------------------------------------------- commands


def _interior_crossings(res) -> list[float]:
    return [float(t) for t in res.crossing_set.points]


def solve_report(T: Distortion, m: LossModel, tie: TiePolicy, resolution: int) -> dict:
    res = solve(T, m, tie, resolution)
    no_trade = drm_of_loss(m, T)
    cert = is_pareto_optimal(res.contract, m, T, resolution)
    return {
        "distortion": repr(T),
        "loss": repr(m),
        "crossing_points": _interior_crossings(res),
        "regions": [
            {"lo": lo, "hi": hi, "label": lab.value} for lo, hi, lab in res.partition.rows()
        ],
        "region_table": res.partition.describe(),
        "indemnity": {"bounds": list(res.indemnity.bounds), "levels": list(res.indemnity.levels)},
        "premium": res.premium,
        "profit": res.profit,
        "profit_layer": res.profit_layer,
        "profit_quantile": profit_by_quantile_integral(T, m, resolution),
        "policyholder_risk": res.policyholder_risk,
        "no_trade_risk": no_trade,
        "indifference_gap": res.policyholder_risk - no_trade,
        "pareto": {
            "objective": cert.objective,
            "minimum": cert.minimum,
            "gap": cert.gap,
            "optimal": cert.optimal,
        },
    }


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(cfg: RunConfig, out: str | None = None) -> int:
    if not cfg.losses:
        raise ConfigError("loss: table required for solve")
    if cfg.distortion is None:
        raise ConfigError("distortion: table required for solve")
    reports = [
        dict(solve_report(cfg.distortion, m, cfg.tie, cfg.resolution), label=name)
        for name, m in cfg.losses
    ]
    _emit(_dump(reports[0] if len(reports) == 1 else reports), out or cfg.output)
    return EXIT_OK


def sweep_row(theta: float, m: LossModel, tie: TiePolicy, resolution: int) -> tuple:
    """(theta, t1, deductible, premium, profit) for the TK policyholder with parameter ``theta``."""
    res = solve(TverskyKahneman(theta), m, tie, resolution)
    pts = _interior_crossings(res)
    t1 = pts[0] if pts else float("nan")
    deductible = float(m.quantile(1.0 - t1)) if pts else float("nan")
    return theta, t1, deductible, res.premium, res.profit


def _row_task(args):
    return sweep_row(*args)


def sweep_rows(
    m: LossModel, grid: SweepSpec, tie: TiePolicy, resolution: int, jobs: int = 1
) -> list[tuple]:
    tasks = [(theta, m, tie, resolution) for theta in grid.grid()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map preserves submission order, so output order is fixed
            return list(pool.map(_row_task, tasks))
    return [sweep_row(*t) for t in tasks]


def format_csv(rows: list[tuple]) -> str:
    profits = [r[4] for r in rows]
    best = int(np.argmax(profits)) if rows else -1
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for i, (theta, t1, ded, prem, prof) in enumerate(rows):
        buf.write(f"{theta:.6g},{t1:.12g},{ded:.12g},{prem:.12g},{prof:.12g},{int(i == best)}\n")
    return buf.getvalue()


def _variant_path(out: str, label: str) -> str:
    p = Path(out)
    return str(p.with_name(f"{p.stem}_{label}{p.suffix or '.csv'}"))


def cmd_sweep(cfg: RunConfig, out: str | None = None, jobs: int = 1) -> int:
    if not cfg.losses:
        raise ConfigError("loss: table required for sweep")
    grid = cfg.sweep or SweepSpec()
    out = out or cfg.output
    if len(cfg.losses) > 1 and not out:
        raise ConfigError("output.path: several loss variants need an output path")
    for name, m in cfg.losses:
        text = format_csv(sweep_rows(m, grid, cfg.tie, cfg.resolution, jobs))
        _emit(text, _variant_path(out, name) if len(cfg.losses) > 1 else out)
    return EXIT_OK


def _check(record: dict, kind: str, cls: str, name: str, gap: float, tol: float, failures: list):
    record["checks_run"] += 1
    key = f"{kind}_gap"
    record["worst"][key] = max(record["worst"].get(key, -np.inf), gap)
    if gap > tol:
        failures.append({"class": cls, "check": kind, "case": name, "gap": gap, "tolerance": tol})


def run_battery(cfg: RunConfig) -> dict:
    """Run every invariant, route and oracle check; returns a JSON-ready summary."""
    losses = cfg.losses or battery.LOSSES
    distortions = (cfg.distortion,) if cfg.distortion is not None else battery.DISTORTIONS
    opts, res_n = cfg.verify, cfg.resolution
    record = {"checks_run": 0, "worst": {}}
    failures: list[dict] = []
    cases = battery.pairs(distortions, losses)

    theory = {}
    for T, name, m in cases:
        case = f"{T!r} | {name}"
        try:
            res = solve(T, m, cfg.tie, res_n)
        except RouteDisagreementError as exc:
            record["checks_run"] += 1
            failures.append({"class": "route", "check": "route_layer", "case": case, "gap": abs(exc.layer - exc.direct), "tolerance": 1e-7})
            continue
        theory[(T, name)] = res.profit
        _check(record, "route_layer", "route", case, abs(res.profit - res.profit_layer), 1e-7, failures)
        tol = ROUTE_TOL_JUMP if battery.is_jump_family(T) else ROUTE_TOL_SMOOTH
        qgap = abs(res.profit - profit_by_quantile_integral(T, m, res_n))
        _check(record, "route_quantile", "route", case, qgap, tol, failures)
        igap = abs(res.policyholder_risk - drm_of_loss(m, T))
        _check(record, "indifference", "invariant", case, igap, INDIFFERENCE_TOL, failures)
        cert = is_pareto_optimal(res.contract, m, T, res_n)
        _check(record, "pareto", "invariant", case, cert.gap, PARETO_TOL, failures)

    # oracle checks on an evenly spread subset of the cases
    solved = [c for c in cases if (c[0], c[1]) in theory]
    step = max(1, len(solved) // max(opts.pairs, 1))
    chosen = solved[::step][: opts.pairs]
    grid_rng = np.random.default_rng(opts.seed)
    for k, (T, name, m) in enumerate(chosen):
        case = f"{T!r} | {name}"
        search = random_pricing_search(T, m, opts.trials, opts.knots, opts.seed + k, min(res_n, 1024))
        _check(record, "falsification", "oracle", case, search.best_profit - theory[(T, name)], FALSIFICATION_TOL, failures)
        g = random_pricing(grid_rng, opts.knots)
        _, disc = discrete_best_response(T, g, m, DiscreteGrid(opts.cells, m.M))
        ind, _ = best_response(T, g, m, TiePolicy.RETAIN, res_n)
        _check(record, "discrete", "oracle", case, abs(disc - policyholder_objective(ind, m, T, g)), DISCRETE_TOL, failures)

    return {
        "status": "fail" if failures else "pass",
        "seed": opts.seed,
        "trials": opts.trials,
        "oracle_pairs": len(chosen),
        "cases": len(cases),
        "checks_run": record["checks_run"],
        "worst": record["worst"],
        "failure_classes": sorted({f["class"] for f in failures}),
        "failures": failures,
    }


def cmd_verify(cfg: RunConfig, out: str | None = None) -> int:
    summary = run_battery(cfg)
    _emit(_dump(summary), out or cfg.output)
    return EXIT_VERIFY if summary["failures"] else EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bowley", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("solve", "equilibrium summary for one policyholder"),
        ("sweep", "theta sweep of the Tversky-Kahneman policyholder, written as CSV"),
        ("verify", "oracle and invariant battery, JSON summary"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=name != "verify", help="TOML config file")
        p.add_argument("--out", help="output path (default: stdout or output.path)")
        p.add_argument("--seed", type=int, help="random seed for oracle searches")
        p.add_argument("--resolution", type=int, help="sign-scan resolution (>= 64)")
        p.add_argument("--tie", choices=[t.value for t in TiePolicy], help="tie-breaking policy")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if args.resolution is not None:
        if args.resolution < 64:
            raise ConfigError("--resolution: must be at least 64", "<flags>")
        updates["resolution"] = args.resolution
    if args.tie is not None:
        updates["tie"] = TiePolicy(args.tie)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed: must be non-negative", "<flags>")
        v = cfg.verify
        updates["verify"] = VerifySpec(args.seed, v.trials, v.knots, v.pairs, v.cells)
    return RunConfig(**{**cfg.__dict__, **updates})


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = _apply_flags(cfg, args)
        if args.command == "solve":
            return cmd_solve(cfg, args.out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.jobs)
        return cmd_verify(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
