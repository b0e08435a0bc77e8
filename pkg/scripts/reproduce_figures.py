"""Profit-vs-t1 sweeps for the uniform, truncated exponential and Kumaraswamy panels.

Writes one CSV per loss variant under ``results/`` and prints the argmax rows.

    python scripts/reproduce_figures.py [--jobs 4] [--outdir results]
"""

import argparse
from pathlib import Path

from bowley.cli import format_csv, load_config, sweep_rows

CONFIGS = Path(__file__).parent / "configs"
PANELS = ("fig1b_uniform", "fig2b_truncexp", "fig3b_kumaraswamy")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    for panel in PANELS:
        cfg = load_config(CONFIGS / f"{panel}.toml")
        for label, m in cfg.losses:
            rows = sweep_rows(m, cfg.sweep, cfg.tie, cfg.resolution, args.jobs)
            path = out / f"{panel}_{label}.csv"
            path.write_text(format_csv(rows))
            theta, t1, ded, prem, profit = max(rows, key=lambda r: r[4])
            print(f"{panel:18s} {label:24s} argmax theta={theta:.2f} t1={t1:.4f} profit={profit:.6f}")


if __name__ == "__main__":
    main()
