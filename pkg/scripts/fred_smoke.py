"""Write a FRED-style nine-tenor par-yield CSV and run a small model set on it.

    python scripts/fred_smoke.py --out runs/fred_smoke
    python scripts/fred_smoke.py --csv my_fred_export.csv --out runs/fred

Without ``--csv`` the panel is synthetic: mean-reverting Nelson-Siegel factors
plus small measurement noise, with a few '.' cells as in FRED downloads.
"""
import argparse
from pathlib import Path

import numpy as np

from riskgen.dgp import business_dates
from riskgen.orchestrator import emit_reports, run_experiment
from riskgen.orchestrator.config import config_from_mapping
from riskgen.orchestrator.reports import format_table
from riskgen.parametric import ns_design

FRED_LABELS = ("DGS3MO", "DGS6MO", "DGS1", "DGS2", "DGS3", "DGS5", "DGS10", "DGS20", "DGS30")
FRED_YEARS = np.array([0.25, 0.5, 1, 2, 3, 5, 10, 20, 30])


def write_synthetic_fred(path, n_days, seed):
    rng = np.random.default_rng(seed)
    betas = np.empty((n_days, 3))
    betas[0] = [4.0, -1.5, 0.5]
    for t in range(1, n_days):
        betas[t] = betas[t - 1] + 0.01 * ([4.0, -1.0, 0.5] - betas[t - 1]) + rng.normal(0, [0.04, 0.05, 0.08])
    curves = betas @ ns_design(FRED_YEARS).T + rng.normal(0, 0.005, (n_days, len(FRED_YEARS)))
    cells = np.char.mod("%.2f", curves).astype(object)
    cells[rng.integers(1, n_days, 15), rng.integers(0, 9, 15)] = "."
    lines = ["DATE," + ",".join(FRED_LABELS)]
    lines += [f"{d}," + ",".join(row) for d, row in zip(business_dates(n_days), cells)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--csv", help="existing FRED export; synthetic panel if omitted")
    ap.add_argument("--out", default="runs/fred_smoke")
    ap.add_argument("--years", type=int, default=6)
    ap.add_argument("--models", default="PHS,GARCHt_RET,CWGAN")
    ap.add_argument("--epochs", type=int, default=30)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = args.csv
    if csv_path is None:
        csv_path = out / "fred_synthetic.csv"
        write_synthetic_fred(csv_path, args.years * 251, seed=10)
    cfg = config_from_mapping({"dataset": str(csv_path), "models": args.models.split(","), "epochs": args.epochs,
                               "layers": [32, 32], "output_dir": str(out)})
    result = run_experiment(cfg)
    emit_reports(result, cfg.output_dir)
    for ds in result.datasets:
        print(f"== {ds.name} ({len(ds.tenors)} tenors)")
        print(format_table(ds.rows))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
