"""CSV and JSON artefacts for a finished run."""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

from .. import __version__
from ..backtest import write_backtest_csv
from ..kpi import write_acf_csv, write_distance_csv
from .experiment import RunResult
from .scoring import SCORE_HEADER, average_subscores, rank_models, ranking_table, subscore_ranks


def _write(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(v) -> str:
    return "" if v is None or not np.isfinite(v) else f"{v:.6g}"


def write_score_table(rows, path):
    _write(Path(path), SCORE_HEADER, (r.as_row() for r in rank_models(rows)))


def dataset_reports(ds, out: Path):
    """Every per-dataset artefact; models without a given result simply contribute no rows."""
    out.mkdir(parents=True, exist_ok=True)
    ok = [m for m in ds.models if not m.row.failed]
    write_score_table(ds.rows, out / "scores.csv")
    write_backtest_csv([(m.name, m.records) for m in ok if m.records], out / "backtest.csv")
    write_distance_csv([(m.name, m.distance) for m in ok if m.distance], out / "distance.csv")
    write_acf_csv([(m.name, m.acf) for m in ok if m.acf], out / "acf.csv")
    _write(out / "uhist.csv", ["Model", "DAYS", "TENOR", "DIFF", "RANGE", "STDEV", *(f"BIN{i}" for i in range(1, 11))],
           ([m.name, h, t, _fmt(s.diff), _fmt(s.range), _fmt(s.stdev), *(_fmt(v) for v in s.heights)]
            for m in ok if m.uhist for (h, t), s in m.uhist.items()))
    _write(out / "acf_curves.csv", ["Model", "TENOR", "F", "LAG", "ACF_real", "ACF_synth"],
           ([m.name, t, f, lag, _fmt(r), _fmt(g)] for m in ok if m.acf_curves for t, f, lag, r, g in m.acf_curves))
    env_rows = []
    for m in ok:
        e = m.envelope
        if e is None:
            continue
        for i, date in enumerate(e.dates):
            for j, t in enumerate(ds.tenors):
                env_rows.append([m.name, str(date), t, _fmt(e.realized[i, j]), _fmt(e.q_low[i, j]), _fmt(e.q_high[i, j])])
    _write(out / "envelope.csv", ["Model", "DATE", "TENOR", "REALIZED", "Q05", "Q95"], env_rows)
    pca_rows = []
    for m in ok:
        if m.pca is None:
            continue
        for label, pts in (("real", m.pca.real), ("synth", m.pca.synth)):
            pca_rows.extend([m.name, label, _fmt(a), _fmt(b)] for a, b in pts)
    _write(out / "pca.csv", ["Model", "SET", "PC1", "PC2"], pca_rows)
    corr_rows = []
    for m in ok:
        if m.corr_diff is None:
            continue
        for i, a in enumerate(ds.tenors):
            for j, b in enumerate(ds.tenors):
                corr_rows.append([m.name, a, b, _fmt(m.corr_diff[i, j])])
    _write(out / "corr_diff.csv", ["Model", "TENOR_A", "TENOR_B", "DIFF"], corr_rows)


def manifest(result: RunResult) -> dict:
    return {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": result.config.to_dict(),
        "timings": {
            "total_seconds": result.timings.get("TOTAL"),
            "datasets": {ds.name: {m.name: m.timings for m in ds.models} for ds in result.datasets},
        },
        "seeds": {ds.name: {m.name: m.seed for m in ds.models} for ds in result.datasets},
        "datasets": {ds.name: ds.info for ds in result.datasets},
        "failures": [{"dataset": ds.name, "model": m.name, "error": m.error}
                     for ds in result.datasets for m in ds.models if m.row.failed],
    }


def emit_reports(result: RunResult, out_dir) -> Path:
    """Write the per-dataset folders plus the run-level tables and manifest.

    ``scores.csv`` at the top holds subscores averaged across datasets; with a single
    dataset it is identical to that dataset's own table.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_dataset = {}
    for ds in result.datasets:
        dataset_reports(ds, out / ds.name)
        per_dataset[ds.name] = ds.rows
    avg = average_subscores(per_dataset)
    write_score_table(avg, out / "scores.csv")
    table = ranking_table(per_dataset)
    _write(out / "ranking.csv", ["Cat", "Model", *table.datasets, "AVG"], table.rows())
    ranks = subscore_ranks(avg)
    n_failed = {m: sum(r.model == m and r.failed for rows in per_dataset.values() for r in rows) for m in table.models}
    _write(out / "subscores.csv",
           ["Cat", "Model", "DIST", "ACF", "BT", "Composite", "DIST_rank", "ACF_rank", "BT_rank", "Composite_rank",
            "N_FAILED"],
           ([r.category, r.model, _fmt(r.dist), _fmt(r.acf), _fmt(r.bt), _fmt(r.composite),
             *(ranks.get((r.model, k)) or "" for k in ("dist", "acf", "bt", "composite")), n_failed.get(r.model, 0)]
            for r in avg))
    (out / "manifest.json").write_text(json.dumps(manifest(result), indent=2, default=str), encoding="utf-8")
    return out


def format_table(rows) -> str:
    """Plain-text score table for the terminal."""
    lines = [list(map(str, SCORE_HEADER))] + [[str(c) for c in r.as_row()] for r in rank_models(rows)]
    widths = [max(len(line[i]) for line in lines) for i in range(len(SCORE_HEADER))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(line, widths)) for line in lines)
