"""Command-line entry point: ``riskgen <verb> --config run.toml``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .data import write_panel_csv
from .errors import ConfigError, RiskGenError
from .genmodels import save_model
from .orchestrator import (build_panels, emit_reports, format_table, load_config, make_forecaster, model_seed,
                           prepare_context, run_experiment)
from .orchestrator.config import RunConfig, config_from_mapping
from .orchestrator.registry import NeuralForecaster

log = logging.getLogger("riskgen")

VERBS = ("simulate", "fit", "generate", "backtest", "score", "run", "report")


def _config(args) -> RunConfig:
    overrides = {"models": args.models, "seed": args.seed, "jobs": args.jobs, "output_dir": args.out}
    if args.config:
        return load_config(args.config, **overrides)
    extra = {k: getattr(args, k, None) for k in ("dgp", "dataset")}
    if not any(extra.values()):
        raise ConfigError("pass --config, --dgp or --dataset")
    return config_from_mapping({k: v for k, v in extra.items() if v}, overrides=overrides)


def cmd_simulate(cfg: RunConfig, args) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, panel, _ in build_panels(cfg):
        write_panel_csv(panel, out / f"{name}.csv")
        print(out / f"{name}.csv")
    return 0


def cmd_fit(cfg: RunConfig, args) -> int:
    out = Path(cfg.output_dir)
    for i, (name, panel, _) in enumerate(build_panels(cfg)):
        ctx = prepare_context(name, panel, cfg)
        fits = out / name / "fits"
        fits.mkdir(parents=True, exist_ok=True)
        summary = {}
        for m in cfg.models:
            f = make_forecaster(m, cfg)
            t0 = time.perf_counter()
            try:
                if isinstance(f, NeuralForecaster):
                    f.fit(ctx, seed=model_seed(cfg.seed, i, m))
                    save_model(f.handle, fits / f"{m}.rgck")
                    summary[m] = {"checkpoint": f"{m}.rgck", "final_losses": f.handle.history[-1:] or None}
                else:
                    f.fit(ctx)
                    summary[m] = {"history_needed": f.history_needed(ctx)}
                summary[m]["seconds"] = time.perf_counter() - t0
                print(f"{name}: {m} fitted in {summary[m]['seconds']:.1f}s")
            except RiskGenError as exc:
                summary[m] = {"error": f"{type(exc).__name__}: {exc}"}
                print(f"{name}: {m} FAILED ({exc})")
        (fits / "summary.json").write_text(json.dumps(summary, indent=2, default=str), encoding="utf-8")
    return 0


def cmd_generate(cfg: RunConfig, args) -> int:
    if len(cfg.models) != 1:
        raise ConfigError("generate needs exactly one model (use --models NAME)")
    name, panel, _ = build_panels(cfg)[0]
    ctx = prepare_context(name, panel, cfg)
    m = cfg.models[0]
    f = make_forecaster(m, cfg)
    seed = model_seed(cfg.seed, 0, m)
    f.fit(ctx, seed=seed) if isinstance(f, NeuralForecaster) else f.fit(ctx)
    if args.date:
        hits = np.flatnonzero(np.asarray(ctx.returns.dates).astype(str) == args.date)
        if hits.size == 0:
            raise ConfigError(f"date {args.date} not in the return panel")
        t0 = int(hits[0])
    else:
        t0 = ctx.T - 1
    paths = f.scenarios(np.array([t0]), args.n_paths, [seed, 7])[0]
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"{name}_{m}_scenarios.csv"
    with target.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "day", *ctx.returns.tenors])
        for k, path in enumerate(paths):
            for day, row in enumerate(path, start=1):
                w.writerow([k, day, *(f"{v:.10g}" for v in row)])
    print(f"{paths.shape[0]} paths x {paths.shape[1]} days from {ctx.returns.dates[t0]} -> {target}")
    return 0


def _run(cfg: RunConfig, stages) -> int:
    result = run_experiment(cfg, stages)
    out = emit_reports(result, cfg.output_dir)
    for ds in result.datasets:
        print(f"== {ds.name}")
        print(format_table(ds.rows))
    print(f"reports in {out}  ({result.timings['TOTAL']:.1f}s)")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    out = Path(cfg.output_dir)
    for fname in ("scores.csv", "ranking.csv"):
        path = out / fname
        if not path.exists():
            raise ConfigError(f"{path} not found; run 'riskgen run' first")
        print(f"== {fname}")
        with path.open(encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        widths = [max(len(r[i]) for r in rows if i < len(r)) for i in range(len(rows[0]))]
        for r in rows:
            print("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riskgen", description="Scenario generators for rate risk: fit, score, rank.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--config", help="TOML run file")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--models", help="comma-separated model names")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="datasets evaluated in parallel")
    p.add_argument("--dgp", choices=("garch_normal", "garch_t", "cir"), help="simulate instead of reading a CSV")
    p.add_argument("--dataset", help="level panel CSV")
    p.add_argument("--date", help="generate: condition date (default: last)")
    p.add_argument("--n-paths", type=int, default=1000,
                   help="generate: number of paths (historical simulation always emits its full window)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.verb == "simulate":
            return cmd_simulate(cfg, args)
        if args.verb == "fit":
            return cmd_fit(cfg, args)
        if args.verb == "generate":
            return cmd_generate(cfg, args)
        if args.verb == "report":
            return cmd_report(cfg, args)
        stages = {"run": ("kpi", "backtest"), "score": ("kpi",), "backtest": ("backtest",)}[args.verb]
        return _run(cfg, stages)
    except RiskGenError as exc:
        print(f"riskgen: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
