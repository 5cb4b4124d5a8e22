"""Subscore aggregation and ranking tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

SCORE_HEADER = ("Rank", "Cat", "Model", "DIST", "ACF", "BT", "Composite")


@dataclass(frozen=True)
class ModelScoreRow:
    model: str
    category: str
    dist: float = math.nan
    acf: float = math.nan
    bt: float = math.nan
    composite: float = math.nan
    rank: int = None
    status: str = "OK"

    @property
    def failed(self) -> bool:
        return self.status != "OK"

    def as_row(self):
        fmt = (lambda v: "" if math.isnan(v) else f"{v:.4f}")
        rank = "" if self.rank is None else self.rank
        if self.failed:
            return [rank, self.category, self.model, "FAILED", "", "", ""]
        return [rank, self.category, self.model, fmt(self.dist), fmt(self.acf), fmt(self.bt), fmt(self.composite)]


def dist_score(distribution_distance: float, series_distance: float) -> float:
    return (distribution_distance + series_distance) / 2.0


def composite_score(dist: float, acf: float, bt: float) -> float:
    return dist + acf + bt


def score_row(model, category, dist, acf, bt) -> ModelScoreRow:
    return ModelScoreRow(model, category, dist, acf, bt, composite_score(dist, acf, bt))


def rank_models(rows, key: str = "composite") -> list:
    """Ascending by ``key`` with ties broken by model name; failed rows trail unranked."""
    def order(r):
        v = getattr(r, key)
        return (math.inf if math.isnan(v) else v, r.model)

    ok = sorted((r for r in rows if not r.failed), key=order)
    bad = sorted((r for r in rows if r.failed), key=lambda r: r.model)
    return [replace(r, rank=i + 1) for i, r in enumerate(ok)] + [replace(r, rank=None) for r in bad]


@dataclass(frozen=True)
class RankingTable:
    datasets: tuple
    models: tuple
    categories: dict
    ranks: dict  # (model, dataset) -> rank or None
    avg: dict

    def rows(self):
        order = sorted(self.models, key=lambda m: (math.inf if self.avg[m] is None else self.avg[m], m))
        for m in order:
            yield [self.categories[m], m, *(self.ranks.get((m, d)) or "" for d in self.datasets),
                   "" if self.avg[m] is None else f"{self.avg[m]:.1f}"]


def ranking_table(per_dataset: dict) -> RankingTable:
    """Per-dataset composite ranks plus their average (failed cells are left out of the mean)."""
    datasets = tuple(per_dataset)
    models, cats, ranks = [], {}, {}
    for ds, rows in per_dataset.items():
        for r in rank_models(rows):
            if r.model not in cats:
                models.append(r.model)
                cats[r.model] = r.category
            ranks[(r.model, ds)] = r.rank
    avg = {}
    for m in models:
        vals = [ranks[(m, d)] for d in datasets if ranks.get((m, d)) is not None]
        avg[m] = float(np.mean(vals)) if vals else None
    return RankingTable(datasets, tuple(models), cats, ranks, avg)


def average_subscores(per_dataset: dict) -> list:
    """Subscores averaged across datasets (failed cells excluded), re-ranked by composite."""
    acc = {}
    for rows in per_dataset.values():
        for r in rows:
            entry = acc.setdefault(r.model, {"cat": r.category, "vals": [], "failed": 0})
            if r.failed:
                entry["failed"] += 1
            else:
                entry["vals"].append((r.dist, r.acf, r.bt))
    out = []
    for m, e in acc.items():
        if not e["vals"]:
            out.append(ModelScoreRow(m, e["cat"], status="FAILED"))
            continue
        dist, acf, bt = np.mean(e["vals"], axis=0)
        out.append(score_row(m, e["cat"], float(dist), float(acf), float(bt)))
    return rank_models(out)


def subscore_ranks(rows) -> dict:
    """Rank of each model within each subscore (ascending, ties by name)."""
    out = {}
    for key in ("dist", "acf", "bt", "composite"):
        for r in rank_models(rows, key):
            out[(r.model, key)] = r.rank
    return out
