"""Configuration, model registry, experiment runner and reports."""
from .config import RunConfig, config_from_mapping, load_config
from .experiment import (DatasetResult, ModelResult, RunResult, build_panels, evaluate_model, model_seed,
                         prepare_context, run_dataset, run_experiment)
from .registry import CATEGORY, MODEL_NAMES, DatasetContext, make_forecaster
from .reports import emit_reports, format_table
from .scoring import ModelScoreRow, average_subscores, rank_models, ranking_table, score_row

__all__ = [
    "RunConfig", "config_from_mapping", "load_config", "DatasetResult", "ModelResult", "RunResult",
    "build_panels", "evaluate_model", "model_seed", "prepare_context", "run_dataset", "run_experiment",
    "CATEGORY", "MODEL_NAMES", "DatasetContext", "make_forecaster", "emit_reports", "format_table",
    "ModelScoreRow", "average_subscores", "rank_models", "ranking_table", "score_row",
]
