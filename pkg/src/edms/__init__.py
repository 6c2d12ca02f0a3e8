"""Ensembled direct multi-step (EDMS) forecasting and the EIMS baseline."""

from .ensemble import combine, compute_member_mae, compute_weights, ensemble_round
from .evaluation import dataset_average_mape, delta_percent, series_mape
from .models import ForecasterKind, ModelConfig, fit_model, forecast_model
from .pipeline import RetrainSchedule, RunConfig, forecasts_to_csv, ims_roll, run_edms, run_eims
from .timeseries import Panel, Series, SplitSpec, align_panel, load_panel_csv, prune_irregular, split_train_test

__version__ = "0.1.0"

__all__ = [
    "ForecasterKind", "ModelConfig", "Panel", "RetrainSchedule", "RunConfig", "Series", "SplitSpec",
    "align_panel", "combine", "compute_member_mae", "compute_weights", "dataset_average_mape",
    "delta_percent", "ensemble_round", "fit_model", "forecast_model", "ims_roll", "load_panel_csv",
    "forecasts_to_csv", "prune_irregular", "run_edms", "run_eims", "series_mape", "split_train_test",
]
