"""EIMS and EDMS runs over a panel.

EIMS performs a single ensemble round over the whole horizon. EDMS splits
the horizon at the retrain steps; each segment gets a fresh ensemble round on
the series extended by all combined forecasts produced so far.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from threadpoolctl import threadpool_limits

from .ensemble import NOISE_FLOOR, RoundResult, ensemble_round, normalize_members
from .errors import DataError, EdmsError
from .models import (
    ALL_KINDS,
    ForecasterKind,
    ModelConfig,
    TrainedModel,
    fit_holt,
    fit_lstm_global,
    forecast_holt,
    forecast_model,
    model_to_dict,
)
from .timeseries import Panel, Series, SplitSpec, split_train_test

log = logging.getLogger(__name__)

# one and five years expressed in native periods
DEFAULT_RETRAIN = {
    "annual": (1, 5),
    "quarterly": (4, 20),
    "monthly": (12, 60),
    "daily": (21, 105),
}


@dataclass(frozen=True)
class RetrainSchedule:
    steps: tuple = ()

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if any(s < 1 for s in steps):
            raise DataError(f"retrain steps must be positive, got {steps}")
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise DataError(f"retrain steps must be strictly increasing, got {steps}")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def default(cls, frequency: str, horizon: int) -> "RetrainSchedule":
        """The frequency's default steps, keeping only those inside the horizon."""
        steps = tuple(s for s in DEFAULT_RETRAIN[frequency] if s < horizon)
        dropped = [s for s in DEFAULT_RETRAIN[frequency] if s >= horizon]
        if dropped:
            log.warning("horizon %d: default retrain steps %s fall outside and are skipped", horizon, dropped)
        return cls(steps)

    def segments(self, horizon: int) -> list:
        """Half-open step ranges ``(start, end]`` covering ``1..horizon``."""
        if self.steps and self.steps[-1] >= horizon:
            raise DataError(f"retrain step {self.steps[-1]} is not inside horizon {horizon}")
        bounds = (0,) + self.steps + (horizon,)
        return list(zip(bounds[:-1], bounds[1:]))


@dataclass(frozen=True)
class RunConfig:
    horizon: int
    schedule: RetrainSchedule = RetrainSchedule()
    members: object = ALL_KINDS
    seed: int = 0
    model: ModelConfig = ModelConfig()
    split: SplitSpec = SplitSpec()
    metric: str = "mae"
    global_lstm: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise DataError("horizon must be at least 1")
        members = normalize_members(self.members)
        if len(members) < 2:
            raise DataError("an ensemble needs at least 2 members")
        object.__setattr__(self, "members", members)


@dataclass
class StageRecord:
    stage: int
    start_step: int
    end_step: int
    result: RoundResult

    @property
    def fit_length(self) -> int:
        return self.result.fit_length

    def to_dict(self) -> dict:
        r = self.result
        return {
            "stage": self.stage,
            "start_step": self.start_step,
            "end_step": self.end_step,
            "fit_length": r.fit_length,
            "metric": r.report.metric,
            "test_size": r.report.horizon_used,
            "errors": dict(r.report.maes),
            "weights": dict(r.weights.weights),
            "performance_forecasts": {k: v.tolist() for k, v in r.performance_forecasts.items()},
            "test_values": r.test_values.tolist(),
            "member_forecasts": {k: v.tolist() for k, v in r.member_forecasts.items()},
            "combined": r.forecast.tolist(),
        }


@dataclass
class SeriesRun:
    series_id: str
    status: str = "ok"
    reason: str = ""
    stages: list = field(default_factory=list)

    @property
    def forecast(self) -> np.ndarray:
        if not self.stages:
            return np.empty(0)
        return np.concatenate([s.result.forecast for s in self.stages])

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class ForecastRun:
    method: str
    schedule: tuple
    horizon: int
    series: dict  # id -> SeriesRun

    def forecasts(self) -> dict:
        return {sid: r.forecast for sid, r in self.series.items() if r.ok}

    @property
    def failed(self) -> dict:
        return {sid: r.reason for sid, r in self.series.items() if not r.ok}


def series_seed(base: int, series_id: str) -> int:
    """Per-series seed derived from the run seed and the series id."""
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFF, zlib.crc32(series_id.encode())])
    return int(ss.generate_state(1)[0])


def ims_roll(model: TrainedModel, context, h: int) -> np.ndarray:
    """Iterated forecast without refitting.

    Recurrent members feed each prediction back as the next input;
    closed-form members evaluate their h-step expression directly.
    """
    return forecast_model(model, context, h)


def _stage_task(args):
    series, members, horizon, config, seed, prefit = args
    with threadpool_limits(1):
        try:
            return ensemble_round(
                series, members, horizon, config.model, config.split, seed, config.metric, prefit
            )
        except EdmsError as exc:
            # plain text crosses process boundaries without custom pickling
            return f"{type(exc).__name__}: {exc}"


def _global_lstm(working: Mapping[str, Series], label: str, config: RunConfig, frequency: str) -> dict:
    """Pooled LSTM fits for the performance split and the full series, per series id."""
    ids = list(working)
    lcfg = config.model.lstm_config(frequency, config.seed)
    trains = [split_train_test(working[i], config.split)[0].values for i in ids]
    fulls = [working[i].values for i in ids]
    with threadpool_limits(1):
        perf = fit_lstm_global(trains, lcfg)
        full = fit_lstm_global(fulls, lcfg)
    out = {}
    for k, sid in enumerate(ids):
        out[sid] = {label: (
            TrainedModel(ForecasterKind.LSTM, perf[k], len(trains[k]), config.seed, perf[k].config),
            TrainedModel(ForecasterKind.LSTM, full[k], len(fulls[k]), config.seed, full[k].config),
        )}
    return out


def _run(panel: Panel, config: RunConfig, segments: list, method: str, executor=None) -> ForecastRun:
    runs = {s.id: SeriesRun(s.id) for s in panel}
    working = {s.id: s for s in panel}
    mapper = executor.map if executor is not None else map
    lstm_labels = [lab for lab, k in config.members.items() if k is ForecasterKind.LSTM]

    for stage, (start, end) in enumerate(segments):
        active = [sid for sid in working if runs[sid].ok]
        if not active:
            break
        prefit = {sid: {} for sid in active}
        if config.global_lstm and lstm_labels:
            try:
                pooled = _global_lstm({sid: working[sid] for sid in active}, lstm_labels[0],
                                      config, panel.frequency)
            except EdmsError as exc:
                for sid in active:
                    runs[sid].status, runs[sid].reason = "failed", f"pooled lstm: {exc}"
                break
            for sid in active:
                prefit[sid] = {lab: pooled[sid][lstm_labels[0]] for lab in lstm_labels}
        tasks = [
            (working[sid], config.members, end - start, config, series_seed(config.seed, sid), prefit[sid])
            for sid in active
        ]
        for sid, result in zip(active, mapper(_stage_task, tasks)):
            if isinstance(result, str):
                runs[sid].status = "failed"
                runs[sid].reason = f"stage {stage}: {result}"
                log.warning("series %s failed: %s", sid, runs[sid].reason)
                continue
            runs[sid].stages.append(StageRecord(stage, start, end, result))
            working[sid] = working[sid].extend(result.forecast)

    return ForecastRun(method, tuple(e for _, e in segments[:-1]), config.horizon, runs)


def run_eims(panel: Panel, config: RunConfig, executor=None) -> ForecastRun:
    """Single ensemble round over the whole horizon; weights fixed from the initial split."""
    if config.schedule.steps:
        log.warning("EIMS never retrains; ignoring schedule %s", config.schedule.steps)
    return _run(panel, config, [(0, config.horizon)], "eims", executor)


def run_edms(panel: Panel, config: RunConfig, executor=None) -> ForecastRun:
    """Ensemble rounds per schedule segment, each on the series extended by earlier segments."""
    return _run(panel, config, config.schedule.segments(config.horizon), "edms", executor)


def panel_fit_errors(panel: Panel, split: SplitSpec = SplitSpec()) -> dict:
    """Scale-free fit error per series for pruning irregular series.

    Holt is fitted on the leading split and scored on the remainder; the
    held-out MAE is divided by the mean absolute level of the held-out values.
    """
    out = {}
    for s in panel:
        train, test = split_train_test(s, split)
        f = forecast_holt(fit_holt(train.values), len(test))
        mae = float(np.mean(np.abs(f - test.values)))
        level = float(np.mean(np.abs(test.values)))
        err = mae / level if level > 0 else mae
        # round-off on exactly-fitted series must not count against a zero median
        out[s.id] = 0.0 if err <= NOISE_FLOOR else err
    return out


def forecasts_to_csv(run: ForecastRun) -> str:
    """Long-format ``series_id,step,value`` text for the successful series; floats written losslessly."""
    lines = ["series_id,step,value"]
    for sid, f in run.forecasts().items():
        lines += [f"{sid},{k + 1},{v!r}" for k, v in enumerate(f.tolist())]
    return "\n".join(lines) + "\n"


def run_models_snapshot(run: ForecastRun) -> dict:
    """Final-stage fitted members per series as JSON-ready dicts."""
    out = {}
    for sid, r in run.series.items():
        if r.ok and r.stages:
            out[sid] = {lab: model_to_dict(m) for lab, m in r.stages[-1].result.models.items()}
    return out
