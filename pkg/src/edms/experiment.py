"""End-to-end experiment runs: ingest, prepare, forecast, score and write artifacts.

Run directory layout (one per dataset)::

    panel.json        cutoff, dropped ids with reasons, final dimensions
    manifest.json     config, schedule, seeds, panel fingerprint, per-series status
    forecasts.csv     series_id,step,eims_value,edms_value
    actuals.csv       series_id,step,actual
    weights.csv       per-stage member errors and weights
    audit.json        full per-stage records (enough to recompute every weight and combination)
    models.json       final-stage fitted members per series
    comparison.csv    report row for this dataset (method "both" only)
    series_mape.csv   per-series MAPE for both methods (method "both" only)
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import DatasetSpec, ExperimentConfig
from .errors import AllSeriesFailed, DataError, EmptyPanel
from .evaluation import ComparisonReport, compare, parse_report_csv, render_report, report_to_csv
from .pipeline import (
    ForecastRun,
    RetrainSchedule,
    RunConfig,
    panel_fit_errors,
    run_edms,
    run_eims,
    run_models_snapshot,
)
from .timeseries import (
    CsvSchema,
    Panel,
    SplitSpec,
    align_panel,
    load_panel_csv,
    panel_metadata,
    prune_irregular,
    write_json,
)

log = logging.getLogger(__name__)

METHODS = ("eims", "edms", "both")


@dataclass
class PreparedPanel:
    spec: DatasetSpec
    panel: Panel
    cutoff: int
    dropped: dict  # id -> reason
    metadata: dict


def prepare_panel(spec: DatasetSpec, cfg: ExperimentConfig) -> PreparedPanel:
    """Load, align and prune one dataset."""
    raw = load_panel_csv(spec.path, CsvSchema(spec.layout, spec.frequency))
    dropped = {}
    short = [s.id for s in raw if len(s) < 2]
    for sid in short:
        dropped[sid] = "fewer than 2 observations"
    raw = [s for s in raw if s.id not in dropped]
    if not raw:
        raise EmptyPanel(f"{spec.label}: no usable series")
    panel, cutoff, cut = align_panel(raw)
    for sid in sorted(cut):
        dropped[sid] = f"shorter than alignment cutoff {cutoff}"
    if cfg.prune_threshold is not None and len(panel) > 1:
        history = panel
        h = cfg.horizon_for(panel.length)
        if panel.length - h >= 4:
            # prune on the history only so the held-out values never influence selection
            history, _ = panel.split_holdout(h)
        errors = panel_fit_errors(history, SplitSpec(cfg.train_fraction))
        panel, pruned = prune_irregular(panel, errors, cfg.prune_threshold)
        for sid in sorted(pruned):
            dropped[sid] = f"fit error {errors[sid]:.4g} exceeds {cfg.prune_threshold:g} x panel median"
    meta = panel_metadata(panel, cutoff, dropped, spec.path)
    meta["label"] = spec.label
    return PreparedPanel(spec, panel, cutoff, dropped, meta)


def make_run_config(cfg: ExperimentConfig, frequency: str, horizon: int) -> RunConfig:
    if cfg.schedule is None:
        schedule = RetrainSchedule.default(frequency, horizon)
    else:
        schedule = RetrainSchedule(cfg.schedule)
        schedule.segments(horizon)  # validates every step lies inside the horizon
    return RunConfig(
        horizon=horizon,
        schedule=schedule,
        members=list(cfg.members),
        seed=cfg.seed,
        model=cfg.model_config(),
        split=SplitSpec(cfg.train_fraction),
        metric=cfg.weight_metric,
        global_lstm=cfg.global_lstm,
    )


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, default=_json_default)
        fh.write("\n")


@dataclass
class DatasetResult:
    label: str
    out_dir: Path
    runs: dict  # method -> ForecastRun
    report: ComparisonReport | None
    n_ok: int


def run_dataset(spec: DatasetSpec, cfg: ExperimentConfig, method: str, out_dir: Path,
                executor=None) -> DatasetResult:
    if method not in METHODS:
        raise DataError(f"method must be one of {METHODS}")
    prep = prepare_panel(spec, cfg)
    panel = prep.panel
    horizon = cfg.horizon_for(panel.length)
    history, future = panel.split_holdout(horizon)
    rcfg = make_run_config(cfg, panel.frequency, horizon)
    log.info("%s: %d series, length %d, horizon %d, schedule %s",
             spec.label, len(panel), panel.length, horizon, rcfg.schedule.steps)

    runs: dict = {}
    if method in ("eims", "both"):
        runs["eims"] = run_eims(history, replace(rcfg, schedule=RetrainSchedule()), executor)
    if method in ("edms", "both"):
        runs["edms"] = run_edms(history, rcfg, executor)

    failed = {sid for run in runs.values() for sid in run.failed}
    if failed == set(panel.ids):
        reasons = "; ".join(f"{sid}: {r}" for run in runs.values() for sid, r in sorted(run.failed.items()))
        raise AllSeriesFailed(f"{spec.label}: every series failed ({reasons})")

    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "panel.json", prep.metadata)
    actual = {s.id: np.asarray(s.values) for s in future}

    forecasts = {m: r.forecasts() for m, r in runs.items()}
    rows = []
    for sid in panel.ids:
        for k in range(horizon):
            cells = [sid, k + 1]
            for m in ("eims", "edms"):
                f = forecasts.get(m, {}).get(sid)
                cells.append(_fmt(f[k]) if f is not None else "")
            rows.append(cells)
    _write_csv(out_dir / "forecasts.csv", ["series_id", "step", "eims_value", "edms_value"], rows)
    _write_csv(out_dir / "actuals.csv", ["series_id", "step", "actual"],
               [[sid, k + 1, _fmt(actual[sid][k])] for sid in panel.ids for k in range(horizon)])

    wrows = []
    for m, run in runs.items():
        for sid, sr in run.series.items():
            for st in sr.stages:
                r = st.result
                for lab in r.weights.keys():
                    wrows.append([m, sid, st.stage, st.start_step, st.end_step, r.fit_length, lab,
                                  _fmt(r.report.maes[lab]), _fmt(r.weights[lab])])
    _write_csv(out_dir / "weights.csv",
               ["method", "series_id", "stage", "start_step", "end_step", "fit_length", "member", "error",
                "weight"], wrows)

    _dump(out_dir / "audit.json", {
        m: {sid: {"status": sr.status, "reason": sr.reason, "stages": [st.to_dict() for st in sr.stages]}
            for sid, sr in run.series.items()}
        for m, run in runs.items()
    })
    _dump(out_dir / "models.json", {m: run_models_snapshot(run) for m, run in runs.items()})

    report = None
    excluded = {}
    if method == "both":
        report, excluded = compare(spec.label, panel.frequency, panel.length, horizon,
                                   forecasts["eims"], forecasts["edms"], actual, cfg.mape_denominator)
        (out_dir / "comparison.csv").write_text(report_to_csv([report.row()]), encoding="utf-8")
        _write_csv(out_dir / "series_mape.csv", ["series_id", "eims_mape", "edms_mape"],
                   [[sid, _fmt(report.eims.per_series[sid]), _fmt(report.edms.per_series[sid])]
                    for sid in sorted(report.eims.per_series)])

    status = {}
    for sid in panel.ids:
        st = {m: ("ok" if run.series[sid].ok else run.series[sid].reason) for m, run in runs.items()}
        if sid in excluded:
            st["excluded"] = excluded[sid]
        status[sid] = st
    manifest = {
        "dataset": spec.label,
        "frequency": panel.frequency,
        "method": method,
        "config": cfg.to_dict(),
        "horizon": horizon,
        "schedule": list(rcfg.schedule.steps),
        "members": dict((k, v.value) for k, v in rcfg.members.items()),
        "seed": cfg.seed,
        "panel_fingerprint": panel.fingerprint(),
        "history_fingerprint": history.fingerprint(),
        "n_series": len(panel),
        "total_size": panel.length,
        "test_size": horizon,
        "series_status": status,
        "dropped": prep.dropped,
    }
    _dump(out_dir / "manifest.json", manifest)

    n_ok = sum(1 for sid in panel.ids if all(run.series[sid].ok for run in runs.values()))
    return DatasetResult(spec.label, out_dir, runs, report, n_ok)


# ---------------------------------------------------------------------------
# report merging

def find_run_dirs(paths) -> list:
    """Run directories (holding manifest.json) at or below each path, in sorted order."""
    found = []
    for p in map(Path, paths):
        if (p / "manifest.json").is_file():
            found.append(p)
        elif p.is_dir():
            found.extend(sorted(m.parent for m in p.rglob("manifest.json")))
    return found


def _read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_run(run_dir: Path) -> dict:
    """Read back a run directory; raises DataError on missing or partial artifacts."""
    run_dir = Path(run_dir)
    need = ("manifest.json", "forecasts.csv", "actuals.csv", "comparison.csv")
    missing = [n for n in need if not (run_dir / n).is_file()]
    if missing:
        raise DataError(f"{run_dir}: missing artifacts {missing} (reports need a 'both' run)")
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    rows, _ = parse_report_csv((run_dir / "comparison.csv").read_text(encoding="utf-8"))
    if len(rows) != 1:
        raise DataError(f"{run_dir}: comparison.csv should hold exactly one dataset row")
    series: dict = {}
    for rec in _read_csv(run_dir / "actuals.csv"):
        series.setdefault(rec["series_id"], {"actual": [], "eims": [], "edms": []})
        series[rec["series_id"]]["actual"].append(float(rec["actual"]))
    for rec in _read_csv(run_dir / "forecasts.csv"):
        entry = series.get(rec["series_id"])
        if entry is None:
            raise DataError(f"{run_dir}: forecast for unknown series {rec['series_id']!r}")
        for m in ("eims", "edms"):
            cell = rec[f"{m}_value"]
            entry[m].append(float(cell) if cell != "" else math.nan)
    h = manifest["test_size"]
    for sid, entry in series.items():
        if any(len(v) != h for v in entry.values()):
            raise DataError(f"{run_dir}: series {sid!r} does not have {h} steps")
    return {"manifest": manifest, "row": rows[0], "series": series}


def write_report(run_dirs, out_dir: Path, figures: bool = True) -> dict:
    """Merge comparison rows into per-frequency tables and emit plot data (and figures)."""
    dirs = find_run_dirs(run_dirs)
    if not dirs:
        raise DataError("no run directories found")
    runs = [load_run(d) for d in dirs]
    labels = [r["manifest"]["dataset"] for r in runs]
    if len(set(labels)) != len(labels):
        raise DataError(f"duplicate dataset labels across runs: {labels}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    pairs = [(r["manifest"]["frequency"], r["row"]) for r in runs]
    csv_docs = render_report(pairs, "csv")
    text_docs = render_report(pairs, "text")
    written = {}
    for freq, doc in csv_docs.items():
        path = out_dir / f"report_{freq}.csv"
        path.write_text(doc, encoding="utf-8")
        written[freq] = path
    (out_dir / "report.txt").write_text("\n".join(text_docs.values()), encoding="utf-8")

    for r in runs:
        label = r["manifest"]["dataset"]
        pdir = out_dir / "plots" / label
        pdir.mkdir(parents=True, exist_ok=True)
        for sid, entry in r["series"].items():
            h = len(entry["actual"])
            _write_csv(pdir / f"{sid}.csv", ["step", "actual", "eims", "edms"],
                       [[k + 1, _fmt(entry["actual"][k]), _fmt(entry["eims"][k]), _fmt(entry["edms"][k])]
                        for k in range(h)])
            if figures:
                from .plotting import plot_forecast

                plot_forecast(pdir / f"{sid}.png", range(1, h + 1), entry["actual"], entry["eims"],
                              entry["edms"], title=f"{label}: {sid}")
    if figures:
        from .plotting import plot_delta_bars

        for freq in csv_docs:
            rows = [row for f, row in pairs if f == freq]
            plot_delta_bars(out_dir / f"delta_{freq}.png", rows, title=f"{freq} datasets")
    return written


__all__ = [
    "DatasetResult", "ForecastRun", "METHODS", "PreparedPanel", "find_run_dirs", "load_run",
    "make_run_config", "prepare_panel", "run_dataset", "write_report",
]
