"""MAPE comparison of EIMS and EDMS forecasts and the report tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyInput, LengthMismatch, NearZeroDenominator, ZeroBaseline

REPORT_COLUMNS = ("dataset", "n_series", "total_size", "test_size", "eims_mape", "edms_mape", "delta_percent")
AVERAGE_LABEL = "Average"
DENOMINATOR_MODES = ("forecast", "actual")
EPS = 1e-9


def series_mape(forecast, actual, mode: str = "forecast", eps: float = EPS) -> float:
    """Mean absolute percentage error as a fraction.

    ``mode="forecast"`` divides by the forecast value; ``mode="actual"``
    gives the textbook form.
    """
    f = np.asarray(forecast, dtype=float)
    y = np.asarray(actual, dtype=float)
    if f.shape != y.shape or f.ndim != 1 or f.size == 0:
        raise LengthMismatch(f"forecast length {f.shape} vs actual length {y.shape}")
    if mode not in DENOMINATOR_MODES:
        raise ValueError(f"mode must be one of {DENOMINATOR_MODES}, got {mode!r}")
    denom = f if mode == "forecast" else y
    small = np.flatnonzero(np.abs(denom) < eps)
    if small.size:
        raise NearZeroDenominator((small + 1).tolist())
    return float(np.mean(np.abs((f - y) / denom)))


@dataclass(frozen=True)
class MapeResult:
    per_series: dict
    dataset_average: float
    denominator_mode: str = "forecast"


def dataset_average_mape(per_series: Mapping[str, float], mode: str = "forecast") -> MapeResult:
    if not per_series:
        raise EmptyInput("no series to average")
    values = [float(per_series[k]) for k in sorted(per_series)]
    return MapeResult(dict(per_series), math.fsum(values) / len(values), mode)


def delta_percent(mape_ims: float, mape_dms: float) -> float:
    """Relative MAPE reduction of EDMS over EIMS, in percent (positive: EDMS better)."""
    if not mape_ims > 0:
        raise ZeroBaseline(f"EIMS average MAPE must be positive, got {mape_ims}")
    return 100.0 * (mape_ims - mape_dms) / mape_ims


@dataclass(frozen=True)
class ComparisonReport:
    dataset: str
    frequency: str
    n_series: int
    total_size: int
    test_size: int
    eims: MapeResult
    edms: MapeResult
    delta_percent: float

    @property
    def eims_mape(self) -> float:
        return self.eims.dataset_average

    @property
    def edms_mape(self) -> float:
        return self.edms.dataset_average

    def row(self) -> dict:
        return {
            "dataset": self.dataset,
            "n_series": self.n_series,
            "total_size": self.total_size,
            "test_size": self.test_size,
            "eims_mape": self.eims_mape,
            "edms_mape": self.edms_mape,
            "delta_percent": self.delta_percent,
        }


def compare(
    dataset: str,
    frequency: str,
    total_size: int,
    test_size: int,
    eims: Mapping[str, np.ndarray],
    edms: Mapping[str, np.ndarray],
    actual: Mapping[str, np.ndarray],
    mode: str = "forecast",
) -> tuple[ComparisonReport, dict]:
    """Score both methods on the series they both forecast.

    A series whose MAPE is undefined under either method is excluded from
    both averages. Returns the report and ``{series_id: reason}`` for
    exclusions.
    """
    excluded = {}
    per_ims, per_dms = {}, {}
    for sid in sorted(set(eims) | set(edms) | set(actual)):
        if sid not in eims or sid not in edms:
            excluded[sid] = "missing forecast"
            continue
        try:
            a = series_mape(eims[sid], actual[sid], mode)
            b = series_mape(edms[sid], actual[sid], mode)
        except (NearZeroDenominator, LengthMismatch) as exc:
            excluded[sid] = str(exc)
            continue
        per_ims[sid], per_dms[sid] = a, b
    ims = dataset_average_mape(per_ims, mode)
    dms = dataset_average_mape(per_dms, mode)
    try:
        delta = delta_percent(ims.dataset_average, dms.dataset_average)
    except ZeroBaseline:
        delta = float("nan")
    report = ComparisonReport(dataset, frequency, len(per_ims), total_size, test_size, ims, dms, delta)
    return report, excluded


def _average_delta(reports) -> float:
    deltas = [r["delta_percent"] for r in reports if math.isfinite(r["delta_percent"])]
    return math.fsum(deltas) / len(deltas) if deltas else float("nan")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_to_csv(rows: Iterable[Mapping]) -> str:
    """CSV with one row per dataset plus a trailing average-delta row; floats written losslessly."""
    rows = list(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in REPORT_COLUMNS])
    w.writerow([AVERAGE_LABEL, "", "", "", "", "", _fmt(_average_delta(rows))])
    return buf.getvalue()


def parse_report_csv(text: str) -> tuple[list, float]:
    """Inverse of :func:`report_to_csv`: ``(rows, average_delta)``."""
    rows, average = [], float("nan")
    for rec in csv.DictReader(io.StringIO(text)):
        if rec["dataset"] == AVERAGE_LABEL and rec["n_series"] == "":
            average = float(rec["delta_percent"])
            continue
        rows.append({
            "dataset": rec["dataset"],
            "n_series": int(rec["n_series"]),
            "total_size": int(rec["total_size"]),
            "test_size": int(rec["test_size"]),
            "eims_mape": float(rec["eims_mape"]),
            "edms_mape": float(rec["edms_mape"]),
            "delta_percent": float(rec["delta_percent"]),
        })
    return rows, average


def report_to_text(rows: Iterable[Mapping], title: str = "") -> str:
    rows = list(rows)
    header = ("Data set", "Series", "Total/test", "EIMS MAPE %", "EDMS MAPE %", "Delta %")
    body = [
        (
            r["dataset"],
            str(r["n_series"]),
            f"{r['total_size']}/{r['test_size']}",
            f"{100 * r['eims_mape']:.4f}",
            f"{100 * r['edms_mape']:.4f}",
            f"{r['delta_percent']:.2f}",
        )
        for r in rows
    ]
    body.append((f"{AVERAGE_LABEL} Delta %", "", "", "", "", f"{_average_delta(rows):.2f}"))
    widths = [max(len(line[k]) for line in [header] + body) for k in range(len(header))]
    sep = "+".join("-" * (w + 2) for w in widths)

    def fmt(line):
        cells = [line[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(line[1:], widths[1:])]
        return "| " + " | ".join(cells) + " |"

    out = [title] if title else []
    out += ["+" + sep + "+", fmt(header), "+" + sep + "+"]
    out += [fmt(line) for line in body[:-1]]
    out += ["+" + sep + "+", fmt(body[-1]), "+" + sep + "+"]
    return "\n".join(out) + "\n"


def render_report(reports: Iterable, fmt: str = "text") -> dict:
    """Group comparison reports by frequency and render one table per group.

    ``reports`` holds :class:`ComparisonReport` objects or ``(frequency,
    row)`` pairs. Returns ``{frequency: document}``.
    """
    groups: dict = {}
    for rep in reports:
        freq, row = (rep.frequency, rep.row()) if isinstance(rep, ComparisonReport) else rep
        groups.setdefault(freq, []).append(row)
    if not groups:
        raise EmptyInput("no reports to render")
    order = ["annual", "quarterly", "monthly", "daily"]
    out = {}
    for freq in sorted(groups, key=lambda f: order.index(f) if f in order else len(order)):
        rows = groups[freq]
        if fmt == "csv":
            out[freq] = report_to_csv(rows)
        elif fmt == "text":
            out[freq] = report_to_text(rows, title=f"MAPE comparison, {freq} data")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    return out
