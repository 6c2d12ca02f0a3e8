"""Experiment configuration: YAML or JSON file, validated before any work starts."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .ensemble import METRICS
from .errors import ConfigError
from .evaluation import DENOMINATOR_MODES
from .models import ALL_KINDS, ForecasterKind, ModelConfig
from .timeseries import FREQUENCIES

LSTM_KEYS = {"hidden_size", "lookback", "epochs", "learning_rate", "use_bias"}


@dataclass(frozen=True)
class DatasetSpec:
    path: Path
    label: str
    layout: str = "wide"
    frequency: str = "annual"


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    frequency: str = "annual"
    members: tuple = tuple(k.value for k in ALL_KINDS)
    schedule: tuple | None = None
    horizon: int | None = None
    test_fraction: float = 0.2
    train_fraction: float = 0.8
    seed: int = 0
    weight_metric: str = "mae"
    mape_denominator: str = "forecast"
    prune_threshold: float | None = 10.0
    global_lstm: bool = False
    additive_growth: bool = False
    lstm: dict = field(default_factory=dict)
    output_dir: Path = Path("runs")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            additive_growth=self.additive_growth,
            lstm_hidden_size=self.lstm.get("hidden_size", 16),
            lstm_lookback=self.lstm.get("lookback"),
            lstm_epochs=self.lstm.get("epochs", 200),
            lstm_learning_rate=self.lstm.get("learning_rate", 1e-2),
            lstm_use_bias=self.lstm.get("use_bias", False),
        )

    def horizon_for(self, length: int) -> int:
        if self.horizon is not None:
            return self.horizon
        return max(1, int(round(self.test_fraction * length)))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "datasets":
                v = [{"path": str(d.path), "label": d.label, "layout": d.layout, "frequency": d.frequency}
                     for d in v]
            elif isinstance(v, Path):
                v = str(v)
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def _expect(cond, message):
    if not cond:
        raise ConfigError(message)


def _int(value, name, minimum=None):
    _expect(isinstance(value, int) and not isinstance(value, bool), f"{name} must be an integer")
    if minimum is not None:
        _expect(value >= minimum, f"{name} must be >= {minimum}")
    return value


def _number(value, name):
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool), f"{name} must be a number")
    return float(value)


def _bool(value, name):
    _expect(isinstance(value, bool), f"{name} must be true or false")
    return value


def parse_config(doc: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate a decoded config mapping; unknown keys are errors."""
    _expect(isinstance(doc, dict), "config must be a mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(doc) - known
    _expect(not unknown, f"unknown config keys: {sorted(unknown)}")
    _expect("datasets" in doc, "config needs a 'datasets' list")

    kw = {}
    frequency = doc.get("frequency", "annual")
    _expect(frequency in FREQUENCIES, f"frequency must be one of {FREQUENCIES}")
    kw["frequency"] = frequency

    raw_sets = doc["datasets"]
    _expect(isinstance(raw_sets, list) and raw_sets, "datasets must be a nonempty list")
    datasets, labels = [], set()
    for k, entry in enumerate(raw_sets):
        if isinstance(entry, str):
            entry = {"path": entry}
        _expect(isinstance(entry, dict) and "path" in entry, f"datasets[{k}] needs a path")
        extra = set(entry) - {"path", "label", "layout", "frequency"}
        _expect(not extra, f"datasets[{k}] has unknown keys {sorted(extra)}")
        path = Path(entry["path"])
        if not path.is_absolute():
            path = base_dir / path
        label = str(entry.get("label", path.stem))
        _expect(label not in labels, f"duplicate dataset label {label!r}")
        labels.add(label)
        layout = entry.get("layout", "wide")
        _expect(layout in ("wide", "long"), f"datasets[{k}].layout must be wide or long")
        freq = entry.get("frequency", frequency)
        _expect(freq in FREQUENCIES, f"datasets[{k}].frequency must be one of {FREQUENCIES}")
        datasets.append(DatasetSpec(path, label, layout, freq))
    kw["datasets"] = tuple(datasets)

    if "members" in doc:
        members = doc["members"]
        _expect(isinstance(members, list) and len(members) >= 2, "members must list at least 2 kinds")
        valid = {k.value for k in ForecasterKind}
        for m in members:
            _expect(m in valid, f"unknown member {m!r}; choose from {sorted(valid)}")
        _expect(len(set(members)) == len(members), "members must be distinct")
        kw["members"] = tuple(members)
    if doc.get("schedule") is not None:
        sched = doc["schedule"]
        _expect(isinstance(sched, list), "schedule must be a list of integers")
        kw["schedule"] = tuple(_int(s, "schedule entry", 1) for s in sched)
    if doc.get("horizon") is not None:
        kw["horizon"] = _int(doc["horizon"], "horizon", 1)
    for name in ("test_fraction", "train_fraction"):
        if name in doc:
            v = _number(doc[name], name)
            _expect(0 < v < 1, f"{name} must lie in (0, 1)")
            kw[name] = v
    if "seed" in doc:
        kw["seed"] = _int(doc["seed"], "seed")
    if "weight_metric" in doc:
        _expect(doc["weight_metric"] in METRICS, f"weight_metric must be one of {METRICS}")
        kw["weight_metric"] = doc["weight_metric"]
    if "mape_denominator" in doc:
        _expect(doc["mape_denominator"] in DENOMINATOR_MODES, f"mape_denominator must be one of {DENOMINATOR_MODES}")
        kw["mape_denominator"] = doc["mape_denominator"]
    if "prune_threshold" in doc:
        v = doc["prune_threshold"]
        if v is not None:
            v = _number(v, "prune_threshold")
            _expect(v >= 1, "prune_threshold must be >= 1")
        kw["prune_threshold"] = v
    for name in ("global_lstm", "additive_growth"):
        if name in doc:
            kw[name] = _bool(doc[name], name)
    if "lstm" in doc:
        lstm = doc["lstm"] or {}
        _expect(isinstance(lstm, dict), "lstm must be a mapping")
        extra = set(lstm) - LSTM_KEYS
        _expect(not extra, f"unknown lstm keys {sorted(extra)}")
        for name in ("hidden_size", "epochs"):
            if name in lstm:
                _int(lstm[name], f"lstm.{name}", 1)
        if lstm.get("lookback") is not None:
            _int(lstm["lookback"], "lstm.lookback", 1)
        if "learning_rate" in lstm:
            _expect(_number(lstm["learning_rate"], "lstm.learning_rate") > 0, "lstm.learning_rate must be > 0")
        if "use_bias" in lstm:
            _bool(lstm["use_bias"], "lstm.use_bias")
        kw["lstm"] = dict(lstm)
    if "output_dir" in doc:
        out = Path(doc["output_dir"])
        kw["output_dir"] = out if out.is_absolute() else base_dir / out
    else:
        kw["output_dir"] = base_dir / "runs"
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return parse_config(doc, path.parent)


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Apply command-line overrides, skipping those left unset (``None``)."""
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
