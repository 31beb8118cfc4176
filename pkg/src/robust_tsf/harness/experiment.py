"""Config-driven experiment runs, sweeps, ablations and report files."""

from __future__ import annotations

import csv
import io
import itertools
import json
import os
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .._rng import derive_seed
from ..anomalies import AnomalySpec, inject_point, inject_positional, inject_subsequence
from ..baselines import (DirConfig, LossSelConfig, dir_impute, loss_selection_mask, simple_imputers)
from ..models import LossKind, Model, ModelSpec
from ..scoring import SelectionConfig, WeightSpec, select
from ..series import (SupervisedDataset, TimeSeries, WindowConfig, apply_norm, load_csv,
                      normalize, split, window)
from ..training import EpochRecord, TrainConfig, train
from ..trend import TrendConfig, Triplets, fit_trend, trend_windows, windowwise_trends
from .config import ConfigError, ExperimentConfig
from .synthetic import synth

ABLATE_MODES = ("full", "loss_only", "selection_only")
TIMING_KEYS = ("wall_ms", "timings")
EPOCH_FIELDS = ("method", "seed", "epoch", "train_loss", "test_mae", "test_mse", "wall_ms")


@dataclass
class Prepared:
    """Normalized, contaminated training data and clean test windows for one seed."""

    noisy_train: Optional[np.ndarray]   # contaminated series (None in positional mode)
    train_set: SupervisedDataset
    test_set: SupervisedDataset
    point_mask: Optional[np.ndarray]
    positional: bool


def _load_series(cfg: ExperimentConfig) -> TimeSeries:
    if cfg["data.source"] == "synthetic":
        return synth(cfg["data.name"], cfg["data.length"], cfg["data.seed"])
    column = cfg["data.column"]
    return load_csv(cfg["data.path"], int(column) if column.lstrip("-").isdigit() else column)


def anomaly_spec(cfg: ExperimentConfig, seed: int) -> AnomalySpec:
    return AnomalySpec(kind=cfg["anomaly.kind"], rate=cfg["anomaly.rate"], scale=cfg["anomaly.scale"],
                       shape=cfg["anomaly.shape"], position=cfg["anomaly.position"],
                       seed=derive_seed(cfg["anomaly.seed"], f"run.{seed}"))


def prepare(cfg: ExperimentConfig, seed: int, series: Optional[TimeSeries] = None) -> Prepared:
    """Split 7:3, normalize with train statistics, contaminate the training part."""
    series = _load_series(cfg) if series is None else series
    train_ts, test_ts = split(series, cfg["data.train_fraction"])
    train_n, params = normalize(train_ts)
    test_n = apply_norm(test_ts, params)
    K, O = cfg["window.input_len"], cfg["window.horizon"]
    test_set = window(test_n, WindowConfig(K, O, 1))
    spec = anomaly_spec(cfg, seed)

    if spec.position != "uniform":
        if spec.kind == "SubsequenceGaussian":
            raise ConfigError("subsequence anomalies have no positional mode", "anomaly.position")
        clean = window(train_n, WindowConfig(K, O, max(K, cfg["window.stride"])))
        noisy, _ = inject_positional(clean, spec)
        return Prepared(None, noisy, test_set, None, True)

    if spec.rate == 0.0:
        z, mask = train_n, np.zeros(len(train_n), dtype=bool)
    elif spec.kind == "SubsequenceGaussian":
        z, mask = inject_subsequence(train_n, spec)
    else:
        z, mask = inject_point(train_n, spec)
    ds = window(z, WindowConfig(K, O, cfg["window.stride"]))
    return Prepared(z.values, ds, test_set, mask, False)


def train_config(cfg: ExperimentConfig, seed: int, epochs: Optional[int] = None) -> TrainConfig:
    epochs = cfg["train.epochs"] if epochs is None else epochs
    schedule = cfg["train.lr"]
    if schedule and schedule[0][0] == "all":
        schedule = ((1, epochs, schedule[0][1]),)
    try:
        return TrainConfig(epochs=epochs, batch_size=cfg["train.batch_size"], lr_schedule=schedule,
                           optimizer=cfg["train.optimizer"], shuffle_seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc), "train.lr") from None


def fresh_model(cfg: ExperimentConfig, seed: int) -> Model:
    return Model(ModelSpec(kind=cfg["model.kind"], input_len=cfg["window.input_len"],
                           horizon=cfg["window.horizon"], hidden=cfg["model.hidden"],
                           activation=cfg["model.activation"], init_seed=seed))


def selection_config(cfg: ExperimentConfig) -> SelectionConfig:
    K = cfg["window.input_len"]
    k_prime = cfg["selection.k_prime"] or max(K - 1, 1)
    return SelectionConfig(cfg["selection.tau"], WeightSpec(cfg["selection.weight_kind"], k_prime, K))


def _trend_config(cfg: ExperimentConfig) -> TrendConfig:
    return TrendConfig(lam=cfg["trend.lam"], fidelity=cfg["trend.fidelity"])


def _triplets(cfg, prep: Prepared, timings: dict) -> tuple[Triplets, dict]:
    t0 = time.monotonic()
    tcfg = _trend_config(cfg)
    if prep.positional:
        trends = windowwise_trends(prep.train_set.inputs, tcfg)
        trip = Triplets(prep.train_set.inputs, trends, prep.train_set.labels)
        diag = {"mode": "per_window", "windows": len(trip)}
    else:
        sol = fit_trend(prep.noisy_train, tcfg)
        trip = trend_windows(prep.train_set, sol.trend)
        diag = dict(sol.diagnostics(), mode="series")
    timings["trend_ms"] = _ms(t0)
    return trip, diag


def _ms(t0: float) -> int:
    return int((time.monotonic() - t0) * 1000)


def _point_only(prep: Prepared, method: str):
    if prep.positional:
        raise ConfigError(f"method {method} needs point-mode anomalies (anomaly.position = uniform)",
                          "anomaly.position")


def run_method(cfg: ExperimentConfig, method: str, seed: int, prep: Prepared) -> dict:
    """Train one method for one seed and summarize its history."""
    timings: dict = {}
    extra: dict = {}
    model = fresh_model(cfg, seed)
    tcfg = train_config(cfg, seed)
    data = prep.train_set
    loss = LossKind("MAE")
    mask = None

    if method in ("vanilla_mae", "vanilla_mse"):
        loss = LossKind("MAE" if method == "vanilla_mae" else "MSE")
    elif method in ("robust_tsf", "selection_only"):
        trip, extra["trend"] = _triplets(cfg, prep, timings)
        t0 = time.monotonic()
        mask = select(trip, selection_config(cfg))
        timings["selection_ms"] = _ms(t0)
        data = trip
        if method == "selection_only":
            loss = LossKind("MSE")
    elif method == "offline_dir":
        _point_only(prep, method)
        loss = LossKind(cfg["dir.loss"])
        dcfg = DirConfig(cfg["dir.delta"], cfg["dir.pretrain_epochs"] or cfg["train.epochs"], tcfg)
        t0 = time.monotonic()
        pretrained, _ = train(model, data, loss, replace(tcfg, epochs=dcfg.pretrain_epochs))
        imputed, flags = dir_impute(pretrained, prep.noisy_train, dcfg.delta)
        data = window(imputed, data.config)
        timings["detection_ms"] = _ms(t0)
        extra["imputed_count"] = int(flags.sum())
    elif method == "loss_sel":
        loss = LossKind(cfg["loss_sel.loss"])
        keep = cfg["loss_sel.keep_fraction"]
        lcfg = LossSelConfig(cfg["loss_sel.pretrain_epochs"], 1.0 - cfg["anomaly.rate"] if keep is None else keep)
        t0 = time.monotonic()
        mask = loss_selection_mask(model, data, lcfg, tcfg, loss)
        timings["selection_ms"] = _ms(t0)
    elif method in ("zero_impute", "interp_impute", "trend_only"):
        _point_only(prep, method)
        t0 = time.monotonic()
        sol = fit_trend(prep.noisy_train, _trend_config(cfg))
        timings["trend_ms"] = _ms(t0)
        extra["trend"] = dict(sol.diagnostics(), mode="series")
        imp = simple_imputers(prep.noisy_train, sol.trend, cfg["selection.tau"])
        series = {"zero_impute": imp.zero_imputed, "interp_impute": imp.interpolated,
                  "trend_only": imp.trend_only}[method]
        data = window(series, data.config)
        extra["imputed_count"] = int(imp.flags.sum())
    else:
        raise ConfigError(f"unknown method {method!r}", "methods")

    t0 = time.monotonic()
    _, history = train(model, data, loss, replace(tcfg, selection_mask=mask), prep.test_set)
    timings["training_ms"] = _ms(t0)
    n = len(data)
    return dict(seed=seed, n_train=n, selected_count=int(n if mask is None else mask.sum()),
                **extra, **summarize(history), timings=timings)


def summarize(history: list[EpochRecord]) -> dict:
    """Best (minimum test MAE, earliest on ties) and last epoch metrics plus delta."""
    maes = [r.test_mae for r in history]
    best = history[int(np.argmin(maes))]
    last = history[-1]
    pick = lambda r: {"epoch": r.epoch, "test_mae": r.test_mae, "test_mse": r.test_mse}
    return {
        "history": [r.to_dict() for r in history],
        "best": pick(best),
        "last": pick(last),
        "delta": abs(best.test_mae - last.test_mae),
    }


def _stats(values) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def aggregate(per_seed: list[dict]) -> dict:
    return {
        "best_test_mae": _stats([r["best"]["test_mae"] for r in per_seed]),
        "last_test_mae": _stats([r["last"]["test_mae"] for r in per_seed]),
        "best_test_mse": _stats([r["best"]["test_mse"] for r in per_seed]),
        "delta": _stats([r["delta"] for r in per_seed]),
        "selected_count": _stats([r["selected_count"] for r in per_seed]),
    }


def run(cfg: ExperimentConfig, out_dir=None, methods=None) -> dict:
    """Run every configured method for every seed.

    Returns:
        The report dict; also written as ``report.json`` and ``epochs.csv``
        under ``out_dir`` when given.
    """
    methods = tuple(methods or cfg["methods"])
    started = time.monotonic()
    series = _load_series(cfg)
    results = {m: [] for m in methods}
    for seed in cfg["seeds"]:
        prep = prepare(cfg, seed, series)
        for method in methods:
            results[method].append(run_method(cfg, method, seed, prep))
    report = {
        "config": cfg.echo(),
        "methods": {m: {"seeds": rs, "summary": aggregate(rs)} for m, rs in results.items()},
        "timings": {"total_ms": _ms(started)},
    }
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def ablate(cfg: ExperimentConfig, mode: str, out_dir=None) -> dict:
    """``full`` = RobustTSF, ``loss_only`` = MAE without selection, ``selection_only`` = MSE with selection."""
    if mode not in ABLATE_MODES:
        raise ConfigError(f"mode must be one of {ABLATE_MODES}, got {mode!r}")
    if "robust_tsf" not in cfg["methods"]:
        raise ConfigError("ablation needs methods to include robust_tsf", "methods")
    method = {"full": "robust_tsf", "loss_only": "vanilla_mae", "selection_only": "selection_only"}[mode]
    report = run(cfg, None, methods=(method,))
    report["ablation"] = mode
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def sweep(cfg: ExperimentConfig, axes=None, out_dir=None) -> list[dict]:
    """One report per point of the Cartesian product of the axes, in axis order.

    ``axes`` is a sequence of ``(key, values)`` and defaults to the config's
    ``sweep.*`` lines. A ``summary.csv`` with one row per point, method and
    seed is written under ``out_dir``.
    """
    axes = list(axes if axes is not None else cfg.axes)
    if not axes:
        raise ConfigError("sweep needs at least one axis")
    for key, values in axes:
        if not values:
            raise ConfigError("empty sweep value list", key)
    reports = []
    rows = []
    keys = [k for k, _ in axes]
    for combo in itertools.product(*(v for _, v in axes)):
        point = dict(zip(keys, combo))
        rep = run(cfg.with_overrides(point))
        rep["sweep_point"] = {k: str(v) for k, v in point.items()}
        reports.append(rep)
        for method, block in rep["methods"].items():
            for r in block["seeds"]:
                rows.append([*map(str, combo), method, r["seed"], r["best"]["test_mae"],
                             r["last"]["test_mae"], r["delta"]])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = [*keys, "method", "seed", "best_test_mae", "last_test_mae", "delta"]
        _atomic_write(out / "summary.csv", _csv_text(header, rows))
        for i, rep in enumerate(reports):
            _atomic_write(out / f"report_{i:03d}.json", json.dumps(rep, indent=2, default=_json_default))
    return reports


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def epoch_rows(report: dict) -> list[list]:
    rows = []
    for method, block in report["methods"].items():
        for r in block["seeds"]:
            for e in r["history"]:
                rows.append([method, r["seed"], e["epoch"], e["train_loss"], e["test_mae"],
                             e["test_mse"], e["wall_ms"]])
    return rows


def write_report(report: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "report.json", json.dumps(report, indent=2, default=_json_default))
    _atomic_write(out / "epochs.csv", _csv_text(EPOCH_FIELDS, epoch_rows(report)))
    return out / "report.json"


def strip_timing(obj):
    """Copy of a report without wall-clock fields."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def best_mae(report: dict, method: str) -> float:
    return report["methods"][method]["summary"]["best_test_mae"]["mean"]


def mean_delta(report: dict, method: str) -> float:
    return report["methods"][method]["summary"]["delta"]["mean"]


__all__ = ["ABLATE_MODES", "Prepared", "ablate", "aggregate", "anomaly_spec", "best_mae", "fresh_model",
           "mean_delta", "prepare", "run", "run_method", "selection_config", "strip_timing", "summarize",
           "sweep", "train_config", "write_report"]
