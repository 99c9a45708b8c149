from __future__ import annotations

from dataclasses import dataclass, fields
import json
from pathlib import Path
import tomllib

from .data_layer import ReportStore, StoredReport
from .errors import DataError, DomainError
from .experiments import CoverageExperiment, ExperimentKind, ExperimentReport, ExperimentSettings, default_settings
from .generators import GeneratorFamily, GeneratorSpec
from .monitoring import ExperimentMetrics, ExperimentSnapshot, log_event

CONFIG_SCHEMA_VERSION = 1

_EXPERIMENT_KEYS = {
    "n": int,
    "delta": float,
    "reps": int,
    "seed": int,
    "cells": int,
    "alpha": float,
    "epsilon": float,
    "Delta": float,
    "smoothing": float,
    "max_frequency": int,
    "kappa_M": float,
    "contamination": float,
    "workers": int,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Overrides on top of the per-kind defaults; ``None`` keeps the default."""

    kind: ExperimentKind | None = None
    n: int | None = None
    delta: float | None = None
    reps: int | None = None
    seed: int | None = None
    cells: int | None = None
    alpha: float | None = None
    epsilon: float | None = None
    Delta: float | None = None
    smoothing: float | None = None
    max_frequency: int | None = None
    kappa_M: float | None = None
    contamination: float | None = None
    workers: int | None = None
    generator: GeneratorSpec | None = None
    save_dir: str | None = None

    @staticmethod
    def from_file(path: str | Path) -> "ExperimentConfig":
        target = Path(path)
        if not target.exists():
            raise DataError(f"config file not found: {target}")
        text = target.read_text(encoding="utf-8")
        try:
            payload = json.loads(text) if target.suffix == ".json" else tomllib.loads(text)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            raise DataError(f"{target}: cannot parse config ({exc})") from None
        return ExperimentConfig.from_mapping(payload)

    @staticmethod
    def from_mapping(payload: dict) -> "ExperimentConfig":
        version = payload.get("schema_version", CONFIG_SCHEMA_VERSION)
        if version != CONFIG_SCHEMA_VERSION:
            raise DataError(f"unsupported config schema_version {version}")

        experiment = payload.get("experiment", {})
        generator = payload.get("generator", {})
        output = payload.get("output", {})

        values: dict[str, object] = {}
        for key, cast in _EXPERIMENT_KEYS.items():
            raw = experiment.get(key)
            if raw is None or _none_if_blank(raw) is None:
                continue
            try:
                values[key] = cast(raw)
            except (TypeError, ValueError):
                raise DomainError(f"experiment.{key} must be a {cast.__name__}, got {raw!r}") from None
        kind = _none_if_blank(experiment.get("kind"))
        return ExperimentConfig(
            kind=ExperimentKind(kind) if kind else None,
            generator=generator_from_mapping(generator) if generator else None,
            save_dir=_none_if_blank(output.get("save_dir")),
            **values,
        )

    def to_settings(self, kind: ExperimentKind | str | None = None, **overrides: object) -> ExperimentSettings:
        """Per-kind defaults, then config values, then explicit overrides (CLI flags)."""
        chosen = kind or self.kind
        if chosen is None:
            raise DomainError("no experiment kind given")
        values = {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.name not in ("kind", "save_dir") and getattr(self, f.name) is not None
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return default_settings(chosen, **values)


def _none_if_blank(value: object) -> str | None:
    if value is None:
        return None
    s = str(value).strip()
    return s if s else None


def generator_from_mapping(payload: dict) -> GeneratorSpec:
    """Build a generator from ``{"family": ..., **params}`` with constructor defaults."""
    if "family" not in payload:
        raise DomainError("generator needs a family")
    try:
        family = GeneratorFamily(payload["family"])
    except ValueError:
        raise DomainError(f"unknown generator family {payload['family']!r}") from None
    params = dict(payload.get("params", {k: v for k, v in payload.items() if k != "family"}))
    if family == GeneratorFamily.CONTAMINATED and isinstance(params.get("base"), dict):
        params["base"] = generator_from_mapping(params["base"])
    constructor = getattr(GeneratorSpec, family.value)
    try:
        return constructor(**params)
    except (TypeError, KeyError) as exc:
        raise DomainError(f"bad parameters for {family.value}: {exc}") from None


class ExperimentApplication:
    def __init__(self, config: ExperimentConfig | None = None, metrics: ExperimentMetrics | None = None) -> None:
        self.config = config or ExperimentConfig()
        self.metrics = metrics or ExperimentMetrics()
        self.store = ReportStore(self.config.save_dir) if self.config.save_dir else None

    def run_experiment(
        self,
        kind: ExperimentKind | str | None = None,
        timing: bool = False,
        **overrides: object,
    ) -> ExperimentReport:
        settings = self.config.to_settings(kind, **overrides)
        log_event("info", "experiment started", kind=settings.kind.value, reps=settings.reps, seed=settings.seed)
        return CoverageExperiment(settings, metrics=self.metrics, timing=timing).run()

    def save(self, report: ExperimentReport) -> StoredReport | None:
        if self.store is None:
            return None
        stored = self.store.save(report.to_dict())
        log_event("info", "report saved", **stored.to_dict())
        return stored

    def get_metrics_snapshot(self) -> ExperimentSnapshot:
        return self.metrics.snapshot()
