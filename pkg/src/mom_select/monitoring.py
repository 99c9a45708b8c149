from __future__ import annotations

from dataclasses import dataclass
import json
import sys
from typing import TextIO


def log_event(level: str, message: str, stream: TextIO | None = None, **fields: object) -> None:
    """Emit one JSON log line; stdout stays reserved for results."""
    payload: dict[str, object] = {"level": level, "message": message}
    payload.update(fields)
    print(json.dumps(payload, default=str), file=stream or sys.stderr)


@dataclass(frozen=True)
class ExperimentSnapshot:
    experiments_total: int
    replications_total: int
    violations_total: int
    degenerate_fits: int
    condition_aborts: int


class ExperimentMetrics:
    """In-memory counters for experiment runs."""

    def __init__(self) -> None:
        self._experiments_total = 0
        self._replications_total = 0
        self._violations_total = 0
        self._degenerate_fits = 0
        self._condition_aborts = 0

    def record_experiment(self, replications: int, violations: int, degenerate_fits: int = 0) -> None:
        self._experiments_total += 1
        self._replications_total += replications
        self._violations_total += violations
        self._degenerate_fits += degenerate_fits

    def record_abort(self) -> None:
        self._condition_aborts += 1

    def snapshot(self) -> ExperimentSnapshot:
        return ExperimentSnapshot(
            experiments_total=self._experiments_total,
            replications_total=self._replications_total,
            violations_total=self._violations_total,
            degenerate_fits=self._degenerate_fits,
            condition_aborts=self._condition_aborts,
        )
