from __future__ import annotations

import csv
from dataclasses import dataclass
import json
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import DataError

SCHEMA_VERSION = 1


def read_sample_csv(path: str | Path, columns: int | None = None) -> np.ndarray:
    """Headerless numeric CSV: shape (n,) for one column, (n, 2) for x,y pairs."""
    target = Path(path)
    if not target.exists():
        raise DataError(f"input file not found: {target}")
    try:
        data = np.loadtxt(target, delimiter=",", dtype=float, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{target}: not a numeric CSV ({exc})") from None
    if data.size == 0:
        raise DataError(f"{target}: no observations")
    if not np.all(np.isfinite(data)):
        raise DataError(f"{target}: non-finite values")
    width = data.shape[1]
    if columns is not None and width != columns:
        raise DataError(f"{target}: expected {columns} column(s), got {width}")
    if width == 1:
        return data[:, 0]
    if width == 2:
        return data
    raise DataError(f"{target}: expected one or two columns, got {width}")


def write_rows_csv(rows: Iterable[dict], stream: TextIO) -> int:
    """Write dict rows with a header taken from the union of keys, first-seen order."""
    materialized = list(rows)
    fieldnames: list[str] = []
    for row in materialized:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    writer = csv.DictWriter(stream, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in materialized:
        writer.writerow(row)
    return len(materialized)


@dataclass(frozen=True)
class StoredReport:
    path: Path
    kind: str
    seed: int
    reps: int

    def to_dict(self) -> dict:
        return {"path": str(self.path), "kind": self.kind, "seed": self.seed, "reps": self.reps}


class ReportStore:
    """JSON file store for experiment reports, one file per (kind, seed)."""

    def __init__(self, root_dir: str | Path = "data/reports") -> None:
        self.root_dir = Path(root_dir)
        self.root_dir.mkdir(parents=True, exist_ok=True)

    def _file_path(self, kind: str, seed: int) -> Path:
        return self.root_dir / f"{kind}_seed{seed}.json"

    def save(self, report: dict) -> StoredReport:
        kind = str(report["kind"])
        seed = int(report["seed"])
        target = self._file_path(kind, seed)
        payload = {"schema_version": SCHEMA_VERSION, "report": report}
        with target.open("w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
        return StoredReport(path=target, kind=kind, seed=seed, reps=int(report.get("reps", 0)))

    def load(self, kind: str, seed: int) -> dict | None:
        target = self._file_path(kind, seed)
        if not target.exists():
            return None
        with target.open("r", encoding="utf-8") as f:
            payload = json.load(f)
        version = payload.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DataError(f"{target}: unsupported schema_version {version}")
        return payload["report"]
