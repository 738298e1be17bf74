"""Structured experiment reports and deterministic artifact writers."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

REPORT_VERSION = 1


@dataclass
class Assertion:
    name: str
    relation: str
    observed: Any
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "relation": self.relation,
            "observed": _jsonable(self.observed),
            "passed": bool(self.passed),
        }


@dataclass
class ExperimentReport:
    """Inputs, measured quantities and pass/fail checks of one experiment run."""

    experiment: str
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    assertions: list[Assertion] = field(default_factory=list)
    artifact_paths: list[str] = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    documents: dict = field(default_factory=dict)  # file name -> JSON-able artifact

    def check(self, name: str, relation: str, observed, passed) -> bool:
        """Record a named check and return whether it passed."""
        self.assertions.append(Assertion(name, relation, observed, bool(passed)))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def failures(self) -> list[Assertion]:
        return [a for a in self.assertions if not a.passed]

    def to_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "experiment": self.experiment,
            "config": _jsonable(self.config),
            "metrics": _jsonable(self.metrics),
            "assertions": [a.to_dict() for a in self.assertions],
            "artifact_paths": list(self.artifact_paths),
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, allow_nan=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def format_float(x) -> str:
    """17 significant digits, ``.`` separator; the bit-exact CSV contract."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else format_float(v) for v in row])
    return buf.getvalue()


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))
