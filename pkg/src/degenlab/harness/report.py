"""Experiment reports: JSON records, CSV tables and exit status."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ExperimentReport", "to_jsonable", "load_reports", "summarize"]

PASS, FAIL, BREACH = 0, 1, 2


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


@dataclass
class ExperimentReport:
    """Outcome of one experiment.

    ``verdicts`` maps criterion names to booleans; ``breaches`` lists oracle
    disagreements (numerical faults, as opposed to failed inequalities).
    """

    experiment: str
    config: dict
    records: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    breaches: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    wallclock: float = 0.0

    @property
    def oracle_breach(self):
        return bool(self.breaches)

    @property
    def status(self):
        if self.oracle_breach:
            return BREACH
        return PASS if all(self.verdicts.values()) else FAIL

    @property
    def passed(self):
        return self.status == PASS

    def add_table(self, name, columns, rows):
        self.tables[name] = {"columns": list(columns), "rows": [list(r) for r in rows]}

    def to_json(self):
        return to_jsonable({
            "experiment": self.experiment, "config": self.config, "records": self.records,
            "fits": self.fits, "tables": self.tables, "verdicts": self.verdicts,
            "oracle_breach": self.oracle_breach, "breaches": self.breaches,
            "notes": self.notes, "wallclock": self.wallclock, "status": self.status})

    def write(self, out_dir, stem=None):
        os.makedirs(out_dir, exist_ok=True)
        stem = stem or self.experiment
        path = os.path.join(out_dir, f"{stem}.json")
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
        for name, tab in self.tables.items():
            with open(os.path.join(out_dir, f"{stem}_{name}.csv"), "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(tab["columns"])
                wr.writerows(to_jsonable(tab["rows"]))
        return path

    def summary_lines(self):
        lines = []
        for name, ok in self.verdicts.items():
            lines.append(f"[{'PASS' if ok else 'FAIL'}] {self.experiment}: {name}")
        for b in self.breaches:
            lines.append(f"[BREACH] {self.experiment}: {b}")
        return lines


def load_reports(out_dir):
    reports = []
    for fname in sorted(os.listdir(out_dir)):
        if fname.endswith(".json"):
            with open(os.path.join(out_dir, fname)) as fh:
                data = json.load(fh)
            if isinstance(data, dict) and "verdicts" in data:
                data["_file"] = fname
                reports.append(data)
    return reports


def summarize(out_dir):
    """Collect verdicts of all reports in ``out_dir``; returns (rows, status)."""
    rows, status = [], PASS
    for rep in load_reports(out_dir):
        for name, ok in rep["verdicts"].items():
            rows.append((rep["_file"], rep["experiment"], name, "PASS" if ok else "FAIL"))
        for b in rep.get("breaches", []):
            rows.append((rep["_file"], rep["experiment"], b, "BREACH"))
        status = max(status, int(rep.get("status", PASS)))
    return rows, status
