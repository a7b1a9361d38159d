"""CSV and JSON artifacts for runs.

Column orders are part of the external contract:
trajectory.csv: t,residual,dist_to_solution,objective_at_z,gamma
iterates.csv:   n,residual,dist_to_solution,objective_at_z,gamma
envelope.csv:   t,measured,envelope
All writers are deterministic (no timestamps, sorted JSON keys).
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .diagnostics import EnvelopeReport
from .discrete import IterateRecord
from .dynamics import TrajectoryRecord

TRAJECTORY_COLUMNS = ("t", "residual", "dist_to_solution", "objective_at_z", "gamma")
ITERATE_COLUMNS = ("n", "residual", "dist_to_solution", "objective_at_z", "gamma")


def _cell(value) -> str:
    return "" if value is None else repr(float(value))


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_trajectory_csv(path, record: TrajectoryRecord) -> None:
    rows = []
    for k in range(len(record.ts)):
        rows.append(
            (
                _cell(record.ts[k]),
                _cell(record.residuals[k]),
                _cell(record.dists[k]) if record.dists is not None else "",
                _cell(record.objectives[k]) if record.objectives is not None else "",
                _cell(record.gammas[k]),
            )
        )
    _write_rows(path, TRAJECTORY_COLUMNS, rows)


def write_iterates_csv(path, record: IterateRecord) -> None:
    rows = []
    for k in range(len(record.ns)):
        rows.append(
            (
                str(int(record.ns[k])),
                _cell(record.residuals[k]),
                _cell(record.dists[k]) if record.dists is not None else "",
                _cell(record.objectives[k]) if record.objectives is not None else "",
                _cell(record.gammas[k]),
            )
        )
    _write_rows(path, ITERATE_COLUMNS, rows)


def write_envelope_csv(path, report: EnvelopeReport) -> None:
    rows = [
        (_cell(report.times[k]), _cell(report.measured[k]), _cell(report.envelope[k]))
        for k in range(len(report.times))
    ]
    _write_rows(path, ("t", "measured", "envelope"), rows)


def read_trajectory_csv(path, beta=None) -> TrajectoryRecord:
    """Rebuild a partial record from trajectory.csv.

    States are not stored in the CSV, so the result carries distances,
    residuals and gammas only; the accumulated weight is reconstructed by
    trapezoidal integration of gamma.  Monitors needing states report
    inapplicable on such records.
    """
    ts, residuals, dists, objectives, gammas = [], [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ts.append(float(row["t"]))
            residuals.append(float(row["residual"]))
            dists.append(float(row["dist_to_solution"]) if row["dist_to_solution"] else None)
            objectives.append(float(row["objective_at_z"]) if row["objective_at_z"] else None)
            gammas.append(float(row["gamma"]))
    ts = np.asarray(ts)
    gammas = np.asarray(gammas)
    dens = np.zeros(len(ts))
    if len(ts) > 1:
        dens[1:] = np.cumsum(0.5 * np.diff(ts) * (gammas[:-1] + gammas[1:]))
    return TrajectoryRecord(
        ts=ts,
        xs=None,
        zs=None,
        residuals=np.asarray(residuals),
        gammas=gammas,
        ergodic_nums=None,
        ergodic_dens=dens,
        dists=None if any(d is None for d in dists) else np.asarray(dists, dtype=float),
        objectives=None
        if any(o is None for o in objectives)
        else np.asarray(objectives, dtype=float),
        beta=beta,
        h=None,
        method="csv",
    )


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays for json.dumps."""
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(to_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_summary_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
