"""Flat-file artifacts: trajectory CSVs, JSON sidecars, atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from .evolution import Trajectory

TRAJECTORY_COLUMNS = ("n", "m1", "m2", "variance", "Pg", "Pe", "ReQ", "ImQ", "S", "norm", "leakage")


def fmt(value) -> str:
    """Shortest round-trip text for a float (17 significant digits at most)."""
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return repr(float(value))


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buffer.getvalue()


def trajectory_rows(traj: Trajectory, with_flag: bool):
    for rec in traj.steps:
        row = [rec.n, rec.m1, rec.m2, rec.variance, rec.P_g, rec.P_e, rec.Q.real, rec.Q.imag, rec.S, rec.norm,
               rec.leakage]
        if with_flag:
            row.append(int(rec.flagged))
        yield row


def write_trajectory_csv(path, traj: Trajectory) -> bool:
    """Write one row per step.  A trailing ``flag`` column is added only when a
    record breached the leakage threshold; returns whether that happened."""
    flagged = traj.truncation_compromised
    header = list(TRAJECTORY_COLUMNS) + (["flag"] if flagged else [])
    atomic_write_text(path, csv_text(header, trajectory_rows(traj, flagged)))
    return flagged


def read_csv(path) -> dict[str, list]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        columns = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                columns[name].append(int(cell) if name in ("n", "flag") else _cell(cell))
    return columns


def _cell(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_suffix(".json") if path.suffix else path.with_name(path.name + ".json")


def write_sidecar(path, config: dict, wall_time: float, flags: list, version: str, **extra):
    payload = {"config": config, "library_version": version, "wall_time": wall_time, "flags": list(flags)}
    payload.update(extra)
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n")


def read_sidecar(path) -> dict:
    with open(path) as handle:
        return json.load(handle)
