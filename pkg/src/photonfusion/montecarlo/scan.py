"""Parameter scans: simulate each point, count folds, subtract accidentals."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .coincidence import CoincidenceSpec, accidental_counts, count_coincidences, default_accidental_offset
from .experiment import Experiment, count_probability, simulate

__all__ = ["SCAN_AXES", "ScanRow", "scan", "predict_scan", "experiment_at", "write_scan_csv"]

SCAN_AXES = ("vdl_delay", "lcvr_phase", "projection_pattern")


@dataclass(frozen=True)
class ScanRow:
    point: object
    quantity: str
    raw: int
    accidental: int
    subtracted: int
    events: int

    def as_dict(self) -> dict:
        return {
            "scan_value": self.point,
            "quantity": self.quantity,
            "raw": self.raw,
            "accidental": self.accidental,
            "subtracted": self.subtracted,
            "events": self.events,
        }


def experiment_at(exp: Experiment, axis: str, point) -> Experiment:
    if axis == "vdl_delay":
        return exp.with_circuit(exp.circuit.with_delay(float(point)))
    if axis == "lcvr_phase":
        return exp.with_circuit(exp.circuit.with_retardance(float(point)))
    if axis == "projection_pattern":
        return exp
    raise ValueError(f"unknown scan axis {axis!r}; expected one of {SCAN_AXES}")


def _count_sets(axis: str, point, counts: Mapping[str, Sequence[str]]) -> dict:
    if axis == "projection_pattern":
        # the point names one entry of ``counts``
        return {str(point): counts[str(point)]}
    return dict(counts)


def scan(
    exp: Experiment,
    axis: str,
    points: Sequence,
    seed: int,
    coincidence: CoincidenceSpec,
    counts: Mapping[str, Sequence[str]],
    workers: int = 1,
    accidental_offset_ps: int | None = None,
) -> list[ScanRow]:
    """One simulation per point; ``counts`` maps quantity name -> channels.

    For the ``projection_pattern`` axis the points are keys of ``counts`` and
    a single acquisition is shared by all of them.
    Point ``i`` draws from the random substream ``(i, block)`` of ``seed``.
    """
    if axis not in SCAN_AXES:
        raise ValueError(f"unknown scan axis {axis!r}; expected one of {SCAN_AXES}")
    offset = accidental_offset_ps if accidental_offset_ps is not None else default_accidental_offset(coincidence)
    rows = []
    if axis == "projection_pattern":
        # all patterns are read from the same acquisition
        run = simulate(exp, seed, stream_key=(0,), workers=workers)
        for point in points:
            spec = coincidence.with_channels(counts[str(point)])
            raw = count_coincidences(run.streams, spec)
            acc = accidental_counts(run.streams, spec, offset)
            rows.append(ScanRow(point, str(point), raw, acc, raw - acc, run.events))
        return rows
    for i, point in enumerate(points):
        run = simulate(experiment_at(exp, axis, point), seed, stream_key=(i,), workers=workers)
        for name, channels in _count_sets(axis, point, counts).items():
            spec = coincidence.with_channels(channels)
            raw = count_coincidences(run.streams, spec)
            acc = accidental_counts(run.streams, spec, offset)
            rows.append(ScanRow(point, name, raw, acc, raw - acc, run.events))
    return rows


def predict_scan(exp: Experiment, axis: str, points: Sequence, counts: Mapping[str, Sequence[str]]) -> list[tuple]:
    """Engine probabilities per event for each point and count set."""
    out = []
    for point in points:
        e = experiment_at(exp, axis, point)
        for name, channels in _count_sets(axis, point, counts).items():
            out.append((point, name, count_probability(e, channels)))
    return out


def write_scan_csv(rows: Sequence[ScanRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scan_value", "quantity", "raw", "accidental", "subtracted", "events"])
        for r in rows:
            pv = repr(float(r.point)) if not isinstance(r.point, str) else r.point
            w.writerow([pv, r.quantity, r.raw, r.accidental, r.subtracted, r.events])
