"""Detector models and time-tag stream utilities.

A tag stream is a sorted ``int64`` array of picosecond timestamps; a set
of streams is a ``{detector_id: array}`` dict.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional

import numpy as np

from ..fock import Polarization

__all__ = ["DetectorSpec", "TimeTag", "apply_dead_time", "dark_counts", "merge_streams", "write_timetags", "read_timetags"]

FWHM_TO_SIGMA = 1.0 / 2.3548200450309493


@dataclass(frozen=True)
class DetectorSpec:
    """A threshold detector watching one output mode.

    ``pol`` restricts it to one polarization (a PBS port); ``None`` accepts
    both. ``noise_rate_hz`` is a flat extra background (Raman and stray
    light) on top of the intrinsic dark counts.
    """

    id: str
    mode: str
    pol: Optional[Polarization] = None
    efficiency: float = 1.0
    dark_rate_hz: float = 0.0
    jitter_fwhm_ps: float = 0.0
    dead_time_ps: float = 0.0
    noise_rate_hz: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"detector {self.id}: efficiency must lie in [0, 1]")
        for name in ("dark_rate_hz", "jitter_fwhm_ps", "dead_time_ps", "noise_rate_hz"):
            if getattr(self, name) < 0:
                raise ValueError(f"detector {self.id}: {name} must be >= 0")
        if self.pol is not None:
            object.__setattr__(self, "pol", Polarization(self.pol))

    @property
    def jitter_sigma_ps(self) -> float:
        return self.jitter_fwhm_ps * FWHM_TO_SIGMA

    @property
    def background_rate_hz(self) -> float:
        return self.dark_rate_hz + self.noise_rate_hz

    def sees(self, mode: str, pol: Polarization) -> bool:
        return mode == self.mode and (self.pol is None or self.pol == pol)


class TimeTag(NamedTuple):
    detector_id: str
    time_ps: int


def dark_counts(rate_hz: float, t0_ps: float, t1_ps: float, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(rate_hz * (t1_ps - t0_ps) * 1e-12)
    return t0_ps + rng.random(n) * (t1_ps - t0_ps)


def apply_dead_time(tags: np.ndarray, dead_time_ps: float) -> np.ndarray:
    """Drop tags arriving within ``dead_time_ps`` of the previous registered tag."""
    if dead_time_ps <= 0 or tags.size < 2:
        return tags
    keep = np.zeros(tags.size, dtype=bool)
    last = None
    for i, t in enumerate(tags.tolist()):
        if last is None or t - last >= dead_time_ps:
            keep[i] = True
            last = t
    return tags[keep]


def merge_streams(streams: Mapping[str, np.ndarray]) -> list[TimeTag]:
    """One time-ordered list; equal times are ordered by detector id."""
    out = [TimeTag(d, int(t)) for d, arr in streams.items() for t in arr]
    out.sort(key=lambda tag: (tag.time_ps, tag.detector_id))
    return out


def write_timetags(streams: Mapping[str, np.ndarray], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["detector_id", "time_ps"])
        for tag in merge_streams(streams):
            w.writerow([tag.detector_id, tag.time_ps])


def read_timetags(path) -> dict[str, np.ndarray]:
    buckets: dict[str, list[int]] = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["detector_id", "time_ps"]:
            raise ValueError(f"unexpected time-tag header {header}")
        for det, t in r:
            buckets.setdefault(det, []).append(int(t))
    return {d: np.sort(np.asarray(v, dtype=np.int64)) for d, v in buckets.items()}
