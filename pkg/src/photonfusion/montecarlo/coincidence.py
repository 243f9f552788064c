"""Coincidence search, G2(tau) histograms and accidental estimation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

__all__ = [
    "CoincidenceSpec",
    "Histogram",
    "EmptyHistogram",
    "find_coincidences",
    "count_coincidences",
    "g2_histogram",
    "relative_delay_estimate",
    "correlation_fwhm",
    "accidental_counts",
    "accidental_estimate",
    "default_accidental_offset",
]


class EmptyHistogram(ValueError):
    pass


@dataclass(frozen=True)
class CoincidenceSpec:
    """``window_ps`` bounds the spread of one coincidence: every member lies
    within ``window_ps`` of the earliest member. Offsets are added to a
    channel's tags before matching (software gating)."""

    channels: tuple
    window_ps: int
    channel_offsets_ps: Mapping[str, int] = field(default_factory=dict)
    histogram_bin_ps: int = 100
    fold: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "channel_offsets_ps", dict(self.channel_offsets_ps))
        if self.fold is None:
            object.__setattr__(self, "fold", len(self.channels))
        if self.fold < 2:
            raise ValueError("fold must be >= 2")
        if self.fold != len(self.channels):
            raise ValueError(f"fold {self.fold} does not match the {len(self.channels)} required channels")
        if len(set(self.channels)) != len(self.channels):
            raise ValueError("channels must be distinct")
        if self.window_ps <= 0:
            raise ValueError("window_ps must be positive")

    def with_channels(self, channels) -> "CoincidenceSpec":
        return CoincidenceSpec(tuple(channels), self.window_ps, self.channel_offsets_ps, self.histogram_bin_ps)


def _shifted(streams: Mapping[str, np.ndarray], spec: CoincidenceSpec, extra: Optional[Mapping[str, int]] = None):
    out = []
    for ch in spec.channels:
        arr = np.asarray(streams.get(ch, np.empty(0, dtype=np.int64)), dtype=np.int64)
        off = int(spec.channel_offsets_ps.get(ch, 0)) + int((extra or {}).get(ch, 0))
        out.append(arr + off if off else arr)
    return out


def _near_all(arrs: list[np.ndarray], w: int) -> list[np.ndarray]:
    """Keep tags that have a partner within ``w`` in every other channel.

    Tags failing this can never join a coincidence, and removing them does
    not change what the greedy matcher picks.
    """
    keep = []
    for i, a in enumerate(arrs):
        mask = np.ones(a.size, dtype=bool)
        for j, b in enumerate(arrs):
            if i == j or not mask.any():
                continue
            lo = np.searchsorted(b, a - w, side="left")
            hi = np.searchsorted(b, a + w, side="right")
            mask &= hi > lo
        keep.append(a[mask])
    return keep


def find_coincidences(streams: Mapping[str, np.ndarray], spec: CoincidenceSpec) -> list[tuple]:
    """Greedy earliest-first, use-once matching.

    Returns one tuple of (offset-corrected) times per coincidence, ordered
    as ``spec.channels``.
    """
    w = int(spec.window_ps)
    arrs = _near_all(_shifted(streams, spec), w)
    if any(a.size == 0 for a in arrs):
        return []
    lists = [a.tolist() for a in arrs]
    sizes = [len(l) for l in lists]
    ptr = [0] * len(lists)
    k = len(lists)
    events = []
    while all(ptr[c] < sizes[c] for c in range(k)):
        heads = [lists[c][ptr[c]] for c in range(k)]
        t0 = min(heads)
        if max(heads) - t0 <= w:
            events.append(tuple(heads))
            for c in range(k):
                ptr[c] += 1
        else:
            ptr[heads.index(t0)] += 1
    return events


def count_coincidences(streams: Mapping[str, np.ndarray], spec: CoincidenceSpec) -> int:
    return len(find_coincidences(streams, spec))


def default_accidental_offset(spec: CoincidenceSpec) -> int:
    return max(50 * int(spec.window_ps), 200_000)


def accidental_counts(streams: Mapping[str, np.ndarray], spec: CoincidenceSpec, offset_ps: int) -> int:
    """Coincidences with the last required channel displaced by ``offset_ps``."""
    return len(find_coincidences(_offset_streams(streams, spec, offset_ps), spec))


def _offset_streams(streams, spec, offset_ps):
    last = spec.channels[-1]
    shifted = dict(streams)
    if last in shifted:
        shifted[last] = np.asarray(shifted[last], dtype=np.int64) + int(offset_ps)
    return shifted


def _span_s(streams: Mapping[str, np.ndarray]) -> float:
    firsts = [a[0] for a in streams.values() if len(a)]
    lasts = [a[-1] for a in streams.values() if len(a)]
    if not firsts:
        return 0.0
    return (max(lasts) - min(firsts)) * 1e-12


def accidental_estimate(
    streams: Mapping[str, np.ndarray],
    spec: CoincidenceSpec,
    offset_ps: int,
    duration_s: Optional[float] = None,
) -> float:
    """Accidental coincidence rate (Hz) from the shifted-window estimator."""
    n = accidental_counts(streams, spec, offset_ps)
    if n == 0:
        return 0.0
    dur = duration_s if duration_s is not None else _span_s(streams)
    return n / dur if dur > 0 else 0.0


@dataclass(frozen=True)
class Histogram:
    bin_ps: int
    origin_ps: int
    counts: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return self.origin_ps + (np.arange(self.counts.size) + 0.5) * self.bin_ps

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_center_ps", "count"])
            for c, n in zip(self.centers.tolist(), self.counts.tolist()):
                w.writerow([repr(c), n])


def g2_histogram(stream_a: np.ndarray, stream_b: np.ndarray, range_ps: tuple, bin_ps: int) -> Histogram:
    """Histogram of ``t_b - t_a`` over all tag pairs with delay in ``[lo, hi)``."""
    lo, hi = (int(x) for x in range_ps)
    if hi <= lo or (hi - lo) % bin_ps:
        raise ValueError("bin_ps must evenly divide the range")
    a = np.asarray(stream_a, dtype=np.int64)
    b = np.asarray(stream_b, dtype=np.int64)
    nbins = (hi - lo) // bin_ps
    counts = np.zeros(nbins, dtype=np.int64)
    if a.size and b.size:
        start = np.searchsorted(b, a + lo, side="left")
        stop = np.searchsorted(b, a + hi, side="left")
        n = stop - start
        total = int(n.sum())
        if total:
            rep_a = np.repeat(a, n)
            # index into b: start[i] + (0..n[i]-1)
            offs = np.arange(total) - np.repeat(np.cumsum(n) - n, n)
            d = b[np.repeat(start, n) + offs] - rep_a
            counts = np.bincount((d - lo) // bin_ps, minlength=nbins)[:nbins].astype(np.int64)
    return Histogram(int(bin_ps), lo, counts)


def relative_delay_estimate(hist: Histogram) -> float:
    """Center of the fullest bin; ties go to the smaller ``|tau|``."""
    if hist.counts.size == 0 or hist.total == 0:
        raise EmptyHistogram("histogram has no counts")
    peak = hist.counts.max()
    cands = hist.centers[hist.counts == peak]
    return float(cands[np.argmin(np.abs(cands))])


def _gauss(x, amp, mu, sigma, base):
    return base + amp * np.exp(-0.5 * ((x - mu) / sigma) ** 2)


def correlation_fwhm(hist: Histogram, half_span_ps: Optional[float] = None) -> dict:
    """Gaussian-plus-constant fit around the histogram peak.

    Returns ``center_ps``, ``sigma_ps`` and ``fwhm_ps``.
    """
    if hist.total == 0:
        raise EmptyHistogram("histogram has no counts")
    x = hist.centers
    y = hist.counts.astype(float)
    i = int(np.argmax(y))
    span = half_span_ps if half_span_ps is not None else 20 * hist.bin_ps
    sel = np.abs(x - x[i]) <= span
    xs, ys = x[sel], y[sel]
    p0 = [ys.max() - np.median(y), x[i], max(hist.bin_ps, span / 6), float(np.median(y))]
    popt, _ = curve_fit(_gauss, xs, ys, p0=p0, maxfev=20000)
    sigma = abs(popt[2])
    return {"center_ps": float(popt[1]), "sigma_ps": float(sigma), "fwhm_ps": float(sigma * 2.0 * math.sqrt(2.0 * math.log(2.0)))}
