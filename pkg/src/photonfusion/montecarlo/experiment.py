"""Time-tag simulation of pair-source experiments.

Each source event is mapped to a categorical distribution over output kets
computed exactly by the state engine; sampling picks a ket, then every
photon survives its fiber path and detector independently, is delayed by
its route, and is smeared by the detector jitter.

Randomness is drawn per time block from ``SeedSequence(seed,
spawn_key=stream_key + (block,))``, so the streams depend only on the
seed and never on how blocks are spread over workers.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from ..fock import H, V, PureState, create, vacuum, tensor
from ..optics import Circuit, run_circuit
from ..network import RoutePlan, Topology, mode_delay_us, path_loss_db
from ..source import SpdcSpec, SourceEventClass, product_pair, singlet_pair, wavepacket
from .detectors import DetectorSpec, apply_dead_time, dark_counts

__all__ = ["ConfigInvalid", "Experiment", "OutcomeTable", "SimulationRun", "simulate", "simulate_timetags", "count_probability"]

PAIR_STATES = ("singlet", "HH", "HV", "VH", "VV")


class ConfigInvalid(ValueError):
    """Experiment description is inconsistent; message names the failing path."""


@dataclass(frozen=True)
class Experiment:
    """A source, a linear-optics circuit, routes and detectors.

    ``pairs`` lists the source mode pairs. With ``grouping="independent"``
    each pair is its own Poisson stream sharing the total pair rate; with
    ``"fused"`` one event carries all pairs at once and occurs at
    ``total_pair_rate / n_pairs * fusion_probability``, the rate of
    successfully routed groups.

    ``pair_state`` is ``"singlet"`` (entangled pairs; background pairs are
    unpolarized) or a fixed product such as ``"HH"``, used for every pair.
    """

    source: SpdcSpec
    pairs: tuple
    detectors: tuple
    circuit: Circuit = field(default_factory=Circuit)
    pair_state: str = "singlet"
    grouping: str = "independent"
    fusion_probability: float = 1 / 32
    topology: Optional[Topology] = None
    plan: RoutePlan = field(default_factory=RoutePlan)
    extra_loss_db: Mapping[str, float] = field(default_factory=dict)
    duration_s: float = 1.0
    block_s: float = 0.5
    interference: bool = True

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        object.__setattr__(self, "extra_loss_db", dict(self.extra_loss_db))
        self.validate()

    def validate(self) -> None:
        if self.pair_state not in PAIR_STATES:
            raise ConfigInvalid(f"experiment.pair_state: unknown state {self.pair_state!r}")
        if self.grouping not in ("independent", "fused"):
            raise ConfigInvalid(f"experiment.grouping: unknown grouping {self.grouping!r}")
        if not self.pairs:
            raise ConfigInvalid("experiment.pairs: at least one pair required")
        modes = [m for p in self.pairs for m in p]
        if len(set(modes)) != len(modes) or any(len(p) != 2 for p in self.pairs):
            raise ConfigInvalid("experiment.pairs: modes must be distinct, two per pair")
        ids = [d.id for d in self.detectors]
        if len(set(ids)) != len(ids):
            raise ConfigInvalid("detectors: duplicate detector id")
        for i, d in enumerate(self.detectors):
            for e in self.detectors[i + 1 :]:
                if d.mode == e.mode and (d.pol is None or e.pol is None or d.pol == e.pol):
                    raise ConfigInvalid(f"detectors.{e.id}: overlaps detector {d.id} on mode {d.mode}")
        if self.duration_s < 0 or self.block_s <= 0:
            raise ConfigInvalid("experiment.duration_s must be >= 0 and block_s > 0")
        if self.plan.assignments:
            if self.topology is None:
                raise ConfigInvalid("topology: route plan given without a topology")
            errs = self.topology.validate_plan(self.plan)
            if errs:
                raise ConfigInvalid("; ".join(errs))

    # derived ---------------------------------------------------------------

    @property
    def input_modes(self) -> tuple:
        return tuple(m for p in self.pairs for m in p)

    def mode_loss_db(self, mode: str) -> float:
        loss = self.extra_loss_db.get(mode, 0.0)
        if self.plan.path(mode):
            loss += path_loss_db(self.plan, self.topology, mode)
        return loss

    def mode_delay_ps(self, mode: str) -> float:
        if self.plan.path(mode):
            return mode_delay_us(self.plan, self.topology, mode) * 1e6
        return 0.0

    def detector_for(self, mode: str, pol) -> int:
        for i, d in enumerate(self.detectors):
            if d.sees(mode, pol):
                return i
        return -1

    @property
    def event_rate_hz(self) -> float:
        total = self.source.total_pair_rate_hz
        if self.grouping == "fused":
            return total / len(self.pairs) * self.fusion_probability
        return total

    def with_circuit(self, circuit: Circuit) -> "Experiment":
        return replace(self, circuit=circuit)

    def _pair_scenarios(self, ma: str, mb: str) -> list[tuple[float, PureState]]:
        if self.pair_state != "singlet":
            pa, pb = self.pair_state
            return [(1.0, product_pair(ma, pa, mb, pb))]
        f = self.source.entangled_fraction
        out = []
        if f > 0:
            out.append((f, singlet_pair(ma, mb)))
        if f < 1:
            for pa, pb in itertools.product((H, V), repeat=2):
                out.append(((1 - f) / 4, product_pair(ma, pa, mb, pb)))
        return out

    def _run(self, state: PureState) -> PureState:
        wp = wavepacket(self.source) if self.interference else None
        return run_circuit(state, self.circuit, wp)

    def outcome_tables(self) -> list[tuple[float, "OutcomeTable"]]:
        """``(rate_hz, table)`` for each independent event stream, singles last."""
        tables = []
        if self.grouping == "fused":
            per_pair = [self._pair_scenarios(*p) for p in self.pairs]
            scen = []
            for combo in itertools.product(*per_pair):
                w = math.prod(c[0] for c in combo)
                st = combo[0][1]
                for c in combo[1:]:
                    st = tensor(st, c[1])
                scen.append((w, st))
            tables.append((self.event_rate_hz, OutcomeTable.build(self, scen)))
        else:
            rate = self.event_rate_hz / len(self.pairs)
            for p in self.pairs:
                tables.append((rate, OutcomeTable.build(self, self._pair_scenarios(*p))))
        singles_rate = self.source.background_singles_rate_hz
        if singles_rate > 0:
            modes = self.input_modes
            scen = [(1.0 / (2 * len(modes)), create(vacuum(), (m, pol, 0))) for m in modes for pol in (H, V)]
            tables.append((singles_rate, OutcomeTable.build(self, scen)))
        return tables


@dataclass(frozen=True)
class OutcomeTable:
    """Flattened categorical over (scenario, output ket).

    Row ``r`` has probability ``probs[r]``; its photons go to detectors
    ``det[r, :]`` (``-1`` = undetected or padding) with survival probability
    ``trans[r, :]`` and route delay ``delay_ps[r, :]``.
    """

    probs: np.ndarray
    det: np.ndarray
    trans: np.ndarray
    delay_ps: np.ndarray

    @classmethod
    def build(cls, exp: Experiment, scenarios) -> "OutcomeTable":
        rows = []
        for w, st in scenarios:
            out = exp._run(st)
            for ket, amp in out.terms.items():
                p = w * abs(amp) ** 2
                photons = []
                for slot, n in ket:
                    k = exp.detector_for(slot.mode, slot.pol)
                    if k < 0:
                        photons.extend([(-1, 0.0, 0.0)] * n)
                        continue
                    t = 10.0 ** (-exp.mode_loss_db(slot.mode) / 10.0) * exp.detectors[k].efficiency
                    photons.extend([(k, t, exp.mode_delay_ps(slot.mode))] * n)
                rows.append((p, photons))
        width = max((len(ph) for _, ph in rows), default=0)
        n = len(rows)
        probs = np.array([p for p, _ in rows], dtype=float)
        det = np.full((n, width), -1, dtype=np.int64)
        trans = np.zeros((n, width))
        delay = np.zeros((n, width))
        for i, (_, ph) in enumerate(rows):
            for j, (k, t, dl) in enumerate(ph):
                det[i, j], trans[i, j], delay[i, j] = k, t, dl
        total = probs.sum()
        if total > 0:
            probs = probs / total
        return cls(probs, det, trans, delay)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(n), side="right")

    def click_probability(self, detector_idx: Sequence[int]) -> float:
        """P(each listed detector receives at least one surviving photon)."""
        total = 0.0
        for r in range(self.probs.size):
            p = self.probs[r]
            for k in detector_idx:
                sel = self.det[r] == k
                p *= 1.0 - np.prod(1.0 - self.trans[r][sel])
                if p == 0:
                    break
            total += p
        return float(total)


@dataclass
class SimulationRun:
    streams: dict
    events: int
    duration_s: float


def _block_tags(exp: Experiment, tables, seed: int, stream_key: tuple, block: int):
    t0 = block * exp.block_s
    t1 = min(exp.duration_s, t0 + exp.block_s)
    t0_ps, t1_ps = t0 * 1e12, t1 * 1e12
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream_key) + (block,)))
    nd = len(exp.detectors)
    sigmas = np.array([d.jitter_sigma_ps for d in exp.detectors] + [0.0])
    per_det: list[list[np.ndarray]] = [[] for _ in range(nd)]
    n_events = 0
    for i, (rate, table) in enumerate(tables):
        n = rng.poisson(rate * (t1 - t0))
        times = t0_ps + rng.random(n) * (t1_ps - t0_ps)
        if i < len(tables) - (1 if exp.source.background_singles_rate_hz > 0 else 0):
            n_events += n
        if n == 0 or table.det.shape[1] == 0:
            continue
        rows = table.sample(n, rng)
        det = table.det[rows]
        alive = (det >= 0) & (rng.random(det.shape) < table.trans[rows])
        jitter = rng.standard_normal(det.shape) * sigmas[det]
        t = times[:, None] + table.delay_ps[rows] + jitter
        for k in range(nd):
            sel = alive & (det == k)
            if sel.any():
                per_det[k].append(t[sel])
    for k, d in enumerate(exp.detectors):
        if d.background_rate_hz > 0:
            per_det[k].append(dark_counts(d.background_rate_hz, t0_ps, t1_ps, rng))
    out = [np.rint(np.concatenate(p)).astype(np.int64) if p else np.empty(0, dtype=np.int64) for p in per_det]
    return out, n_events


def simulate(exp: Experiment, seed: int, stream_key: tuple = (), workers: int = 1) -> SimulationRun:
    """Generate sorted per-detector tag streams for ``exp.duration_s``."""
    tables = exp.outcome_tables()
    nblocks = int(math.ceil(exp.duration_s / exp.block_s - 1e-12)) if exp.duration_s > 0 else 0
    job = lambda b: _block_tags(exp, tables, seed, stream_key, b)  # noqa: E731
    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(nblocks)))
    else:
        results = [job(b) for b in range(nblocks)]
    streams = {}
    for k, d in enumerate(exp.detectors):
        parts = [r[0][k] for r in results]
        arr = np.sort(np.concatenate(parts)) if parts else np.empty(0, dtype=np.int64)
        streams[d.id] = apply_dead_time(arr, d.dead_time_ps)
    return SimulationRun(streams, int(sum(r[1] for r in results)), exp.duration_s)


def simulate_timetags(exp: Experiment, seed: int, stream_key: tuple = (), workers: int = 1) -> dict:
    return simulate(exp, seed, stream_key, workers).streams


def count_probability(exp: Experiment, channels: Sequence[str]) -> float:
    """Per-event probability that every listed detector clicks (no noise).

    Uses the first event stream (the fused group, or the first pair).
    """
    idx = [next(i for i, d in enumerate(exp.detectors) if d.id == c) for c in channels]
    rate, table = exp.outcome_tables()[0]
    return table.click_probability(idx)
