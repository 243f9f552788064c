"""Fiber-optic elements and circuits built on the Fock-state primitives.

Beamsplitters act identically on every polarization and temporal bin;
rotations, retarders and the PBS act on the (H, V) pair of a single mode.
Relative delays between the two inputs of a beamsplitter are turned into
partial distinguishability by splitting the delayed photon over two
orthogonal temporal bins just before the mixing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .fock import H, V, PureState, SlotKey, apply_coupler, make_ket

__all__ = [
    "UnknownMode",
    "NonPositiveWidth",
    "WavepacketModel",
    "BeamSplitter",
    "PBS",
    "LCVR",
    "Rotation",
    "DelayLine",
    "Circuit",
    "Coupler",
    "Decomposition",
    "beamsplitter_matrix",
    "rotation_matrix",
    "retarder_matrix",
    "element_to_coupler",
    "resolve_distinguishability",
    "run_circuit",
    "sigma_t_from_bandwidth",
]

SPEED_OF_LIGHT = 299_792_458.0
GAUSS_TBP = 0.441  # time-bandwidth product of a transform-limited Gaussian (FWHM)
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class UnknownMode(KeyError):
    pass


class NonPositiveWidth(ValueError):
    pass


def sigma_t_from_bandwidth(wavelength_nm: float, bandwidth_fwhm_nm: float) -> dict:
    """Coherence time of a transform-limited Gaussian wavepacket.

    Returns a dict with ``delta_nu_hz``, ``fwhm_ps`` and ``sigma_ps``.
    """
    if bandwidth_fwhm_nm <= 0:
        raise NonPositiveWidth("bandwidth must be positive")
    lam = wavelength_nm * 1e-9
    delta_nu = SPEED_OF_LIGHT * bandwidth_fwhm_nm * 1e-9 / lam**2
    fwhm_ps = GAUSS_TBP / delta_nu * 1e12
    return {"delta_nu_hz": delta_nu, "fwhm_ps": fwhm_ps, "sigma_ps": fwhm_ps / FWHM_PER_SIGMA}


@dataclass(frozen=True)
class WavepacketModel:
    """Gaussian wavepacket with rms width ``sigma_t_ps``.

    ``overlap_cap`` bounds the mode overlap at zero delay and stands in for
    source imperfections that spoil interference.
    """

    sigma_t_ps: float
    overlap_cap: float = 1.0

    def __post_init__(self):
        if not self.sigma_t_ps > 0:
            raise NonPositiveWidth(f"sigma_t_ps must be > 0, got {self.sigma_t_ps}")
        if not 0.0 <= self.overlap_cap <= 1.0:
            raise ValueError("overlap_cap must lie in [0, 1]")

    @classmethod
    def from_bandwidth(cls, wavelength_nm: float, bandwidth_fwhm_nm: float, overlap_cap: float = 1.0):
        return cls(sigma_t_from_bandwidth(wavelength_nm, bandwidth_fwhm_nm)["sigma_ps"], overlap_cap)

    def overlap(self, delay_ps: float) -> float:
        return self.overlap_cap * math.exp(-(delay_ps**2) / (4.0 * self.sigma_t_ps**2))


# elements ------------------------------------------------------------------


@dataclass(frozen=True)
class BeamSplitter:
    in1: str
    in2: str
    out1: Optional[str] = None
    out2: Optional[str] = None
    ratio: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"splitting ratio must lie in (0, 1), got {self.ratio}")
        if self.out1 is None:
            object.__setattr__(self, "out1", self.in1)
        if self.out2 is None:
            object.__setattr__(self, "out2", self.in2)

    @property
    def modes(self):
        return (self.in1, self.in2, self.out1, self.out2)


@dataclass(frozen=True)
class PBS:
    """Polarizing beamsplitter: rotate by the slow-axis angle, then route H/V."""

    inp: str
    out_h: str
    out_v: str
    slow_axis_deg: float = 0.0
    error_deg: float = 0.0

    @property
    def modes(self):
        return (self.inp, self.out_h, self.out_v)


@dataclass(frozen=True)
class LCVR:
    mode: str
    retardance_rad: float = 0.0

    @property
    def modes(self):
        return (self.mode,)


@dataclass(frozen=True)
class Rotation:
    mode: str
    angle_deg: float = 0.0

    @property
    def modes(self):
        return (self.mode,)


@dataclass(frozen=True)
class DelayLine:
    mode: str
    delay_ps: float = 0.0

    @property
    def modes(self):
        return (self.mode,)


Element = Union[BeamSplitter, PBS, LCVR, Rotation, DelayLine]


@dataclass(frozen=True)
class Circuit:
    elements: tuple = ()
    mode_registry: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.mode_registry is not None:
            object.__setattr__(self, "mode_registry", frozenset(self.mode_registry))
            for e in self.elements:
                missing = [m for m in e.modes if m not in self.mode_registry]
                if missing:
                    raise UnknownMode(f"{type(e).__name__} references unregistered modes {missing}")

    def __add__(self, other: "Circuit") -> "Circuit":
        reg = None
        if self.mode_registry is not None and other.mode_registry is not None:
            reg = self.mode_registry | other.mode_registry
        return Circuit(self.elements + other.elements, reg)

    def with_delay(self, delay_ps: float) -> "Circuit":
        return Circuit(
            tuple(replace(e, delay_ps=delay_ps) if isinstance(e, DelayLine) else e for e in self.elements),
            self.mode_registry,
        )

    def with_retardance(self, phase_rad: float) -> "Circuit":
        return Circuit(
            tuple(replace(e, retardance_rad=phase_rad) if isinstance(e, LCVR) else e for e in self.elements),
            self.mode_registry,
        )


# couplers ------------------------------------------------------------------


def beamsplitter_matrix(ratio: float = 0.5) -> np.ndarray:
    t, r = math.sqrt(ratio), math.sqrt(1.0 - ratio)
    return np.array([[t, r], [r, -t]], dtype=complex)


def rotation_matrix(angle_deg: float) -> np.ndarray:
    th = math.radians(angle_deg)
    c, s = math.cos(th), math.sin(th)
    return np.array([[c, s], [-s, c]], dtype=complex)


def retarder_matrix(phase_rad: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * phase_rad)]], dtype=complex)


@dataclass(frozen=True)
class Coupler:
    """What an element does to the state.

    ``kind`` is ``"spatial"`` (mix two modes for every pol/tbin),
    ``"polarization"`` (mix H and V of one mode, optionally followed by
    routing H and V to separate modes) or ``"delay"``.
    """

    kind: str
    modes: tuple
    outputs: tuple = ()
    u: Optional[np.ndarray] = None
    delay_ps: float = 0.0


def element_to_coupler(e: Element, registry: Optional[Iterable[str]] = None) -> Coupler:
    if registry is not None:
        registry = set(registry)
        missing = [m for m in e.modes if m not in registry]
        if missing:
            raise UnknownMode(f"{type(e).__name__} references unknown modes {missing}")
    if isinstance(e, BeamSplitter):
        return Coupler("spatial", (e.in1, e.in2), (e.out1, e.out2), beamsplitter_matrix(e.ratio))
    if isinstance(e, Rotation):
        return Coupler("polarization", (e.mode,), (), rotation_matrix(e.angle_deg))
    if isinstance(e, LCVR):
        return Coupler("polarization", (e.mode,), (), retarder_matrix(e.retardance_rad))
    if isinstance(e, PBS):
        return Coupler("polarization", (e.inp,), (e.out_h, e.out_v), rotation_matrix(e.slow_axis_deg + e.error_deg))
    if isinstance(e, DelayLine):
        return Coupler("delay", (e.mode,), (), None, float(e.delay_ps))
    raise TypeError(f"unsupported element {e!r}")


@dataclass(frozen=True)
class Decomposition:
    overlap: float
    orthogonal: float
    tbins: tuple = (0, 1)


def resolve_distinguishability(delay_ps: float, model: WavepacketModel) -> Decomposition:
    """Split a delayed photon into an overlapping and an orthogonal part."""
    v = model.overlap(delay_ps)
    return Decomposition(v, math.sqrt(max(0.0, 1.0 - v * v)))


def _tbins(state: PureState) -> range:
    return range(state.max_tbin() + 1)


def _occupied(state: PureState, mode: str) -> bool:
    return any(s.mode == mode for k in state.terms for s, _ in k)


def _reroute(state: PureState, mode: str, out_h: str, out_v: str) -> PureState:
    target = {H: out_h, V: out_v}
    out = {}
    for ket, amp in state.terms.items():
        counts = {}
        for s, n in ket:
            if s.mode == mode:
                s = SlotKey(target[s.pol], s.pol, s.tbin)
                if s in counts:
                    raise ValueError(f"PBS output slot {s} already occupied")
            elif s in counts:
                raise ValueError(f"PBS output slot {s} already occupied")
            counts[s] = n
        out[make_ket(counts)] = amp
    return PureState(out, state.prune_epsilon)


def _apply_distinguishability(state: PureState, mode: str, dec: Decomposition) -> PureState:
    fresh = state.max_tbin() + 1
    u = np.array([[dec.overlap, dec.orthogonal], [-dec.orthogonal, dec.overlap]], dtype=complex)
    for pol in (H, V):
        state = apply_coupler(state, SlotKey(mode, pol, 0), SlotKey(mode, pol, fresh), u)
    return state


def apply_coupler_family(state: PureState, c: Coupler) -> PureState:
    if c.kind == "spatial":
        in1, in2 = c.modes
        out1, out2 = c.outputs
        for t in _tbins(state):
            for pol in (H, V):
                state = apply_coupler(
                    state,
                    SlotKey(in1, pol, t),
                    SlotKey(in2, pol, t),
                    c.u,
                    SlotKey(out1, pol, t),
                    SlotKey(out2, pol, t),
                )
        return state
    if c.kind == "polarization":
        (mode,) = c.modes
        for t in _tbins(state):
            state = apply_coupler(state, SlotKey(mode, H, t), SlotKey(mode, V, t), c.u)
        if c.outputs:
            state = _reroute(state, mode, *c.outputs)
        return state
    if c.kind == "delay":
        return state
    raise ValueError(f"unknown coupler kind {c.kind!r}")


def run_circuit(
    state: PureState,
    circuit: Circuit,
    wavepacket: Optional[WavepacketModel] = None,
    centers: Optional[dict] = None,
) -> PureState:
    """Apply the circuit's elements in order.

    ``centers`` gives initial wavepacket arrival times per mode (ps, default
    0). Without a wavepacket model, all photons are treated as identical.
    """
    if circuit.mode_registry is not None:
        extra = state.modes() - circuit.mode_registry
        if extra:
            raise UnknownMode(f"state occupies unregistered modes {sorted(extra)}")
    centers = dict(centers or {})
    for e in circuit.elements:
        c = element_to_coupler(e, circuit.mode_registry)
        if c.kind == "delay":
            centers[c.modes[0]] = centers.get(c.modes[0], 0.0) + c.delay_ps
            continue
        if c.kind == "spatial":
            in1, in2 = c.modes
            t1, t2 = centers.get(in1, 0.0), centers.get(in2, 0.0)
            if wavepacket is not None and _occupied(state, in1) and _occupied(state, in2):
                dec = resolve_distinguishability(t1 - t2, wavepacket)
                if dec.overlap < 1.0:
                    late = in1 if t1 >= t2 else in2
                    state = _apply_distinguishability(state, late, dec)
            ref = min(t1, t2)
            for m in (in1, in2):
                centers.pop(m, None)
            for m in c.outputs:
                centers[m] = ref
        elif c.outputs:
            t = centers.pop(c.modes[0], 0.0)
            for m in c.outputs:
                centers[m] = t
        state = apply_coupler_family(state, c)
    return state
