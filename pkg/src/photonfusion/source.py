"""Type-II SPDC pair source: ideal singlets, dual pairs and emission sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from enum import Enum

import numpy as np

from .fock import H, V, PureState, SlotKey, create, superpose, tensor, vacuum
from .optics import WavepacketModel, sigma_t_from_bandwidth

__all__ = [
    "SameMode",
    "SpdcSpec",
    "SourceEventClass",
    "singlet_pair",
    "product_pair",
    "dual_pair",
    "sample_emission",
    "coherence_sigma_t",
    "coherence",
    "wavepacket",
]


class SameMode(ValueError):
    pass


@dataclass(frozen=True)
class SpdcSpec:
    wavelength_nm: float = 1570.0
    bandwidth_fwhm_nm: float = 3.0
    pair_rate_hz: float = 6e3
    entangled_fraction: float = 0.17
    background_singles_rate_hz: float = 3e4
    hom_visibility: float = 0.68

    def __post_init__(self):
        for name in ("pair_rate_hz", "background_singles_rate_hz", "wavelength_nm", "bandwidth_fwhm_nm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("entangled_fraction", "hom_visibility"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @classmethod
    def ideal(cls, **kw) -> "SpdcSpec":
        base = dict(entangled_fraction=1.0, background_singles_rate_hz=0.0, hom_visibility=1.0)
        base.update(kw)
        return cls(**base)

    @property
    def total_pair_rate_hz(self) -> float:
        if self.entangled_fraction == 0:
            return 0.0
        return self.pair_rate_hz / self.entangled_fraction

    def as_dict(self) -> dict:
        return asdict(self)


class SourceEventClass(Enum):
    EntangledSinglet = 0
    UnpolarizedBackgroundPair = 1
    SingleOnly = 2


def _photon(mode: str, pol) -> PureState:
    return create(vacuum(), SlotKey(mode, pol, 0))


def singlet_pair(mode_a: str, mode_b: str) -> PureState:
    """(|H>_A|V>_B - |V>_A|H>_B) / sqrt(2)."""
    if mode_a == mode_b:
        raise SameMode(f"singlet needs two distinct modes, got {mode_a!r} twice")
    r = 1.0 / math.sqrt(2.0)
    return superpose(
        [
            (r, tensor(_photon(mode_a, H), _photon(mode_b, V))),
            (-r, tensor(_photon(mode_a, V), _photon(mode_b, H))),
        ]
    )


def product_pair(mode_a: str, pol_a, mode_b: str, pol_b) -> PureState:
    if mode_a == mode_b:
        raise SameMode(f"pair needs two distinct modes, got {mode_a!r} twice")
    return tensor(_photon(mode_a, pol_a), _photon(mode_b, pol_b))


def dual_pair(a: str = "a", b: str = "b", c: str = "c", d: str = "d") -> PureState:
    """Two independent singlets, on (a, b) and on (c, d)."""
    return tensor(singlet_pair(a, b), singlet_pair(c, d))


def sample_emission(spec: SpdcSpec, duration_s: float, rng: np.random.Generator):
    """Poisson emission over ``[0, duration_s)``.

    Returns ``(times_ps, classes)``: float64 times sorted ascending and an int
    array of :class:`SourceEventClass` values. Pairs arrive at the total pair
    rate and are entangled with probability ``entangled_fraction``; unpaired
    singles arrive independently at ``background_singles_rate_hz``.
    """
    if duration_s <= 0:
        return np.empty(0), np.empty(0, dtype=np.int8)
    dur_ps = duration_s * 1e12
    n_pairs = rng.poisson(spec.total_pair_rate_hz * duration_s)
    t_pairs = rng.random(n_pairs) * dur_ps
    entangled = rng.random(n_pairs) < spec.entangled_fraction
    cls_pairs = np.where(
        entangled, SourceEventClass.EntangledSinglet.value, SourceEventClass.UnpolarizedBackgroundPair.value
    ).astype(np.int8)
    n_single = rng.poisson(spec.background_singles_rate_hz * duration_s)
    t_single = rng.random(n_single) * dur_ps
    times = np.concatenate([t_pairs, t_single])
    classes = np.concatenate([cls_pairs, np.full(n_single, SourceEventClass.SingleOnly.value, dtype=np.int8)])
    order = np.argsort(times, kind="stable")
    return times[order], classes[order]


def coherence(spec: SpdcSpec) -> dict:
    return sigma_t_from_bandwidth(spec.wavelength_nm, spec.bandwidth_fwhm_nm)


def coherence_sigma_t(spec: SpdcSpec) -> float:
    """rms coherence time in ps."""
    return coherence(spec)["sigma_ps"]


def wavepacket(spec: SpdcSpec) -> WavepacketModel:
    """Wavepacket whose zero-delay HOM dip depth equals ``hom_visibility``."""
    return WavepacketModel(coherence_sigma_t(spec), math.sqrt(spec.hom_visibility))
