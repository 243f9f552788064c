"""Bell-pair fusion, polarization heralding and closed-form prediction curves.

The fusion layout: two singlets on (a, b) and (c, d); photons a and c meet
on a 50/50 beamsplitter with outputs e and f, while b and d are kept as
heralds. Projecting b and d onto the same polarization leaves a two-photon
N00N state in (e, f); projecting them onto crossed polarizations leaves a
state whose one-photon-per-arm part is the singlet.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .fock import H, V, Polarization, ProjectionSpec, PureState, SlotKey, make_ket, project
from .optics import LCVR, BeamSplitter, Circuit, DelayLine, Rotation, WavepacketModel, run_circuit
from .source import dual_pair, product_pair, singlet_pair

__all__ = [
    "ZeroProbabilityHerald",
    "FusionOutcome",
    "HeraldClass",
    "HeraldResult",
    "splitter_tree_success",
    "fusion_circuit",
    "fuse",
    "herald",
    "bell_fringe",
    "bell_fringe_via_state",
    "mixed_bell_fringe",
    "fringe_visibility",
    "projection_spectrum",
    "PROJECTION_PEAKS",
    "hom_dip",
    "hom_coincidence_via_state",
    "heralded_bell_fringe",
    "heralded_noon_coincidence",
    "fusion_fourfold",
    "write_curves_csv",
]

HERALD_FLOOR = 1e-12


class ZeroProbabilityHerald(ValueError):
    pass


def splitter_tree_success(n_pairs: int = 2, allow_swap: bool = True) -> Fraction:
    """Chance that a balanced BS tree sorts the photons of ``n_pairs`` pairs.

    Every photon independently takes one of two branches at each of the
    ``log2(2 n_pairs)`` tree levels. Success means each pair ends up on its
    own designated port pair with one photon per port; with
    ``allow_swap`` the pairs may land on either port pair.
    """
    n_ports = 2 * n_pairs
    levels = int(round(math.log2(n_ports)))
    if 2**levels != n_ports:
        raise ValueError("number of output ports must be a power of two")
    ports_of_pair = [frozenset((2 * i, 2 * i + 1)) for i in range(n_pairs)]
    good = 0
    total = 0
    for bits in itertools.product((0, 1), repeat=levels * 2 * n_pairs):
        total += 1
        ports = []
        for p in range(2 * n_pairs):
            port = 0
            for b in bits[p * levels : (p + 1) * levels]:
                port = 2 * port + b
            ports.append(port)
        landed = [frozenset(ports[2 * i : 2 * i + 2]) for i in range(n_pairs)]
        if any(len(s) != 2 for s in landed):
            continue
        if allow_swap:
            ok = sorted(map(sorted, landed)) == sorted(map(sorted, ports_of_pair))
        else:
            ok = landed == ports_of_pair
        good += ok
    return Fraction(good, total)


@dataclass(frozen=True)
class FusionOutcome:
    final_state: PureState
    success_probability: Fraction


class HeraldClass(Enum):
    Bell = "bell"
    NoonH = "noon_h"
    NoonV = "noon_v"


@dataclass(frozen=True)
class HeraldResult:
    herald_class: HeraldClass
    probability: float
    remote_state: PureState
    postselected_state: Optional[PureState] = None
    postselected_weight: Optional[float] = None


def fusion_circuit(delay_ps: float = 0.0) -> Circuit:
    return Circuit((DelayLine("a", delay_ps), BeamSplitter("a", "c", "e", "f")))


def fuse(
    state: Optional[PureState] = None,
    delay_ps: float = 0.0,
    wavepacket: Optional[WavepacketModel] = None,
) -> FusionOutcome:
    """Interfere modes a and c on the final beamsplitter (outputs e, f)."""
    if state is None:
        state = dual_pair()
    out = run_circuit(state, fusion_circuit(delay_ps), wavepacket)
    return FusionOutcome(out, splitter_tree_success())


def _trace_out_heralds(collapsed: PureState) -> PureState:
    """Drop the (now fixed) b, d occupations from each ket."""
    out = {}
    for ket, amp in collapsed.terms.items():
        rest = make_ket({s: n for s, n in ket if s.mode not in ("b", "d")})
        if rest in out:
            raise ValueError("herald projection left b/d entangled with the remote modes")
        out[rest] = amp
    return PureState(out, collapsed.prune_epsilon)


def herald(fused: PureState, pattern: tuple) -> HeraldResult:
    """Project modes b and d on ``(pol_b, pol_d)`` and classify the remote state."""
    pol_b, pol_d = (Polarization(p) for p in pattern)
    prob, collapsed = project(fused, ProjectionSpec.of(b=pol_b, d=pol_d))
    if prob < HERALD_FLOOR:
        raise ZeroProbabilityHerald(f"pattern {pol_b.value}{pol_d.value} has probability {prob:.3e}")
    remote = _trace_out_heralds(collapsed)
    if pol_b == pol_d:
        cls = HeraldClass.NoonV if pol_b == H else HeraldClass.NoonH
        return HeraldResult(cls, prob, remote)
    w, sub = project(remote, ProjectionSpec((( ("e", None), 1), (("f", None), 1))))
    return HeraldResult(HeraldClass.Bell, prob, remote, sub, w)


# fringes -------------------------------------------------------------------


def bell_fringe(delta_phi: float) -> tuple[float, float]:
    """(P_HH = P_VV, P_HV = P_VH) for the phase-shifted singlet read out in D/A."""
    c = math.cos(delta_phi)
    return 0.25 * (1.0 - c), 0.25 * (1.0 + c)


def mixed_bell_fringe(delta_phi: float, entangled_fraction: float) -> tuple[float, float]:
    """Fringe with an unpolarized-pair pedestal of weight ``1 - entangled_fraction``."""
    p_same, p_cross = bell_fringe(delta_phi)
    bg = 0.25 * (1.0 - entangled_fraction)
    return entangled_fraction * p_same + bg, entangled_fraction * p_cross + bg


def _readout_circuit(mode_a: str, mode_b: str, delta_phi: float) -> Circuit:
    return Circuit((LCVR(mode_a, delta_phi), Rotation(mode_a, 45.0), Rotation(mode_b, 45.0)))


def _pair_pattern_probs(state: PureState, mode_a: str, mode_b: str) -> dict[str, float]:
    probs = {}
    for pa, pb in itertools.product((H, V), repeat=2):
        p, _ = project(state, ProjectionSpec(((( mode_a, pa), 1), ((mode_b, pb), 1))))
        probs[pa.value + pb.value] = p
    return probs


def bell_fringe_via_state(delta_phi: float, entangled_fraction: float = 1.0) -> tuple[float, float]:
    """Same quantity as :func:`bell_fringe`, computed through the state engine.

    With ``entangled_fraction < 1`` the unpolarized pairs are propagated as
    an equal mixture of the four H/V product states.
    """
    circ = _readout_circuit("A", "B", delta_phi)
    probs = _pair_pattern_probs(run_circuit(singlet_pair("A", "B"), circ), "A", "B")
    p_same, p_cross = probs["HH"], probs["HV"]
    if entangled_fraction < 1.0:
        bg_same = bg_cross = 0.0
        for pa, pb in itertools.product((H, V), repeat=2):
            bp = _pair_pattern_probs(run_circuit(product_pair("A", pa, "B", pb), circ), "A", "B")
            bg_same += bp["HH"] / 4.0
            bg_cross += bp["HV"] / 4.0
        f = entangled_fraction
        p_same = f * p_same + (1.0 - f) * bg_same
        p_cross = f * p_cross + (1.0 - f) * bg_cross
    return p_same, p_cross


def fringe_visibility(values: Sequence[float]) -> float:
    hi, lo = max(values), min(values)
    return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0


# fusion readouts -------------------------------------------------------------

# (pol_b, pol_f, pol_e, pol_d) peaks named as in the four-fold projection scan
PROJECTION_PEAKS = ("HbHfVeVd", "VbVfHeHd", "HbVfHeVd", "VbHfVeHd")


def _pattern_label(pb, pf, pe, pd) -> str:
    return f"{pb.value}b{pf.value}f{pe.value}e{pd.value}d"


def projection_spectrum(fused: PureState) -> dict[str, float]:
    """Probabilities of the 16 one-photon-per-mode polarization patterns on b, f, e, d."""
    out = {}
    for pb, pf, pe, pd in itertools.product((H, V), repeat=4):
        spec = ProjectionSpec(((("b", pb), 1), (("f", pf), 1), (("e", pe), 1), (("d", pd), 1)))
        out[_pattern_label(pb, pf, pe, pd)] = project(fused, spec)[0]
    return out


def fusion_fourfold(fused: PureState) -> float:
    """Probability of one photon in each of b, d, e, f, polarization ignored."""
    spec = ProjectionSpec(tuple(((m, None), 1) for m in ("b", "d", "e", "f")))
    return project(fused, spec)[0]


def hom_dip(delay_ps: float, sigma_t_ps: float, v0: float, baseline: float = 1.0) -> float:
    """Normalized coincidence rate behind a 50/50 BS versus relative delay.

    ``v0`` is the zero-delay mode overlap, so the dip depth is ``v0**2``.
    """
    if sigma_t_ps <= 0:
        raise ValueError("sigma_t_ps must be positive")
    return baseline * (1.0 - v0**2 * math.exp(-(delay_ps**2) / (2.0 * sigma_t_ps**2)))


def hom_coincidence_via_state(delay_ps: float, wavepacket: WavepacketModel) -> float:
    """Coincidence probability of two H photons on a 50/50 BS from the state engine."""
    circ = Circuit((DelayLine("a", delay_ps), BeamSplitter("a", "b", "e", "f")))
    out = run_circuit(product_pair("a", H, "b", H), circ, wavepacket)
    spec = ProjectionSpec(((("e", None), 1), (("f", None), 1)))
    return project(out, spec)[0]


def heralded_bell_fringe(
    delta_phi: float, herald_pattern: tuple = ("V", "H"), fused: Optional[PureState] = None
) -> dict[str, float]:
    """Four-fold probabilities for the heralded-Bell phase scan.

    LCVR on e, both remote arms read out in the D/A basis. Keys are ``"HH"``,
    ``"HV"``, ``"VH"``, ``"VV"`` for (e, f); values are joint probabilities
    per fused event (herald and one photon per arm included).
    """
    if fused is None:
        fused = fuse().final_state
    pol_b, pol_d = (Polarization(p) for p in herald_pattern)
    out = run_circuit(fused, _readout_circuit("e", "f", delta_phi))
    res = {}
    for pe, pf in itertools.product((H, V), repeat=2):
        spec = ProjectionSpec(((("b", pol_b), 1), (("d", pol_d), 1), (("e", pe), 1), (("f", pf), 1)))
        res[pe.value + pf.value] = project(out, spec)[0]
    return res


def heralded_noon_coincidence(
    delay_ps: float, wavepacket: Optional[WavepacketModel], herald_pattern: tuple = ("H", "H")
) -> float:
    """P(herald pattern on b, d and one photon in each of e, f) at a VDL delay."""
    fused = fuse(delay_ps=delay_ps, wavepacket=wavepacket).final_state
    pol_b, pol_d = (Polarization(p) for p in herald_pattern)
    spec = ProjectionSpec(((("b", pol_b), 1), (("d", pol_d), 1), (("e", None), 1), (("f", None), 1)))
    return project(fused, spec)[0]


def write_curves_csv(rows: Iterable[tuple], path) -> None:
    """Write ``(scan_value, quantity, value)`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scan_value", "quantity", "value"])
        for scan_value, quantity, value in rows:
            w.writerow([repr(float(scan_value)) if not isinstance(scan_value, str) else scan_value, quantity, repr(float(value))])
