"""Sparse bosonic Fock states over (mode, polarization, temporal-bin) slots.

A ket is a canonical tuple of ``(SlotKey, count)`` pairs sorted by
``(mode, pol, tbin)``; a :class:`PureState` maps kets to complex amplitudes.
States are immutable: every operation returns a new state.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "Polarization",
    "H",
    "V",
    "SlotKey",
    "BasisKet",
    "PureState",
    "ProjectionSpec",
    "OverlappingModes",
    "NonUnitary",
    "make_ket",
    "ket_counts",
    "vacuum",
    "create",
    "superpose",
    "tensor",
    "inner_product",
    "apply_coupler",
    "project",
    "to_text",
    "from_text",
]

DEFAULT_PRUNE = 1e-15
UNITARY_TOL = 1e-12


class OverlappingModes(ValueError):
    """Raised when a tensor product would put two factors on one spatial mode."""


class NonUnitary(ValueError):
    """Raised when a coupler matrix is not unitary."""


class Polarization(str, Enum):
    H = "H"
    V = "V"

    def __str__(self) -> str:
        return self.value


H = Polarization.H
V = Polarization.V


class SlotKey(NamedTuple):
    mode: str
    pol: Polarization
    tbin: int = 0

    def __str__(self) -> str:
        return f"{self.mode}:{self.pol.value}:{self.tbin}"


BasisKet = tuple  # tuple[tuple[SlotKey, int], ...], canonical order


def _slot(s) -> SlotKey:
    if isinstance(s, SlotKey):
        return s
    mode, pol, *rest = s
    return SlotKey(str(mode), Polarization(pol), int(rest[0]) if rest else 0)


def make_ket(counts: Mapping) -> BasisKet:
    """Canonical ket from a ``{slot: count}`` mapping; zero counts are dropped."""
    merged: dict[SlotKey, int] = defaultdict(int)
    for s, n in counts.items():
        if n < 0:
            raise ValueError(f"negative occupation {n} for {s}")
        merged[_slot(s)] += int(n)
    return tuple(sorted((s, n) for s, n in merged.items() if n > 0))


def ket_counts(ket: BasisKet) -> dict[SlotKey, int]:
    return dict(ket)


def ket_photons(ket: BasisKet) -> int:
    return sum(n for _, n in ket)


def ket_modes(ket: BasisKet) -> set[str]:
    return {s.mode for s, _ in ket}


@dataclass(frozen=True)
class PureState:
    """Sparse complex-amplitude map over canonical kets."""

    terms: Mapping[BasisKet, complex] = field(default_factory=dict)
    prune_epsilon: float = DEFAULT_PRUNE

    def __post_init__(self):
        cleaned = {
            k: complex(a) for k, a in self.terms.items() if abs(a) >= self.prune_epsilon and a != 0
        }
        object.__setattr__(self, "terms", MappingProxyType(dict(sorted(cleaned.items()))))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def amplitude(self, ket) -> complex:
        if isinstance(ket, Mapping):
            ket = make_ket(ket)
        return self.terms.get(ket, 0j)

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalize(self) -> "PureState":
        n2 = self.norm2()
        if n2 == 0:
            return self
        s = 1.0 / math.sqrt(n2)
        return PureState({k: a * s for k, a in self.terms.items()}, self.prune_epsilon)

    def scaled(self, c: complex) -> "PureState":
        return PureState({k: a * c for k, a in self.terms.items()}, self.prune_epsilon)

    def modes(self) -> set[str]:
        out: set[str] = set()
        for k in self.terms:
            out |= ket_modes(k)
        return out

    def photon_numbers(self) -> set[int]:
        return {ket_photons(k) for k in self.terms}

    def max_tbin(self) -> int:
        return max((s.tbin for k in self.terms for s, _ in k), default=0)

    def probabilities(self) -> dict[BasisKet, float]:
        return {k: abs(a) ** 2 for k, a in self.terms.items()}

    def __str__(self) -> str:
        return to_text(self)


def vacuum(prune_epsilon: float = DEFAULT_PRUNE) -> PureState:
    return PureState({(): 1.0 + 0j}, prune_epsilon)


def create(state: PureState, slot) -> PureState:
    """Apply a creation operator; the result is not renormalized."""
    slot = _slot(slot)
    out: dict[BasisKet, complex] = defaultdict(complex)
    for ket, amp in state.terms.items():
        counts = dict(ket)
        n = counts.get(slot, 0)
        counts[slot] = n + 1
        out[make_ket(counts)] += amp * math.sqrt(n + 1)
    return PureState(out, state.prune_epsilon)


def superpose(terms: Iterable[tuple[complex, PureState]], prune_epsilon: Optional[float] = None) -> PureState:
    out: dict[BasisKet, complex] = defaultdict(complex)
    eps = prune_epsilon
    for c, st in terms:
        if eps is None:
            eps = st.prune_epsilon
        for ket, amp in st.terms.items():
            out[ket] += c * amp
    return PureState(out, DEFAULT_PRUNE if eps is None else eps)


def tensor(s1: PureState, s2: PureState) -> PureState:
    shared = s1.modes() & s2.modes()
    if shared:
        raise OverlappingModes(f"modes {sorted(shared)} appear in both factors")
    out: dict[BasisKet, complex] = {}
    for k1, a1 in s1.terms.items():
        for k2, a2 in s2.terms.items():
            out[tuple(sorted(k1 + k2))] = a1 * a2
    return PureState(out, min(s1.prune_epsilon, s2.prune_epsilon))


def inner_product(s1: PureState, s2: PureState) -> complex:
    """<s1|s2>, conjugate-linear in the first argument."""
    small, big = (s1, s2) if len(s1) <= len(s2) else (s2, s1)
    total = 0j
    for ket in small.terms:
        if ket in big.terms:
            total += s1.terms[ket].conjugate() * s2.terms[ket]
    return total


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise NonUnitary(f"coupler must be 2x2, got shape {u.shape}")
    err = np.linalg.norm(u.conj().T @ u - np.eye(2))
    if err > tol:
        raise NonUnitary(f"||u^dag u - I|| = {err:.3e} exceeds {tol:g}")
    return u


def apply_coupler(
    state: PureState,
    slot_a,
    slot_b,
    u,
    out_a=None,
    out_b=None,
) -> PureState:
    """Mix two slots with a 2x2 unitary acting on creation operators.

    ``a_dag -> u[0,0] oa_dag + u[0,1] ob_dag`` and
    ``b_dag -> u[1,0] oa_dag + u[1,1] ob_dag``. Outputs default to the inputs
    (in-place coupler); pass fresh output slots to relabel, as a beamsplitter
    does when mapping input ports to output ports.
    """
    u = check_unitary(u)
    sa, sb = _slot(slot_a), _slot(slot_b)
    oa = sa if out_a is None else _slot(out_a)
    ob = sb if out_b is None else _slot(out_b)
    if sa == sb or oa == ob:
        raise ValueError("coupler needs two distinct slots")
    out: dict[BasisKet, complex] = defaultdict(complex)
    for ket, amp in state.terms.items():
        counts = dict(ket)
        na = counts.pop(sa, 0)
        nb = counts.pop(sb, 0)
        if na == 0 and nb == 0:
            out[ket] += amp
            continue
        base_a = counts.get(oa, 0)
        base_b = counts.get(ob, 0)
        pref = amp / math.sqrt(math.factorial(na) * math.factorial(nb))
        for k in range(na + 1):
            ca = math.comb(na, k) * u[0, 0] ** k * u[0, 1] ** (na - k)
            if ca == 0:
                continue
            for l in range(nb + 1):
                cb = math.comb(nb, l) * u[1, 0] ** l * u[1, 1] ** (nb - l)
                if cb == 0:
                    continue
                ma = k + l
                mb = na + nb - ma
                # oa^dag^ma ob^dag^mb on occupations (base_a, base_b)
                bos = math.sqrt(
                    math.factorial(base_a + ma) / math.factorial(base_a)
                    * math.factorial(base_b + mb) / math.factorial(base_b)
                )
                new = dict(counts)
                new[oa] = base_a + ma
                new[ob] = base_b + mb
                out[make_ket(new)] += pref * ca * cb * bos
    return PureState(out, state.prune_epsilon)


@dataclass(frozen=True)
class ProjectionSpec:
    """Photon-number constraints; a ``None`` pol or tbin is a wildcard.

    Each constraint is ``((mode, pol, tbin), count)`` and is satisfied when
    the total occupation over matching slots equals ``count``.
    """

    constraints: tuple = ()

    def __post_init__(self):
        cons = []
        seen = set()
        for pattern, n in self.constraints:
            mode, pol, *rest = pattern
            tbin = rest[0] if rest else None
            pol = None if pol is None else Polarization(pol)
            key = (mode, pol)
            if key in seen:
                raise ValueError(f"pattern {key} constrained twice")
            seen.add(key)
            cons.append(((str(mode), pol, tbin), int(n)))
        for i, ((m1, p1, _), _) in enumerate(cons):
            for (m2, p2, _), _ in cons[i + 1 :]:
                if m1 == m2 and (p1 is None or p2 is None):
                    raise ValueError(f"overlapping patterns on mode {m1}")
        object.__setattr__(self, "constraints", tuple(cons))

    @classmethod
    def of(cls, **kwargs) -> "ProjectionSpec":
        """``ProjectionSpec.of(b="V", d="H")`` means one photon of that pol in each mode."""
        return cls(tuple(((m, p), 1) for m, p in kwargs.items()))

    def matches(self, ket: BasisKet) -> bool:
        for (mode, pol, tbin), need in self.constraints:
            have = 0
            for s, n in ket:
                if s.mode == mode and (pol is None or s.pol == pol) and (tbin is None or s.tbin == tbin):
                    have += n
            if have != need:
                return False
        return True


def project(state: PureState, spec: ProjectionSpec) -> tuple[float, PureState]:
    kept = {k: a for k, a in state.terms.items() if spec.matches(k)}
    prob = float(sum(abs(a) ** 2 for a in kept.values()))
    if prob == 0.0:
        return 0.0, PureState({}, state.prune_epsilon)
    return prob, PureState(kept, state.prune_epsilon).normalize()


def _ket_text(ket: BasisKet) -> str:
    return " ".join(f"{s}^{n}" for s, n in ket)


def to_text(state: PureState) -> str:
    """One line per term: ``amp_re amp_im | mode:pol:tbin^count ...``."""
    lines = []
    for ket, amp in state.terms.items():
        lines.append(f"{amp.real:.17g} {amp.imag:.17g} | {_ket_text(ket)}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def from_text(text: str, prune_epsilon: float = DEFAULT_PRUNE) -> PureState:
    terms: dict[BasisKet, complex] = defaultdict(complex)
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        amp_part, _, ket_part = line.partition("|")
        re_s, im_s = amp_part.split()
        counts = {}
        for tok in ket_part.split():
            slot_s, _, n = tok.partition("^")
            mode, pol, tbin = slot_s.split(":")
            counts[SlotKey(mode, Polarization(pol), int(tbin))] = int(n)
        terms[make_ket(counts)] += complex(float(re_s), float(im_s))
    return PureState(terms, prune_epsilon)
