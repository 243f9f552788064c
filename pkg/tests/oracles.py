"""Independent reference computations used by the tests.

Nothing here imports the package's state engine; these are deliberately
different algorithms (symbolic polynomial expansion, dense truncated
matrices) so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import sympy as sp
from scipy.linalg import expm, logm


# --- symbolic creation-operator expansion -----------------------------------


def _sym(mode, pol):
    return sp.Symbol(f"{mode}_{pol}", commutative=True)


def polynomial_fock_amplitudes(poly, symbols):
    """Turn a polynomial in commuting creation operators acting on vacuum
    into Fock amplitudes: x1^n1 x2^n2 |0> = sqrt(n1! n2! ...) |n1 n2 ...>.

    Returns ``{((mode, pol, n), ...): complex}`` with zero-count slots dropped.
    """
    p = sp.Poly(sp.expand(poly), *symbols)
    out = {}
    for powers, coeff in p.terms():
        key = []
        weight = 1.0
        for sym, n in zip(symbols, powers):
            if n:
                mode, pol = sym.name.split("_")
                key.append((mode, pol, n))
                weight *= math.sqrt(math.factorial(n))
        out[tuple(sorted(key))] = complex(sp.N(coeff, 30)) * weight
    return out


def fused_dual_pair_oracle():
    """Two singlets (a,b) and (c,d), then a -> (e+f)/sqrt2, c -> (e-f)/sqrt2."""
    s = {k: _sym(*k) for k in itertools.product("abcdef", "HV")}
    singlet = lambda x, y: (s[x, "H"] * s[y, "V"] - s[x, "V"] * s[y, "H"]) / sp.sqrt(2)  # noqa: E731
    poly = singlet("a", "b") * singlet("c", "d")
    r2 = sp.sqrt(2)
    sub = {}
    for pol in "HV":
        sub[s["a", pol]] = (s["e", pol] + s["f", pol]) / r2
        sub[s["c", pol]] = (s["e", pol] - s["f", pol]) / r2
    poly = poly.subs(sub, simultaneous=True)
    syms = [s[k] for k in itertools.product("bdef", "HV")]
    return polynomial_fock_amplitudes(poly, syms)


def literal_final_state():
    """The normalized four-photon state written out term by term."""
    q = 1 / (2 * math.sqrt(2))
    h = q / math.sqrt(2)

    def k(*slots):
        return tuple(sorted(slots))

    return {
        k(("e", "H", 2), ("b", "V", 1), ("d", "V", 1)): q,
        k(("f", "H", 2), ("b", "V", 1), ("d", "V", 1)): -q,
        k(("e", "V", 2), ("b", "H", 1), ("d", "H", 1)): q,
        k(("f", "V", 2), ("b", "H", 1), ("d", "H", 1)): -q,
        # V_b H_d block
        k(("e", "H", 1), ("e", "V", 1), ("b", "V", 1), ("d", "H", 1)): -h,
        k(("e", "H", 1), ("f", "V", 1), ("b", "V", 1), ("d", "H", 1)): h,
        k(("e", "V", 1), ("f", "H", 1), ("b", "V", 1), ("d", "H", 1)): -h,
        k(("f", "H", 1), ("f", "V", 1), ("b", "V", 1), ("d", "H", 1)): h,
        # H_b V_d block
        k(("e", "V", 1), ("e", "H", 1), ("b", "H", 1), ("d", "V", 1)): -h,
        k(("e", "V", 1), ("f", "H", 1), ("b", "H", 1), ("d", "V", 1)): h,
        k(("e", "H", 1), ("f", "V", 1), ("b", "H", 1), ("d", "V", 1)): -h,
        k(("f", "V", 1), ("f", "H", 1), ("b", "H", 1), ("d", "V", 1)): h,
    }


def engine_state_as_dict(state):
    """Convert an engine PureState (tbin 0 only) to the oracle key format."""
    out = {}
    for ket, amp in state.terms.items():
        key = []
        for slot, n in ket:
            assert slot.tbin == 0
            key.append((slot.mode, slot.pol.value, n))
        out[tuple(sorted(key))] = amp
    return out


# --- dense truncated two-mode Fock space --------------------------------------


def _ladder(nmax):
    a = np.zeros((nmax + 1, nmax + 1), dtype=complex)
    for n in range(1, nmax + 1):
        a[n - 1, n] = math.sqrt(n)
    return a


def dense_two_mode_unitary(u, nmax):
    """Fock-space operator U with U a_i^dag U^dag = sum_j u[i, j] a_j^dag.

    Writing U = exp(i sum G_jk a_j^dag a_k) gives exp(iG) = u^T, so
    G = -i logm(u^T). Exact on the subspace of <= nmax photons because the
    generator conserves total number.
    """
    g = -1j * logm(np.asarray(u, dtype=complex).T)
    a = _ladder(nmax)
    eye = np.eye(nmax + 1)
    ops = [np.kron(a, eye), np.kron(eye, a)]
    gen = sum(g[j, k] * ops[j].conj().T @ ops[k] for j in range(2) for k in range(2))
    return expm(1j * gen)


def dense_index(n0, n1, nmax):
    return n0 * (nmax + 1) + n1


def dense_create(nmax, which, vec):
    a = _ladder(nmax)
    eye = np.eye(nmax + 1)
    op = np.kron(a, eye) if which == 0 else np.kron(eye, a)
    return op.conj().T @ vec
