import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_create, dense_index, dense_two_mode_unitary
from photonfusion.fock import (
    H,
    V,
    NonUnitary,
    OverlappingModes,
    ProjectionSpec,
    PureState,
    SlotKey,
    apply_coupler,
    create,
    from_text,
    inner_product,
    make_ket,
    project,
    superpose,
    tensor,
    to_text,
    vacuum,
)
from photonfusion.optics import beamsplitter_matrix, retarder_matrix, rotation_matrix

A = SlotKey("a", H)
B = SlotKey("b", H)


def random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def fock(n_a, n_b):
    st_ = vacuum()
    for _ in range(n_a):
        st_ = create(st_, A)
    for _ in range(n_b):
        st_ = create(st_, B)
    return st_.normalize()


def to_dense(state, nmax):
    vec = np.zeros((nmax + 1) ** 2, dtype=complex)
    for ket, amp in state.terms.items():
        c = dict(ket)
        vec[dense_index(c.get(A, 0), c.get(B, 0), nmax)] += amp
    return vec


def test_create_sqrt_factor_matches_truncated_ladder():
    nmax = 3
    vec = np.zeros((nmax + 1) ** 2, dtype=complex)
    vec[0] = 1
    twice = dense_create(nmax, 0, dense_create(nmax, 0, vec))
    engine = create(create(vacuum(), A), A)
    assert engine.amplitude({A: 2}) == pytest.approx(twice[dense_index(2, 0, nmax)])
    assert engine.amplitude({A: 2}) == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("n_a,n_b", [(1, 0), (0, 1), (1, 1), (2, 1), (2, 2), (3, 0)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_coupler_matches_dense_exponential(n_a, n_b, seed):
    u = random_unitary(np.random.default_rng(seed))
    nmax = n_a + n_b
    state = fock(n_a, n_b)
    got = to_dense(apply_coupler(state, A, B, u), nmax)
    want = dense_two_mode_unitary(u, nmax) @ to_dense(state, nmax)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_single_photon_follows_matrix_rows():
    u = beamsplitter_matrix()
    out = apply_coupler(create(vacuum(), A), A, B, u, out_a=("e", H), out_b=("f", H))
    assert out.amplitude({("e", H, 0): 1}) == pytest.approx(1 / math.sqrt(2))
    assert out.amplitude({("f", H, 0): 1}) == pytest.approx(1 / math.sqrt(2))
    out_c = apply_coupler(create(vacuum(), B), A, B, u, out_a=("e", H), out_b=("f", H))
    assert out_c.amplitude({("f", H, 0): 1}) == pytest.approx(-1 / math.sqrt(2))


def test_hom_bunching_exact():
    out = apply_coupler(fock(1, 1), A, B, beamsplitter_matrix(), out_a=("e", H), out_b=("f", H))
    assert out.amplitude({("e", H, 0): 1, ("f", H, 0): 1}) == 0
    assert abs(out.amplitude({("e", H, 0): 2})) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitude({("f", H, 0): 2})) ** 2 == pytest.approx(0.5)


def test_non_unitary_rejected():
    with pytest.raises(NonUnitary):
        apply_coupler(fock(1, 0), A, B, np.array([[1, 0], [0, 0.5]]))
    with pytest.raises(NonUnitary):
        apply_coupler(fock(1, 0), A, B, np.eye(3))


def test_tensor_overlap_rejected():
    with pytest.raises(OverlappingModes):
        tensor(fock(1, 0), fock(1, 0))


def test_canonical_ket_order_independent_of_construction():
    s1 = create(create(vacuum(), B), A)
    s2 = create(create(vacuum(), A), B)
    assert s1.terms == s2.terms


def test_pruning_threshold():
    s = PureState({make_ket({A: 1}): 1.0, make_ket({B: 1}): 1e-16})
    assert len(s) == 1
    s = PureState({make_ket({A: 1}): 1.0, make_ket({B: 1}): 1e-16}, prune_epsilon=1e-20)
    assert len(s) == 2


def test_projection_wildcards():
    s = superpose([(1 / math.sqrt(2), create(vacuum(), ("a", H))), (1 / math.sqrt(2), create(vacuum(), ("a", V)))])
    p, post = project(s, ProjectionSpec(((("a", None), 1),)))
    assert p == pytest.approx(1.0)
    p, post = project(s, ProjectionSpec.of(a="V"))
    assert p == pytest.approx(0.5)
    assert post.amplitude({("a", V, 0): 1}) == pytest.approx(1.0)
    assert project(s, ProjectionSpec.of(b="V"))[0] == 0.0


def test_projection_spec_rejects_overlap():
    with pytest.raises(ValueError):
        ProjectionSpec(((("a", None), 1), (("a", "H"), 1)))


def test_text_round_trip_golden():
    s = superpose([(1 / math.sqrt(2), fock(2, 0)), (-1j / math.sqrt(2), fock(0, 1))])
    text = to_text(s)
    assert text == (
        "0.70710678118654746 0 | a:H:0^2\n"
        "0 -0.70710678118654746 | b:H:0^1\n"
    )
    back = from_text(text)
    assert back.terms == s.terms


unitaries = st.integers(min_value=0, max_value=10_000).map(lambda s: random_unitary(np.random.default_rng(s)))
occupations = st.tuples(st.integers(0, 3), st.integers(0, 3)).filter(lambda t: sum(t) > 0)


@settings(max_examples=60, deadline=None)
@given(u=unitaries, occ=occupations)
def test_norm_preserved(u, occ):
    out = apply_coupler(fock(*occ), A, B, u)
    assert out.norm2() == pytest.approx(1.0, abs=1e-12)
    assert out.photon_numbers() == {sum(occ)}


@settings(max_examples=60, deadline=None)
@given(u=unitaries, occ=occupations)
def test_inverse_coupler_restores(u, occ):
    s = fock(*occ)
    back = apply_coupler(apply_coupler(s, A, B, u), A, B, u.conj().T)
    assert abs(inner_product(s, back)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(u1=unitaries, u2=unitaries, occ=occupations)
def test_couplers_compose(u1, u2, occ):
    s = fock(*occ)
    seq = apply_coupler(apply_coupler(s, A, B, u1), A, B, u2)
    once = apply_coupler(s, A, B, u1 @ u2)
    assert abs(inner_product(seq, once)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(occ=occupations)
def test_exchange_symmetry(occ):
    """Swapping the inputs equals swapping the matrix rows."""
    u = beamsplitter_matrix()
    swapped_u = u[::-1]
    a = apply_coupler(fock(*occ), A, B, u)
    b = apply_coupler(fock(occ[1], occ[0]), A, B, swapped_u)
    assert abs(inner_product(a, b)) == pytest.approx(1.0, abs=1e-12)


def test_polarization_matrices_unitary():
    for m in (rotation_matrix(17.0), retarder_matrix(1.3), beamsplitter_matrix(0.3)):
        np.testing.assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-14)
