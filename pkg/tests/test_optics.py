import math

import numpy as np
import pytest

from photonfusion.fock import H, V, ProjectionSpec, create, inner_product, project, superpose, vacuum
from photonfusion.optics import (
    LCVR,
    PBS,
    BeamSplitter,
    Circuit,
    DelayLine,
    NonPositiveWidth,
    Rotation,
    UnknownMode,
    WavepacketModel,
    run_circuit,
    sigma_t_from_bandwidth,
)
from photonfusion.protocol import hom_coincidence_via_state, hom_dip
from photonfusion.source import product_pair, singlet_pair


def photon(mode, pol):
    return create(vacuum(), (mode, pol, 0))


def test_coherence_time_from_bandwidth():
    # independent arithmetic: dnu = c dlam / lam^2, FWHM_t = 0.441/dnu
    c = 299_792_458.0
    dnu = c * 3e-9 / (1570e-9) ** 2
    fwhm = 0.441 / dnu * 1e12
    got = sigma_t_from_bandwidth(1570, 3)
    assert got["delta_nu_hz"] == pytest.approx(dnu, rel=1e-12)
    assert got["fwhm_ps"] == pytest.approx(fwhm, rel=1e-12)
    assert got["fwhm_ps"] == pytest.approx(1.2086, abs=1e-3)
    assert got["sigma_ps"] == pytest.approx(fwhm / (2 * math.sqrt(2 * math.log(2))), rel=1e-12)
    with pytest.raises(NonPositiveWidth):
        sigma_t_from_bandwidth(1570, 0)


@pytest.mark.parametrize("v", [0.0, 0.5, 1.0])
def test_hom_law_for_overlap(v):
    sigma = 0.5
    model = WavepacketModel(sigma)
    # overlap(tau) = exp(-tau^2 / 4 sigma^2) -> tau giving the requested v
    tau = 50.0 if v == 0.0 else 2 * sigma * math.sqrt(-math.log(v))
    assert model.overlap(tau) == pytest.approx(v, abs=1e-12)
    assert hom_coincidence_via_state(tau, model) == pytest.approx((1 - v * v) / 2, abs=1e-12)


def test_hom_state_engine_matches_closed_form_dip():
    model = WavepacketModel(0.51, overlap_cap=math.sqrt(0.68))
    for tau in np.linspace(-2, 2, 21):
        engine = hom_coincidence_via_state(tau, model) / 0.5
        assert engine == pytest.approx(hom_dip(tau, 0.51, math.sqrt(0.68)), abs=1e-12)


def test_ideal_hom_reaches_zero():
    assert hom_dip(0.0, 0.5, 1.0) == 0.0
    assert hom_coincidence_via_state(0.0, WavepacketModel(0.5)) == pytest.approx(0.0, abs=1e-15)


def test_rotation_45_maps_h_to_diagonal():
    out = run_circuit(photon("a", H), Circuit([Rotation("a", 45)]))
    assert out.amplitude({("a", H, 0): 1}) == pytest.approx(1 / math.sqrt(2))
    assert out.amplitude({("a", V, 0): 1}) == pytest.approx(1 / math.sqrt(2))
    out = run_circuit(photon("a", V), Circuit([Rotation("a", 45)]))
    assert out.amplitude({("a", H, 0): 1}) == pytest.approx(-1 / math.sqrt(2))


def test_lcvr_phases_vertical_only():
    phi = 0.7
    d = superpose([(1 / math.sqrt(2), photon("a", H)), (1 / math.sqrt(2), photon("a", V))])
    out = run_circuit(d, Circuit([LCVR("a", phi)]))
    assert out.amplitude({("a", H, 0): 1}) == pytest.approx(1 / math.sqrt(2))
    assert out.amplitude({("a", V, 0): 1}) == pytest.approx(np.exp(1j * phi) / math.sqrt(2))


def test_pbs_routes_and_rotated_axis():
    circ = Circuit([PBS("a", "h", "v")])
    assert run_circuit(photon("a", H), circ).amplitude({("h", H, 0): 1}) == pytest.approx(1)
    assert run_circuit(photon("a", V), circ).amplitude({("v", V, 0): 1}) == pytest.approx(1)
    tilted = run_circuit(photon("a", H), Circuit([PBS("a", "h", "v", slow_axis_deg=45)]))
    assert project(tilted, ProjectionSpec(((("h", None), 1),)))[0] == pytest.approx(0.5)
    # a small axis error leaks sin^2(err)
    err = run_circuit(photon("a", H), Circuit([PBS("a", "h", "v", error_deg=2.0)]))
    assert project(err, ProjectionSpec(((("v", None), 1),)))[0] == pytest.approx(math.sin(math.radians(2)) ** 2)


def test_circuit_concatenation_is_associative():
    c1 = Circuit([LCVR("A", 0.4)])
    c2 = Circuit([Rotation("A", 30), Rotation("B", -10)])
    c3 = Circuit([BeamSplitter("A", "B", "e", "f")])
    s = singlet_pair("A", "B")
    left = run_circuit(s, (c1 + c2) + c3)
    right = run_circuit(s, c1 + (c2 + c3))
    seq = run_circuit(run_circuit(run_circuit(s, c1), c2), c3)
    assert left.terms == right.terms
    assert abs(inner_product(left, seq)) == pytest.approx(1.0, abs=1e-12)


def test_unknown_mode_rejected():
    with pytest.raises(UnknownMode):
        Circuit([Rotation("zz", 10)], mode_registry={"a", "b"})
    with pytest.raises(UnknownMode):
        run_circuit(photon("q", H), Circuit([], mode_registry={"a"}))


def test_delay_does_not_change_state_without_wavepacket():
    s = product_pair("a", H, "b", H)
    circ = Circuit([DelayLine("a", 3.0), BeamSplitter("a", "b", "e", "f")])
    assert project(run_circuit(s, circ), ProjectionSpec(((("e", None), 1), (("f", None), 1))))[0] == pytest.approx(0)


def test_singlet_rotation_invariant():
    s = singlet_pair("A", "B")
    for ang in (13.0, 45.0, 77.0):
        out = run_circuit(s, Circuit([Rotation("A", ang), Rotation("B", ang)]))
        assert abs(inner_product(s, out)) == pytest.approx(1.0, abs=1e-12)
