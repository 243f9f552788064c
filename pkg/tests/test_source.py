import math

import numpy as np
import pytest
from scipy import stats

from photonfusion.fock import H, V, inner_product
from photonfusion.source import (
    SameMode,
    SourceEventClass,
    SpdcSpec,
    dual_pair,
    product_pair,
    sample_emission,
    singlet_pair,
    wavepacket,
)


def test_defaults():
    s = SpdcSpec()
    assert (s.wavelength_nm, s.bandwidth_fwhm_nm, s.pair_rate_hz) == (1570, 3, 6e3)
    assert (s.entangled_fraction, s.background_singles_rate_hz, s.hom_visibility) == (0.17, 3e4, 0.68)
    assert s.total_pair_rate_hz == pytest.approx(6e3 / 0.17)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        SpdcSpec(entangled_fraction=1.2)
    with pytest.raises(ValueError):
        SpdcSpec(pair_rate_hz=-1)


def test_singlet_amplitudes():
    s = singlet_pair("a", "b")
    assert s.amplitude({("a", H, 0): 1, ("b", V, 0): 1}) == pytest.approx(1 / math.sqrt(2))
    assert s.amplitude({("a", V, 0): 1, ("b", H, 0): 1}) == pytest.approx(-1 / math.sqrt(2))
    assert len(s) == 2
    with pytest.raises(SameMode):
        singlet_pair("a", "a")


def test_dual_pair_is_product_of_singlets():
    d = dual_pair()
    assert d.norm2() == pytest.approx(1.0)
    assert len(d) == 4
    assert d.amplitude({("a", H, 0): 1, ("b", V, 0): 1, ("c", V, 0): 1, ("d", H, 0): 1}) == pytest.approx(-0.5)


def test_singlet_orthogonal_to_products():
    s = singlet_pair("a", "b")
    for pa in (H, V):
        for pb in (H, V):
            overlap = abs(inner_product(s, product_pair("a", pa, "b", pb))) ** 2
            assert overlap == pytest.approx(0.5 if pa != pb else 0.0)


def test_emission_poisson_statistics():
    spec = SpdcSpec()
    rng = np.random.default_rng(7)
    dur = 2.0
    times, cls = sample_emission(spec, dur, rng)
    assert np.all(np.diff(times) >= 0)
    assert times.min() >= 0 and times.max() < dur * 1e12
    n_pairs = np.count_nonzero(cls != SourceEventClass.SingleOnly.value)
    n_single = np.count_nonzero(cls == SourceEventClass.SingleOnly.value)
    n_ent = np.count_nonzero(cls == SourceEventClass.EntangledSinglet.value)
    mu_p = spec.total_pair_rate_hz * dur
    mu_s = spec.background_singles_rate_hz * dur
    assert abs(n_pairs - mu_p) < 5 * math.sqrt(mu_p)
    assert abs(n_single - mu_s) < 5 * math.sqrt(mu_s)
    # entangled share is binomial within the pair count
    sd = math.sqrt(n_pairs * 0.17 * 0.83)
    assert abs(n_ent - 0.17 * n_pairs) < 5 * sd


def test_emission_interarrival_exponential():
    spec = SpdcSpec.ideal(pair_rate_hz=1e4)
    times, _ = sample_emission(spec, 5.0, np.random.default_rng(3))
    gaps = np.diff(times) * 1e-12
    res = stats.kstest(gaps, "expon", args=(0, 1 / 1e4))
    assert res.pvalue > 1e-4


def test_wavepacket_dip_depth_matches_visibility():
    wp = wavepacket(SpdcSpec())
    assert wp.overlap(0.0) ** 2 == pytest.approx(0.68)
