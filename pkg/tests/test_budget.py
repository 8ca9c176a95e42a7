import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from airlink.budget import (
    AseBudget,
    Mode,
    ase_budget,
    ase_span_edfa,
    ase_span_raman,
    optimal_power_closed_form,
    optimize_uniform_power,
    snr_channel,
    snr_records,
    snr_spectrum,
    total_capacity,
)
from airlink.gn import NliSpectrum, eta_spectrum, xi_factor
from airlink.numerics import golden_section_max
from airlink.units import preset_edfa, preset_raman

from conftest import small_grid


def flat_spectrum(eta=1e4, n_ch=11, spans=25, eps=0.04):
    k = np.arange(-(n_ch // 2), n_ch // 2 + 1)
    return NliSpectrum(k, np.full(len(k), eta), eps, xi_factor(spans, eps), spans)


def shaped_spectrum(n_ch=21, spans=25, eps=0.04):
    k = np.arange(-(n_ch // 2), n_ch // 2 + 1)
    eta = 1.6e4 * (1.0 - 0.45 * (k / k.max()) ** 2)
    return NliSpectrum(k, eta, eps, xi_factor(spans, eps), spans)


def edfa_ase(spans=25):
    return ase_budget(preset_edfa(spans))


def test_edfa_ase_per_span():
    h, nu, rs = 6.62607015e-34, 299792458.0 / 1550e-9, 10e9
    nf, gain = 10 ** 0.45, 10 ** (0.2 * 80 / 10)
    expected = nf * h * nu * (gain - 1) * rs
    assert expected == pytest.approx(1.40e-7, rel=0.01)
    got = ase_span_edfa(preset_edfa())
    assert got == pytest.approx(expected, rel=1e-12)
    assert 10 * math.log10(got / 1e-3) == pytest.approx(-38.5, abs=0.05)
    total = ase_budget(preset_edfa()).p_n_total
    assert total == pytest.approx(25 * got, rel=1e-15)
    assert total == pytest.approx(3.50e-6, rel=0.01)


def test_edfa_ase_scales_with_bandwidth():
    cfg = preset_edfa()
    narrow = dataclasses.replace(cfg, grid=dataclasses.replace(cfg.grid, symbol_rate=1e3, spacing=1e3))
    assert ase_span_edfa(narrow) == pytest.approx(ase_span_edfa(cfg) * 1e-7, rel=1e-12)


def test_raman_ase_against_trapezoid():
    from oracles import signal_profile

    cfg = preset_raman()
    fb, L, P = cfg.fiber, cfg.spans.span_length, 3.4
    z = np.linspace(0, L, 200001)
    g = signal_profile(z, fb, P, L)
    integrand = fb.c_r * P * np.exp(-fb.alpha_p * (L - z)) * g[-1] / g
    dz = z[1] - z[0]
    val = dz * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))
    expected = 2 * 1.13 * 6.62607015e-34 * cfg.grid.center_frequency * 10e9 * val / g[-1]
    assert ase_span_raman(cfg) == pytest.approx(expected, rel=1e-6)


def test_raman_ase_trivial_cases():
    cfg = preset_raman()
    no_gain = dataclasses.replace(cfg, fiber=dataclasses.replace(cfg.fiber, c_r=0.0))
    assert ase_span_raman(no_gain) == 0.0
    double = dataclasses.replace(cfg, amplifier=dataclasses.replace(cfg.amplifier, phonon_factor=2.26))
    assert ase_span_raman(double) == pytest.approx(2 * ase_span_raman(cfg), rel=1e-12)


def test_raman_ase_below_edfa():
    assert ase_budget(preset_raman()).p_n_total < ase_budget(preset_edfa()).p_n_total


def test_zero_nli_gives_ase_limited_snr():
    spec = flat_spectrum(eta=0.0)
    ase = edfa_ase()
    for mode in Mode:
        assert snr_channel(0, 1e-3, spec, ase, mode) == pytest.approx(1e-3 / ase.p_n_total, rel=1e-15)


@given(st.floats(min_value=-40, max_value=15))
def test_mode_ordering(p_dbm):
    spec, ase = shaped_spectrum(), edfa_ase()
    p = 1e-3 * 10 ** (p_dbm / 10)
    s = {m: snr_channel(3, p, spec, ase, m) for m in Mode}
    assert s[Mode.ASE_ONLY] >= s[Mode.FFNLC] and s[Mode.ASE_ONLY] >= s[Mode.EDC]
    rec = snr_records(preset_edfa(), spec, ase, p)[3]
    # EDC drops the signal-ASE term, FF-NLC the signal-signal term
    if rec.p_ss >= rec.p_sn:
        assert s[Mode.FFNLC] >= s[Mode.EDC]
    else:
        assert s[Mode.EDC] > s[Mode.FFNLC]


@pytest.mark.parametrize("mode", [Mode.EDC, Mode.FFNLC])
def test_mode_ordering_at_operating_points(mode):
    spec, ase = shaped_spectrum(), edfa_ase()
    p = optimize_uniform_power(spec, ase, mode)
    for r in snr_records(preset_edfa(), spec, ase, p):
        assert r.snr_ase >= r.snr_nlc >= r.snr_edc


def test_linear_regime():
    spec, ase = shaped_spectrum(), edfa_ase()
    p = 1e-9
    assert snr_channel(0, p, spec, ase, Mode.EDC) == pytest.approx(p / ase.p_n_total, rel=1e-5)


@given(st.floats(min_value=1e3, max_value=1e5), st.floats(min_value=1.01, max_value=10.0))
def test_snr_monotone_in_eta_and_noise(eta, factor):
    ase = edfa_ase()
    lo, hi = flat_spectrum(eta), flat_spectrum(eta * factor)
    more_noise = AseBudget(ase.p_n_span * factor, ase.p_n_total * factor, 25, "edfa")
    for mode in (Mode.EDC, Mode.FFNLC):
        base = snr_channel(0, 1e-3, lo, ase, mode)
        assert snr_channel(0, 1e-3, hi, ase, mode) < base
        assert snr_channel(0, 1e-3, lo, more_noise, mode) < base


@pytest.mark.parametrize("mode", [Mode.EDC, Mode.FFNLC])
def test_closed_form_matches_search(mode):
    spec, ase = shaped_spectrum(), edfa_ase()
    for k in (0, 7, 10):
        p = optimal_power_closed_form(k, spec, ase, mode)
        x, _ = golden_section_max(lambda d: snr_channel(k, 1e-3 * 10 ** (d / 10), spec, ase, mode),
                                  -30, 20, xtol=1e-4)
        assert abs(10 * math.log10(p / 1e-3) - x) < 0.01


def test_stationarity_identities():
    spec, ase = shaped_spectrum(), edfa_ase()
    p = optimal_power_closed_form(0, spec, ase, Mode.EDC)
    rec = snr_records(preset_edfa(), spec, ase, p)[10]
    assert rec.p_ss == pytest.approx(ase.p_n_total / 2, rel=1e-12)
    p = optimal_power_closed_form(0, spec, ase, Mode.FFNLC)
    rec = snr_records(preset_edfa(), spec, ase, p)[10]
    assert rec.p_sn == pytest.approx(ase.p_n_total, rel=1e-12)


def test_no_closed_form_for_ase_only():
    with pytest.raises(ValueError):
        optimal_power_closed_form(0, shaped_spectrum(), edfa_ase(), Mode.ASE_ONLY)


def test_snr_scaling_laws_are_exact():
    spec, ase = shaped_spectrum(), edfa_ase()

    def opt_snr(k, mode):
        return snr_channel(k, optimal_power_closed_form(k, spec, ase, mode), spec, ase, mode)

    r = spec.eta_at(10) / spec.eta_at(0)
    assert opt_snr(10, Mode.EDC) / opt_snr(0, Mode.EDC) == pytest.approx(r ** (-1 / 3), rel=1e-12)
    assert opt_snr(10, Mode.FFNLC) / opt_snr(0, Mode.FFNLC) == pytest.approx(r ** (-1 / 2), rel=1e-12)


def test_compensation_gain_law():
    """Gain of FF-NLC over EDC moves as -(1/6) eta[dB] - (1/3) P_n[dB]."""
    base_ase = edfa_ase()

    def gain_db(eta, noise_scale):
        spec = flat_spectrum(eta)
        ase = AseBudget(base_ase.p_n_span * noise_scale, base_ase.p_n_total * noise_scale, 25, "edfa")
        out = []
        for mode in (Mode.EDC, Mode.FFNLC):
            p = optimal_power_closed_form(0, spec, ase, mode)
            out.append(10 * math.log10(snr_channel(0, p, spec, ase, mode)))
        return out[1] - out[0]

    ref = gain_db(1e4, 1.0)
    for d_eta in np.linspace(-5, 5, 5):
        for d_pn in np.linspace(-5, 5, 5):
            got = gain_db(1e4 * 10 ** (d_eta / 10), 10 ** (d_pn / 10)) - ref
            assert got == pytest.approx(-d_eta / 6 - d_pn / 3, abs=0.2)


def test_flat_spectrum_uniform_power_is_closed_form():
    spec, ase = flat_spectrum(), edfa_ase()
    for mode in (Mode.EDC, Mode.FFNLC):
        p = optimize_uniform_power(spec, ase, mode)
        ref = optimal_power_closed_form(0, spec, ase, mode)
        assert abs(10 * math.log10(p / ref)) < 0.01


def test_uniform_power_between_channel_optima():
    spec, ase = shaped_spectrum(), edfa_ase()
    for mode in (Mode.EDC, Mode.FFNLC):
        p = optimize_uniform_power(spec, ase, mode)
        opts = [optimal_power_closed_form(int(k), spec, ase, mode) for k in spec.k]
        assert min(opts) * 0.999 <= p <= max(opts) * 1.001


def test_uniform_power_is_local_maximum_on_edfa_preset():
    cfg = preset_edfa()
    spec = eta_spectrum(cfg)
    ase = ase_budget(cfg)
    for mode in (Mode.EDC, Mode.FFNLC):
        p = optimize_uniform_power(spec, ase, mode)
        best = total_capacity(p, spec, ase, mode)
        for d in (-0.5, 0.5):
            assert total_capacity(p * 10 ** (d / 10), spec, ase, mode) < best


def test_snr_spectrum_shape():
    cfg = small_grid(preset_edfa(), 51)
    spec = eta_spectrum(cfg)
    for mode in Mode:
        recs = snr_spectrum(cfg, spec, mode)
        assert len(recs) == 51
        centre, edge = recs[25], recs[0]
        assert edge.snr_edc >= centre.snr_edc and edge.snr_nlc >= centre.snr_nlc
        ase_col = [r.snr_ase for r in recs]
        assert max(ase_col) == min(ase_col)
        for r in recs:
            assert r.snr_ase >= r.snr_nlc >= r.snr_edc
            assert r.p_ss >= 0 and r.p_sn >= 0


def test_mode_parsing():
    assert Mode.parse("FF-NLC") is Mode.FFNLC
    assert Mode.parse("ase_only") is Mode.ASE_ONLY
    with pytest.raises(ValueError):
        Mode.parse("dbp")
