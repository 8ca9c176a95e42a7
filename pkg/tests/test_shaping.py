import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from airlink.budget import Mode
from airlink.gn import eta_spectrum
from airlink.shaping import (
    SUPPORTED_ORDERS,
    _build,
    air_report,
    apply_mb,
    entropy_bits,
    gaussian_capacity,
    lambda_upper,
    mi_gauss_hermite,
    mi_gauss_hermite_full,
    mi_monte_carlo,
    optimize_lambda,
    square_qam,
)
from airlink.units import preset_edfa

from conftest import small_grid

ORDERS = st.sampled_from(SUPPORTED_ORDERS)


def db(x):
    return 10 ** (x / 10)


# ---------------------------------------------------------------- constellations


def test_qpsk_points():
    c = square_qam(4)
    expected = {complex(a, b) / math.sqrt(2) for a in (-1, 1) for b in (-1, 1)}
    assert all(min(abs(p - e) for e in expected) < 1e-15 for p in c.points)
    assert np.allclose(c.probs, 0.25)


def test_16qam_scaling():
    c = square_qam(16)
    assert np.max(np.abs(c.points.real)) == pytest.approx(3 / math.sqrt(10), rel=1e-15)
    assert c.energy == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_rotational_symmetry(order):
    c = square_qam(order)
    a = np.sort_complex(np.round(c.points, 12))
    b = np.sort_complex(np.round(c.points * 1j, 12))
    assert np.array_equal(a, b)


def test_unsupported_order():
    with pytest.raises(ValueError):
        square_qam(32)


@given(ORDERS, st.floats(min_value=0, max_value=2.0))
def test_mb_invariants(order, lam):
    c = apply_mb(square_qam(order), lam)
    assert abs(c.probs.sum() - 1) < 1e-12
    assert abs(c.energy - 1) < 1e-12
    assert np.all(c.probs > 0)


def test_mb_zero_is_uniform_exactly():
    for order in SUPPORTED_ORDERS:
        u, s = square_qam(order), apply_mb(square_qam(order), 0.0)
        assert np.array_equal(u.points, s.points) and np.array_equal(u.probs, s.probs)


def test_mb_concentrates_on_inner_ring():
    c = apply_mb(square_qam(64), 5.0)
    inner = np.argsort(np.abs(c.points))[:4]
    assert c.probs[inner].sum() > 1 - 1e-9


@pytest.mark.parametrize("order", [16, 256, 1024])
def test_mb_entropy_decreasing(order):
    lams = np.linspace(0, lambda_upper(order), 25)
    h = [entropy_bits(_build(order, x).probs) for x in lams]
    assert all(b < a for a, b in zip(h, h[1:]))


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        apply_mb(square_qam(16), -0.1)


# ---------------------------------------------------------------- mutual information


def test_mi_vanishes_at_zero_snr():
    for order in (4, 64, 1024):
        assert mi_gauss_hermite(square_qam(order), 1e-6) < 1e-3


def test_qpsk_saturates():
    assert mi_gauss_hermite(square_qam(4), db(20)) == pytest.approx(2.0, abs=1e-3)


def test_product_rule_equals_full_complex_rule():
    for order, lam in ((16, 0.0), (64, 0.05), (256, 0.01)):
        c = apply_mb(square_qam(order), lam)
        for snr_db in (3, 12, 22):
            assert mi_gauss_hermite(c, db(snr_db), 24) == pytest.approx(
                mi_gauss_hermite_full(c, db(snr_db), 24), abs=1e-10)


def test_16qam_against_long_monte_carlo():
    c = square_qam(16)
    mc, se = mi_monte_carlo(c, db(10), n_samples=10_000_000, seed=1)
    assert abs(mi_gauss_hermite(c, db(10)) - mc) < 3 * se


def test_monte_carlo_reproducible_and_converging():
    c = square_qam(16)
    a = mi_monte_carlo(c, db(8), 200_000, seed=3)
    assert a == mi_monte_carlo(c, db(8), 200_000, seed=3)
    b = mi_monte_carlo(c, db(8), 400_000, seed=4)
    assert a[1] / b[1] == pytest.approx(math.sqrt(2), rel=0.1)
    with pytest.raises(ValueError):
        mi_monte_carlo(c, db(8), 1000)


@pytest.mark.parametrize("order", [16, 256, 1024])
def test_mi_monotone_in_snr(order):
    c = square_qam(order)
    grid = np.linspace(-10, 40, 101)
    mi = [mi_gauss_hermite(c, db(s)) for s in grid]
    assert all(b >= a - 1e-9 for a, b in zip(mi, mi[1:]))


@given(ORDERS, st.floats(min_value=-5, max_value=35))
def test_mi_below_gaussian_capacity(order, snr_db):
    lam, mi = optimize_lambda(order, db(snr_db))
    assert mi <= gaussian_capacity(db(snr_db)) + 1e-9
    assert mi <= math.log2(order) + 1e-12
    assert mi >= mi_gauss_hermite(square_qam(order), db(snr_db))


def test_gaussian_capacity_values():
    assert gaussian_capacity(0.0) == 0.0
    assert gaussian_capacity(1.0) == 1.0
    assert gaussian_capacity(15.0) == 4.0


def test_shaping_vanishes_at_high_snr():
    lam, mi = optimize_lambda(16, db(40))
    assert lam == 0.0 and mi == pytest.approx(4.0, abs=1e-9)


def test_gh_order_16_vs_24_stability():
    """Stated stability requirement for a 16-node rule (M up to 1024, SNR up to 30 dB)."""
    worst = 0.0
    for order in SUPPORTED_ORDERS:
        for snr_db in np.arange(0, 31, 2.5):
            c = square_qam(order)
            worst = max(worst, abs(mi_gauss_hermite(c, db(snr_db), 16) - mi_gauss_hermite(c, db(snr_db), 24)))
    assert worst < 1e-3, f"max |MI(16) - MI(24)| = {worst:.2e} bit"


def test_gh_default_order_stability():
    worst = 0.0
    for order in SUPPORTED_ORDERS:
        for snr_db in np.arange(0, 31, 2.5):
            for lam in (0.0, 0.3 * lambda_upper(order)):
                c = _build(order, lam)
                worst = max(worst, abs(mi_gauss_hermite(c, db(snr_db), 32) - mi_gauss_hermite(c, db(snr_db), 40)))
    assert worst < 1e-3


# ---------------------------------------------------------------- AIR aggregation


def test_air_orderings_and_totals():
    cfg = small_grid(preset_edfa(), 51)
    spec = eta_spectrum(cfg)
    rep = air_report(cfg, spec, (Mode.EDC, Mode.FFNLC), (64, 1024), ("uniform", "mb"))
    for order in (64, 1024):
        edc = rep.air(Mode.EDC, order)
        nlc = rep.air(Mode.FFNLC, order)
        mb = rep.air(Mode.FFNLC, order, "mb")
        assert edc <= nlc <= mb <= rep.limit_signal_ase <= rep.limit_ase_only
        e = rep.entries[(Mode.FFNLC, order, "mb")]
        assert e.air_total == pytest.approx(sum(2 * cfg.grid.symbol_rate * c.mi_per_pol for c in e.channels))
        for ch in e.channels:
            assert 0 <= ch.mi_per_pol <= math.log2(order) and ch.mi_dp == 2 * ch.mi_per_pol


def test_air_rejects_unknown_shaping():
    cfg = small_grid(preset_edfa(), 11)
    with pytest.raises(ValueError):
        air_report(cfg, eta_spectrum(cfg), shapings=("ccdm",))
