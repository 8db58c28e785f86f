import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from risidd.deployment import (
    active_near_user_limit,
    active_scenario,
    active_snr,
    active_snr_from_gains,
    deployment_curve,
    monotone_segments,
    passive_optimal_d,
    passive_scenario,
    passive_snr,
    siso_gains,
)

GRID = np.arange(1.0, 400.0)


def _closed_form_active(Ah, Ag, Af, sx, sn, sv):
    # budget fraction 1/10 written out with explicit integer coefficients
    num = 10 * Ah * sx * sv + 10 * Ah * Af * sx**2 + Ag * Af * sx**2
    den = Af * sv * sx + 10 * Af * sx * sn + 10 * sn * sv
    return num / den


def test_passive_argmax_endpoints():
    snr = passive_snr(GRID, passive_scenario())
    best = GRID[snr == snr.max()]
    assert set(best) == {1.0, 399.0}
    assert GRID[np.argmin(snr)] == 200.0
    assert passive_optimal_d(passive_scenario()) == (1.0, 399.0)


@given(st.floats(10.0, 2000.0))
def test_passive_symmetry(L):
    sc = passive_scenario(L=L)
    d = np.linspace(1.0, L - 1.0, 101)
    a, b = passive_snr(d, sc), passive_snr(L - d, sc)
    np.testing.assert_allclose(a, b, rtol=1e-12)
    assert passive_snr(L / 2, sc) < min(passive_snr(1.0, sc), passive_snr(L - 1.0, sc))


def test_passive_endpoints_dominate_interior():
    snr = passive_snr(GRID, passive_scenario())
    inner = snr[(GRID > 400 / 3) & (GRID < 800 / 3)]
    assert min(snr[0], snr[-1]) > inner.max()


def test_active_matches_closed_form():
    sc = active_scenario()
    Ah, Ag, Af = siso_gains(GRID, sc)
    ref = _closed_form_active(Ah, Ag, Af, sc.sigma_x2, sc.sigma_n2, sc.sigma_v2)
    np.testing.assert_allclose(active_snr(GRID, sc), ref, rtol=1e-12)


def test_active_prefers_ap_side():
    sc = active_scenario()
    snr = active_snr(GRID, sc)
    assert snr[0] > snr[-1]
    assert snr[0] > active_snr(200.0, sc)
    half = snr[GRID <= 200]
    assert np.all(np.diff(half) < 0)


def test_active_near_user_limit():
    sc = active_scenario()
    Ah = siso_gains(200.0, sc)[0]
    lim = active_near_user_limit(Ah, sc)
    ref = 11 * Ah * sc.sigma_x2 / (sc.sigma_v2 + 10 * sc.sigma_n2)
    assert lim == pytest.approx(ref, rel=1e-12)
    assert active_snr_from_gains(Ah, Ah, 1e12, sc) == pytest.approx(lim, rel=1e-6)
    # with equal noise powers the expression is flat in A^f, so use distinct ones
    sc2 = active_scenario(sigma_v2=10 * sc.sigma_n2)
    lim2 = active_near_user_limit(Ah, sc2)
    gaps = [abs(active_snr_from_gains(Ah, Ah, 10.0**e, sc2) - lim2) for e in range(-10, 6)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_active_finite_without_ris_noise():
    sc = active_scenario(sigma_v2=0.0)
    val = active_snr(100.0, sc)
    assert np.isfinite(val) and val > 0


def test_domain_checked():
    with pytest.raises(ValueError):
        passive_snr(0.5, passive_scenario())
    with pytest.raises(ValueError):
        active_snr(399.5, active_scenario())


def test_curve_and_segments():
    assert deployment_curve("passive", passive_scenario(), [5.0]) == [(5.0, passive_snr(5.0, passive_scenario()))]
    curve = deployment_curve("passive", passive_scenario(), GRID)
    assert [s[2] for s in monotone_segments(curve)] == ["decreasing", "increasing"]
    assert monotone_segments(curve)[0][1] == 200.0
    active = deployment_curve("active", active_scenario(), GRID)
    assert [s[2] for s in monotone_segments(active)] == ["decreasing"]
