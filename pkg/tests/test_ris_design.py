import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risidd.channel import ChannelSet
from risidd.config import SystemConfig, split_power
from risidd.ris_design import (
    ReflectionDesignError,
    alternating_design,
    normal_equations,
    reflection_objective,
    ris_power,
    solve_reflection,
    truncate_active,
    truncate_passive,
)

from oracles import brute_objective, crandn, numeric_minimum


def _instance(r, K, M, N):
    return crandn(r, K, M), crandn(r, K, M, N), crandn(r, M, K), crandn(r, M, N)


def test_objective_matches_brute_force(rng):
    W, A, base, G = _instance(rng, 3, 4, 5)
    phi = crandn(rng, 5)
    assert reflection_objective(phi, W, A, base, G, 0.2, 1.5) == pytest.approx(
        brute_objective(phi, W, A, base, G, 0.2, 1.5), rel=1e-12)


def test_zero_cascade_gives_zero():
    r = np.random.default_rng(0)
    W, _, base, G = _instance(r, 2, 3, 4)
    phi = solve_reflection(W, np.zeros((2, 3, 4), dtype=complex), base, G, 0.1, 1.0)
    np.testing.assert_array_equal(phi, np.zeros(4))


def test_scalar_solution():
    w, a, h = 0.8 - 0.1j, 0.3 + 0.7j, 0.2 - 0.5j
    phi = solve_reflection(np.array([[w]]), np.array([[[a]]]), np.array([[h]]), np.zeros((1, 1)), 0.0, 1.0)
    assert phi[0] == pytest.approx((1 - w * h) / (w * a), rel=1e-12)


def test_matches_numerical_minimizer():
    r = np.random.default_rng(1)
    for _ in range(10):
        W, A, base, G = _instance(r, 2, 2, 2)
        sv2 = r.uniform(0, 0.5)
        phi = solve_reflection(W, A, base, G, sv2, 1.0)
        _, fmin = numeric_minimum(W, A, base, G, sv2, 1.0)
        f = reflection_objective(phi, W, A, base, G, sv2, 1.0)
        f0 = reflection_objective(np.zeros(2), W, A, base, G, sv2, 1.0)
        assert (f - fmin) / f0 <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_stationarity(seed, sv2):
    r = np.random.default_rng(seed)
    W, A, base, G = _instance(r, 2, 4, 3)
    lhs, psi = normal_equations(W, A, base, G, sv2, 1.0)
    phi = solve_reflection(W, A, base, G, sv2, 1.0)
    assert np.linalg.norm(lhs @ phi - psi) <= 1e-9 * np.linalg.norm(psi)


def test_rank_deficient_uses_min_norm():
    # K=1 passive: beta has rank 1 < N
    r = np.random.default_rng(2)
    W, A, base, G = _instance(r, 1, 2, 4)
    phi = solve_reflection(W, A, base, G, 0.0, 1.0)
    lhs, psi = normal_equations(W, A, base, G, 0.0, 1.0)
    np.testing.assert_allclose(phi, np.linalg.pinv(lhs) @ psi, atol=1e-9 * np.linalg.norm(phi))


def test_passive_truncation_examples():
    out = truncate_passive(np.array([3.0, -2j, 0.0, 1 + 1j]))
    np.testing.assert_allclose(out.phi, [1.0, -1j, 1.0, (1 + 1j) / np.sqrt(2)], atol=1e-15)
    assert out.mode == "passive"


@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=16))
def test_passive_truncation_idempotent(vals):
    once = truncate_passive(np.array(vals)).phi
    np.testing.assert_allclose(np.abs(once), 1.0, rtol=1e-12)
    np.testing.assert_allclose(truncate_passive(once).phi, once, rtol=1e-12)


def test_active_truncation_power(rng):
    phi, F = crandn(rng, 16), crandn(rng, 16, 4)
    out = truncate_active(phi, F, 2.0, 0.3, 5.0)
    assert ris_power(out.phi, F, 2.0, 0.3) == pytest.approx(5.0, rel=1e-9)
    # already at budget: unchanged
    np.testing.assert_allclose(truncate_active(out.phi, F, 2.0, 0.3, 5.0).phi, out.phi, rtol=1e-12)
    # doubling the budget scales every entry by sqrt(2)
    np.testing.assert_allclose(truncate_active(phi, F, 2.0, 0.3, 10.0).phi, np.sqrt(2) * out.phi, rtol=1e-12)
    assert out.below_unit_gain == int(np.sum(np.abs(out.phi) < 1))


def test_active_truncation_zero_vector(rng):
    with pytest.raises(ReflectionDesignError):
        truncate_active(np.zeros(4), crandn(rng, 4, 2), 1.0, 0.1, 1.0)


def _channels(r, cfg, scale=1e-4):
    return ChannelSet(scale * crandn(r, cfg.M, cfg.K), scale * crandn(r, cfg.M, cfg.N),
                      scale * crandn(r, cfg.N, cfg.K))


def test_no_rounds_keeps_initialization():
    cfg = SystemConfig(K=2, M=4, N=8, n_alt=0)
    state, _ = alternating_design(_channels(np.random.default_rng(3), cfg), cfg, split_power(cfg))
    np.testing.assert_array_equal(state.phi, np.ones(8))
    assert len(state.objective_trace) == 1


@pytest.mark.parametrize("mode", ["passive", "active"])
def test_alternation_never_increases_mse(mode):
    cfg = SystemConfig(K=2, M=4, N=8, n_alt=3, ris_mode=mode, pt_per_user_dbm=0.0,
                       sigma_s2_dbm=-95.0, sigma_v2_dbm=-95.0)
    budget = split_power(cfg)
    r = np.random.default_rng(4)
    ok = 0
    for _ in range(200):
        state, _ = alternating_design(_channels(r, cfg, 3e-5), cfg, budget)
        t = np.array(state.objective_trace)
        ok += t[-1] <= t[0] and np.all(np.diff(t) <= 0)
    assert ok >= 0.95 * 200


def test_passive_design_ignores_dynamic_noise():
    a = SystemConfig(K=2, M=4, N=8, sigma_v2_dbm=-95.0)
    b = a.replace(sigma_v2_dbm=40.0)
    ch = _channels(np.random.default_rng(5), a)
    sa, _ = alternating_design(ch, a, split_power(a))
    sb, _ = alternating_design(ch, b, split_power(b))
    np.testing.assert_array_equal(sa.phi, sb.phi)


def test_single_element_hand_trace():
    cfg = SystemConfig(K=1, M=1, N=1, n_alt=1)
    budget = split_power(cfg)
    sx2, ss2 = budget.sigma_x2, cfg.sigma_s2
    h, g, f = 3e-6 * (0.4 + 0.9j), 1e-3 * (0.7 - 0.2j), 1e-3 * (-0.5 + 0.1j)
    ch = ChannelSet(np.array([[h]]), np.array([[g]]), np.array([[f]]))
    # round 0: scalar MMSE filter for the all-ones surface
    hb = h + g * f
    w = sx2 * np.conj(hb) / (abs(hb) ** 2 * sx2 + ss2)  # row filter w^H
    # relaxed solve, then phase projection
    phi_o = (1 - w * h) / (w * g * f)
    expected = phi_o / abs(phi_o)
    state, W = alternating_design(ch, cfg, budget)
    assert state.phi[0] == pytest.approx(expected, rel=1e-12)
    hb1 = h + g * expected * f
    assert W[0, 0] == pytest.approx(sx2 * np.conj(hb1) / (abs(hb1) ** 2 * sx2 + ss2), rel=1e-10)
    assert state.objective_trace[1] < state.objective_trace[0]
