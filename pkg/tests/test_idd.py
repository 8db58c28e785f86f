import numpy as np
import pytest

from risidd.channel import draw_channels
from risidd.config import SystemConfig, make_geometry, split_power
from risidd.detector import noise_covariance
from risidd.idd import FrameResult, run_frame, run_frame_stages, synthesize_received
from risidd.ris_design import alternating_design

from conftest import crandn


def _setup(cfg, seed=0):
    r = np.random.default_rng(seed)
    geo = make_geometry(cfg, r)
    ch = draw_channels(cfg, geo, r)
    refl, _ = alternating_design(ch, cfg, split_power(cfg))
    return ch, refl


def test_received_noiseless(rng):
    H, G = crandn(rng, 4, 2), crandn(rng, 4, 3)
    x = crandn(rng, 2, 5)
    np.testing.assert_array_equal(synthesize_received(H, x, G, np.ones(3), 0.0, 0.0, rng), H @ x)


def test_received_passive_draws_no_ris_noise(rng):
    H, x = crandn(rng, 4, 2), crandn(rng, 2, 5)
    a = synthesize_received(H, x, crandn(rng, 4, 3), np.ones(3), 0.0, 0.1, np.random.default_rng(1))
    b = synthesize_received(H, x, 1e6 * crandn(rng, 4, 3), np.ones(3), 0.0, 0.1, np.random.default_rng(1))
    np.testing.assert_array_equal(a, b)


def test_received_noise_covariance():
    r = np.random.default_rng(2)
    M, K, N, S = 4, 2, 6, 100_000
    H, G, phi = crandn(r, M, K), crandn(r, M, N), 1.5 * crandn(r, N)
    x = crandn(r, K, S)
    n = synthesize_received(H, x, G, phi, 0.2, 0.1, r) - H @ x
    emp = n @ n.conj().T / S
    ref = noise_covariance(G, phi, 0.2, 0.1)
    assert np.linalg.norm(emp - ref) <= 0.03 * np.linalg.norm(ref)


def test_quasi_noiseless_frame_is_error_free():
    cfg = SystemConfig(K=2, M=8, N=16, sigma_s2_dbm=-200.0, tau=1)
    ch, refl = _setup(cfg)
    res = run_frame(cfg, ch, refl, np.random.default_rng(0))
    assert res.bit_errors.sum() == 0
    assert res.converged_users == 2


def test_stages_match_standalone_depths():
    cfg = SystemConfig(pt_per_user_dbm=7.0)
    ch, refl = _setup(cfg, 1)
    stages = run_frame_stages(cfg, ch, refl, np.random.default_rng(5), tau=2)
    assert len(stages) == 3
    for t in range(3):
        alone = run_frame(cfg.replace(tau=t), ch, refl, np.random.default_rng(5))
        np.testing.assert_array_equal(alone.bit_errors, stages[t].bit_errors)
        np.testing.assert_array_equal(alone.sinr_final, stages[t].sinr_final)


def test_frame_is_deterministic():
    cfg = SystemConfig(tau=1)
    ch, refl = _setup(cfg, 2)
    a = run_frame(cfg, ch, refl, np.random.default_rng(9))
    b = run_frame(cfg, ch, refl, np.random.default_rng(9))
    np.testing.assert_array_equal(a.bit_errors, b.bit_errors)
    assert a.sum_rate == b.sum_rate


@pytest.mark.parametrize("mode", ["passive", "active"])
def test_frame_result_fields(mode):
    cfg = SystemConfig(ris_mode=mode, tau=1, pt_per_user_dbm=0.0)
    ch, refl = _setup(cfg, 3)
    res = run_frame(cfg, ch, refl, np.random.default_rng(0))
    assert isinstance(res, FrameResult)
    assert res.bits_total.tolist() == [256] * cfg.K
    assert np.all(res.bit_errors <= res.bits_total)
    assert np.isfinite(res.sum_rate) and res.sum_rate >= 0
    assert 0.0 <= res.ber <= 1.0
    assert res.iterations_used == 1
