"""One coded frame through the RIS uplink: encode, modulate, transmit and run
the detector/decoder exchange."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from risidd.channel import ChannelSet, effective_channel
from risidd.config import SystemConfig, split_power
from risidd.detector import (
    detect,
    extrinsic_llr,
    noise_covariance,
    qpsk_modulate,
    sinr_linear,
    soft_symbols,
    sum_rate,
)
from risidd.ldpc import ParityCheck, construct_code, decode, encode, extract_info
from risidd.ris_design import ReflectionState


@dataclass
class FrameResult:
    bit_errors: np.ndarray  # (K,) info-bit errors
    bits_total: np.ndarray  # (K,)
    sinr_final: np.ndarray  # (K,)
    sum_rate: float
    converged_users: int
    iterations_used: int

    @property
    def ber(self) -> float:
        return float(self.bit_errors.sum() / self.bits_total.sum())


def code_for(config: SystemConfig) -> ParityCheck:
    return construct_code(config.ldpc_n, config.ldpc_rate, config.ldpc_seed)


def synthesize_received(Heff, x, G, phi, sigma_v2: float, sigma_s2: float,
                        rng: np.random.Generator) -> np.ndarray:
    """y = Heff x + G diag(phi) n_v + n_s for one slot (x: K) or a block (x: K x S).

    ``sigma_v2`` must already be zero for a passive surface; in that case no
    RIS noise is drawn at all.
    """
    x = np.asarray(x)
    M, N = G.shape
    tail = x.shape[1:]
    y = Heff @ x
    if sigma_v2 > 0:
        nv = np.sqrt(sigma_v2 / 2.0) * (rng.standard_normal((N, *tail)) + 1j * rng.standard_normal((N, *tail)))
        y = y + (G * np.asarray(phi)[None, :]) @ nv
    if sigma_s2 > 0:
        y = y + np.sqrt(sigma_s2 / 2.0) * (rng.standard_normal((M, *tail)) + 1j * rng.standard_normal((M, *tail)))
    return y


def run_frame_stages(config: SystemConfig, ch: ChannelSet, refl: ReflectionState,
                     rng: np.random.Generator, tau: int | None = None,
                     code: ParityCheck | None = None) -> list[FrameResult]:
    """Run a frame and report the outcome after every IDD depth 0..tau.

    Depth 0 is the linear MMSE receiver followed by one decoding; each further
    depth feeds the decoder extrinsics back to the soft-SIC detector, detects
    again and decodes again. All randomness (bits, noise) is drawn before the
    first detection, so entry t equals a stand-alone run with ``tau=t``.
    """
    tau = config.tau if tau is None else tau
    pc = code if code is not None else code_for(config)
    budget = split_power(config)
    sx2, sv2, ss2 = budget.sigma_x2, config.sigma_v2, config.sigma_s2
    K = config.K
    phi = refl.phi

    info = rng.integers(0, 2, size=(K, pc.k_info), dtype=np.uint8)
    cw = encode(pc, info)
    X = qpsk_modulate(cw, sx2)  # (K, S)
    Heff = effective_channel(ch, phi)
    Y = synthesize_received(Heff, X, ch.G, phi, sv2, ss2, rng)
    ncov = noise_covariance(ch.G, phi, sv2, ss2)

    Lc = np.zeros((K, pc.n))
    stages = []
    for t in range(tau + 1):
        x_tilde, v = soft_symbols(Lc, sx2)
        out = detect(Y, Heff, x_tilde, v, ncov, sx2)
        Ld = extrinsic_llr(out.x_hat, out.mu, out.eta2, sx2)
        dec = decode(pc, Ld, config.max_inner)
        Lc = dec.extrinsic
        if t == 0:
            sinr = np.array([sinr_linear(out.W[k].conj(), k, Heff, ch.G, phi, sx2, sv2, ss2)
                             for k in range(K)])
        else:
            sinr = out.sinr
        errors = np.sum(extract_info(pc, dec.hard_bits) != info, axis=1)
        stages.append(FrameResult(
            bit_errors=errors,
            bits_total=np.full(K, pc.k_info),
            sinr_final=sinr,
            sum_rate=sum_rate(sinr),
            converged_users=int(np.sum(dec.converged)),
            iterations_used=t,
        ))
    return stages


def run_frame(config: SystemConfig, ch: ChannelSet, refl: ReflectionState,
              rng: np.random.Generator, code: ParityCheck | None = None) -> FrameResult:
    return run_frame_stages(config, ch, refl, rng, config.tau, code)[-1]
