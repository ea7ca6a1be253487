"""Rayleigh SIMO fading with maximal ratio combining and short-packet loss.

Packets are modeled at the success/failure level: the finite-blocklength
normal approximation gives the loss probability at the sampled post-combining
SNR, and the average loss is available both as an Erlang-weighted quadrature
and as the closed-form incomplete-gamma approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import stats

from .numerics import q_function, regularized_upper_gamma

LOG2E_SQ = math.log2(math.e) ** 2

_ERLANG_TAIL_MASS = 1e-10


@dataclass(frozen=True)
class ChannelConfig:
    """Receive antenna count, linear transmit SNR, and channel uses per slot."""

    antennas: int
    snr_linear: float
    blocklength: int

    def __post_init__(self):
        if self.antennas < 1 or int(self.antennas) != self.antennas:
            raise ValueError("antennas must be a positive integer")
        if self.snr_linear <= 0:
            raise ValueError("transmit SNR must be positive")
        if self.blocklength < 1 or int(self.blocklength) != self.blocklength:
            raise ValueError("blocklength must be a positive integer")


def snr_from_db(db: float) -> float:
    """Convert an SNR in decibels to a linear power ratio."""
    return 10.0 ** (db / 10.0)


def sample_post_mrc_snr(cfg: ChannelConfig, rng: np.random.Generator, size: int | None = None):
    """Draw the post-combining SNR: gamma0 times a sum of L unit exponentials.

    The result is Erlang(L, 1/gamma0) distributed. Returns a scalar when
    ``size`` is None, otherwise an array of that length.
    """
    n = 1 if size is None else size
    gains = rng.standard_exponential((n, cfg.antennas)).sum(axis=1)
    out = cfg.snr_linear * gains
    if size is None:
        return float(out[0])
    return out


def capacity(gamma):
    """Shannon capacity log2(1 + gamma) in bits per channel use."""
    return np.log2(1.0 + np.asarray(gamma, dtype=float))


def dispersion(gamma):
    """Channel dispersion gamma (2 + gamma) / (1 + gamma)^2 * (log2 e)^2."""
    g = np.asarray(gamma, dtype=float)
    return g * (2.0 + g) / (1.0 + g) ** 2 * LOG2E_SQ


def packet_loss(gamma, blocklength: int, rate: float):
    """Finite-blocklength decoding failure probability at receive SNR gamma.

    Q(sqrt(N / V(gamma)) * (C(gamma) - rate)); defined as 1 at gamma = 0,
    the continuous limit from the right. Accepts scalars or arrays.
    """
    if rate <= 0:
        raise ValueError("coding rate must be positive")
    g = np.asarray(gamma, dtype=float)
    v = dispersion(g)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.sqrt(blocklength / v) * (capacity(g) - rate)
    out = np.where(g > 0.0, q_function(np.where(g > 0.0, arg, 0.0)), 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def avg_packet_loss_exact(cfg: ChannelConfig, rate: float) -> float:
    """Average loss probability by adaptive quadrature against the Erlang density.

    The integration interval is truncated where the Erlang tail mass drops
    below 1e-10; the tail contributes essentially zero loss, so the truncation
    error is bounded by that mass.
    """
    if rate <= 0:
        raise ValueError("coding rate must be positive")
    dist = stats.gamma(a=cfg.antennas, scale=cfg.snr_linear)
    hi = float(dist.isf(_ERLANG_TAIL_MASS))
    knee = 2.0 ** rate - 1.0  # SNR where capacity meets the rate

    def integrand(g):
        return packet_loss(g, cfg.blocklength, rate) * dist.pdf(g)

    points = [knee] if 0.0 < knee < hi else None
    val, err = integrate.quad(integrand, 0.0, hi, points=points, limit=300,
                              epsabs=1e-10, epsrel=1e-9)
    if err > 1e-8:
        raise RuntimeError(f"quadrature did not converge (error estimate {err:g})")
    return min(max(val, 0.0), 1.0)


def avg_packet_loss_approx(cfg: ChannelConfig, rate: float) -> float:
    """Closed-form average loss 1 - Q(L, (2^rate - 1) / gamma0).

    Independent of the blocklength; the omitted correction is O(1/N).
    """
    if rate <= 0:
        raise ValueError("coding rate must be positive")
    beta = (2.0 ** rate - 1.0) / cfg.snr_linear
    return 1.0 - regularized_upper_gamma(cfg.antennas, beta)


def simulate_slot(loss_prob: float, rng: np.random.Generator) -> bool:
    """Bernoulli packet realization: True (success) with probability 1 - loss_prob."""
    if not 0.0 <= loss_prob <= 1.0:
        raise ValueError("loss probability must lie in [0, 1]")
    return bool(rng.random() >= loss_prob)
