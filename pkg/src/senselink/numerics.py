"""Special functions and discrete-distribution utilities shared by all modules."""

from __future__ import annotations

import math

import numpy as np
from scipy import special


def q_function(x):
    """Standard normal tail probability Q(x) = P(Z > x).

    Computed through the complementary error function, Q(x) = erfc(x/sqrt(2))/2.
    Accepts scalars or numpy arrays; returns a float for scalar input.
    """
    x = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(x / math.sqrt(2.0))
    if out.ndim == 0:
        return float(out)
    return out


def regularized_upper_gamma(shape: int, x: float) -> float:
    """Regularized upper incomplete gamma Q(shape, x) for integer shape >= 1.

    For integer shape the function reduces to the finite Poisson tail sum
    exp(-x) * sum_{k=0}^{shape-1} x^k / k!, which is evaluated term by term in
    log space so large arguments neither overflow nor lose the exponential
    scaling. Monotone nonincreasing in x; equals 1 at x = 0.
    """
    if shape < 1 or int(shape) != shape:
        raise ValueError(f"shape must be a positive integer, got {shape}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 1.0
    return math.exp(log_regularized_upper_gamma(int(shape), x))


def log_regularized_upper_gamma(shape: int, x: float) -> float:
    """log Q(shape, x) for integer shape, stable far into the tail."""
    if shape < 1 or int(shape) != shape:
        raise ValueError(f"shape must be a positive integer, got {shape}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    lx = math.log(x)
    terms = [k * lx - math.lgamma(k + 1) for k in range(int(shape))]
    return min(special.logsumexp(terms) - x, 0.0)


def poisson_binomial_pmf(success_probs) -> np.ndarray:
    """PMF of the number of successes among independent Bernoulli trials.

    Computed by iterative convolution in O(K^2): after processing the i-th
    trial, pmf[m] holds P(M = m) for the first i trials. Returns an array of
    length K + 1 indexed by the success count m = 0..K.
    """
    p = np.asarray(success_probs, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("success_probs must be a nonempty 1-D sequence")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("success probabilities must lie in [0, 1]")
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for i, pi in enumerate(p):
        head = pmf[: i + 1].copy()
        pmf[: i + 1] = head * (1.0 - pi)
        pmf[1 : i + 2] += head * pi
    return pmf
