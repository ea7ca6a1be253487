"""Block quantization: orthogonal transform coding plus uniform scalar quantization.

The transform decorrelates features before element-wise quantization; the
end-to-end distortion behaves like isotropic noise of variance
U^2 / (3 (2^R - 1)^2) per dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuantizerConfig:
    """Uniform scalar quantizer on [-U, U] with 2^R points, after a transform.

    The grid includes both endpoints, so the resolution is 2U / (2^R - 1).
    ``basis`` rows are applied to the feature vector before quantization.
    """

    clip: float
    bits: int
    basis: np.ndarray

    def __post_init__(self):
        if self.clip <= 0:
            raise ValueError("clip range U must be positive")
        if self.bits < 1 or int(self.bits) != self.bits:
            raise ValueError("bits per dimension must be a positive integer")
        basis = np.asarray(self.basis, dtype=float)
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[0]))) > 1e-8:
            raise ValueError("basis must be orthogonal")
        object.__setattr__(self, "basis", basis)

    @property
    def resolution(self) -> float:
        return 2.0 * self.clip / (2 ** self.bits - 1)


def klt_basis(sigma: np.ndarray) -> np.ndarray:
    """Orthogonal basis whose rows are eigenvectors of sigma, eigenvalues descending.

    Sign convention: the first entry of each row exceeding 1e-12 in magnitude
    is made positive, so the basis is reproducible across platforms. Ties in
    the spectrum keep the stable eigh ordering (identity covariance maps to
    the identity basis).
    """
    sigma = np.asarray(sigma, dtype=float)
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise ValueError("covariance must be symmetric")
    vals, vecs = np.linalg.eigh(sigma)
    order = np.argsort(-vals, kind="stable")
    rows = vecs[:, order].T.copy()
    for row in rows:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return rows


def scalar_quantize(v, config: QuantizerConfig):
    """Map values to the grid point whose half-open cell [u - d/2, u + d/2) holds them.

    Out-of-range inputs saturate to the extreme grid points -U and +U.
    Accepts scalars or arrays.
    """
    delta = config.resolution
    u = config.clip
    v = np.asarray(v, dtype=float)
    idx = np.floor((v + u) / delta + 0.5)
    idx = np.clip(idx, 0, 2 ** config.bits - 1)
    out = -u + idx * delta
    if out.ndim == 0:
        return float(out)
    return out


def encode(x, config: QuantizerConfig) -> tuple[np.ndarray, int]:
    """Transform then quantize a feature vector (or rows of a 2-D batch).

    Returns the quantized transformed vector and the bit budget R * d.
    """
    x = np.asarray(x, dtype=float)
    y = x @ config.basis.T
    d = config.basis.shape[0]
    return scalar_quantize(y, config), config.bits * d


def decode(xq, config: QuantizerConfig) -> np.ndarray:
    """Invert the transform: apply the basis transpose to the quantized vector."""
    xq = np.asarray(xq, dtype=float)
    return xq @ config.basis


def noise_variance(bits: int, clip: float) -> float:
    """Per-dimension variance of the quantization distortion, U^2 / (3 (2^R - 1)^2)."""
    if bits < 1 or int(bits) != bits:
        raise ValueError("bits must be a positive integer")
    if clip <= 0:
        raise ValueError("clip range must be positive")
    return clip ** 2 / (3.0 * (2 ** bits - 1) ** 2)
