"""Spectral and proximal kernels: SVD, singular value thresholding, complex
soft-thresholding, and leverage scores.

Everything here operates on plain numpy arrays and is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SVDFactors:
    """Thin SVD ``U diag(sigma) V^H`` with ``r = min(m, n)`` columns."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.conj().T


@dataclass
class LeveragePair:
    """Row (left) and column (right) leverage scores of a matrix.

    ``left`` sums to the row count and ``right`` to the column count whenever
    ``rank_used >= 1``; both are all-zero when the matrix is numerically zero.
    """

    left: np.ndarray
    right: np.ndarray
    rank_used: int


def svd(m: np.ndarray) -> SVDFactors:
    """Thin SVD of a (possibly complex) matrix with nonincreasing sigma."""
    if not np.isfinite(m).all():
        raise ValueError("non-finite entries in SVD input")
    U, s, Vh = np.linalg.svd(m, full_matrices=False)
    return SVDFactors(U=U, sigma=s, V=Vh.conj().T)


def svt(m: np.ndarray, tau: float) -> tuple[np.ndarray, SVDFactors]:
    """Singular value thresholding ``U max(sigma - tau, 0) V^H``.

    Returns the shrunk matrix together with the factors of the *input*, so
    callers that need leverage scores afterwards do not redecompose.
    """
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    f = svd(m)
    return (f.U * np.maximum(f.sigma - tau, 0.0)) @ f.V.conj().T, f


def shrink_factors(f: SVDFactors, tau: float) -> SVDFactors:
    """Factors of ``svt(m, tau)`` given the factors of ``m``."""
    return SVDFactors(U=f.U, sigma=np.maximum(f.sigma - tau, 0.0), V=f.V)


def soft_threshold(t: np.ndarray, lam: float) -> np.ndarray:
    """Complex soft-thresholding: shrink magnitudes by ``lam``, keep phases.

    Zero entries map to zero (the phase factor is taken as 0 at the origin).
    """
    if lam < 0:
        raise ValueError("threshold must be nonnegative")
    mag = np.abs(t)
    scale = np.maximum(mag - lam, 0.0) / np.where(mag > 0, mag, 1.0)
    return t * scale


def leverage_scores(f: SVDFactors, rank_tol: float = 1e-6) -> LeveragePair:
    """Left/right leverage scores of the matrix behind ``f``.

    The numerical rank is the number of singular values above
    ``rank_tol * sigma_max``; scores use only that many singular vectors and
    are scaled so each side sums to its dimension. A zero matrix yields
    all-zero scores with ``rank_used = 0``.
    """
    if not 0 < rank_tol < 1:
        raise ValueError("rank_tol must lie in (0, 1)")
    m, n = f.U.shape[0], f.V.shape[0]
    smax = f.sigma[0] if len(f.sigma) else 0.0
    r = int(np.count_nonzero(f.sigma > rank_tol * smax)) if smax > 0 else 0
    if r == 0:
        return LeveragePair(np.zeros(m), np.zeros(n), 0)
    left = (m / r) * np.sum(np.abs(f.U[:, :r]) ** 2, axis=1)
    right = (n / r) * np.sum(np.abs(f.V[:, :r]) ** 2, axis=1)
    return LeveragePair(left, right, r)
