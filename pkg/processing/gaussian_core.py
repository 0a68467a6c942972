"""
Gaussian beliefs, symmetric matrix square roots and the unscented transform.

Sigma points follow the symmetric (2n+1)-point set: point 0 is the mean and
points j / j+n are the mean plus / minus column j of sqrt((n+kappa)·P).
"""
from typing import Callable, Optional, Tuple
import logging
import numpy as np
from models.GaussianState import GaussianState, SYMMETRY_RTOL, PSD_RTOL
from models.SigmaSet import SigmaSet
from processing.exceptions import (NotSymmetricError,
                                   NotPSDError,
                                   WeightMismatchError)

logger = logging.getLogger(__name__)

DEFAULT_KAPPA = 2.0


def sigma_weights(n: int, kappa: float = DEFAULT_KAPPA) -> np.ndarray:
    """
    Weights of the 2n+1 sigma points: kappa/(n+kappa) for the center and
    1/(2(n+kappa)) for the others.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    w = np.full(2 * n + 1, 0.5 / (n + kappa))
    w[0] = kappa / (n + kappa)
    return w


def psd_sqrt_batch(M: np.ndarray, jitter: float = 0.0) -> np.ndarray:
    """
    Symmetric square roots of a stack of PSD matrices (..., n, n).

    `jitter` is a relative diagonal shift (times the largest eigenvalue)
    applied to the eigenvalues before taking roots.
    """
    M = np.asarray(M, dtype=float)
    scale = np.maximum(np.abs(M).max(axis=(-1, -2), initial=0.0), 1e-300)
    asym = np.abs(M - np.swapaxes(M, -1, -2)).max(axis=(-1, -2), initial=0.0)
    if np.any(asym > SYMMETRY_RTOL * scale):
        raise NotSymmetricError(
            f"matrix asymmetry {asym.max():.3e} exceeds tolerance")
    lam, V = np.linalg.eigh(0.5 * (M + np.swapaxes(M, -1, -2)))
    lam_max = np.maximum(lam[..., -1], 0.0)
    if np.any(lam[..., 0] < -PSD_RTOL * lam_max):
        raise NotPSDError(f"eigenvalue {lam[..., 0].min():.3e} below "
                          f"-{PSD_RTOL}·λmax")
    lam = np.clip(lam, 0.0, None)
    if jitter:
        lam = lam + jitter * lam_max[..., None]
    root = np.sqrt(lam)
    return (V * root[..., None, :]) @ np.swapaxes(V, -1, -2)


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """
    Symmetric square root S of a PSD matrix M (S·S = M) from the
    eigendecomposition M = V·diag(λ)·Vᵀ; eigenvalues within numerical
    jitter below zero are clamped to 0.

    Raises:
        NotSymmetricError, NotPSDError: M is not a valid covariance.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got {M.shape}")
    return psd_sqrt_batch(M)


def sigma_points(mean: np.ndarray,
                 cov: np.ndarray,
                 kappa: float = DEFAULT_KAPPA,
                 jitter: float = 0.0) -> np.ndarray:
    """
    Raw sigma points as an (n, 2n+1) array (no model validation).
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    n = mean.size
    S = psd_sqrt_batch((n + kappa) * np.asarray(cov, dtype=float), jitter)
    return np.hstack([mean[:, None], mean[:, None] + S, mean[:, None] - S])


def make_sigma_set(g: GaussianState,
                   kappa: float = DEFAULT_KAPPA) -> SigmaSet:
    """
    Sigma set of a Gaussian belief.

    Args:
        g (GaussianState): belief to represent.
        kappa (float): spread parameter, > 0.

    Returns:
        SigmaSet: points (n, 2n+1) with their weights.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    return SigmaSet(points=sigma_points(g.mean, g.cov, kappa),
                    weights=sigma_weights(g.dim, kappa),
                    kappa=kappa)


def weighted_moments(points: np.ndarray,
                     weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weighted mean and symmetrized scatter of the columns of `points`.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if points.shape[1] != weights.size:
        raise WeightMismatchError(f"{points.shape[1]} points but "
                                  f"{weights.size} weights")
    mean = points @ weights
    D = points - mean[:, None]
    C = (D * weights) @ D.T
    return mean, 0.5 * (C + C.T)


def moments_from_points(points: np.ndarray,
                        weights: np.ndarray) -> GaussianState:
    """
    Gaussian belief recovered from weighted points.

    Raises:
        WeightMismatchError: number of points and weights differ.
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if abs(weights.sum() - 1.0) > 1e-12:
        logger.warning(f"Weights sum to {weights.sum():.16f}, not 1")
    mean, cov = weighted_moments(points, weights)
    return GaussianState(mean=mean, cov=cov)


def unscented_transform(f: Callable[[np.ndarray], np.ndarray],
                        g: GaussianState,
                        kappa: float = DEFAULT_KAPPA,
                        weights: Optional[np.ndarray] = None
                        ) -> GaussianState:
    """
    Push a Gaussian through f with the unscented transform:
    sigma points, pointwise f, weighted moments.

    `weights` overrides the standard weights; only used by the negative
    control of the validation suite.
    """
    sigma = make_sigma_set(g, kappa)
    Y = np.column_stack([np.atleast_1d(np.asarray(f(sigma.points[:, i]),
                                                  dtype=float)).reshape(-1)
                         for i in range(sigma.size)])
    w = sigma.weights if weights is None else np.asarray(weights, dtype=float)
    mean, cov = weighted_moments(Y, w)
    return GaussianState(mean=mean, cov=cov)
