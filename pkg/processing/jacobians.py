"""
Central finite-difference derivative kernels.

Every function takes a callable that broadcasts over leading axes and an
evaluation point z of shape (..., d); all perturbed points are evaluated in
a single call, in a fixed order, so results are reproducible.
"""
from typing import Callable, Tuple
import numpy as np
from processing.exceptions import NonFiniteDerivativeError

FD_REL_STEP = 1e-6
HESSIAN_REL_STEP = 1e-4


def fd_steps(z: np.ndarray, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Per-coordinate step h = rel_step·max(1, |z_i|)."""
    return rel_step * np.maximum(1.0, np.abs(z))


def _check(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NonFiniteDerivativeError(f"non-finite {what}")
    return values


def jacobian(func: Callable[[np.ndarray], np.ndarray],
             z: np.ndarray,
             rel_step: float = FD_REL_STEP) -> np.ndarray:
    """
    Jacobian of a vector function at z.

    Args:
        func: maps (..., d) to (..., p).
        z (np.ndarray): point (..., d).

    Returns:
        np.ndarray: (..., p, d).
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    h = fd_steps(z, rel_step)
    E = np.eye(d) * h[..., None, :]
    Z = np.concatenate([z[..., None, :] + E, z[..., None, :] - E], axis=-2)
    out = _check(np.asarray(func(Z), dtype=float), "function value")
    diff = (out[..., :d, :] - out[..., d:, :]) / (2.0 * h[..., :, None])
    return _check(np.swapaxes(diff, -1, -2), "Jacobian")


def gradient(func: Callable[[np.ndarray], np.ndarray],
             z: np.ndarray,
             rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Gradient (..., d) of a scalar function mapping (..., d) to (...)."""
    return jacobian(lambda Z: np.asarray(func(Z))[..., None],
                    z, rel_step)[..., 0, :]


def hessian(func: Callable[[np.ndarray], np.ndarray],
            z: np.ndarray,
            rel_step: float = HESSIAN_REL_STEP) -> np.ndarray:
    """
    Hessian (..., d, d) of a scalar function from the four-point
    mixed central difference on every pair i <= j.
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    h = fd_steps(z, rel_step)
    I, J = np.triu_indices(d)
    q = I.size
    E = np.eye(d)
    offsets = []
    for si, sj in ((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)):
        offsets.append(si * h[..., I, None] * E[I]
                       + sj * h[..., J, None] * E[J])
    Z = z[..., None, :] + np.concatenate(offsets, axis=-2)
    f = _check(np.asarray(func(Z), dtype=float), "function value")
    fpp, fpm, fmp, fmm = (f[..., a * q:(a + 1) * q] for a in range(4))
    vals = (fpp - fpm - fmp + fmm) / (4.0 * h[..., I] * h[..., J])
    H = np.zeros(z.shape + (d,))
    H[..., I, J] = vals
    H[..., J, I] = vals
    return _check(H, "Hessian")


def split_jacobian(F: Callable[[np.ndarray, np.ndarray], np.ndarray],
                   x: np.ndarray,
                   u: np.ndarray,
                   rel_step: float = FD_REL_STEP
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Jacobians (F_x, F_u) of F(x, u) at a single point, differentiating
    the concatenated vector [x, u].
    """
    n = x.size
    z = np.concatenate([x, u])
    Jz = jacobian(lambda Z: F(Z[..., :n], Z[..., n:]), z, rel_step)
    return Jz[:, :n], Jz[:, n:]


def gradient_hessian(func: Callable[[np.ndarray], np.ndarray],
                     z: np.ndarray,
                     rel_step: float = FD_REL_STEP,
                     hessian_rel_step: float = HESSIAN_REL_STEP
                     ) -> Tuple[np.ndarray, np.ndarray]:
    return (gradient(func, z, rel_step),
            hessian(func, z, hessian_rel_step))
