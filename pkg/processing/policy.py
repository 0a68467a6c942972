"""
Affine feedback policies fitted to optimized sigma-point controls.
"""
from typing import List, Optional, Sequence
import logging
import numpy as np
from models.AffineStagePolicy import AffineStagePolicy
from models.PolicySet import PolicySet
from models.SigmaSet import SigmaSet

logger = logging.getLogger(__name__)

# singular values of the paired state differences below this fraction of
# the largest are treated as collapsed directions
POLICY_RCOND = 1e-8
COLLAPSE_ATOL = 1e-300


def fit_policy(X: SigmaSet,
               U: np.ndarray,
               saturation: Optional[float] = None) -> AffineStagePolicy:
    """
    Weighted least-squares affine law through the (X_i, U_i) pairs.

    With symmetric sigma points the weighted fit decouples: u0 is the
    weighted control mean and K solves K·(X_j − X_{j+n}) = U_j − U_{j+n}
    in the least-squares sense.

    Args:
        X (SigmaSet): state sigma points, n × (2n+1).
        U (np.ndarray): controls at the sigma points, m × (2n+1).
        saturation (float): optional norm bound applied on evaluation.

    Returns:
        AffineStagePolicy: fitted law; `degenerate` is set when the points
        are collapsed but the controls still differ.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[1] != X.size:
        raise ValueError(f"{X.size} sigma points but {U.shape[1]} controls")
    n = X.dim
    u0 = U @ X.weights
    x_ref = X.center
    dX = X.points[:, 1:n + 1] - X.points[:, n + 1:]
    dU = U[:, 1:n + 1] - U[:, n + 1:]

    scale_x = max(float(np.abs(X.points).max(initial=0.0)), 1.0)
    collapsed = float(np.abs(dX).max(initial=0.0)) <= COLLAPSE_ATOL * scale_x
    degenerate = False
    if collapsed:
        K = np.zeros((U.shape[0], n))
        spread = np.abs(U - u0[:, None]).max(initial=0.0)
        if spread > 1e-12 * max(float(np.abs(u0).max(initial=0.0)), 1.0):
            degenerate = True
            logger.warning("Sigma points are collapsed but controls differ; "
                           "falling back to a constant policy")
    else:
        K = dU @ np.linalg.pinv(dX, rcond=POLICY_RCOND)
    return AffineStagePolicy(u0=u0, K=K, x_ref=x_ref,
                             saturation=saturation, degenerate=degenerate)


def eval_policy_raw(p: AffineStagePolicy, x: np.ndarray) -> np.ndarray:
    """u0 + K(x − x_ref) without saturation; x may carry leading axes."""
    x = np.asarray(x, dtype=float)
    return p.u0 + (x - p.x_ref) @ p.K.T


def saturate(u: np.ndarray, bound: Optional[float]) -> np.ndarray:
    """Rescale rows of u onto ‖u‖ <= bound, keeping their direction."""
    if bound is None:
        return u
    norm = np.linalg.norm(u, axis=-1, keepdims=True)
    factor = np.where(norm > bound, bound / np.where(norm > 0, norm, 1.0), 1.0)
    return u * factor


def eval_policy(p: AffineStagePolicy, x: np.ndarray) -> np.ndarray:
    return saturate(eval_policy_raw(p, x), p.saturation)


def fit_policies(Xs: Sequence[SigmaSet],
                 Us: Sequence[np.ndarray],
                 problem: str,
                 saturation: Optional[Sequence[float]] = None,
                 run: Optional[dict] = None) -> PolicySet:
    """Per-stage policies for a stacked trajectory X_0..X_N, U_0..U_{N-1}."""
    stages: List[AffineStagePolicy] = []
    for k, U in enumerate(Us):
        bound = None if saturation is None else float(saturation[k])
        stages.append(fit_policy(Xs[k], U, bound))
    n_degenerate = sum(p.degenerate for p in stages)
    if n_degenerate:
        logger.warning(f"{n_degenerate} of {len(stages)} stage policies "
                       f"are degenerate")
    return PolicySet(problem=problem, stages=stages, run=run)


def weighted_residual(p: AffineStagePolicy,
                      X: SigmaSet,
                      U: np.ndarray) -> float:
    """Σ c_i ‖μ(X_i) − U_i‖² of the unsaturated law."""
    R = eval_policy_raw(p, X.points.T) - np.atleast_2d(U).T
    return float(X.weights @ np.sum(R ** 2, axis=-1))
