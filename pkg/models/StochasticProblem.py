from typing import Callable, Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.stats import norm
from models.GaussianState import GaussianState, PSD_RTOL


class StochasticProblem(BaseModel):
    """
    Discrete-time stochastic optimal control problem

        x_{k+1} = f(x_k, u_k, w_k, k),  w_k ~ N(0, R_k),  x_0 ~ N(x̄_0, P_0)

    with stage cost l(x, u, w, k), terminal cost φ(x) and a scalar control
    constraint c(u) <= 0 imposed as a chance constraint.

    All callables broadcast over leading axes, e.g. dynamics receives
    x (..., nx), u (..., nu), w (..., nw) with identical leading shapes.
    When `control_bound` is set, the constraint is ‖u‖² − b_k² and
    `control_constraint` is ignored.
    """
    name: str = "problem"
    nx: int = Field(gt=0)
    nu: int = Field(gt=0)
    nw: int = Field(gt=0)
    N: int = Field(ge=1)
    dynamics: Callable
    stage_cost: Callable
    terminal_cost: Callable
    control_constraint: Optional[Callable] = None
    control_bound: Optional[np.ndarray] = None
    noise_cov: np.ndarray
    init: GaussianState
    kappa_x: float = Field(2.0, gt=0)
    kappa_w: float = Field(2.0, gt=0)
    prob_level_multiplier: float = Field(3.0, gt=0)
    prob_level: Optional[float] = Field(None, gt=0.5, lt=1)
    epsilon_singularity: float = Field(1e-4, gt=0)
    stage_offset: int = Field(0, ge=0)

    # Optional analytic derivatives, batched over a leading axis, for
    # noise-free dynamics and noise-independent costs.
    dynamics_jacobian: Optional[Callable] = Field(
        None, description="(x, u, k) -> (F_x, F_u) with w = 0")
    stage_cost_derivatives: Optional[Callable] = Field(
        None, description="(x, u, k) -> (l_x, l_u, l_xx, l_uu, l_ux)")
    terminal_cost_derivatives: Optional[Callable] = Field(
        None, description="(x) -> (φ_x, φ_xx)")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("noise_cov", mode="before")
    @classmethod
    def _as_array(cls, v):
        return np.asarray(v, dtype=float)

    @field_validator("control_bound", mode="before")
    @classmethod
    def _as_bound(cls, v):
        if v is None:
            return None
        return np.atleast_1d(np.asarray(v, dtype=float))

    @model_validator(mode="after")
    def _check(self):
        R = self.noise_cov
        if R.shape == (self.nw, self.nw):
            R = np.broadcast_to(R, (self.N, self.nw, self.nw)).copy()
        if R.shape != (self.N, self.nw, self.nw):
            raise ValueError(f"noise_cov must be ({self.nw}, {self.nw}) or "
                             f"({self.N}, {self.nw}, {self.nw}), got {R.shape}")
        eig = np.linalg.eigvalsh(0.5 * (R + np.swapaxes(R, 1, 2)))
        if np.any(eig[:, 0] < -PSD_RTOL * np.maximum(eig[:, -1], 0.0)):
            raise ValueError("noise covariances must be PSD")
        object.__setattr__(self, "noise_cov", R)

        if self.init.dim != self.nx:
            raise ValueError(f"init has dimension {self.init.dim}, "
                             f"expected {self.nx}")
        if self.control_bound is not None:
            b = self.control_bound
            if b.size == 1:
                b = np.full(self.N, float(b[0]))
            if b.shape != (self.N,) or np.any(b <= 0):
                raise ValueError("control_bound must be positive, scalar "
                                 "or one value per stage")
            object.__setattr__(self, "control_bound", b)
        return self

    @property
    def multiplier(self) -> float:
        """Standard-normal quantile used by the chance constraint."""
        if self.prob_level is not None:
            return float(norm.ppf(self.prob_level))
        return self.prob_level_multiplier

    @property
    def constraint_scale(self) -> Optional[np.ndarray]:
        """b_k² per stage when bounded, so scaled constraints are O(1)."""
        return None if self.control_bound is None else self.control_bound ** 2

    @property
    def has_constraint(self) -> bool:
        return (self.control_bound is not None
                or self.control_constraint is not None)

    def stage(self, k: int) -> int:
        """Absolute stage index of local stage k."""
        return self.stage_offset + k

    def tail(self, k: int, x: np.ndarray) -> "StochasticProblem":
        """
        Remaining-horizon problem from stage k, started at a known state
        (P = 0).
        """
        if not 0 <= k < self.N:
            raise ValueError(f"tail stage {k} outside [0, {self.N})")
        x = np.asarray(x, dtype=float).reshape(-1)
        update = dict(N=self.N - k,
                      noise_cov=self.noise_cov[k:],
                      init=GaussianState(mean=x, cov=np.zeros((self.nx, self.nx))),
                      stage_offset=self.stage_offset + k)
        if self.control_bound is not None:
            update["control_bound"] = self.control_bound[k:]
        return self.model_copy(update=update)

    def with_bounds(self, bounds) -> "StochasticProblem":
        """Copy with a replaced per-stage (or scalar) control bound."""
        b = np.atleast_1d(np.asarray(bounds, dtype=float))
        if b.size == 1:
            b = np.full(self.N, float(b[0]))
        if b.shape != (self.N,) or np.any(b <= 0):
            raise ValueError("bounds must be positive, one per stage")
        return self.model_copy(update={"control_bound": b})

    def deterministic(self) -> "StochasticProblem":
        """Same problem with P_0 = 0 and R_k = 0."""
        return self.model_copy(update=dict(
            noise_cov=np.zeros_like(self.noise_cov),
            init=GaussianState(mean=self.init.mean,
                               cov=np.zeros((self.nx, self.nx)))))
