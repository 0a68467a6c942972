import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class SigmaSet(BaseModel):
    """
    2n+1 weighted points; column i of `points` is point i, column 0 the mean.
    """
    points: np.ndarray
    weights: np.ndarray
    kappa: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("points", mode="before")
    @classmethod
    def _as_matrix(cls, v):
        return np.atleast_2d(np.asarray(v, dtype=float))

    @field_validator("weights", mode="before")
    @classmethod
    def _as_vector(cls, v):
        return np.asarray(v, dtype=float).reshape(-1)

    @model_validator(mode="after")
    def _check(self):
        n, m = self.points.shape
        if m != 2 * n + 1 or self.weights.size != m:
            raise ValueError(f"expected {n}x{2 * n + 1} points and "
                             f"{2 * n + 1} weights, got {self.points.shape} "
                             f"and {self.weights.size}")
        if self.kappa <= 0:
            raise ValueError("kappa must be > 0")
        if abs(self.weights.sum() - 1.0) > 1e-14 * m:
            raise ValueError("weights must sum to 1")
        return self

    @property
    def dim(self) -> int:
        return self.points.shape[0]

    @property
    def size(self) -> int:
        return self.points.shape[1]

    @property
    def center(self) -> np.ndarray:
        return self.points[:, 0].copy()
