import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10


class GaussianState(BaseModel):
    """
    Gaussian belief N(mean, cov) in problem units.
    """
    mean: np.ndarray
    cov: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("mean", mode="before")
    @classmethod
    def _as_vector(cls, v):
        return np.atleast_1d(np.asarray(v, dtype=float)).reshape(-1)

    @field_validator("cov", mode="before")
    @classmethod
    def _as_matrix(cls, v):
        return np.atleast_2d(np.asarray(v, dtype=float))

    @model_validator(mode="after")
    def _check_cov(self):
        n = self.mean.size
        if self.cov.shape != (n, n):
            raise ValueError(f"cov must be {n}x{n}, got {self.cov.shape}")
        scale = max(float(np.abs(self.cov).max(initial=0.0)), 1e-300)
        if np.abs(self.cov - self.cov.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
            raise ValueError("cov is not symmetric")
        eig = np.linalg.eigvalsh(self.cov)
        if eig.size and eig[0] < -PSD_RTOL * max(eig[-1], 0.0):
            raise ValueError(f"cov is not PSD (min eigenvalue {eig[0]:.3e})")
        return self

    @property
    def dim(self) -> int:
        return self.mean.size

    @classmethod
    def zero_mean(cls, cov) -> "GaussianState":
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls(mean=np.zeros(cov.shape[0]), cov=cov)
