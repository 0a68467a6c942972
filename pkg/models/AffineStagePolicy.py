from typing import Optional
import numpy as np
from pydantic import (BaseModel, ConfigDict, Field, field_serializer,
                      field_validator, model_validator)


class AffineStagePolicy(BaseModel):
    """
    u(x) = u0 + K(x − x_ref), optionally rescaled onto ‖u‖ <= saturation.
    """
    u0: np.ndarray
    K: np.ndarray
    x_ref: np.ndarray
    saturation: Optional[float] = Field(None, gt=0)
    degenerate: bool = False

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("u0", "x_ref", mode="before")
    @classmethod
    def _as_vector(cls, v):
        return np.atleast_1d(np.asarray(v, dtype=float)).reshape(-1)

    @field_validator("K", mode="before")
    @classmethod
    def _as_matrix(cls, v):
        return np.atleast_2d(np.asarray(v, dtype=float))

    @model_validator(mode="after")
    def _check(self):
        if self.K.shape != (self.u0.size, self.x_ref.size):
            raise ValueError(f"K must be {self.u0.size}x{self.x_ref.size}, "
                             f"got {self.K.shape}")
        for name in ("u0", "K", "x_ref"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")
        return self

    @field_serializer("u0", "K", "x_ref")
    def _to_list(self, v: np.ndarray):
        return v.tolist()
