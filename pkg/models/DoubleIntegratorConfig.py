from typing import List
from pydantic import BaseModel, ConfigDict, Field, model_validator


class DoubleIntegratorConfig(BaseModel):
    """
    One-dimensional double integrator rest-to-rest transfer with noisy
    velocity.
    """
    N: int = Field(39, ge=1)
    dt: float = Field(0.15, gt=0)
    b: float = Field(0.25, gt=0, description="Acceleration magnitude")
    noise_diag: List[float] = Field(default_factory=lambda: [1e-20, 2.5e-4],
                                    min_length=2, max_length=2)
    x0: List[float] = Field(default_factory=lambda: [-10.0, 0.0],
                            min_length=2, max_length=2)
    init_cov_diag: List[float] = Field(default_factory=lambda: [0.0, 0.0],
                                       min_length=2, max_length=2)
    xf: List[float] = Field(default_factory=lambda: [0.0, 0.0],
                            min_length=2, max_length=2)
    c_f: float = Field(1e4, gt=0)
    u_max: float = Field(1.0, gt=0)
    duty_cycle: float = Field(1.0, gt=0, le=1)
    kappa: float = Field(2.0, gt=0)
    prob_level_multiplier: float = Field(3.0, gt=0)
    epsilon_singularity: float = Field(1e-4, gt=0)
    abs_smoothing: float = Field(1e-12, gt=0,
                                 description="Final δ of the √(u²+δ) − √δ "
                                             "kernel standing in for |u|")
    smoothing_start: float = Field(1e-2, gt=0,
                                   description="δ of the first continuation solve")
    smoothing_factor: float = Field(1e-2, gt=0, lt=1)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_smoothing(self):
        if self.smoothing_start < self.abs_smoothing:
            raise ValueError("smoothing_start must be >= abs_smoothing")
        return self
