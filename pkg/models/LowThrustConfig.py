from typing import List
from pydantic import BaseModel, ConfigDict, Field

SECONDS_PER_DAY = 86400.0


class LowThrustConfig(BaseModel):
    """
    Planar Earth-Mars low-thrust rendezvous in heliocentric coordinates.
    Physical units are km, s; the solver works in units scaled by
    `length_scale` and `time_scale`.
    """
    N: int = Field(40, ge=1)
    tof_days: float = Field(348.79, gt=0)
    gm_sun: float = Field(1.32712442099e11, gt=0, description="km^3/s^2")
    u_ub: float = Field(1e-6, gt=0, description="km/s^2")
    sigma_r2: float = Field(1e-12, ge=0, description="km^2")
    sigma_v2: float = Field(2.522627e-5, ge=0, description="km^2/s^2")
    r_earth: List[float] = Field(default_factory=lambda: [-140699693.0, -51614428.0],
                                 min_length=2, max_length=2)
    v_earth: List[float] = Field(default_factory=lambda: [9.774596, -28.07828],
                                 min_length=2, max_length=2)
    r_mars: List[float] = Field(default_factory=lambda: [-172682023.0, 176959469.0],
                                min_length=2, max_length=2)
    v_mars: List[float] = Field(default_factory=lambda: [-16.427384, -14.860506],
                                min_length=2, max_length=2)
    c_f: float = Field(1e6, gt=0)
    length_scale: float = Field(1e8, gt=0)
    time_scale: float = Field(1e6, gt=0)
    kappa: float = Field(2.0, gt=0)
    mass_leak: float = Field(1e-6, gt=0)
    duty_cycle: float = Field(1.0, gt=0, le=1)
    substeps: int = Field(1, ge=1, description="RK4 steps per stage")
    min_radius_km: float = Field(1.0, gt=0)
    prob_level_multiplier: float = Field(3.0, gt=0)
    epsilon_singularity: float = Field(1e-4, gt=0)

    model_config = ConfigDict(extra="forbid")

    @property
    def tof(self) -> float:
        return self.tof_days * SECONDS_PER_DAY

    @property
    def dt(self) -> float:
        return self.tof / self.N
