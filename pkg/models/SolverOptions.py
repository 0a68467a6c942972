from pydantic import BaseModel, ConfigDict, Field, model_validator


class SolverOptions(BaseModel):
    max_iters: int = Field(1000, gt=0)
    cost_tolerance: float = Field(1e-10, gt=0,
                                  description="Relative decrease threshold")
    inner_tolerance: float = Field(1e-4, gt=0,
                                   description="Relative decrease ending the "
                                               "first multiplier epoch")
    inner_tolerance_decay: float = Field(0.1, gt=0, le=1)
    max_inner_iters: int = Field(50, gt=0,
                                 description="Iterations per multiplier epoch")
    constraint_tolerance: float = Field(1e-8, gt=0)
    reg_init: float = Field(1e-8, gt=0)
    reg_min: float = Field(1e-10, gt=0)
    reg_max: float = Field(1e10, gt=0)
    reg_increase: float = Field(10.0, gt=1)
    reg_decrease: float = Field(2.5, gt=1)
    backtrack: float = Field(0.5, gt=0, lt=1)
    min_step: float = Field(2.0 ** -10, gt=0, le=1)
    accept_ratio: float = Field(1e-4, gt=0)
    penalty_init: float = Field(100.0, gt=0)
    penalty_growth: float = Field(10.0, gt=1)
    penalty_max: float = Field(1e8, gt=0)
    multiplier_max: float = Field(1e8, gt=0)
    max_al_updates: int = Field(60, gt=0)
    fd_rel_step: float = Field(1e-6, gt=0)
    hessian_rel_step: float = Field(1e-4, gt=0)
    sqrt_jitter: float = Field(1e-12, ge=0,
                               description="Relative eigenvalue shift "
                                           "used while differentiating")

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_bounds(self):
        if not self.reg_min <= self.reg_init <= self.reg_max:
            raise ValueError("need reg_min <= reg_init <= reg_max")
        if self.penalty_init > self.penalty_max:
            raise ValueError("penalty_init exceeds penalty_max")
        return self
