from typing import Literal
from pydantic import BaseModel, ConfigDict, Field

CampaignMode = Literal["ddp_reopt", "tsddp_reopt", "tsddp_policy"]


class MCConfig(BaseModel):
    samples: int = Field(500, ge=1)
    master_seed: int = Field(0, ge=0)
    mode: CampaignMode = "tsddp_policy"
    duty_cycle: float = Field(1.0, gt=0, le=1,
                              description="Bound share kept after the first "
                                          "re-optimized stage (ddp_reopt)")
    saturation: bool = Field(False, description="Clamp policy outputs "
                                                "onto the control bound")
    workers: int = Field(0, ge=0, description="Worker processes, 0 for one per CPU")
    reopt_max_iters: int = Field(100, gt=0,
                                 description="Iteration cap of each warm-started "
                                             "re-optimization")
    reopt_cost_tolerance: float = Field(1e-6, gt=0,
                                        description="Relative decrease ending a "
                                                    "re-optimization")
    failure_tolerance: float = Field(0.01, ge=0, le=1)
    violation_rtol: float = Field(1e-9, ge=0)
    tube_sigma: float = Field(3.0, gt=0)

    model_config = ConfigDict(extra="forbid")
