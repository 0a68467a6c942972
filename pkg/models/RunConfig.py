from typing import Literal, Union
from pydantic import BaseModel, ConfigDict, Field
from models.DoubleIntegratorConfig import DoubleIntegratorConfig
from models.LowThrustConfig import LowThrustConfig
from models.MCConfig import MCConfig
from models.SolverOptions import SolverOptions

ProblemName = Literal["double_integrator", "low_thrust"]


class RunConfig(BaseModel):
    """
    Fully resolved run configuration. `seed` is the campaign master seed and
    takes precedence over `montecarlo.master_seed`.
    """
    problem: ProblemName = "double_integrator"
    mode: Literal["ddp", "tsddp"] = "tsddp"
    seed: int = Field(0, ge=0)
    out_dir: str = "runs"
    double_integrator: DoubleIntegratorConfig = Field(
        default_factory=DoubleIntegratorConfig)
    low_thrust: LowThrustConfig = Field(default_factory=LowThrustConfig)
    solver: SolverOptions = Field(default_factory=SolverOptions)
    montecarlo: MCConfig = Field(default_factory=MCConfig)

    model_config = ConfigDict(extra="forbid")

    @property
    def problem_config(self) -> Union[DoubleIntegratorConfig, LowThrustConfig]:
        return getattr(self, self.problem)

    @property
    def campaign(self) -> MCConfig:
        return self.montecarlo.model_copy(update={"master_seed": self.seed})
