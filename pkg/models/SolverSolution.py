from typing import List
import numpy as np
from pydantic import BaseModel, ConfigDict
from models.IterationRecord import IterationRecord


class SolverSolution(BaseModel):
    """
    Result of a DDP solve on a transcribed problem.

    States are (N+1, n) and controls (N, m) in the solver's flat layout;
    gains are (N, m, n).
    """
    states: np.ndarray
    controls: np.ndarray
    feedforward: np.ndarray
    gains: np.ndarray
    cost: float
    augmented_cost: float
    constraint_values: np.ndarray
    multipliers: np.ndarray
    penalty: float
    max_violation: float
    iterations: List[IterationRecord]
    converged: bool
    status: str

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]

    @property
    def max_iters_reached(self) -> bool:
        return self.status == "max_iters"
