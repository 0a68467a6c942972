from typing import List
import numpy as np
from pydantic import BaseModel, ConfigDict
from models.MCConfig import MCConfig


class MCResult(BaseModel):
    """
    Campaign histories stacked by sample index: states (S, N+1, nx),
    controls / raw_controls (S, N, nu). Failed samples keep NaN rows.
    """
    config: MCConfig
    problem: str
    bounds: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    raw_controls: np.ndarray
    delta_v: np.ndarray
    terminal: np.ndarray
    total: np.ndarray
    failed: np.ndarray
    failure_reasons: List[str]

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def samples(self) -> int:
        return self.states.shape[0]

    @property
    def n_failed(self) -> int:
        return int(self.failed.sum())

    @property
    def ok(self) -> np.ndarray:
        return ~self.failed
