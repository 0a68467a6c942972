from typing import Optional
import numpy as np
from pydantic import BaseModel, ConfigDict


class SampleResult(BaseModel):
    """One closed-loop realization, in solver units."""
    sample: int
    states: np.ndarray
    controls: np.ndarray
    raw_controls: np.ndarray
    delta_v: float
    terminal: float
    failed: bool = False
    reason: Optional[str] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def total(self) -> float:
        return self.delta_v + self.terminal
