from pydantic import BaseModel


class IterationRecord(BaseModel):
    iteration: int
    epoch: int
    cost: float
    augmented_cost: float
    violation: float
    reg: float
    step: float
    accepted: bool
