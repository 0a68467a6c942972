from typing import List
from pydantic import BaseModel


class ViolationStats(BaseModel):
    aggregate: float
    count: int
    per_stage: List[float]
