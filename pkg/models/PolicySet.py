from typing import List, Optional
from pydantic import BaseModel
from models.AffineStagePolicy import AffineStagePolicy


class PolicySet(BaseModel):
    problem: str
    units: str = "solver"
    stages: List[AffineStagePolicy]
    run: Optional[dict] = None

    def __len__(self):
        return len(self.stages)
