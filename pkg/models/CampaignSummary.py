from typing import List, Optional
from pydantic import BaseModel
from models.DistributionStats import DistributionStats
from models.ViolationStats import ViolationStats


class CampaignSummary(BaseModel):
    problem: str
    mode: str
    samples: int
    master_seed: int
    failed: int
    delta_v: DistributionStats
    terminal: DistributionStats
    total: DistributionStats
    violation: ViolationStats
    tube_capture: Optional[List[float]] = None
    run: Optional[dict] = None
