from pydantic import BaseModel


class DistributionStats(BaseModel):
    median: float
    p5: float
    p95: float
    mean: float
