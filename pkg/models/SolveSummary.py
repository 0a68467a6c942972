from typing import Any, Dict, Optional
from pydantic import BaseModel


class SolveSummary(BaseModel):
    problem: str
    mode: str
    objective: float
    delta_v: float
    terminal_penalty: float
    max_violation: float
    converged: bool
    status: str
    iterations: int
    warning: Optional[str] = None
    degenerate_policies: int = 0
    system: Optional[Dict[str, Any]] = None
    run: Optional[dict] = None
