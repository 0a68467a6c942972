from pydantic import BaseModel


class CheckResult(BaseModel):
    name: str
    passed: bool
    error: float
    tolerance: float
    detail: str = ""
