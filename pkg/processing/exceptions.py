class TubeDDPError(Exception):
    """Base class for every error raised by the processing package."""


# ─── gaussian-core ──────────────────────────────────────────
class NotSymmetricError(TubeDDPError, ValueError):
    pass


class NotPSDError(TubeDDPError, ValueError):
    pass


class WeightMismatchError(TubeDDPError, ValueError):
    pass


# ─── transcription / problems ───────────────────────────────
class DynamicsFailureError(TubeDDPError, ArithmeticError):
    pass


class CostFailureError(TubeDDPError, ArithmeticError):
    pass


class ConstraintFailureError(TubeDDPError, ArithmeticError):
    pass


class SingularRadiusError(TubeDDPError, ArithmeticError):
    pass


# ─── ddp-solver ─────────────────────────────────────────────
class NonFiniteDerivativeError(TubeDDPError, ArithmeticError):
    pass


class RegularizationExhaustedError(TubeDDPError):
    pass


class DivergedError(TubeDDPError):
    pass


# ─── montecarlo ─────────────────────────────────────────────
class EmptyInputError(TubeDDPError, ValueError):
    pass


class SampleFailureError(TubeDDPError):
    def __init__(self, sample: int, reason: str):
        super().__init__(f"Sample {sample} failed: {reason}")
        self.sample = sample
        self.reason = reason


class CampaignFailedError(TubeDDPError):
    pass
