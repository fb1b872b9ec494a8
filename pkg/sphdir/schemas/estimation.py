from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from sphdir.config import Settings, get_settings
from sphdir.schemas.distribution import AlphaVector


class FitMethod(str, Enum):
    MOM = "mom"
    MLE = "mle"


class MethodChoice(str, Enum):
    MOM = "mom"
    MLE = "mle"
    BOTH = "both"

    def methods(self):
        if self is MethodChoice.BOTH:
            return [FitMethod.MOM, FitMethod.MLE]
        return [FitMethod(self.value)]


class Tolerances(BaseModel):
    """Stopping rules and safeguards shared by the MOM iteration and the MLE optimizer."""

    epsilon: float = Field(1e-6, gt=0, description="Lower bound for every alpha_k in MLE")
    delta: float = Field(1e-8, gt=0, description="Step tolerance (MLE) / relative alpha_0 change (MOM)")
    gtol: float = Field(1e-8, gt=0, description="Projected-gradient infinity-norm tolerance")
    max_iter: int = Field(500, ge=1)
    memory: int = Field(10, ge=0, description="Number of stored L-BFGS correction pairs")
    max_backtracks: int = Field(40, ge=1)
    mom_max_iter: int = Field(10000, ge=1)
    mom_accelerate: bool = Field(True, description="Steffensen extrapolation of the alpha_0 iteration")

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "Tolerances":
        settings = settings or get_settings()
        values = dict(
            epsilon=settings.EPSILON,
            delta=settings.DELTA,
            gtol=settings.GTOL,
            max_iter=settings.MAX_ITER,
            memory=settings.MEMORY,
            max_backtracks=settings.MAX_BACKTRACKS,
            mom_max_iter=settings.MOM_MAX_ITER,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class FitResult(BaseModel):
    alpha_hat: AlphaVector
    method: FitMethod
    iterations: int
    converged: bool
    final_criterion: float = Field(
        ..., description="MLE: projected-gradient inf-norm per observation; MOM: last |d alpha_0| / alpha_0"
    )
    termination_reason: Optional[str] = None
    log_likelihood: Optional[float] = None
    norm_error_vs_truth: Optional[float] = Field(None, description="100 ||alpha_hat - alpha|| / ||alpha||")
