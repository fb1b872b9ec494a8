from typing import List, Optional

from pydantic import BaseModel, Field

from sphdir.schemas.distribution import AlphaVector
from sphdir.schemas.estimation import MethodChoice
from sphdir.schemas.run import Transform

MAX_SIMULATE_ROWS = 100_000


class DescribeRequest(BaseModel):
    alpha: List[float] = Field(..., min_length=2)


class DensityRequest(BaseModel):
    alpha: List[float] = Field(..., min_length=2)
    points: List[List[float]] = Field(..., min_length=1, description="Unit-norm points, one per row")


class DensityResponse(BaseModel):
    log_density: List[Optional[float]]
    density: List[float]


class SimulateRequest(BaseModel):
    alpha: List[float] = Field(..., min_length=2)
    n: int = Field(..., ge=1, le=MAX_SIMULATE_ROWS)
    seed: int = Field(42, ge=0, le=2**64 - 1)


class SimulateResponse(BaseModel):
    rows: List[List[float]]


class FitRequest(BaseModel):
    rows: List[List[float]] = Field(..., min_length=1)
    method: MethodChoice = MethodChoice.BOTH
    truth: Optional[List[float]] = None
    transform: Transform = Transform.NONE
    shift: float = Field(1.10, gt=0)
    moment_coordinate: int = Field(1, ge=1, description="1-based coordinate matched by the MOM first moment")

    def truth_vector(self) -> Optional[AlphaVector]:
        return None if self.truth is None else AlphaVector.of(self.truth)
