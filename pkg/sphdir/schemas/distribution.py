import math
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator

UNIT_NORM_TOL = 1e-10


def _listify(v: Any) -> Any:
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


class AlphaVector(BaseModel):
    """Concentration parameters alpha = (alpha_1, ..., alpha_p), every alpha_i > 0, p >= 2."""

    model_config = ConfigDict(frozen=True)

    alpha: Tuple[float, ...] = Field(..., description="Concentration parameters, each > 0")

    @field_validator("alpha", mode="before")
    @classmethod
    def _coerce(cls, v: Any) -> Any:
        return _listify(v)

    @field_validator("alpha")
    @classmethod
    def _check(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) < 2:
            raise ValueError(f"alpha needs at least 2 components, got {len(v)}")
        for a in v:
            if not (math.isfinite(a) and a > 0):
                raise ValueError(f"every alpha_i must be a finite positive number, got {a!r}")
        return v

    @computed_field
    @property
    def alpha0(self) -> float:
        return math.fsum(self.alpha)

    @property
    def p(self) -> int:
        return len(self.alpha)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    @classmethod
    def of(cls, values: Iterable[float]) -> "AlphaVector":
        return cls(alpha=tuple(float(v) for v in values))

    @classmethod
    def symmetric(cls, value: float, p: int) -> "AlphaVector":
        return cls(alpha=(float(value),) * p)

    @classmethod
    def parse(cls, text: str) -> "AlphaVector":
        """Parse a comma separated list such as ``"2,2,10"``."""
        parts = [s.strip() for s in text.split(",") if s.strip()]
        try:
            values = [float(s) for s in parts]
        except ValueError as e:
            raise ValueError(f"cannot parse alpha from {text!r}: {e}") from e
        return cls.of(values)


AlphaLike = Union[AlphaVector, Sequence[float], np.ndarray]


def as_alpha(params: AlphaLike) -> AlphaVector:
    if isinstance(params, AlphaVector):
        return params
    return AlphaVector.of(params)


class SpherePoint(BaseModel):
    """A point of the positive orthant of the unit sphere.

    Construction never renormalizes; use :meth:`normalized` to project raw
    positive data explicitly.
    """

    model_config = ConfigDict(frozen=True)

    x: Tuple[float, ...]

    @field_validator("x", mode="before")
    @classmethod
    def _coerce(cls, v: Any) -> Any:
        return _listify(v)

    @field_validator("x")
    @classmethod
    def _check(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) < 2:
            raise ValueError("a sphere point needs at least 2 coordinates")
        if any(not math.isfinite(c) or c < 0 for c in v):
            raise ValueError(f"coordinates must be finite and >= 0, got {v}")
        sq = math.fsum(c * c for c in v)
        if abs(sq - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"point is not on the unit sphere: sum x_i^2 = {sq!r}")
        return v

    @property
    def p(self) -> int:
        return len(self.x)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.x, dtype=float)

    @classmethod
    def of(cls, values: Iterable[float]) -> "SpherePoint":
        return cls(x=tuple(float(v) for v in values))

    @classmethod
    def normalized(cls, values: Iterable[float]) -> "SpherePoint":
        arr = np.asarray(list(values), dtype=float)
        return cls.of(arr / np.linalg.norm(arr))


class MomentSummary(BaseModel):
    """First and second raw moments with the mean-resultant decomposition E(x) = C * mu_bar."""

    model_config = ConfigDict(frozen=True)

    mean: Tuple[float, ...] = Field(..., description="E(x_i) = mu_i / mu_0")
    second_raw: Tuple[float, ...] = Field(..., description="E(x_i^2) = alpha_i / alpha_0")
    mu: Tuple[float, ...] = Field(..., description="Gamma(alpha_i + 1/2) / Gamma(alpha_i)")
    mu0: float = Field(..., description="Gamma(alpha_0 + 1/2) / Gamma(alpha_0)")
    C: float = Field(..., description="Mean resultant length ||mu|| / mu_0")
    mean_direction: SpherePoint


class CovarianceMatrix(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: Tuple[Tuple[float, ...], ...]

    @field_validator("sigma", mode="before")
    @classmethod
    def _coerce(cls, v: Any) -> Any:
        return _listify(v)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=float)

    @property
    def trace(self) -> float:
        return float(np.trace(self.array))


class DistributionSummary(BaseModel):
    """Everything ``describe`` reports for one alpha."""

    alpha: List[float]
    alpha0: float
    p: int
    log_normalizer: float
    moments: MomentSummary
    variance: List[float]
    std: List[float]
    covariance: CovarianceMatrix
    covariance_min_eigenvalue: float
    mode: Optional[SpherePoint] = None
    mode_defined: bool
    uniform: bool
    degenerate: bool = Field(..., description="max |Sigma_ij| below DEGENERATE_TOL: mass collapsed onto the mean direction")
    uniform_density: Optional[float] = Field(None, description="Constant density when every alpha_i = 1/2")
