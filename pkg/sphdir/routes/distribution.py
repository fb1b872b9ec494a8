import logging
import math

import numpy as np
from fastapi import APIRouter
from pydantic import ValidationError

from sphdir.core.distribution import describe, log_density
from sphdir.core.sampling import RandomSource, sample_sdd
from sphdir.exceptions import SDDError
from sphdir.routes.errors import http_error
from sphdir.schemas.distribution import AlphaVector, DistributionSummary
from sphdir.schemas.requests import (
    DensityRequest,
    DensityResponse,
    DescribeRequest,
    SimulateRequest,
    SimulateResponse,
)

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/describe", response_model=DistributionSummary)
def describe_distribution(request: DescribeRequest):
    """Closed-form moments, covariance and mode for one alpha"""
    try:
        return describe(AlphaVector.of(request.alpha))
    except (SDDError, ValidationError, ValueError) as e:
        raise http_error(e)


@router.post("/density", response_model=DensityResponse)
def evaluate_density(request: DensityRequest):
    """Log-density and density at each point; -inf log-densities are returned as null"""
    try:
        values = np.atleast_1d(log_density(np.asarray(request.points, dtype=float), AlphaVector.of(request.alpha)))
    except (SDDError, ValidationError, ValueError) as e:
        raise http_error(e)
    return DensityResponse(
        log_density=[float(v) if math.isfinite(v) else None for v in values],
        density=np.exp(values).tolist(),
    )


@router.post("/simulate", response_model=SimulateResponse)
def simulate(request: SimulateRequest):
    try:
        data = sample_sdd(AlphaVector.of(request.alpha), request.n, RandomSource(request.seed))
    except (SDDError, ValidationError, ValueError) as e:
        raise http_error(e)
    logger.info("simulated %d rows for alpha=%s", data.n, request.alpha)
    return SimulateResponse(rows=data.rows.tolist())
