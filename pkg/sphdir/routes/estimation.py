import logging
from typing import List

from fastapi import APIRouter
from pydantic import ValidationError

from sphdir.core.estimation import fit
from sphdir.exceptions import SDDError
from sphdir.routes.errors import http_error
from sphdir.schemas.estimation import FitResult, Tolerances
from sphdir.schemas.requests import FitRequest
from sphdir.utils.dataio import ingest

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/fit", response_model=List[FitResult])
def fit_sample(request: FitRequest):
    """
    Estimate alpha from observed rows

    Rows are unit-norm points, or raw counts when ``transform`` is ``log_shift``
    (each entry becomes ln(shift + v) and rows are normalized to unit length).
    """
    try:
        data = ingest(request.rows, request.transform, request.shift)
        results = fit(
            data,
            request.method,
            Tolerances.from_settings(),
            truth=request.truth_vector(),
            moment_coordinate=request.moment_coordinate - 1,
        )
    except (SDDError, ValidationError, ValueError, RuntimeError) as e:
        raise http_error(e)
    logger.info("fitted %d rows with method=%s", data.n, request.method.value)
    return results
