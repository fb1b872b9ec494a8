from fastapi import HTTPException
from pydantic import ValidationError

from sphdir.exceptions import ConvergenceError, OptimizationError, RootBracketError, SDDError


def http_error(e: Exception) -> HTTPException:
    """422 for bad input, 409 when a numerical procedure could not finish."""
    if isinstance(e, (ConvergenceError, OptimizationError, RootBracketError)):
        return HTTPException(status_code=409, detail=str(e))
    if isinstance(e, ValidationError):
        return HTTPException(status_code=422, detail=e.errors(include_url=False, include_context=False))
    if isinstance(e, (SDDError, ValueError)):
        return HTTPException(status_code=422, detail=str(e))
    return HTTPException(status_code=500, detail=f"Unexpected failure: {e}")
