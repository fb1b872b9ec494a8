from sphdir.routes.distribution import router as distribution_router
from sphdir.routes.estimation import router as estimation_router
from sphdir.routes.main import router as main_router

__all__ = ["main_router", "distribution_router", "estimation_router"]
