from fastapi import FastAPI

from sphdir import __version__
from sphdir.config import Settings
from sphdir.routes import distribution_router, estimation_router, main_router
from sphdir.utils.helpers import configure_logging


def create_app(settings: Settings = None) -> FastAPI:
    if settings is None:
        from sphdir.config import get_settings
        settings = get_settings()

    configure_logging("DEBUG" if settings.DEBUG else settings.LOG_LEVEL)

    app = FastAPI(
        title=settings.APP_NAME,
        description="Density, moments, sampling and estimation for the Spherical-Dirichlet distribution",
        version=__version__,
        debug=settings.DEBUG,
    )

    # Include routers
    app.include_router(main_router)
    app.include_router(distribution_router, prefix="/api")
    app.include_router(estimation_router, prefix="/api")

    return app
