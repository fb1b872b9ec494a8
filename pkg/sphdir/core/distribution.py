"""Closed forms of the Spherical-Dirichlet distribution (SDD).

x ~ SDD(alpha) lives on the positive orthant of the unit sphere in R^p with

    f(x; alpha) = 2^(p-1) Gamma(alpha_0) / prod Gamma(alpha_i) * prod x_i^(2 alpha_i - 1)

It is the image of z ~ Dirichlet(alpha) under x_i = sqrt(z_i). Expectations
use mu_i = Gamma(alpha_i + 1/2) / Gamma(alpha_i) and mu_0 = Gamma(alpha_0 + 1/2) / Gamma(alpha_0),
always formed from log-gamma differences.
"""

import math
from enum import Enum
from typing import Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from sphdir.core.specfun import lgamma, log_gamma_half_ratio
from sphdir.exceptions import (
    DimensionMismatchError,
    InfiniteDensityError,
    ModeUndefinedError,
    NotOnSphereError,
)
from sphdir.schemas.distribution import (
    UNIT_NORM_TOL,
    AlphaLike,
    AlphaVector,
    CovarianceMatrix,
    DistributionSummary,
    MomentSummary,
    SpherePoint,
    as_alpha,
)

LOG2 = math.log(2.0)

# largest |Sigma_ij| for which describe calls the distribution degenerate
DEGENERATE_TOL = 1e-5

PointLike = Union[SpherePoint, ArrayLike]


class CovarianceForm(str, Enum):
    ENTRYWISE = "entrywise"
    OUTER = "outer"
    RESULTANT = "resultant"


class SymmetricForm(str, Enum):
    IDENTITY = "identity"
    ROTATIONAL = "rotational"


def _as_rows(point: PointLike, p: int, what: str = "point") -> Tuple[np.ndarray, bool]:
    if isinstance(point, SpherePoint):
        arr = point.array
    else:
        arr = np.asarray(point, dtype=float)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.ndim != 2 or rows.shape[1] != p:
        raise DimensionMismatchError(f"{what} has shape {arr.shape}, parameters have p = {p}")
    if not np.all(np.isfinite(rows)) or np.any(rows < 0):
        raise NotOnSphereError(f"{what} coordinates must be finite and >= 0")
    return rows, single


def _check_unit_norm(rows: np.ndarray) -> None:
    sq = np.einsum("ij,ij->i", rows, rows)
    bad = np.abs(sq - 1.0) > UNIT_NORM_TOL
    if np.any(bad):
        raise NotOnSphereError(
            f"{int(bad.sum())} point(s) off the unit sphere, e.g. sum x_i^2 = {sq[bad][0]!r}"
        )


def _power_log_sum(rows: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """sum_i e_i ln r_i per row, with 0 * ln 0 = 0 and e * ln 0 = -inf for e > 0."""
    zero = rows == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(zero, 0.0, exponents * np.log(rows))
    if np.any(zero):
        if np.any(zero & (exponents < 0)):
            raise InfiniteDensityError(
                "density is infinite: a coordinate is 0 where its exponent is negative"
            )
        terms = np.where(zero & (exponents > 0), -np.inf, terms)
    return terms.sum(axis=1)


def log_normalizer(params: AlphaLike) -> float:
    """ln(2^(p-1) Gamma(alpha_0) / prod Gamma(alpha_i))."""
    params = as_alpha(params)
    a = params.array
    return float((params.p - 1) * LOG2 + lgamma(params.alpha0) - np.sum(lgamma(a)))


def log_density(point: PointLike, params: AlphaLike) -> Union[float, np.ndarray]:
    """Log-density at one point (float) or at each row of an (n, p) array.

    A zero coordinate gives -inf when 2 alpha_i - 1 > 0, contributes nothing when
    alpha_i = 1/2 and raises :class:`InfiniteDensityError` when alpha_i < 1/2.
    """
    params = as_alpha(params)
    rows, single = _as_rows(point, params.p)
    _check_unit_norm(rows)
    out = log_normalizer(params) + _power_log_sum(rows, 2.0 * params.array - 1.0)
    return float(out[0]) if single else out


def density(point: PointLike, params: AlphaLike) -> Union[float, np.ndarray]:
    logp = log_density(point, params)
    return math.exp(logp) if isinstance(logp, float) else np.exp(logp)


def dirichlet_log_density(z: ArrayLike, params: AlphaLike) -> Union[float, np.ndarray]:
    """Dirichlet log-density on the simplex, same boundary rules as :func:`log_density`."""
    params = as_alpha(params)
    rows, single = _as_rows(z, params.p, what="simplex point")
    sums = rows.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > UNIT_NORM_TOL):
        raise NotOnSphereError("simplex point does not sum to 1")
    a = params.array
    const = lgamma(params.alpha0) - np.sum(lgamma(a))
    out = const + _power_log_sum(rows, a - 1.0)
    return float(out[0]) if single else out


def to_sphere(z: ArrayLike) -> np.ndarray:
    """Square-root map from the simplex to the positive orthant of the sphere."""
    return np.sqrt(np.asarray(z, dtype=float))


def to_simplex(x: ArrayLike) -> np.ndarray:
    return np.square(np.asarray(x, dtype=float))


def uniform_density(p: int) -> float:
    """2^(p-1) Gamma(p/2) / pi^(p/2), the reciprocal of the orthant surface area."""
    return math.exp((p - 1) * LOG2 + lgamma(p / 2.0) - 0.5 * p * math.log(math.pi))


def is_degenerate(params: AlphaLike) -> bool:
    return float(np.max(np.abs(covariance_array(params)))) < DEGENERATE_TOL


def is_uniform(params: AlphaLike) -> bool:
    return all(a == 0.5 for a in as_alpha(params).alpha)


def _log_mu(params: AlphaVector) -> Tuple[np.ndarray, float]:
    return np.asarray(log_gamma_half_ratio(params.array)), float(log_gamma_half_ratio(params.alpha0))


def mean(params: AlphaLike) -> MomentSummary:
    """E(x) = mu / mu_0 = C * mu_bar, together with E(x_i^2) = alpha_i / alpha_0.

    Equivalently E(x_i) = B(alpha_0, 1/2) / B(alpha_i, 1/2).
    """
    params = as_alpha(params)
    log_mu, log_mu0 = _log_mu(params)
    m = np.exp(log_mu - log_mu0)
    c = float(np.linalg.norm(m))
    return MomentSummary(
        mean=tuple(m.tolist()),
        second_raw=tuple((params.array / params.alpha0).tolist()),
        mu=tuple(np.exp(log_mu).tolist()),
        mu0=math.exp(log_mu0),
        C=c,
        mean_direction=SpherePoint.of(m / c),
    )


def _covariance_entrywise(a: np.ndarray, a0: float, mu: np.ndarray, mu0: float) -> np.ndarray:
    ratio = mu / mu0
    sigma = (1.0 / a0 - 1.0 / mu0**2) * np.outer(mu, mu)
    np.fill_diagonal(sigma, a / a0 - ratio**2)
    return sigma


def _covariance_outer(a: np.ndarray, a0: float, mu: np.ndarray, mu0: float) -> np.ndarray:
    return np.diag(a - mu**2) / a0 - (1.0 / mu0**2 - 1.0 / a0) * np.outer(mu, mu)


def _covariance_resultant(a: np.ndarray, a0: float, mu: np.ndarray, mu0: float) -> np.ndarray:
    norm = np.linalg.norm(mu)
    c2 = (norm / mu0) ** 2
    direction = mu / norm
    return (
        np.diag(a) / a0
        - (c2 * mu0**2 / a0) * np.diag(direction**2)
        - c2 * (1.0 - mu0**2 / a0) * np.outer(direction, direction)
    )


_COVARIANCE_FORMS = {
    CovarianceForm.ENTRYWISE: _covariance_entrywise,
    CovarianceForm.OUTER: _covariance_outer,
    CovarianceForm.RESULTANT: _covariance_resultant,
}


def covariance_array(params: AlphaLike, form: CovarianceForm = CovarianceForm.ENTRYWISE) -> np.ndarray:
    params = as_alpha(params)
    log_mu, log_mu0 = _log_mu(params)
    fn = _COVARIANCE_FORMS[CovarianceForm(form)]
    return fn(params.array, params.alpha0, np.exp(log_mu), math.exp(log_mu0))


def covariance(params: AlphaLike, form: CovarianceForm = CovarianceForm.ENTRYWISE) -> CovarianceMatrix:
    """Cov(x_i, x_j) = delta_ij (alpha_i/alpha_0 - mu_i^2/mu_0^2) + (1 - delta_ij)(1/alpha_0 - 1/mu_0^2) mu_i mu_j.

    ``form`` selects one of the three algebraically equal expressions: the
    entrywise one above, (1/alpha_0) diag(alpha - mu^2) - (1/mu_0^2 - 1/alpha_0) mu mu^T,
    or the resultant form written with C and mu_bar.
    """
    return CovarianceMatrix(sigma=covariance_array(params, form))


def variance(params: AlphaLike) -> np.ndarray:
    params = as_alpha(params)
    log_mu, log_mu0 = _log_mu(params)
    return params.array / params.alpha0 - np.exp(2.0 * (log_mu - log_mu0))


def std(params: AlphaLike) -> np.ndarray:
    return np.sqrt(variance(params))


def second_moment_matrix(params: AlphaLike) -> np.ndarray:
    """E(x_i x_j): alpha_i / alpha_0 on the diagonal, mu_i mu_j / alpha_0 off it."""
    params = as_alpha(params)
    log_mu, _ = _log_mu(params)
    mu = np.exp(log_mu)
    out = np.outer(mu, mu) / params.alpha0
    np.fill_diagonal(out, params.array / params.alpha0)
    return out


def symmetric_covariance(alpha: float, p: int, form: SymmetricForm = SymmetricForm.IDENTITY) -> np.ndarray:
    """Covariance when every alpha_i equals ``alpha``.

    identity:   (1/p)(1 - mu_a^2/alpha) I - (mu_a/mu_0)^2 (1 - mu_0^2/(p alpha)) 1 1^T
    rotational: (1 - mu_a^2/alpha)(I/p - mu_bar mu_bar^T) + (1 - p mu_a^2/mu_0^2) mu_bar mu_bar^T
    """
    AlphaVector.symmetric(alpha, p)
    mu_a = math.exp(log_gamma_half_ratio(alpha))
    mu0 = math.exp(log_gamma_half_ratio(p * alpha))
    eye = np.eye(p)
    if SymmetricForm(form) is SymmetricForm.IDENTITY:
        ones = np.ones((p, p))
        return (1.0 - mu_a**2 / alpha) / p * eye - (mu_a / mu0) ** 2 * (1.0 - mu0**2 / (p * alpha)) * ones
    bar = np.full(p, 1.0 / math.sqrt(p))
    proj = np.outer(bar, bar)
    return (1.0 - mu_a**2 / alpha) * (eye / p - proj) + (1.0 - p * mu_a**2 / mu0**2) * proj


def covariance_min_eigenvalue(params: AlphaLike) -> float:
    return float(np.linalg.eigvalsh(covariance_array(params))[0])


def mode(params: AlphaLike) -> SpherePoint:
    """x_i = sqrt((2 alpha_i - 1) / (2 alpha_0 - p)); needs every alpha_i > 1/2."""
    params = as_alpha(params)
    a = params.array
    if np.any(a <= 0.5):
        raise ModeUndefinedError(
            f"mode undefined: alpha_i <= 1/2 at index {int(np.argmax(a <= 0.5))} (alpha = {params.alpha})"
        )
    num = 2.0 * a - 1.0
    return SpherePoint.of(np.sqrt(num / num.sum()))


def describe(params: AlphaLike) -> DistributionSummary:
    params = as_alpha(params)
    try:
        mode_point = mode(params)
    except ModeUndefinedError:
        mode_point = None
    uniform = is_uniform(params)
    var = variance(params)
    return DistributionSummary(
        alpha=list(params.alpha),
        alpha0=params.alpha0,
        p=params.p,
        log_normalizer=log_normalizer(params),
        moments=mean(params),
        variance=var.tolist(),
        std=np.sqrt(var).tolist(),
        covariance=covariance(params),
        covariance_min_eigenvalue=covariance_min_eigenvalue(params),
        mode=mode_point,
        mode_defined=mode_point is not None,
        uniform=uniform,
        degenerate=is_degenerate(params),
        uniform_density=uniform_density(params.p) if uniform else None,
    )
