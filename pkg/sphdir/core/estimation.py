"""Parameter estimation for the SDD: method of moments and maximum likelihood.

MLE minimizes the per-observation negative log-likelihood with the projected
L-BFGS in :mod:`sphdir.core.optim`, subject to alpha_k >= epsilon. Objective
and gradient are divided by n inside the optimizer so ``gtol`` and ``delta``
do not depend on the sample size; :func:`neg_log_likelihood` and
:func:`nll_gradient` themselves return the unscaled quantities.

MOM solves E(x_k) = xbar_1k for one coordinate k and alpha_j / alpha_0 = xbar_2j
for the rest, by iterating on alpha_0.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import brentq

from sphdir.core.distribution import LOG2
from sphdir.core.optim import BoxSpec, minimize
from sphdir.core.specfun import digamma, lgamma, log_gamma_half_ratio
from sphdir.exceptions import (
    DataError,
    DimensionMismatchError,
    DomainError,
    NotOnSphereError,
    RootBracketError,
    SDDError,
)
from sphdir.schemas.distribution import UNIT_NORM_TOL, AlphaLike, AlphaVector, as_alpha
from sphdir.schemas.estimation import FitMethod, FitResult, MethodChoice, Tolerances

logger = logging.getLogger(__name__)

MomentCoordinate = Union[int, str]

_BRACKET = (1e-6, 1e6)
_BRACKET_LIMIT = (1e-300, 1e300)
_ALPHA0_LIMIT = 1e12
_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class SampleMatrix:
    """n observations on the positive orthant plus their cached statistics.

    ``suffstats[k] = sum_i ln x_ik`` (-inf when column k has a zero),
    ``moments1[k] = mean_i x_ik``, ``moments2[k] = mean_i x_ik^2``.
    A matrix built with :meth:`from_moments` has no rows and no suffstats.
    """

    rows: Optional[np.ndarray]
    n: int
    p: int
    moments1: np.ndarray
    moments2: np.ndarray
    suffstats: Optional[np.ndarray]

    @classmethod
    def from_rows(cls, rows: ArrayLike) -> "SampleMatrix":
        arr = np.array(rows, dtype=float, ndmin=2)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise DataError("a sample needs at least one row")
        n, p = arr.shape
        if p < 2:
            raise DimensionMismatchError(f"observations need p >= 2 coordinates, got {p}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise NotOnSphereError("observations must be finite and >= 0")
        sq = np.einsum("ij,ij->i", arr, arr)
        bad = np.abs(sq - 1.0) > UNIT_NORM_TOL
        if np.any(bad):
            row = int(np.argmax(bad))
            raise NotOnSphereError(f"row {row} is not unit norm (sum x^2 = {sq[row]!r})")
        with np.errstate(divide="ignore"):
            suff = np.log(arr).sum(axis=0)
        arr.setflags(write=False)
        return cls(
            rows=arr,
            n=n,
            p=p,
            moments1=arr.mean(axis=0),
            moments2=np.square(arr).mean(axis=0),
            suffstats=suff,
        )

    @classmethod
    def from_moments(cls, moments1: ArrayLike, moments2: ArrayLike, n: int = 0) -> "SampleMatrix":
        m1 = np.asarray(moments1, dtype=float)
        m2 = np.asarray(moments2, dtype=float)
        if m1.shape != m2.shape or m1.ndim != 1:
            raise DimensionMismatchError("first and second moments must be 1-d of equal length")
        return cls(rows=None, n=n, p=m1.size, moments1=m1, moments2=m2, suffstats=None)

    @property
    def has_zeros(self) -> bool:
        return self.rows is not None and bool(np.any(self.rows == 0))


def _require_suffstats(data: SampleMatrix) -> np.ndarray:
    if data.suffstats is None or data.n < 1:
        raise DataError("likelihood needs observed rows; this sample only carries moments")
    if not np.all(np.isfinite(data.suffstats)):
        cols = [int(k) + 1 for k in np.flatnonzero(~np.isfinite(data.suffstats))]
        raise DataError(
            f"zero coordinates in column(s) {cols} make the log-likelihood undefined; "
            "apply the log-shift transform ln(c + x) before normalizing"
        )
    return data.suffstats


def _check_dims(params: AlphaVector, data: SampleMatrix) -> None:
    if params.p != data.p:
        raise DimensionMismatchError(f"alpha has p = {params.p}, data has p = {data.p}")


def _nll(a: np.ndarray, suff: np.ndarray, n: int) -> float:
    p = a.size
    a0 = math.fsum(a)
    return float(
        -n * (p - 1) * LOG2 - n * lgamma(a0) + n * np.sum(lgamma(a)) - np.dot(2.0 * a - 1.0, suff)
    )


def _nll_grad(a: np.ndarray, suff: np.ndarray, n: int) -> np.ndarray:
    return n * (np.asarray(digamma(a)) - digamma(math.fsum(a))) - 2.0 * suff


def neg_log_likelihood(params: AlphaLike, data: SampleMatrix) -> float:
    """-log L = -n(p-1) ln 2 - n ln Gamma(alpha_0) + n sum ln Gamma(alpha_j) - sum (2 alpha_j - 1) S_j."""
    params = as_alpha(params)
    _check_dims(params, data)
    return _nll(params.array, _require_suffstats(data), data.n)


def nll_gradient(params: AlphaLike, data: SampleMatrix) -> np.ndarray:
    """d(-log L)/d alpha_k = n [psi(alpha_k) - psi(alpha_0)] - 2 S_k."""
    params = as_alpha(params)
    _check_dims(params, data)
    return _nll_grad(params.array, _require_suffstats(data), data.n)


def stationarity_residual(params: AlphaLike, data: SampleMatrix) -> np.ndarray:
    """psi(alpha_k) - psi(alpha_0) - (2/n) S_k; zero at an interior MLE."""
    return nll_gradient(params, data) / data.n


def norm_error_pct(estimate: AlphaLike, truth: AlphaLike) -> float:
    """100 ||alpha_hat - alpha||_2 / ||alpha||_2."""
    est = as_alpha(estimate).array
    ref = as_alpha(truth).array
    if est.shape != ref.shape:
        raise DimensionMismatchError(f"estimate has p = {est.size}, truth has p = {ref.size}")
    return float(100.0 * np.linalg.norm(est - ref) / np.linalg.norm(ref))


def _with_truth(result: FitResult, truth: Optional[AlphaLike]) -> FitResult:
    if truth is None:
        return result
    return result.model_copy(update={"norm_error_vs_truth": norm_error_pct(result.alpha_hat, truth)})


def _log_likelihood_or_none(a: np.ndarray, data: SampleMatrix) -> Optional[float]:
    if data.suffstats is None or not np.all(np.isfinite(data.suffstats)):
        return None
    return -_nll(a, data.suffstats, data.n)


def fit_mle(
    data: SampleMatrix,
    start: Optional[AlphaLike] = None,
    tolerances: Optional[Tolerances] = None,
    truth: Optional[AlphaLike] = None,
) -> FitResult:
    """Maximum likelihood by projected L-BFGS from alpha = (1, ..., 1).

    If the optimizer stalls the fit is retried once from the MOM estimate and
    the better of the two runs is kept.
    """
    tol = tolerances or Tolerances.from_settings()
    suff = _require_suffstats(data)
    n, p = data.n, data.p
    if n < p:
        logger.warning("MLE with n = %d observations for p = %d parameters; estimates are unreliable", n, p)

    def objective(a: np.ndarray) -> Tuple[float, np.ndarray]:
        return _nll(a, suff, n) / n, _nll_grad(a, suff, n) / n

    if start is not None and as_alpha(start).p != p:
        raise DimensionMismatchError(f"start has p = {as_alpha(start).p}, data has p = {p}")
    box = BoxSpec.lower_bound(tol.epsilon, p)
    x0 = np.ones(p) if start is None else np.maximum(as_alpha(start).array, tol.epsilon)

    options = dict(gtol=tol.gtol, xtol=tol.delta, max_iter=tol.max_iter, memory=tol.memory,
                   max_backtracks=tol.max_backtracks)
    report = minimize(objective, x0, box, **options)
    iterations = report.iterations

    if not report.converged:
        logger.warning(
            "MLE stalled after %d iterations (%s); retrying from the MOM estimate",
            report.iterations,
            report.termination_reason.value,
        )
        try:
            mom = fit_mom(data, tol)
            retry = minimize(objective, np.maximum(mom.alpha_hat.array, tol.epsilon), box, **options)
            iterations += retry.iterations
            if retry.converged or retry.objective_value < report.objective_value:
                report = retry
        except SDDError as e:
            logger.warning("MOM restart unavailable: %s", e)

    alpha_hat = report.minimizer
    at_bound = np.flatnonzero(alpha_hat <= tol.epsilon * (1.0 + 1e-9))
    if at_bound.size:
        logger.warning(
            "alpha at the lower bound %.3g for coordinate(s) %s; the data look degenerate there",
            tol.epsilon,
            [int(k) + 1 for k in at_bound],
        )

    result = FitResult(
        alpha_hat=AlphaVector.of(alpha_hat),
        method=FitMethod.MLE,
        iterations=iterations,
        converged=report.converged,
        final_criterion=report.gradient_inf_norm,
        termination_reason=report.termination_reason.value,
        log_likelihood=-report.objective_value * n,
    )
    logger.info("MLE alpha=%s iterations=%d converged=%s", np.round(alpha_hat, 6).tolist(), iterations,
                report.converged)
    return _with_truth(result, truth)


def _solve_first_moment(target_log: float, a0: float) -> float:
    """alpha_k with ln mu(alpha_k) = ln xbar_1k + ln mu(alpha_0); the left side is increasing."""

    def h(a: float) -> float:
        return log_gamma_half_ratio(a) - target_log - log_gamma_half_ratio(a0)

    lo, hi = _BRACKET
    while h(lo) > 0:
        if lo <= _BRACKET_LIMIT[0]:
            raise RootBracketError("first-moment equation has no root", (lo, hi))
        lo = max(lo * 1e-3, _BRACKET_LIMIT[0])
    while h(hi) < 0:
        if hi >= _BRACKET_LIMIT[1]:
            raise RootBracketError("first-moment equation has no root", (lo, hi))
        hi = min(hi * 1e3, _BRACKET_LIMIT[1])
    return brentq(h, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _resolve_coordinate(data: SampleMatrix, moment_coordinate: MomentCoordinate) -> int:
    if moment_coordinate == "auto":
        return int(np.argmax(data.moments1))
    k = int(moment_coordinate)
    if not 0 <= k < data.p:
        raise DomainError(f"moment coordinate {k} outside 0..{data.p - 1}")
    return k


def fit_mom(
    data: SampleMatrix,
    tolerances: Optional[Tolerances] = None,
    moment_coordinate: MomentCoordinate = 0,
    truth: Optional[AlphaLike] = None,
) -> FitResult:
    """Method of moments.

    Given alpha_0, set alpha_j = alpha_0 xbar_2j for j != k, solve the first-moment
    equation for alpha_k by a bracketed root find, then alpha_0 <- sum alpha. The
    iteration stops when |d alpha_0| < delta alpha_0. With ``mom_accelerate`` every
    second update is replaced by Steffensen's extrapolation. One iteration is
    one alpha_0 update.
    """
    tol = tolerances or Tolerances.from_settings()
    k = _resolve_coordinate(data, moment_coordinate)
    m1, m2 = data.moments1, data.moments2
    if not 0 < m1[k] < 1:
        raise DomainError(f"first moment of coordinate {k + 1} must lie in (0, 1), got {m1[k]!r}")
    if not np.all((m2 > 0) & (m2 < 1)):
        raise DomainError(f"second moments must lie in (0, 1), got {m2.tolist()}")

    others = np.ones(data.p, dtype=bool)
    others[k] = False
    rest = float(m2[others].sum())
    target_log = math.log(m1[k])

    def alpha_given(a0: float) -> np.ndarray:
        a = a0 * m2
        a[k] = _solve_first_moment(target_log, a0)
        return a

    def update(a0: float) -> float:
        return float(alpha_given(a0)[k]) + a0 * rest

    # the alpha_0 fixed point exists only when x_k has spread
    var_k = m2[k] - m1[k] ** 2
    if not var_k > _VARIANCE_FLOOR * m2[k]:
        raise DataError(
            f"coordinate {k + 1} has zero sample variance (n = {data.n}); the moment equations have no solution"
        )
    # variance of x_k is close to (1 - xbar_2k) / (4 alpha_0) for moderate alpha
    a0 = max((1.0 - m2[k]) / (4.0 * var_k), 1e-3)

    iterations = 0
    change = math.inf
    converged = False
    diverged = False
    while iterations < tol.mom_max_iter:
        if a0 > _ALPHA0_LIMIT:
            diverged = True
            break
        a1 = update(a0)
        iterations += 1
        change = abs(a1 - a0) / a0
        logger.debug("MOM iteration %d alpha_0=%.15g change=%.3e", iterations, a1, change)
        if change < tol.delta:
            a0, converged = a1, True
            break
        if not tol.mom_accelerate or iterations >= tol.mom_max_iter:
            a0 = a1
            continue
        a2 = update(a1)
        iterations += 1
        change = abs(a2 - a1) / a1
        if change < tol.delta:
            a0, converged = a2, True
            break
        denom = a2 - 2.0 * a1 + a0
        extrapolated = a0 - (a1 - a0) ** 2 / denom if denom != 0 else math.nan
        a0 = extrapolated if math.isfinite(extrapolated) and extrapolated > 0 else a2

    if diverged:
        logger.warning("MOM alpha_0 exceeded %.0e after %d iterations; stopping", _ALPHA0_LIMIT, iterations)
    elif not converged:
        logger.warning("MOM did not converge in %d iterations (last change %.3e)", iterations, change)

    alpha_hat = alpha_given(a0)
    result = FitResult(
        alpha_hat=AlphaVector.of(alpha_hat),
        method=FitMethod.MOM,
        iterations=iterations,
        converged=converged,
        final_criterion=change,
        termination_reason="delta" if converged else ("diverged" if diverged else "max_iter"),
        log_likelihood=_log_likelihood_or_none(alpha_hat, data),
    )
    logger.info("MOM alpha=%s iterations=%d converged=%s", np.round(alpha_hat, 6).tolist(), iterations, converged)
    return _with_truth(result, truth)


def fit(
    data: SampleMatrix,
    method: MethodChoice = MethodChoice.BOTH,
    tolerances: Optional[Tolerances] = None,
    truth: Optional[AlphaLike] = None,
    moment_coordinate: MomentCoordinate = 0,
) -> List[FitResult]:
    results = []
    for m in MethodChoice(method).methods():
        if m is FitMethod.MOM:
            results.append(fit_mom(data, tolerances, moment_coordinate=moment_coordinate, truth=truth))
        else:
            results.append(fit_mle(data, tolerances=tolerances, truth=truth))
    return results
