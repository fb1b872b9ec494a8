"""Projected limited-memory BFGS for box-constrained minimization.

The search direction comes from the usual two-loop recursion restricted to the
free variables (coordinates not pinned at a bound by the sign of the
gradient). Trial points are projected onto the box before the objective is
evaluated and accepted under the Armijo sufficient-decrease condition, so the
iterates stay feasible and the objective never increases.

Stops when the projected-gradient infinity norm drops to ``gtol``, when an
accepted (or attempted) step is shorter than ``xtol`` in the Euclidean norm, or
after ``max_iter`` iterations.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Deque, List, Tuple

import numpy as np
from numpy.typing import ArrayLike

from sphdir.exceptions import DomainError, OptimizationError

logger = logging.getLogger(__name__)

ObjectiveFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]

_ARMIJO_C1 = 1e-4
_CURVATURE_EPS = 1e-12


class TerminationReason(str, Enum):
    GRADIENT_TOL = "gradient_tol"
    STEP_TOL = "step_tol"
    MAX_ITER = "max_iter"
    LINE_SEARCH = "line_search"


@dataclass(frozen=True)
class BoxSpec:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DomainError(f"box bounds must be 1-d of equal length, got {lower.shape} and {upper.shape}")
        if not np.all(lower < upper):
            raise DomainError("box requires lower[i] < upper[i] for every i")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def lower_bound(cls, eps: float, p: int) -> "BoxSpec":
        return cls(np.full(p, float(eps)), np.full(p, np.inf))

    @classmethod
    def uniform(cls, lo: float, hi: float, p: int) -> "BoxSpec":
        return cls(np.full(p, float(lo)), np.full(p, float(hi)))

    @property
    def dim(self) -> int:
        return self.lower.size

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class OptimReport:
    minimizer: np.ndarray
    objective_value: float
    gradient_inf_norm: float
    iterations: int
    converged: bool
    termination_reason: TerminationReason
    n_evaluations: int = 0
    history: List[float] = field(default_factory=list)


def projected_gradient(x: np.ndarray, g: np.ndarray, box: BoxSpec) -> np.ndarray:
    return x - box.project(x - g)


def _active(x: np.ndarray, g: np.ndarray, box: BoxSpec) -> np.ndarray:
    return ((x <= box.lower) & (g > 0)) | ((x >= box.upper) & (g < 0))


def _two_loop(q: np.ndarray, pairs: Deque[Tuple[np.ndarray, np.ndarray, float]]) -> np.ndarray:
    """Apply the L-BFGS inverse-Hessian approximation to q."""
    q = q.copy()
    coeffs = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        q -= a * y
        coeffs.append(a)
    if pairs:
        s, y, _ = pairs[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(coeffs)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def _evaluate(fun: ObjectiveFn, x: np.ndarray) -> Tuple[float, np.ndarray]:
    f, g = fun(x)
    return float(f), np.asarray(g, dtype=float)


def minimize(
    fun: ObjectiveFn,
    x0: ArrayLike,
    box: BoxSpec,
    *,
    gtol: float = 1e-8,
    xtol: float = 1e-8,
    max_iter: int = 500,
    memory: int = 10,
    max_backtracks: int = 40,
) -> OptimReport:
    """Minimize ``fun`` over ``box`` starting from ``x0``.

    ``fun(x)`` returns ``(f, grad)``. A line search that runs out of
    backtracks is not fatal: the best iterate is returned with
    ``termination_reason = LINE_SEARCH`` and ``converged = False``.
    """
    x = np.array(x0, dtype=float)
    if x.shape != box.lower.shape:
        raise DomainError(f"start has shape {x.shape}, box has dimension {box.dim}")
    if not box.contains(x):
        raise DomainError("start point lies outside the box")

    f, g = _evaluate(fun, x)
    n_eval = 1
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise OptimizationError(f"objective or gradient not finite at the start point (f = {f!r})")

    pairs: Deque[Tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=memory) if memory > 0 else deque(maxlen=1)
    history = [f]
    iterations = 0
    reason = TerminationReason.MAX_ITER
    fresh = True

    while True:
        pg_norm = float(np.max(np.abs(projected_gradient(x, g, box))))
        if pg_norm <= gtol:
            reason = TerminationReason.GRADIENT_TOL
            break
        if iterations >= max_iter:
            reason = TerminationReason.MAX_ITER
            break

        free = ~_active(x, g, box)
        g_free = np.where(free, g, 0.0)
        d = -_two_loop(g_free, pairs) if memory > 0 else -g_free
        d = np.where(free, d, 0.0)
        if np.dot(g_free, d) >= 0:
            pairs.clear()
            d = -g_free
            fresh = True
        step = min(1.0, 1.0 / float(np.max(np.abs(d)))) if fresh else 1.0

        accepted = False
        tiny_step = False
        for backtracks in range(max_backtracks):
            x_new = box.project(x + step * d)
            dx = x_new - x
            if np.linalg.norm(dx) < xtol:
                tiny_step = True
                break
            slope = float(np.dot(g, dx))
            if slope < 0:
                f_new, g_new = _evaluate(fun, x_new)
                n_eval += 1
                if np.isfinite(f_new) and np.all(np.isfinite(g_new)) and f_new <= f + _ARMIJO_C1 * slope:
                    accepted = True
                    break
            step *= 0.5

        if tiny_step:
            if backtracks > 0:
                logger.debug(
                    "iteration %d: step fell below xtol after %d backtracks without sufficient decrease",
                    iterations,
                    backtracks,
                )
            reason = TerminationReason.STEP_TOL
            break
        if not accepted:
            if pairs:
                logger.debug("line search failed at iteration %d, resetting memory", iterations)
                pairs.clear()
                fresh = True
                continue
            reason = TerminationReason.LINE_SEARCH
            break

        s, y = dx, g_new - g
        sy = float(np.dot(s, y))
        if memory > 0 and sy > _CURVATURE_EPS * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))

        x, f, g = x_new, f_new, g_new
        fresh = False
        iterations += 1
        history.append(f)
        logger.debug("iter %d f=%.12g |pg|=%.3e |dx|=%.3e", iterations, f, pg_norm, np.linalg.norm(dx))

        if np.linalg.norm(dx) < xtol:
            reason = TerminationReason.STEP_TOL
            break

    pg_norm = float(np.max(np.abs(projected_gradient(x, g, box))))
    converged = reason in (TerminationReason.GRADIENT_TOL, TerminationReason.STEP_TOL)
    return OptimReport(
        minimizer=x,
        objective_value=f,
        gradient_inf_norm=pg_norm,
        iterations=iterations,
        converged=converged,
        termination_reason=reason,
        n_evaluations=n_eval,
        history=history,
    )
