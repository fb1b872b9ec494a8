"""Brute-force checks of the closed forms by quadrature over the orthant (p = 2, 3).

Parametrizations, with their exact surface elements:

    p = 2: x = (cos t, sin t),                              dw = dt,                 t in (0, pi/2)
    p = 3: x = (sin t cos f, sin t sin f, cos t),           dw = sin t dt df,        t, f in (0, pi/2)

Each angle uses composite Gauss-Legendre panels that shrink geometrically
toward both ends of the interval. Nodes are interior, so integrable endpoint
singularities (1/2 < alpha_i < 1, or alpha_i < 1/2) are never evaluated at the
boundary and are still resolved.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from sphdir.config import Settings, get_settings
from sphdir.core.distribution import log_density
from sphdir.core.sampling import RandomSource, empirical_moments, sample_sdd
from sphdir.exceptions import DimensionMismatchError, DomainError, ModeUndefinedError
from sphdir.schemas.distribution import AlphaLike, SpherePoint, as_alpha

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
_GRADING = 0.15
_EDGE_FRACTION = 0.1
_TERNARY_STEPS = 100


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes on the orthant with surface-measure weights; sum(weights) is the orthant area."""

    p: int
    points: np.ndarray
    weights: np.ndarray
    angles: np.ndarray
    axis_nodes: np.ndarray
    resolution: int

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))


def graded_rule(lo: float, hi: float, nodes_per_panel: int, panels: int, levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on (lo, hi), graded toward both endpoints."""
    length = hi - lo
    edge = _EDGE_FRACTION * length
    grading = edge * _GRADING ** np.arange(levels, 0, -1)
    left = np.concatenate([[lo], lo + grading])
    middle = np.linspace(lo + edge, hi - edge, panels + 1)
    right = (hi - grading)[::-1]
    breaks = np.concatenate([left, middle, right, [hi]])

    x, w = leggauss(nodes_per_panel)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights


def angles_to_points(angles: np.ndarray, p: int) -> np.ndarray:
    angles = np.atleast_2d(angles)
    if p == 2:
        t = angles[:, 0]
        return np.column_stack([np.cos(t), np.sin(t)])
    t, f = angles[:, 0], angles[:, 1]
    st = np.sin(t)
    return np.column_stack([st * np.cos(f), st * np.sin(f), np.cos(t)])


def make_grid(
    p: int,
    nodes_per_panel: Optional[int] = None,
    panels: Optional[int] = None,
    levels: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> QuadratureGrid:
    if p not in (2, 3):
        raise DomainError(f"quadrature grids exist for p = 2 or 3, got p = {p}")
    settings = settings or get_settings()
    nodes_per_panel = nodes_per_panel or settings.QUAD_NODES_PER_PANEL
    panels = panels or settings.QUAD_PANELS
    levels = levels if levels is not None else settings.QUAD_LEVELS

    nodes, weights = graded_rule(0.0, HALF_PI, nodes_per_panel, panels, levels)
    if p == 2:
        angles = nodes[:, None]
        w = weights
    else:
        tt, ff = np.meshgrid(nodes, nodes, indexing="ij")
        wt, wf = np.meshgrid(weights, weights, indexing="ij")
        angles = np.column_stack([tt.ravel(), ff.ravel()])
        w = (wt * wf * np.sin(tt)).ravel()
    logger.debug("quadrature grid p=%d with %d nodes", p, w.size)
    return QuadratureGrid(
        p=p,
        points=angles_to_points(angles, p),
        weights=w,
        angles=angles,
        axis_nodes=nodes,
        resolution=nodes.size,
    )


def _check(params, grid: QuadratureGrid):
    params = as_alpha(params)
    if params.p != grid.p:
        raise DimensionMismatchError(f"alpha has p = {params.p}, grid has p = {grid.p}")
    if np.any(params.array < 0.5):
        logger.warning("alpha_i < 1/2: density is unbounded at the orthant boundary; relying on interior nodes")
    return params


def _density_on(params, grid: QuadratureGrid) -> np.ndarray:
    return np.exp(log_density(grid.points, params))


def integrate_density(params: AlphaLike, grid: QuadratureGrid) -> float:
    params = _check(params, grid)
    return float(np.sum(grid.weights * _density_on(params, grid)))


def integrate_moment(params: AlphaLike, grid: QuadratureGrid, powers: Sequence[float]) -> float:
    """E(prod x_i^k_i) by quadrature."""
    params = _check(params, grid)
    k = np.asarray(powers, dtype=float)
    if k.shape != (grid.p,):
        raise DimensionMismatchError(f"need {grid.p} exponents, got {k.shape}")
    monomial = np.prod(grid.points**k, axis=1)
    return float(np.sum(grid.weights * _density_on(params, grid) * monomial))


def _ternary_max(fn: Callable[[float], float], lo: float, hi: float) -> float:
    for _ in range(_TERNARY_STEPS):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if fn(m1) < fn(m2):
            lo = m1
        else:
            hi = m2
    return 0.5 * (lo + hi)


def _neighbours(nodes: np.ndarray, value: float) -> Tuple[float, float]:
    i = int(np.argmin(np.abs(nodes - value)))
    lo = nodes[i - 1] if i > 0 else 0.0
    hi = nodes[i + 1] if i + 1 < nodes.size else HALF_PI
    return float(lo), float(hi)


def grid_argmax(params: AlphaLike, grid: QuadratureGrid) -> SpherePoint:
    """Density maximizer: best grid node, then ternary search within the adjacent cells per angle."""
    params = as_alpha(params)
    if params.p != grid.p:
        raise DimensionMismatchError(f"alpha has p = {params.p}, grid has p = {grid.p}")
    if np.any(params.array <= 0.5):
        raise ModeUndefinedError("grid argmax needs every alpha_i > 1/2")

    values = log_density(grid.points, params)
    best = grid.angles[int(np.argmax(values))].astype(float)
    brackets = [_neighbours(grid.axis_nodes, a) for a in best]

    def logf(angles: np.ndarray) -> float:
        return float(log_density(angles_to_points(angles, grid.p)[0], params))

    for _ in range(3 if grid.p == 3 else 1):
        for axis, (lo, hi) in enumerate(brackets):
            def along(v: float, axis=axis) -> float:
                trial = best.copy()
                trial[axis] = v
                return logf(trial)

            best[axis] = _ternary_max(along, lo, hi)
    return SpherePoint.of(angles_to_points(best, grid.p)[0])


def monte_carlo_moments(params: AlphaLike, n: int, source: RandomSource):
    """(mean, second moment, their standard errors) from n simulated rows."""
    data = sample_sdd(params, n, source)
    return empirical_moments(data.rows)
