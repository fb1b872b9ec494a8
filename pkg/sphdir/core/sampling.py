"""SDD variates: Gamma -> Dirichlet -> square-root map onto the sphere.

Gamma(a, 1) draws use the Marsaglia-Tsang squeeze method. For a < 1 a draw of
Gamma(a + 1) is boosted by U^(1/a). Everything is carried in log space until
the Dirichlet normalization, so small shapes do not underflow.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike

from sphdir.core.distribution import to_sphere
from sphdir.core.estimation import SampleMatrix
from sphdir.exceptions import DomainError
from sphdir.schemas.distribution import AlphaLike, as_alpha

logger = logging.getLogger(__name__)

_SEED_LIMIT = 2**64


class RandomSource:
    """Seedable pseudorandom stream backed by the PCG64 generator.

    ``RandomSource(seed)`` always yields the same sequence. Parallel workers
    take ``source.spawn(i)``: stream ``i`` is seeded from ``(seed, i)`` and is
    independent of the others. A source is not thread-safe; give each worker
    its own.
    """

    def __init__(self, seed: int, stream: Optional[int] = None):
        seed = int(seed)
        if not 0 <= seed < _SEED_LIMIT:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.stream = stream
        spawn_key = () if stream is None else (int(stream),)
        sequence = np.random.SeedSequence(seed, spawn_key=spawn_key)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def spawn(self, stream: int) -> "RandomSource":
        return RandomSource(self.seed, stream)

    def uniform(self, size: int) -> np.ndarray:
        """Uniform draws on (0, 1]."""
        return 1.0 - self._generator.random(size)

    def normal(self, size: int) -> np.ndarray:
        return self._generator.standard_normal(size)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


def _log_gamma_draws(shapes: np.ndarray, source: RandomSource) -> np.ndarray:
    """ln of one Gamma(shape, 1) draw per entry of the 1-d array ``shapes``."""
    boost = shapes < 1.0
    a = np.where(boost, shapes + 1.0, shapes)
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty_like(a)

    pending = np.arange(a.size)
    while pending.size:
        z = source.normal(pending.size)
        u = source.uniform(pending.size)
        dp, cp = d[pending], c[pending]
        v = (1.0 + cp * z) ** 3
        positive = v > 0
        log_v = np.log(np.where(positive, v, 1.0))
        squeeze = u < 1.0 - 0.0331 * z**4
        with np.errstate(invalid="ignore"):
            full = np.log(u) < 0.5 * z * z + dp * (1.0 - v + log_v)
        accept = positive & (squeeze | full)
        out[pending[accept]] = np.log(dp[accept]) + log_v[accept]
        pending = pending[~accept]

    if np.any(boost):
        out[boost] += np.log(source.uniform(int(boost.sum()))) / shapes[boost]
    return out


def sample_gamma(shape: float, source: RandomSource, size: Optional[int] = None) -> Union[float, np.ndarray]:
    """Gamma(shape, scale 1) draw(s); a single float when ``size`` is None."""
    if not shape > 0:
        raise DomainError(f"gamma shape must be > 0, got {shape!r}")
    count = 1 if size is None else int(size)
    draws = np.exp(_log_gamma_draws(np.full(count, float(shape)), source))
    return float(draws[0]) if size is None else draws


def sample_dirichlet(params: AlphaLike, n: int, source: RandomSource) -> np.ndarray:
    """(n, p) Dirichlet draws z_i = g_i / sum g with g_i ~ Gamma(alpha_i)."""
    params = as_alpha(params)
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    log_g = _log_gamma_draws(np.tile(params.array, n), source).reshape(n, params.p)
    log_g -= log_g.max(axis=1, keepdims=True)
    g = np.exp(log_g)
    return g / g.sum(axis=1, keepdims=True)


def sample_sdd(params: AlphaLike, n: int, source: RandomSource) -> SampleMatrix:
    """n independent SDD(alpha) rows, x_i = sqrt(z_i) with z ~ Dirichlet(alpha)."""
    return SampleMatrix.from_rows(to_sphere(sample_dirichlet(params, n, source)))


def sample_sdd_parallel(params: AlphaLike, n: int, seed: int, workers: int = 4) -> SampleMatrix:
    """Split n draws over ``workers`` streams spawned from ``seed``; row order is fixed by stream index."""
    params = as_alpha(params)
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    workers = max(1, min(int(workers), n))
    counts = [n // workers + (1 if i < n % workers else 0) for i in range(workers)]
    root = RandomSource(seed)

    def draw(i: int) -> np.ndarray:
        return to_sphere(sample_dirichlet(params, counts[i], root.spawn(i)))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        blocks = list(pool.map(draw, range(workers)))
    logger.debug("drew %d rows over %d streams", n, workers)
    return SampleMatrix.from_rows(np.vstack(blocks))


def empirical_moments(rows: ArrayLike):
    """Sample means of x and x^2 with their standard errors."""
    arr = np.asarray(rows, dtype=float)
    n = arr.shape[0]
    sq = np.square(arr)
    return (
        arr.mean(axis=0),
        sq.mean(axis=0),
        arr.std(axis=0, ddof=1) / np.sqrt(n),
        sq.std(axis=0, ddof=1) / np.sqrt(n),
    )
