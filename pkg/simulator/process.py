"""
Hyperplane Process Module
Samples the isotropic Poisson hyperplane process inside a truncation ball
"""
import logging
from dataclasses import dataclass, field
from typing import List, Union

import numpy as np

from special.functions import DomainError, ModelParams

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12


def rep_generator(seed: int, rep: int) -> np.random.Generator:
    """
    Independent Philox stream for one replication

    The stream depends only on (seed, rep), so a replication draws the same
    numbers whichever worker runs it and in whatever order.
    """
    if seed < 0 or rep < 0:
        raise DomainError(f"seed and rep must be non-negative, got {seed}, {rep}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rep])))


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Hyperplane {x : <x, u> = t} with unit normal u and distance t > 0"""
    u: np.ndarray
    t: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
            raise DomainError(f"Hyperplane normal must be a unit vector, got norm {np.linalg.norm(u)}")
        if not self.t > 0:
            raise DomainError(f"Hyperplane distance must be positive, got {self.t}")
        object.__setattr__(self, 'u', u)
        object.__setattr__(self, 't', float(self.t))


@dataclass(frozen=True, eq=False)
class ZeroCellRealization:
    """
    Zero cell of one sampled process, restricted to the ball B_R

    normals holds one unit normal per row and distances the matching t values.
    """
    n: int
    R: float
    normals: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)

    def __post_init__(self):
        normals = np.asarray(self.normals, dtype=float).reshape(-1, self.n)
        distances = np.asarray(self.distances, dtype=float).reshape(-1)
        if len(normals) != len(distances):
            raise DomainError("normals and distances must have the same length")
        if np.any(distances <= 0) or np.any(distances > self.R):
            raise DomainError("Every plane distance must lie in (0, R]")
        object.__setattr__(self, 'normals', normals)
        object.__setattr__(self, 'distances', distances)

    @classmethod
    def from_planes(cls, n: int, R: float, planes: List[Hyperplane]) -> 'ZeroCellRealization':
        if planes:
            normals = np.stack([p.u for p in planes])
            distances = np.array([p.t for p in planes])
        else:
            normals, distances = np.empty((0, n)), np.empty(0)
        return cls(n=n, R=R, normals=normals, distances=distances)

    @property
    def planes(self) -> List[Hyperplane]:
        return [Hyperplane(u, t) for u, t in zip(self.normals, self.distances)]

    def __len__(self) -> int:
        return len(self.distances)


def sample_process(p: ModelParams, R: float, rng: np.random.Generator) -> ZeroCellRealization:
    """
    Draw the hyperplanes that hit B_R

    Args:
        p: Model parameters
        R: Truncation radius
        rng: Random stream

    Returns:
        Realization with Poisson(2 gamma R^r / r) planes, isotropic normals
        and distances with density proportional to t^(r-1) on (0, R]
    """
    if not R > 0:
        raise DomainError(f"Truncation radius must be positive, got {R}")
    count = rng.poisson(2.0 * p.gamma * R ** p.r / p.r)
    normals = rng.standard_normal((count, p.n))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    u = rng.random(count)
    while np.any(u == 0.0):
        zeros = u == 0.0
        u[zeros] = rng.random(int(zeros.sum()))
    distances = R * u ** (1.0 / p.r)
    logger.debug("Sampled %d planes for %s inside radius %.6g", count, p, R)
    return ZeroCellRealization(n=p.n, R=R, normals=normals, distances=distances)


def membership(cell: ZeroCellRealization, x: np.ndarray) -> Union[bool, np.ndarray]:
    """
    Test whether points lie in the zero cell

    Args:
        cell: Realization
        x: One point (shape (n,)) or a batch (shape (m, n))

    Returns:
        bool for a single point, boolean array for a batch
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    points = x.reshape(-1, cell.n)
    if len(cell) == 0:
        inside = np.ones(len(points), dtype=bool)
    else:
        inside = np.all(points @ cell.normals.T <= cell.distances, axis=1)
    return bool(inside[0]) if single else inside
