"""
Cell Geometry Module
Polygon clipping for planar cells and hit-or-miss volumes in any dimension
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from special.functions import DomainError, ZeroCellError, kappa
from simulator.process import ZeroCellRealization, membership

logger = logging.getLogger(__name__)

POLYGON_SIDES = 512
MERGE_TOL = 1e-12
HITMISS_CHUNK = 20000
MIN_POINTS = 100


@dataclass(frozen=True, eq=False)
class AreaBracket:
    """Areas of the cell cut by the inscribed and circumscribed disc polygons"""
    inner: float
    outer: float
    centroid: np.ndarray

    @property
    def area(self) -> float:
        return 0.5 * (self.inner + self.outer)

    @property
    def gap(self) -> float:
        return self.outer - self.inner


def square(R: float) -> np.ndarray:
    return np.array([[-R, -R], [R, -R], [R, R], [-R, R]], dtype=float)


def disc_polygon(R: float, sides: int = POLYGON_SIDES, circumscribed: bool = False) -> np.ndarray:
    """
    Regular polygon around the disc of radius R, counter-clockwise

    Edges of the circumscribed polygon touch the circle at the angles
    2 pi k / sides, so it stays inside the square [-R, R]^2.
    """
    angles = (2.0 * np.arange(sides) + 1.0) * math.pi / sides
    radius = R / math.cos(math.pi / sides) if circumscribed else R
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def _merge_close(poly: np.ndarray, tol: float) -> np.ndarray:
    if len(poly) < 2:
        return poly
    step = np.linalg.norm(poly - np.roll(poly, 1, axis=0), axis=1)
    keep = step >= tol
    if not keep.any():
        return poly[:1]
    return poly[keep]


def clip_halfplane(poly: np.ndarray, u: np.ndarray, t: float, tol: float = 0.0) -> np.ndarray:
    """
    Sutherland-Hodgman step: keep the part of a convex polygon with <x, u> <= t

    All edges are processed at once; for each edge the start vertex is kept
    when inside and the crossing point is appended when the edge crosses.
    """
    if len(poly) == 0:
        return poly
    d = poly @ u - t
    following = np.roll(poly, -1, axis=0)
    d_next = np.roll(d, -1)
    inside = d <= 0.0
    crossing = inside != (d_next <= 0.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        s = np.where(crossing, d / (d - d_next), 0.0)
    hits = poly + s[:, None] * (following - poly)
    candidates = np.stack([poly, hits], axis=1).reshape(-1, 2)
    mask = np.stack([inside, crossing], axis=1).reshape(-1)
    return _merge_close(candidates[mask], tol)


def clip_polygon(poly: np.ndarray, normals: np.ndarray, distances: np.ndarray,
                 tol: float = 0.0) -> np.ndarray:
    """Intersect a convex polygon with every half-plane <x, u_i> <= t_i"""
    for u, t in zip(normals, distances):
        if len(poly) < 3:
            return np.empty((0, 2))
        if np.max(poly @ u) <= t:
            continue
        poly = clip_halfplane(poly, u, t, tol)
    return poly if len(poly) >= 3 else np.empty((0, 2))


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(math.fsum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    if len(poly) < 3:
        return np.zeros(2)
    x, y = poly[:, 0], poly[:, 1]
    x_next, y_next = np.roll(x, -1), np.roll(y, -1)
    cross = x * y_next - x_next * y
    signed = 0.5 * cross.sum()
    if signed == 0.0:
        return poly.mean(axis=0)
    return np.array([((x + x_next) * cross).sum(), ((y + y_next) * cross).sum()]) / (6.0 * signed)


def exact_area_2d(cell: ZeroCellRealization) -> AreaBracket:
    """
    Area of the planar zero cell inside B_R

    The cell is first clipped out of the square [-R, R]^2. When it lies
    inside the inscribed 512-gon the square result is exact and both
    brackets coincide; otherwise the inscribed and circumscribed 512-gons
    are clipped too and their areas bracket the area of Z_0 cut by B_R.

    Args:
        cell: Realization with n = 2

    Returns:
        AreaBracket with the centroid of the clipped cell
    """
    if cell.n != 2:
        raise DomainError(f"exact_area_2d needs a planar cell, got n={cell.n}")
    tol = MERGE_TOL * cell.R
    poly = clip_polygon(square(cell.R), cell.normals, cell.distances, tol)
    if len(poly) and np.max(np.linalg.norm(poly, axis=1)) <= cell.R * math.cos(math.pi / POLYGON_SIDES):
        area = polygon_area(poly)
        bracket = AreaBracket(inner=area, outer=area, centroid=polygon_centroid(poly))
    else:
        inner = clip_polygon(disc_polygon(cell.R), cell.normals, cell.distances, tol)
        outer = clip_polygon(disc_polygon(cell.R, circumscribed=True), cell.normals, cell.distances, tol)
        bracket = AreaBracket(inner=polygon_area(inner), outer=polygon_area(outer),
                              centroid=polygon_centroid(outer))
    if not bracket.inner > 0.0:
        raise ZeroCellError("Clipped zero cell is empty although the origin is interior")
    return bracket


def uniform_ball(rng: np.random.Generator, m: int, n: int, R: float) -> np.ndarray:
    """m points uniform in the n-ball of radius R"""
    directions = rng.standard_normal((m, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return directions * (R * rng.random(m) ** (1.0 / n))[:, None]


def hitmiss_volume(cell: ZeroCellRealization, m: int, rng: np.random.Generator) -> Tuple[float, float]:
    """
    Hit-or-miss estimate of the cell volume inside B_R

    Args:
        cell: Realization in any dimension
        m: Number of uniform points in B_R (>= 100)
        rng: Random stream

    Returns:
        (estimate, standard error) with estimate = kappa_n R^n * hit fraction
    """
    if m < MIN_POINTS:
        raise DomainError(f"hitmiss_volume needs at least {MIN_POINTS} points, got {m}")
    ball = float(kappa(cell.n) * cell.R ** cell.n)
    if len(cell) == 0:
        return ball, 0.0
    hits = 0
    for start in range(0, m, HITMISS_CHUNK):
        size = min(HITMISS_CHUNK, m - start)
        points = uniform_ball(rng, size, cell.n, cell.R)
        hits += int(np.count_nonzero(membership(cell, points)))
    fraction = hits / m
    return ball * fraction, ball * math.sqrt(fraction * (1.0 - fraction) / m)
