"""Closed convex sets used as conv̄ S, conv̄ F and dom f* representatives.

Every set answers two questions: closed membership (boundary points are
in) and its support function σ_C(x) = sup_{c ∈ C} ⟨c, x⟩.
"""
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from nlperspective.exceptions import DimensionMismatch, EmptyPositiveSet

HULL_TOL = 1e-9


def _as_rows(points, dim: int) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, dim) if dim > 1 else arr.reshape(-1, 1)
    if arr.shape[1] != dim:
        raise DimensionMismatch(f"Expected points of dimension {dim}, got {arr.shape[1]}")
    return arr


def _unit_rows(directions, dim: int) -> np.ndarray:
    if directions is None or len(directions) == 0:
        return np.zeros((0, dim))
    dirs = _as_rows(directions, dim)
    lengths = np.linalg.norm(dirs, axis=1)
    return dirs[lengths > 0] / lengths[lengths > 0, None]


def _recession_blocks(directions: np.ndarray, X: np.ndarray) -> np.ndarray:
    """True where some recession direction makes ⟨d, x⟩ strictly positive."""
    if len(directions) == 0:
        return np.zeros(len(X), dtype=bool)
    scale = np.maximum(np.linalg.norm(X, axis=1), 1.0)
    return ((X @ directions.T) > HULL_TOL * scale[:, None]).any(axis=1)


class ConvexSet(ABC):
    dim: int

    @abstractmethod
    def contains(self, Y) -> np.ndarray:
        ...

    @abstractmethod
    def support(self, X) -> np.ndarray:
        ...

    def indicator(self, Y) -> np.ndarray:
        return np.where(self.contains(Y), 0.0, np.inf)


class WholeSpace(ConvexSet):
    def __init__(self, dim: int):
        self.dim = dim

    def contains(self, Y) -> np.ndarray:
        return np.ones(len(_as_rows(Y, self.dim)), dtype=bool)

    def support(self, X) -> np.ndarray:
        X = _as_rows(X, self.dim)
        return np.where((X == 0).all(axis=1), 0.0, np.inf)

    def __repr__(self) -> str:
        return f"WholeSpace(dim={self.dim})"


class Interval(ConvexSet):
    """HullSet1D: a closed interval whose ends may be flagged unbounded."""

    dim = 1

    def __init__(
        self,
        lo: float,
        hi: float,
        lo_unbounded: bool = False,
        hi_unbounded: bool = False,
    ):
        if lo > hi:
            raise EmptyPositiveSet(f"Empty interval [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)
        self.lo_unbounded = lo_unbounded or self.lo == -np.inf
        self.hi_unbounded = hi_unbounded or self.hi == np.inf

    @property
    def effective_lo(self) -> float:
        return -np.inf if self.lo_unbounded else self.lo

    @property
    def effective_hi(self) -> float:
        return np.inf if self.hi_unbounded else self.hi

    def contains(self, Y) -> np.ndarray:
        y = _as_rows(Y, 1)[:, 0]
        lo_ok = np.ones(len(y), dtype=bool) if self.lo_unbounded else (
            y >= self.lo - HULL_TOL * max(1.0, abs(self.lo))
        )
        hi_ok = np.ones(len(y), dtype=bool) if self.hi_unbounded else (
            y <= self.hi + HULL_TOL * max(1.0, abs(self.hi))
        )
        return lo_ok & hi_ok

    def support(self, X) -> np.ndarray:
        x = _as_rows(X, 1)[:, 0]
        out = np.zeros(len(x))
        pos, neg = x > 0, x < 0
        hi, lo = self.effective_hi, self.effective_lo
        out[pos] = np.inf if hi == np.inf else hi * x[pos]
        out[neg] = np.inf if lo == -np.inf else lo * x[neg]
        return out

    def __repr__(self) -> str:
        left = "(-inf" if self.lo_unbounded else f"[{self.lo}"
        right = "+inf)" if self.hi_unbounded else f"{self.hi}]"
        return f"Interval{left}, {right}"


class Polygon(ConvexSet):
    """HullSet2D: conv(vertices) + cone(directions) in the plane.

    Facets come from the hull of the vertices and the vertices pushed once
    along every direction; facets whose normal has a positive component
    along a recession direction are artifacts of that truncation and are
    dropped.
    """

    dim = 2

    def __init__(self, vertices, directions: Optional[Sequence] = None):
        points = np.unique(_as_rows(vertices, 2), axis=0)
        if len(points) == 0:
            raise EmptyPositiveSet("Polygon without vertices")
        self.directions = _unit_rows(directions, 2)
        self.vertices = self._ccw_vertices(points)
        self._points = points
        self._build_equations()

    @staticmethod
    def _ccw_vertices(points: np.ndarray) -> np.ndarray:
        if len(points) < 3:
            return points
        try:
            hull = ConvexHull(points)
        except QhullError:
            return points
        return points[hull.vertices]

    def _build_equations(self) -> None:
        pushed = [self._points]
        for d in self.directions:
            pushed.append(self._points + d)
        cloud = np.unique(np.vstack(pushed), axis=0)
        self._segment = None
        self._equations = None
        centered = cloud - cloud.mean(axis=0)
        if len(cloud) >= 3 and np.linalg.matrix_rank(centered, tol=1e-12) == 2:
            hull = ConvexHull(cloud)
            keep = []
            for eq in hull.equations:
                normal = eq[:2]
                if len(self.directions) == 0 or (self.directions @ normal <= HULL_TOL).all():
                    keep.append(eq)
            self._equations = np.asarray(keep)
            return
        # degenerate: a point, a segment, a ray or a line
        anchor = cloud[0]
        if len(cloud) == 1:
            self._segment = (anchor, np.array([1.0, 0.0]), 0.0, 0.0, True)
            return
        _, _, vt = np.linalg.svd(centered)
        axis = vt[0]
        t = (cloud - anchor) @ axis
        t_lo, t_hi = t.min(), t.max()
        if len(self.directions):
            along = self.directions @ axis
            if (along > HULL_TOL).any():
                t_hi = np.inf
            if (along < -HULL_TOL).any():
                t_lo = -np.inf
        self._segment = (anchor, axis, t_lo, t_hi, False)

    def contains(self, Y) -> np.ndarray:
        Y = _as_rows(Y, 2)
        if self._equations is not None:
            if len(self._equations) == 0:
                return np.ones(len(Y), dtype=bool)
            scale = np.maximum(1.0, np.abs(self._equations[:, 2]))
            slack = Y @ self._equations[:, :2].T + self._equations[:, 2]
            return (slack <= HULL_TOL * scale).all(axis=1)
        anchor, axis, t_lo, t_hi, single = self._segment
        rel = Y - anchor
        if single:
            return np.linalg.norm(rel, axis=1) <= HULL_TOL
        normal = np.array([-axis[1], axis[0]])
        t = rel @ axis
        off = np.abs(rel @ normal)
        return (off <= HULL_TOL) & (t >= t_lo - HULL_TOL) & (t <= t_hi + HULL_TOL)

    def support(self, X) -> np.ndarray:
        X = _as_rows(X, 2)
        out = (X @ self._points.T).max(axis=1)
        return np.where(_recession_blocks(self.directions, X), np.inf, out)

    def __repr__(self) -> str:
        return f"Polygon(vertices={self.vertices.tolist()}, directions={self.directions.tolist()})"


class NormBall(ConvexSet):
    def __init__(self, norm, radius: float, dim: int, center=None):
        self.norm = norm
        self.radius = float(radius)
        self.dim = dim
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def contains(self, Y) -> np.ndarray:
        from nlperspective.funcs import norm_values

        Y = _as_rows(Y, self.dim)
        r = norm_values(Y - self.center, self.norm)
        return r <= self.radius + HULL_TOL * max(1.0, self.radius)

    def support(self, X) -> np.ndarray:
        from nlperspective.funcs import norm_values

        X = _as_rows(X, self.dim)
        return X @ self.center + self.radius * norm_values(X, self.norm.dual())

    def __repr__(self) -> str:
        return f"NormBall({self.norm}, radius={self.radius})"


class HalfSpace(ConvexSet):
    """{y : ⟨w, y⟩ ≥ c}."""

    def __init__(self, normal, offset: float):
        self.normal = np.asarray(normal, dtype=float).ravel()
        self.offset = float(offset)
        self.dim = len(self.normal)

    def contains(self, Y) -> np.ndarray:
        Y = _as_rows(Y, self.dim)
        return Y @ self.normal >= self.offset - HULL_TOL * max(1.0, abs(self.offset))

    def support(self, X) -> np.ndarray:
        X = _as_rows(X, self.dim)
        ww = self.normal @ self.normal
        lam = -(X @ self.normal) / ww
        residual = np.linalg.norm(X + lam[:, None] * self.normal, axis=1)
        scale = np.maximum(np.linalg.norm(X, axis=1), 1.0)
        aligned = (residual <= HULL_TOL * scale) & (lam >= -HULL_TOL)
        return np.where(aligned, -np.maximum(lam, 0.0) * self.offset, np.inf)

    def __repr__(self) -> str:
        return f"HalfSpace(normal={self.normal.tolist()}, offset={self.offset})"


class SampledHull(ConvexSet):
    """conv(points) + cone(directions) in any dimension, without facets."""

    def __init__(self, points, directions=None):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or len(points) == 0:
            raise EmptyPositiveSet("SampledHull without points")
        self.points = points
        self.dim = points.shape[1]
        self.directions = _unit_rows(directions, self.dim)

    def contains(self, Y) -> np.ndarray:
        Y = _as_rows(Y, self.dim)
        generators = np.vstack([self.points, self.directions]) if len(self.directions) else self.points
        n_pts = len(self.points)
        a_eq = np.vstack([generators.T, np.r_[np.ones(n_pts), np.zeros(len(self.directions))]])
        out = np.zeros(len(Y), dtype=bool)
        for i, y in enumerate(Y):
            res = linprog(
                np.zeros(len(generators)),
                A_eq=a_eq,
                b_eq=np.r_[y, 1.0],
                bounds=(0, None),
                method="highs",
            )
            out[i] = res.status == 0
        return out

    def support(self, X) -> np.ndarray:
        X = _as_rows(X, self.dim)
        out = (X @ self.points.T).max(axis=1)
        return np.where(_recession_blocks(self.directions, X), np.inf, out)

    def __repr__(self) -> str:
        return f"SampledHull(n={len(self.points)}, directions={self.directions.tolist()})"


def hull_from_points(points, directions=None) -> ConvexSet:
    """Interval in 1D, Polygon in 2D, SampledHull beyond."""
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        raise EmptyPositiveSet("No points to take the hull of")
    dim = points.shape[1]
    dirs = _unit_rows(directions, dim)
    if dim == 1:
        lo_flag = bool((dirs[:, 0] < 0).any()) if len(dirs) else False
        hi_flag = bool((dirs[:, 0] > 0).any()) if len(dirs) else False
        return Interval(points[:, 0].min(), points[:, 0].max(), lo_flag, hi_flag)
    if dim == 2:
        return Polygon(points, dirs)
    return SampledHull(points, dirs)
