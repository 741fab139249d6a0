"""Evaluable extended-real functions on R^d, d <= 3.

A :class:`FuncHandle` pairs a :class:`Family` (the formula and whatever is
known about it analytically) with a dimension and structural metadata.
Vectorized evaluation works on ``(n, d)`` float arrays where ``np.inf`` and
``-np.inf`` stand for the infinite extended reals.
"""
import csv
import json
from dataclasses import dataclass, field
from typing import Any, Callable, ClassVar, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from dbt.adapters.events.logging import AdapterLogger
from dbt_common.dataclass_schema import StrEnum, dbtClassMixin
from scipy.interpolate import RegularGridInterpolator

from nlperspective.exceptions import (
    DimensionMismatch,
    EmptyPositiveSet,
    MetadataMismatch,
    ParameterOutOfRange,
)
from nlperspective.extreal import ExtReal, check_no_nan, parse, render

logger = AdapterLogger("nlperspective")

MAX_DIM = 3


class Norm(StrEnum):
    euclidean = "euclidean"
    sup = "sup"
    one = "one"

    def dual(self) -> "Norm":
        if self == Norm.sup:
            return Norm.one
        if self == Norm.one:
            return Norm.sup
        return Norm.euclidean


def norm_values(X, norm: Norm = Norm.euclidean) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if norm == Norm.sup:
        return np.abs(X).max(axis=1)
    if norm == Norm.one:
        return np.abs(X).sum(axis=1)
    return np.sqrt((X * X).sum(axis=1))


def unit_vector(dim: int, axis: int = 0) -> np.ndarray:
    """e_axis, of norm one in every supported norm."""
    e = np.zeros(dim)
    e[axis] = 1.0
    return e


@dataclass(frozen=True)
class Point:
    coords: Tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in np.ravel(np.asarray(self.coords, dtype=float)))
        if not 1 <= len(coords) <= MAX_DIM:
            raise DimensionMismatch(f"Points live in R^1..R^{MAX_DIM}, got {len(coords)} coordinates")
        if not np.all(np.isfinite(coords)):
            raise ParameterOutOfRange(f"Point coordinates must be finite: {coords}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, *coords: float) -> "Point":
        return cls(tuple(coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def concat(self, other: "Point") -> "Point":
        """The pair (x, y) of the product space, as one point."""
        return Point(self.coords + other.coords)


def as_point(value) -> Point:
    if isinstance(value, Point):
        return value
    return Point(tuple(np.ravel(np.asarray(value, dtype=float))))


def as_rows(X, dim: int) -> np.ndarray:
    """Coerce points to an ``(n, dim)`` array, rejecting other dimensions."""
    if isinstance(X, Point):
        X = X.array
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        if dim == 1:
            arr = arr[:, None]
        elif len(arr) == dim:
            arr = arr[None, :]
        else:
            raise DimensionMismatch(f"Expected points in R^{dim}, got a vector of length {len(arr)}")
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatch(f"Expected points in R^{dim}, got array of shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class FuncMeta:
    """Tri-state structural flags; ``None`` means unknown.

    ``is_concave`` records that -f belongs to Gamma_0.
    """

    is_convex: Optional[bool] = None
    is_lsc: Optional[bool] = None
    is_proper: Optional[bool] = None
    is_concave: Optional[bool] = None

    @property
    def gamma0(self) -> bool:
        return bool(self.is_convex and self.is_lsc and self.is_proper)

    def conflicts(self, other: "FuncMeta") -> List[str]:
        out = []
        for name in ("is_convex", "is_lsc", "is_proper", "is_concave"):
            mine, theirs = getattr(self, name), getattr(other, name)
            if mine is not None and theirs is not None and mine != theirs:
                out.append(name)
        return out

    def merged(self, other: "FuncMeta") -> "FuncMeta":
        pick = lambda a, b: a if a is not None else b  # noqa: E731
        return FuncMeta(
            is_convex=pick(self.is_convex, other.is_convex),
            is_lsc=pick(self.is_lsc, other.is_lsc),
            is_proper=pick(self.is_proper, other.is_proper),
            is_concave=pick(self.is_concave, other.is_concave),
        )

    def to_dict(self) -> Dict[str, Optional[bool]]:
        return {
            "is_convex": self.is_convex,
            "is_lsc": self.is_lsc,
            "is_proper": self.is_proper,
            "is_concave": self.is_concave,
        }


GAMMA0 = FuncMeta(is_convex=True, is_lsc=True, is_proper=True, is_concave=False)
AFFINE = FuncMeta(is_convex=True, is_lsc=True, is_proper=True, is_concave=True)


@dataclass(frozen=True)
class SignProfile:
    """What is known about the sign of f* on its domain.

    Witnesses are dual points where f* is certified strictly negative or
    strictly positive; ``zero_attained`` records (f*)^{-1}(0) != {}.
    """

    negative_witness: Optional[Tuple[float, ...]] = None
    positive_witness: Optional[Tuple[float, ...]] = None
    zero_attained: bool = False


class Family:
    """A function formula. Analytic knowledge is exposed through optional hooks
    returning ``None`` when unknown."""

    tag: ClassVar[str] = "opaque"
    analytic: ClassVar[bool] = True

    def values(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def check_dim(self, dim: int) -> None:
        pass

    def meta(self, dim: int) -> FuncMeta:
        return FuncMeta()

    def conjugate(self, dim: int) -> Optional["Family"]:
        return None

    def gradient(self, X: np.ndarray) -> Optional[np.ndarray]:
        return None

    def infimum(self, dim: int) -> Optional[float]:
        return None

    def supremum(self, dim: int) -> Optional[float]:
        return None

    def negative_set_nonempty(self, dim: int) -> Optional[bool]:
        """Whether {f < 0} has a point; None when unknown."""
        inf = self.infimum(dim)
        return None if inf is None else bool(inf < 0)

    def positive_hull(self, dim: int):
        """conv̄ f^{-1}(]0,+inf[); raises EmptyPositiveSet when known empty."""
        return None

    def sign_profile(self, dim: int) -> Optional[SignProfile]:
        return None

    def recession(self, X: np.ndarray) -> Optional[np.ndarray]:
        """rec of the closed convex hull, i.e. the support function of dom f*."""
        return None

    def zero_level_support(self, X: np.ndarray) -> Optional[np.ndarray]:
        """Support function of (f*)^{-1}(0)."""
        return None

    def star_envelopes(self, dim: int) -> Optional[Tuple["Family", "Family"]]:
        """The pair ((f*)▼*, (f*)▲*)."""
        return None

    def up_envelope(self, dim: int) -> Optional["Family"]:
        return None

    def down_envelope(self, dim: int) -> Optional["Family"]:
        return None

    def down_cam(self) -> Optional[bool]:
        """Whether the restriction f∨ has a continuous affine minorant."""
        return None

    def neg_down_envelope(self, dim: int) -> Optional["Family"]:
        """(-f)▼, stored by scaling families."""
        return None

    def neg_down_cam(self) -> Optional[bool]:
        return None

    @property
    def is_affine(self) -> bool:
        return False

    def describe(self) -> Dict[str, Any]:
        return {"family": self.tag}


class SpecFamily(Family, dbtClassMixin):
    """Families constructible from a JSON parameter document."""

    def describe(self) -> Dict[str, Any]:
        return {"family": self.tag, "params": self.to_dict(omit_none=True)}


class FuncHandle:
    def __init__(
        self,
        family: Family,
        dim: int,
        meta: Optional[FuncMeta] = None,
        name: Optional[str] = None,
    ):
        if not 1 <= dim <= MAX_DIM:
            raise DimensionMismatch(f"Dimension must be in 1..{MAX_DIM}, got {dim}")
        family.check_dim(dim)
        known = family.meta(dim)
        if meta is None:
            meta = known
        elif family.analytic:
            conflicts = known.conflicts(meta)
            if conflicts:
                raise MetadataMismatch(
                    f"Flags {conflicts} disagree with the known properties of {family.tag}"
                )
            meta = known.merged(meta)
        self.family = family
        self.dim = dim
        self.meta = meta
        self.name = name or family.tag

    @property
    def tag(self) -> str:
        return self.family.tag

    def values(self, X) -> np.ndarray:
        X = as_rows(X, self.dim)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.asarray(self.family.values(X), dtype=float).reshape(len(X))
        return check_no_nan(out, f"evaluation of {self.name}")

    def eval(self, x) -> ExtReal:
        point = as_point(x)
        if point.dim != self.dim:
            raise DimensionMismatch(f"{self.name} lives on R^{self.dim}, got a point of R^{point.dim}")
        return ExtReal(self.values(point.array[None, :])[0])

    __call__ = eval

    def gradient(self, X) -> Optional[np.ndarray]:
        X = as_rows(X, self.dim)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.family.gradient(X)

    def negated(self) -> "FuncHandle":
        return FuncHandle(Negated(self), self.dim, name=f"-({self.name})")

    def describe(self) -> Dict[str, Any]:
        return {**self.family.describe(), "dim": self.dim, "meta": self.meta.to_dict()}

    def __repr__(self) -> str:
        return f"FuncHandle({self.name}, dim={self.dim})"


class Negated(Family):
    tag = "negated"

    def __init__(self, inner: FuncHandle):
        self.inner = inner

    def values(self, X):
        return -self.inner.values(X)

    def meta(self, dim: int) -> FuncMeta:
        inner = self.inner.meta
        flag = True if inner.is_concave else None
        return FuncMeta(
            is_convex=flag,
            is_lsc=flag,
            is_proper=flag,
            is_concave=True if inner.gamma0 else None,
        )

    def infimum(self, dim):
        sup = self.inner.family.supremum(dim)
        return None if sup is None else -sup

    def supremum(self, dim):
        inf = self.inner.family.infimum(dim)
        return None if inf is None else -inf

    def negative_set_nonempty(self, dim):
        known = super().negative_set_nonempty(dim)
        if known is not None:
            return known
        try:
            hull = self.inner.family.positive_hull(dim)
        except EmptyPositiveSet:
            return False
        return None if hull is None else True

    def down_envelope(self, dim):
        return self.inner.family.neg_down_envelope(dim)

    def down_cam(self):
        return self.inner.family.neg_down_cam()

    def describe(self):
        return {"family": self.tag, "inner": self.inner.family.describe()}


class Restricted(Family):
    """f∨ (side "down": keep -inf < f < 0) or f∧ (side "up": keep 0 < f < +inf)."""

    tag = "restricted"

    def __init__(self, inner: FuncHandle, side: str):
        if side not in ("down", "up"):
            raise ParameterOutOfRange(f"Unknown restriction side {side!r}")
        self.inner = inner
        self.side = side

    def values(self, X):
        v = self.inner.values(X)
        keep = (v > -np.inf) & (v < 0) if self.side == "down" else (v > 0) & (v < np.inf)
        return np.where(keep, v, np.inf)

    def meta(self, dim):
        convex = True if (self.side == "down" and self.inner.meta.is_convex) else None
        return FuncMeta(is_convex=convex)


class DownClosedForm(Family):
    """f + ι_{f <= 0}."""

    tag = "down_closed_form"

    def __init__(self, inner: FuncHandle):
        self.inner = inner

    def values(self, X):
        v = self.inner.values(X)
        return np.where(v <= 0, v, np.inf)

    def meta(self, dim):
        return FuncMeta(is_convex=True, is_lsc=True, is_proper=True)

    def recession(self, X):
        # bounded sublevel sets are not assumed
        return None


class UpClosedForm(Family):
    """max{f, 0} + ι_C for a closed convex set C."""

    tag = "up_closed_form"

    def __init__(self, inner: FuncHandle, hull):
        self.inner = inner
        self.hull = hull

    def values(self, X):
        v = self.inner.values(X)
        return np.where(self.hull.contains(X), np.maximum(v, 0.0), np.inf)

    def meta(self, dim):
        return FuncMeta(is_convex=True, is_lsc=True, is_proper=True)


class ClosedForm(Family):
    """A certified vectorized formula built by another family."""

    tag = "closed_form"

    def __init__(
        self,
        fn: Callable[[np.ndarray], np.ndarray],
        label: str,
        meta: FuncMeta,
        recession: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        self.fn = fn
        self.label = label
        self._meta = meta
        self._recession = recession

    def values(self, X):
        return self.fn(X)

    def meta(self, dim):
        return self._meta

    def recession(self, X):
        return None if self._recession is None else self._recession(X)

    def describe(self):
        return {"family": self.tag, "label": self.label}


class Opaque(Family):
    """A user evaluator; its metadata is taken on trust."""

    tag = "opaque"
    analytic = False

    def __init__(self, evaluator: Callable, vectorized: bool = False):
        self.evaluator = evaluator
        self.vectorized = vectorized

    def values(self, X):
        if self.vectorized:
            return np.asarray(self.evaluator(X), dtype=float)
        return np.array([float(self.evaluator(row)) for row in X], dtype=float)


def opaque(
    evaluator: Callable, dim: int, meta: Optional[FuncMeta] = None, vectorized: bool = False, name: Optional[str] = None
) -> FuncHandle:
    return FuncHandle(Opaque(evaluator, vectorized), dim, meta=meta, name=name or "opaque")


@dataclass
class GridSpec(dbtClassMixin):
    lower: List[float]
    upper: List[float]
    counts: List[int]

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.counts)):
            raise DimensionMismatch("lower, upper and counts must have the same length")
        if not 1 <= len(self.counts) <= MAX_DIM:
            raise DimensionMismatch(f"Grids live in R^1..R^{MAX_DIM}")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ParameterOutOfRange(f"lower {self.lower} must be below upper {self.upper}")
        if any(n < 2 for n in self.counts):
            raise ParameterOutOfRange(f"Every axis needs at least 2 nodes, got {self.counts}")
        self.lower = [float(v) for v in self.lower]
        self.upper = [float(v) for v in self.upper]
        self.counts = [int(n) for n in self.counts]

    @classmethod
    def box(cls, lower, upper, counts) -> "GridSpec":
        lower = list(np.atleast_1d(np.asarray(lower, dtype=float)))
        upper = list(np.atleast_1d(np.asarray(upper, dtype=float)))
        counts = [int(n) for n in np.atleast_1d(counts)]
        if len(counts) == 1 and len(lower) > 1:
            counts = counts * len(lower)
        return cls(lower=lower, upper=upper, counts=counts)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / (np.asarray(self.counts) - 1)

    def axes(self) -> List[np.ndarray]:
        return [np.linspace(lo, hi, n) for lo, hi, n in zip(self.lower, self.upper, self.counts)]

    def nodes(self) -> np.ndarray:
        """All nodes, row-major in axis order, as an ``(size, dim)`` array."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def refined(self) -> "GridSpec":
        """Same box, spacing halved."""
        return GridSpec(lower=list(self.lower), upper=list(self.upper), counts=[2 * n - 1 for n in self.counts])

    def interior_mask(self, margin: float) -> np.ndarray:
        X = self.nodes()
        lo = np.asarray(self.lower) + margin
        hi = np.asarray(self.upper) - margin
        return ((X >= lo - 1e-12) & (X <= hi + 1e-12)).all(axis=1)

    def contains(self, X: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        tol = 1e-12 * np.maximum(1.0, np.abs(hi - lo))
        return ((X >= lo - tol) & (X <= hi + tol)).all(axis=1)


@dataclass
class GridFunction:
    """Samples over a GridSpec, row-major.

    ``poisoned`` marks a conjugate forced to +inf by a -inf input node;
    ``slack`` is the discretization allowance recorded by the oracle.
    """

    spec: GridSpec
    values: np.ndarray
    poisoned: bool = False
    slack: float = 0.0
    notes: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = check_no_nan(np.asarray(self.values, dtype=float).ravel(), "grid sampling")
        if len(self.values) != self.spec.size:
            raise DimensionMismatch(
                f"{len(self.values)} values for a grid of {self.spec.size} nodes"
            )

    @property
    def dim(self) -> int:
        return self.spec.dim

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.spec.shape)

    def nodes(self) -> np.ndarray:
        return self.spec.nodes()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "values": [render(v) for v in self.values],
            "poisoned": self.poisoned,
            "slack": self.slack,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridFunction":
        GridSpec.validate(data["spec"])
        spec = GridSpec.from_dict(data["spec"])
        values = [float(parse(str(v))) for v in data["values"]]
        return cls(spec, np.asarray(values), bool(data.get("poisoned", False)), float(data.get("slack", 0.0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        return cls.from_dict(json.loads(text))

    def write_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([f"x{k}" for k in range(self.dim)] + ["value"])
        for node, value in zip(self.nodes(), self.values):
            writer.writerow([repr(float(c)) for c in node] + [render(value)])

    @classmethod
    def read_csv(cls, stream: TextIO) -> "GridFunction":
        reader = csv.reader(stream)
        header = next(reader)
        dim = len(header) - 1
        rows = [row for row in reader if row]
        coords = np.array([[float(c) for c in row[:dim]] for row in rows])
        values = np.array([float(parse(row[dim])) for row in rows])
        axes = [np.unique(coords[:, k]) for k in range(dim)]
        spec = GridSpec(
            lower=[float(a[0]) for a in axes],
            upper=[float(a[-1]) for a in axes],
            counts=[len(a) for a in axes],
        )
        order = np.lexsort(tuple(coords[:, k] for k in reversed(range(dim))))
        return cls(spec, values[order])


class GridBacked(Family):
    """Multilinear interpolation of a GridFunction.

    +inf outside the box and wherever an infinite node carries weight.
    """

    tag = "grid"
    analytic = False

    def __init__(self, grid: GridFunction, meta: Optional[FuncMeta] = None):
        self.grid = grid
        self._meta = meta or FuncMeta()
        spec = grid.spec
        raw = grid.grid()
        axes = tuple(spec.axes())
        finite = np.where(np.isfinite(raw), raw, 0.0)
        self._finite = RegularGridInterpolator(axes, finite)
        self._pos = RegularGridInterpolator(axes, np.isposinf(raw).astype(float))
        self._neg = RegularGridInterpolator(axes, np.isneginf(raw).astype(float))

    def values(self, X):
        spec = self.grid.spec
        inside = spec.contains(X)
        out = np.full(len(X), np.inf)
        if inside.any():
            Xc = np.clip(X[inside], spec.lower, spec.upper)
            vals = self._finite(Xc)
            vals = np.where(self._neg(Xc) > 1e-12, -np.inf, vals)
            vals = np.where(self._pos(Xc) > 1e-12, np.inf, vals)
            out[inside] = vals
        return out

    def meta(self, dim):
        return self._meta

    def infimum(self, dim):
        # multilinear interpolation never goes below the smallest node
        return float(np.min(self.grid.values))

    def check_dim(self, dim):
        if dim != self.grid.dim:
            raise DimensionMismatch(f"Grid of dimension {self.grid.dim} used as a function on R^{dim}")


def grid_backed(grid: GridFunction, meta: Optional[FuncMeta] = None, name: str = "grid") -> FuncHandle:
    return FuncHandle(GridBacked(grid, meta), grid.dim, name=name)


def sample(f: FuncHandle, spec: GridSpec) -> GridFunction:
    if f.dim != spec.dim:
        raise DimensionMismatch(f"{f.name} lives on R^{f.dim}, grid on R^{spec.dim}")
    logger.debug(f"Sampling {f.name} on {spec.size} nodes")
    return GridFunction(spec, f.values(spec.nodes()))


def conjugate_analytic(f: FuncHandle) -> Optional[FuncHandle]:
    family = f.family.conjugate(f.dim)
    if family is None:
        logger.debug(f"No stored conjugate for {f.name}")
        return None
    return FuncHandle(family, f.dim, name=f"({f.name})*")


def handle(family: Family, dim: int, name: Optional[str] = None) -> FuncHandle:
    return FuncHandle(family, dim, name=name)


def ensure_points(points: Sequence) -> np.ndarray:
    """Stack Points (or coordinate sequences) into an array."""
    return np.asarray([as_point(p).array for p in points], dtype=float)
