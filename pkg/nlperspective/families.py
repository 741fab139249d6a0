"""Analytic families with exact closed forms.

Radial families are written in terms of r = ‖x‖ for a chosen norm; their
conjugates use the dual norm. Scaling families act on R (or R^2 for the
means) and carry their envelope knowledge so the perspective dispatcher
never has to guess it.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Type

import numpy as np
from dbt_common.dataclass_schema import StrEnum
from scipy.optimize import brentq

from nlperspective.exceptions import DimensionMismatch, EmptyPositiveSet, ParameterOutOfRange
from nlperspective.funcs import (
    AFFINE,
    GAMMA0,
    ClosedForm,
    Family,
    FuncMeta,
    Norm,
    SignProfile,
    SpecFamily,
    norm_values,
    unit_vector,
)
from nlperspective.hulls import HalfSpace, Interval, NormBall, Polygon, WholeSpace

CONCAVE_ONLY = FuncMeta(is_convex=False, is_lsc=False, is_proper=False, is_concave=True)


class ScalingBelow(StrEnum):
    pos_inf = "+inf"
    neg_inf = "-inf"


def conjugate_exponent(p: float) -> float:
    return p / (p - 1.0)


def _check_exponent(p: float, name: str = "p") -> None:
    if not (math.isfinite(p) and p > 1):
        raise ParameterOutOfRange(f"Exponent {name} must be finite and > 1, got {p}")


def _check_positive(value: float, name: str) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ParameterOutOfRange(f"{name} must be finite and > 0, got {value}")


def _at_origin(X: np.ndarray) -> np.ndarray:
    return (X == 0).all(axis=1)


def _origin_indicator(X: np.ndarray) -> np.ndarray:
    return np.where(_at_origin(X), 0.0, np.inf)


def _point_profile(value: float, where) -> SignProfile:
    where = tuple(float(c) for c in where)
    if value < 0:
        return SignProfile(negative_witness=where)
    if value > 0:
        return SignProfile(positive_witness=where)
    return SignProfile(zero_attained=True)


def _positive_witness(conj: Family, dim: int) -> Optional[Tuple[float, ...]]:
    e = unit_vector(dim)
    for k in range(-10, 64):
        xi = (2.0 ** k) * e
        v = conj.values(xi[None, :])[0]
        if 0 < v < np.inf:
            return tuple(xi)
    return None


def _y(X: np.ndarray) -> np.ndarray:
    return X[:, 0]


def _require_dim(dim: int, expected: int, tag: str) -> None:
    if dim != expected:
        raise DimensionMismatch(f"{tag} is defined on R^{expected}, not R^{dim}")


@dataclass
class NormPowerShifted(SpecFamily):
    """x ↦ mult·‖x‖^p/p + shift."""

    tag = "norm_power_shifted"

    norm: Norm = Norm.euclidean
    p: float = 2.0
    mult: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        _check_exponent(self.p)
        if not (math.isfinite(self.mult) and self.mult >= 0):
            raise ParameterOutOfRange(f"mult must be finite and >= 0, got {self.mult}")
        if not math.isfinite(self.shift):
            raise ParameterOutOfRange(f"shift must be finite, got {self.shift}")
        self.norm = Norm(self.norm)

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def dual_mult(self) -> float:
        return self.mult ** (1.0 - self.q)

    def radial(self, r):
        return self.mult * np.power(r, self.p) / self.p + self.shift

    def values(self, X):
        return self.radial(norm_values(X, self.norm))

    def meta(self, dim):
        return FuncMeta(is_convex=True, is_lsc=True, is_proper=True, is_concave=self.mult == 0)

    def conjugate(self, dim):
        if self.mult == 0:
            return SingletonIndicator(center=[0.0] * dim, value=-self.shift)
        return NormPowerShifted(norm=self.norm.dual(), p=self.q, mult=self.dual_mult, shift=-self.shift)

    def gradient(self, X):
        if self.norm != Norm.euclidean:
            return None
        r = norm_values(X)
        factor = np.where(r > 0, self.mult * np.power(r, self.p - 2.0), 0.0)
        return factor[:, None] * X

    def infimum(self, dim):
        return self.shift

    def supremum(self, dim):
        return np.inf if self.mult > 0 else self.shift

    def positive_hull(self, dim):
        if self.mult > 0 or self.shift > 0:
            return WholeSpace(dim)
        raise EmptyPositiveSet(f"{self.describe()} is never positive")

    def sign_profile(self, dim):
        origin = np.zeros(dim)
        if self.mult == 0:
            return _point_profile(-self.shift, origin)
        rho = (self.q * (max(self.shift, 0.0) + 1.0) / self.dual_mult) ** (1.0 / self.q)
        return SignProfile(
            negative_witness=tuple(origin) if self.shift > 0 else None,
            positive_witness=tuple(rho * unit_vector(dim)),
            zero_attained=self.shift >= 0,
        )

    def recession(self, X):
        if self.mult > 0:
            return _origin_indicator(X)
        return np.zeros(len(X))

    def zero_level_support(self, X):
        if self.mult > 0 and self.shift >= 0:
            radius = (self.q * self.shift / self.dual_mult) ** (1.0 / self.q)
            return radius * norm_values(X, self.norm)
        if self.mult == 0 and self.shift == 0:
            return np.zeros(len(X))
        return None

    def star_envelopes(self, dim):
        if not (self.mult > 0 and self.shift > 0):
            return None
        if self.mult == 1:
            alpha = (self.q * self.shift) ** (1.0 / self.q)
            return Huber(alpha=alpha, p=self.p, norm=self.norm), Berhu(alpha=alpha, p=self.p, norm=self.norm)
        rho0 = (self.q * self.shift / self.dual_mult) ** (1.0 / self.q)
        params = dict(norm=self.norm, a=0.0, b=None, mult=self.mult, p=self.p, shift=self.shift, rho0=rho0)
        return RadialStarEnvelope(side="down", **params), RadialStarEnvelope(side="up", **params)


@dataclass
class Huber(SpecFamily):
    """‖x‖^p/p + α^{p*}/p* inside the knot α^{1/(p-1)}, α‖x‖ outside."""

    tag = "huber"

    alpha: float = 1.0
    p: float = 2.0
    norm: Norm = Norm.euclidean

    def __post_init__(self):
        _check_positive(self.alpha, "alpha")
        _check_exponent(self.p)
        self.norm = Norm(self.norm)

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def knot(self) -> float:
        return self.alpha ** (1.0 / (self.p - 1.0))

    @property
    def offset(self) -> float:
        return self.alpha ** self.q / self.q

    def values(self, X):
        r = norm_values(X, self.norm)
        return np.where(r > self.knot, self.alpha * r, np.power(r, self.p) / self.p + self.offset)

    def meta(self, dim):
        return GAMMA0

    def conjugate(self, dim):
        dual = self.norm.dual()
        base = NormPowerShifted(norm=dual, p=self.q, mult=1.0, shift=-self.offset)
        return RadialIndicator(norm=dual, a=0.0, b=self.alpha, base=base)

    def gradient(self, X):
        if self.norm != Norm.euclidean:
            return None
        r = norm_values(X)
        safe = np.where(r > 0, r, 1.0)
        factor = np.where(r > self.knot, self.alpha / safe, np.where(r > 0, np.power(safe, self.p - 2.0), 0.0))
        return factor[:, None] * X

    def infimum(self, dim):
        return self.offset

    def supremum(self, dim):
        return np.inf

    def positive_hull(self, dim):
        return WholeSpace(dim)

    def sign_profile(self, dim):
        return SignProfile(negative_witness=tuple(np.zeros(dim)), zero_attained=True)

    def recession(self, X):
        return self.alpha * norm_values(X, self.norm)

    def zero_level_support(self, X):
        return self.alpha * norm_values(X, self.norm)


@dataclass
class Berhu(SpecFamily):
    """α‖x‖ inside the knot α^{1/(p-1)}, ‖x‖^p/p + α^{p*}/p* outside."""

    tag = "berhu"

    alpha: float = 1.0
    p: float = 2.0
    norm: Norm = Norm.euclidean

    def __post_init__(self):
        _check_positive(self.alpha, "alpha")
        _check_exponent(self.p)
        self.norm = Norm(self.norm)

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def knot(self) -> float:
        return self.alpha ** (1.0 / (self.p - 1.0))

    @property
    def offset(self) -> float:
        return self.alpha ** self.q / self.q

    def values(self, X):
        r = norm_values(X, self.norm)
        return np.where(r > self.knot, np.power(r, self.p) / self.p + self.offset, self.alpha * r)

    def meta(self, dim):
        return GAMMA0

    def conjugate(self, dim):
        return NormPowerPositivePart(norm=self.norm.dual(), p=self.q, alpha=self.alpha)

    def gradient(self, X):
        if self.norm != Norm.euclidean:
            return None
        r = norm_values(X)
        safe = np.where(r > 0, r, 1.0)
        factor = np.where(r > self.knot, np.power(safe, self.p - 2.0), np.where(r > 0, self.alpha / safe, 0.0))
        return factor[:, None] * X

    def infimum(self, dim):
        return 0.0

    def supremum(self, dim):
        return np.inf

    def positive_hull(self, dim):
        return WholeSpace(dim)

    def sign_profile(self, dim):
        return SignProfile(positive_witness=tuple(2.0 * self.alpha * unit_vector(dim)), zero_attained=True)

    def recession(self, X):
        return _origin_indicator(X)

    def zero_level_support(self, X):
        return self.alpha * norm_values(X, self.norm)


@dataclass
class NormPowerPositivePart(SpecFamily):
    """x ↦ max{(‖x‖^p − α^p)/p, 0}; the conjugate of Berhu."""

    tag = "norm_power_positive_part"

    norm: Norm = Norm.euclidean
    p: float = 2.0
    alpha: float = 1.0

    def __post_init__(self):
        _check_positive(self.alpha, "alpha")
        _check_exponent(self.p)
        self.norm = Norm(self.norm)

    def values(self, X):
        r = norm_values(X, self.norm)
        return np.maximum((np.power(r, self.p) - self.alpha ** self.p) / self.p, 0.0)

    def meta(self, dim):
        return GAMMA0

    def conjugate(self, dim):
        return Berhu(alpha=self.alpha, p=conjugate_exponent(self.p), norm=self.norm.dual())

    def gradient(self, X):
        if self.norm != Norm.euclidean:
            return None
        r = norm_values(X)
        factor = np.where(r > self.alpha, np.power(np.where(r > 0, r, 1.0), self.p - 2.0), 0.0)
        return factor[:, None] * X

    def infimum(self, dim):
        return 0.0

    def supremum(self, dim):
        return np.inf

    def positive_hull(self, dim):
        return WholeSpace(dim)

    def sign_profile(self, dim):
        return SignProfile(positive_witness=tuple(unit_vector(dim)), zero_attained=True)

    def recession(self, X):
        return _origin_indicator(X)

    def zero_level_support(self, X):
        return np.zeros(len(X))


@dataclass
class ScaledNorm(SpecFamily):
    """x ↦ α‖x‖, positively homogeneous."""

    tag = "scaled_norm"

    alpha: float = 1.0
    norm: Norm = Norm.euclidean

    def __post_init__(self):
        _check_positive(self.alpha, "alpha")
        self.norm = Norm(self.norm)

    def values(self, X):
        return self.alpha * norm_values(X, self.norm)

    def meta(self, dim):
        return GAMMA0

    def conjugate(self, dim):
        return RadialIndicator(norm=self.norm.dual(), a=0.0, b=self.alpha)

    def infimum(self, dim):
        return 0.0

    def supremum(self, dim):
        return np.inf

    def positive_hull(self, dim):
        return WholeSpace(dim)

    def sign_profile(self, dim):
        return SignProfile(zero_attained=True)

    def recession(self, X):
        return self.values(X)

    def zero_level_support(self, X):
        return self.values(X)


@dataclass
class RadialIndicator(SpecFamily):
    """x ↦ base(x) + ι_{a ≤ ‖x‖ ≤ b}; ``b = None`` stands for +inf."""

    tag = "radial_indicator"

    norm: Norm = Norm.euclidean
    a: float = 0.0
    b: Optional[float] = None
    base: Optional[NormPowerShifted] = None

    def __post_init__(self):
        self.norm = Norm(self.norm)
        if not (math.isfinite(self.a) and self.a >= 0):
            raise ParameterOutOfRange(f"Radial interval must start at a >= 0, got {self.a}")
        if self.b is not None and not (math.isfinite(self.b) and self.b >= self.a):
            raise ParameterOutOfRange(f"Radial interval [{self.a}, {self.b}] is empty")
        if self.base is None:
            self.base = NormPowerShifted(norm=self.norm, p=2.0, mult=0.0, shift=0.0)
        elif self.base.norm != self.norm:
            self.base = NormPowerShifted(norm=self.norm, p=self.base.p, mult=self.base.mult, shift=self.base.shift)

    @property
    def upper(self) -> float:
        return np.inf if self.b is None else self.b

    @property
    def conjugate_at_origin(self) -> float:
        return -float(self.base.radial(self.a))

    def values(self, X):
        r = norm_values(X, self.norm)
        inside = (r >= self.a) & (r <= self.upper)
        return np.where(inside, self.base.radial(r), np.inf)

    def meta(self, dim):
        constant = self.a == 0 and self.b is None and self.base.mult == 0
        return FuncMeta(is_convex=self.a == 0, is_lsc=True, is_proper=True, is_concave=constant)

    def conjugate(self, dim):
        return RadialConjugate(
            norm=self.norm.dual(), a=self.a, b=self.b, mult=self.base.mult, p=self.base.p, shift=self.base.shift
        )

    def infimum(self, dim):
        return float(self.base.radial(self.a))

    def supremum(self, dim):
        if self.b is None:
            return np.inf if self.base.mult > 0 else self.base.shift
        return float(self.base.radial(self.b))

    def positive_hull(self, dim):
        if self.supremum(dim) <= 0:
            raise EmptyPositiveSet(f"{self.describe()} is never positive")
        if self.b is None:
            return WholeSpace(dim)
        return NormBall(self.norm, self.b, dim)

    def sign_profile(self, dim):
        origin = np.zeros(dim)
        shift = self.base.shift
        if self.b is None and self.base.mult == 0:
            return _point_profile(-shift, origin)
        if self.upper == 0:
            return _point_profile(-shift, origin)
        m = self.conjugate_at_origin
        return SignProfile(
            negative_witness=tuple(origin) if m < 0 else None,
            positive_witness=_positive_witness(self.conjugate(dim), dim),
            zero_attained=m <= 0,
        )

    def recession(self, X):
        if self.b is None and self.base.mult == 0:
            return np.zeros(len(X))
        return _origin_indicator(X)

    def zero_level_support(self, X):
        if self.conjugate_at_origin != 0:
            return None
        if self.upper == 0:
            return _origin_indicator(X)
        return np.zeros(len(X))

    def star_envelopes(self, dim):
        if self.conjugate_at_origin >= 0 or self.upper == 0 or self.base.mult == 0:
            return None
        conj = self.conjugate(dim)
        hi = 1.0
        while conj.radial(hi) <= 0:
            hi *= 2.0
        rho0 = brentq(lambda rho: float(conj.radial(rho)), 0.0, hi, xtol=1e-14)
        params = dict(
            norm=self.norm, a=self.a, b=self.b, mult=self.base.mult, p=self.base.p, shift=self.base.shift, rho0=rho0
        )
        return RadialStarEnvelope(side="down", **params), RadialStarEnvelope(side="up", **params)


@dataclass
class RadialConjugate(SpecFamily):
    """ξ ↦ max over t in [a,b] of (t‖ξ‖ − mult·t^p/p − shift)."""

    tag = "radial_conjugate"

    norm: Norm = Norm.euclidean
    a: float = 0.0
    b: Optional[float] = None
    mult: float = 1.0
    p: float = 2.0
    shift: float = 0.0

    def __post_init__(self):
        self.norm = Norm(self.norm)
        _check_exponent(self.p)

    @property
    def upper(self) -> float:
        return np.inf if self.b is None else self.b

    def maximizer(self, rho):
        if self.mult > 0:
            return np.clip(np.power(rho / self.mult, 1.0 / (self.p - 1.0)), self.a, self.upper)
        return np.where(rho > 0, self.upper, self.a)

    def radial(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.mult == 0:
            if self.b is None:
                return np.where(rho == 0, -self.shift, np.inf)
            return self.b * rho - self.shift
        t = self.maximizer(rho)
        return t * rho - self.mult * np.power(t, self.p) / self.p - self.shift

    def values(self, X):
        return self.radial(norm_values(X, self.norm))

    def meta(self, dim):
        return GAMMA0

    def conjugate(self, dim):
        if self.a != 0:
            return None
        dual = self.norm.dual()
        base = NormPowerShifted(norm=dual, p=self.p, mult=self.mult, shift=self.shift)
        return RadialIndicator(norm=dual, a=0.0, b=self.b, base=base)

    def gradient(self, X):
        if self.norm != Norm.euclidean or self.mult == 0:
            return None
        r = norm_values(X)
        t = self.maximizer(r)
        factor = np.where(r > 0, t / np.where(r > 0, r, 1.0), 0.0)
        return factor[:, None] * X

    def infimum(self, dim):
        return float(self.radial(0.0))

    def supremum(self, dim):
        return -self.shift if self.upper == 0 else np.inf

    def positive_hull(self, dim):
        if self.upper == 0:
            if -self.shift > 0:
                return WholeSpace(dim)
            raise EmptyPositiveSet("Constant non-positive conjugate")
        if self.b is None and self.mult == 0:
            if -self.shift > 0:
                return NormBall(self.norm, 0.0, dim)
            raise EmptyPositiveSet("Conjugate positive nowhere on its domain")
        return WholeSpace(dim)

    def recession(self, X):
        if self.b is None:
            return _origin_indicator(X)
        return self.b * norm_values(X, self.norm)

    def base(self, t):
        return self.mult * np.power(t, self.p) / self.p + self.shift

    def sign_profile(self, dim):
        # the conjugate is base(t) on a <= t <= b, nondecreasing in t
        e = unit_vector(dim)
        low = float(self.base(self.a))
        if self.b is not None:
            top_t = self.b
        elif self.mult > 0:
            top_t = max(self.a, (self.p * (abs(self.shift) + 1.0) / self.mult) ** (1.0 / self.p))
        else:
            top_t = self.a
        high = float(self.base(top_t))
        return SignProfile(
            negative_witness=tuple(self.a * e) if low < 0 else None,
            positive_witness=tuple(top_t * e) if high > 0 else None,
            zero_attained=low <= 0 <= high,
        )


@dataclass
class RadialStarEnvelope(SpecFamily):
    """((φ*)▼)* (side "down") or ((φ*)▲)* (side "up") for a radial φ.

    φ = mult·‖x‖^p/p + shift on a ≤ ‖x‖ ≤ b, and ``rho0`` is the radius
    where the radial profile of φ* crosses zero.
    """

    tag = "radial_star_envelope"

    side: str = "down"
    norm: Norm = Norm.euclidean
    a: float = 0.0
    b: Optional[float] = None
    mult: float = 1.0
    p: float = 2.0
    shift: float = 0.0
    rho0: float = 1.0

    def __post_init__(self):
        self.norm = Norm(self.norm)
        if self.side not in ("down", "up"):
            raise ParameterOutOfRange(f"side must be 'down' or 'up', got {self.side!r}")
        _check_positive(self.mult, "mult")
        _check_positive(self.rho0, "rho0")

    @property
    def upper(self) -> float:
        return np.inf if self.b is None else self.b

    @property
    def knot(self) -> float:
        free = (self.rho0 / self.mult) ** (1.0 / (self.p - 1.0))
        return float(np.clip(free, self.a, self.upper))

    def base(self, r):
        return self.mult * np.power(r, self.p) / self.p + self.shift

    def values(self, X):
        r = norm_values(X, self.norm)
        knot = self.knot
        if self.side == "down":
            inner = np.where(r < self.a, self.base(self.a), self.base(r))
            return np.where(r <= knot, inner, self.rho0 * r)
        outer = np.where(r <= self.upper, self.base(r), np.inf)
        return np.where(r <= knot, self.rho0 * r, outer)

    def meta(self, dim):
        return GAMMA0

    def recession(self, X):
        if self.side == "down":
            return self.rho0 * norm_values(X, self.norm)
        return _origin_indicator(X)

    def infimum(self, dim):
        return float(self.base(self.a)) if self.side == "down" else 0.0


@dataclass
class Affine(SpecFamily):
    """y ↦ ⟨w, y⟩ + b."""

    tag = "affine"

    w: List[float] = field(default_factory=lambda: [1.0])
    b: float = 0.0

    def __post_init__(self):
        self.w = [float(v) for v in self.w]
        if not all(math.isfinite(v) for v in self.w) or not math.isfinite(self.b):
            raise ParameterOutOfRange("Affine coefficients must be finite")

    @property
    def slope(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)

    def check_dim(self, dim):
        _require_dim(dim, len(self.w), self.tag)

    def values(self, X):
        return X @ self.slope + self.b

    def meta(self, dim):
        return AFFINE

    def conjugate(self, dim):
        return SingletonIndicator(center=list(self.w), value=-self.b)

    def gradient(self, X):
        return np.tile(self.slope, (len(X), 1))

    def infimum(self, dim):
        return self.b if not self.slope.any() else -np.inf

    def supremum(self, dim):
        return self.b if not self.slope.any() else np.inf

    def positive_hull(self, dim):
        if not self.slope.any():
            if self.b > 0:
                return WholeSpace(dim)
            raise EmptyPositiveSet("Constant non-positive affine map")
        return HalfSpace(self.slope, -self.b)

    def sign_profile(self, dim):
        return _point_profile(-self.b, self.slope)

    def recession(self, X):
        return X @ self.slope

    def zero_level_support(self, X):
        return X @ self.slope if self.b == 0 else None

    @property
    def is_affine(self) -> bool:
        return True


@dataclass
class SingletonIndicator(SpecFamily):
    """x ↦ value + ι_{center}."""

    tag = "singleton_indicator"

    center: List[float] = field(default_factory=lambda: [0.0])
    value: float = 0.0

    def __post_init__(self):
        self.center = [float(v) for v in self.center]

    def check_dim(self, dim):
        _require_dim(dim, len(self.center), self.tag)

    def values(self, X):
        hit = (X == np.asarray(self.center)).all(axis=1)
        return np.where(hit, self.value, np.inf)

    def meta(self, dim):
        return GAMMA0

    def conjugate(self, dim):
        return Affine(w=list(self.center), b=-self.value)

    def infimum(self, dim):
        return self.value

    def supremum(self, dim):
        return self.value

    def positive_hull(self, dim):
        if self.value > 0:
            return NormBall(Norm.euclidean, 0.0, dim, center=self.center)
        raise EmptyPositiveSet("Singleton indicator with non-positive value")

    def sign_profile(self, dim):
        c = np.asarray(self.center)
        cc = float(c @ c)
        if cc == 0:
            return _point_profile(-self.value, c)
        return SignProfile(
            negative_witness=tuple((self.value - 1.0) / cc * c),
            positive_witness=tuple((self.value + 1.0) / cc * c),
            zero_attained=True,
        )

    def recession(self, X):
        return _origin_indicator(X)

    def zero_level_support(self, X):
        if not any(self.center) and self.value == 0:
            return _origin_indicator(X)
        return None


@dataclass
class Constant(SpecFamily):
    tag = "constant"

    value: float = 0.0

    def __post_init__(self):
        if math.isnan(self.value):
            raise ParameterOutOfRange("Constant value cannot be NaN")

    def values(self, X):
        return np.full(len(X), float(self.value))

    def meta(self, dim):
        if math.isfinite(self.value):
            return AFFINE
        return FuncMeta(is_convex=True, is_lsc=True, is_proper=False, is_concave=False)

    def conjugate(self, dim):
        if math.isfinite(self.value):
            return SingletonIndicator(center=[0.0] * dim, value=-self.value)
        return Constant(value=-self.value)

    def infimum(self, dim):
        return self.value

    def supremum(self, dim):
        return self.value

    def positive_hull(self, dim):
        if 0 < self.value < np.inf:
            return WholeSpace(dim)
        raise EmptyPositiveSet(f"Constant {self.value} has no finite positive values")

    def sign_profile(self, dim):
        if not math.isfinite(self.value):
            return None
        return _point_profile(-self.value, np.zeros(dim))

    def recession(self, X):
        return np.zeros(len(X)) if math.isfinite(self.value) else None

    def zero_level_support(self, X):
        return _origin_indicator(X) if self.value == 0 else None


def _on_half_line(fn):
    """Extend a formula on y >= 0 by +inf below."""

    def wrapped(X):
        y = _y(X)
        return np.where(y >= 0, fn(np.abs(y)), np.inf)

    return wrapped


def _on_quadrant(value: float):
    def wrapped(X):
        inside = (X >= 0).all(axis=1)
        return np.where(inside, value, np.inf)

    return wrapped


@dataclass
class PowerScaling(SpecFamily):
    """y ↦ y^q on y >= 0; below 0 the value is the ``below`` convention."""

    tag = "power_scaling"

    q: float = 1.0
    below: ScalingBelow = ScalingBelow.pos_inf

    def __post_init__(self):
        _check_positive(self.q, "q")
        self.below = ScalingBelow(self.below)

    def check_dim(self, dim):
        _require_dim(dim, 1, self.tag)

    @property
    def fill(self) -> float:
        return np.inf if self.below == ScalingBelow.pos_inf else -np.inf

    def values(self, X):
        y = _y(X)
        return np.where(y >= 0, np.power(np.abs(y), self.q), self.fill)

    def meta(self, dim):
        if self.below == ScalingBelow.pos_inf:
            return FuncMeta(is_convex=self.q >= 1, is_lsc=True, is_proper=True, is_concave=False)
        return FuncMeta(is_convex=False, is_lsc=False, is_proper=False, is_concave=self.q <= 1)

    def infimum(self, dim):
        return 0.0 if self.below == ScalingBelow.pos_inf else -np.inf

    def supremum(self, dim):
        return np.inf

    def positive_hull(self, dim):
        return Interval(0.0, np.inf)

    def up_envelope(self, dim):
        if self.q >= 1:
            q = self.q
            return ClosedForm(_on_half_line(lambda y: np.power(y, q)), f"y^{q} on [0,+inf)", GAMMA0)
        return ClosedForm(_on_half_line(np.zeros_like), "0 on [0,+inf)", GAMMA0)

    def neg_down_envelope(self, dim):
        if self.q > 1:
            return Constant(value=-np.inf)
        q = self.q
        return ClosedForm(_on_half_line(lambda y: -np.power(y, q)), f"-y^{q} on [0,+inf)", GAMMA0)

    def neg_down_cam(self):
        return self.q <= 1


@dataclass
class ClippedQuadraticScaling(SpecFamily):
    """y − (β²+1)/2 for y > 1, (y² − β²)/2 on [−1, 1], +inf below −1."""

    tag = "clipped_quadratic_scaling"

    beta: float = 0.5

    def __post_init__(self):
        if not (0 <= self.beta < 1):
            raise ParameterOutOfRange(f"beta must lie in [0, 1), got {self.beta}")

    def check_dim(self, dim):
        _require_dim(dim, 1, self.tag)

    def values(self, X):
        y = _y(X)
        b2 = self.beta ** 2
        inner = np.where(y > 1, y - (b2 + 1.0) / 2.0, (y * y - b2) / 2.0)
        return np.where(y >= -1, inner, np.inf)

    def meta(self, dim):
        return GAMMA0

    def infimum(self, dim):
        return -self.beta ** 2 / 2.0

    def supremum(self, dim):
        return np.inf

    def positive_hull(self, dim):
        return Interval(-1.0, np.inf)

    def neg_down_envelope(self, dim):
        offset = (3.0 - self.beta ** 2) / 2.0

        def fn(X):
            y = _y(X)
            return np.where(y >= -1, -y - offset, np.inf)

        return ClosedForm(fn, "-y - (3 - beta^2)/2 on [-1,+inf)", GAMMA0)

    def neg_down_cam(self):
        return True


@dataclass
class MaxZeroAffine(SpecFamily):
    """y ↦ max{0, y}."""

    tag = "max_zero_affine"

    def check_dim(self, dim):
        _require_dim(dim, 1, self.tag)

    def values(self, X):
        return np.maximum(_y(X), 0.0)

    def meta(self, dim):
        return GAMMA0

    def infimum(self, dim):
        return 0.0

    def supremum(self, dim):
        return np.inf

    def positive_hull(self, dim):
        return Interval(0.0, np.inf)

    def neg_down_envelope(self, dim):
        return ClosedForm(_on_half_line(lambda y: -y), "-y on [0,+inf)", GAMMA0)

    def neg_down_cam(self):
        return True


class _QuadrantMean(SpecFamily):
    def check_dim(self, dim):
        _require_dim(dim, 2, self.tag)

    def meta(self, dim):
        return CONCAVE_ONLY

    def infimum(self, dim):
        return -np.inf

    def supremum(self, dim):
        return np.inf

    def positive_hull(self, dim):
        return Polygon([[0.0, 0.0]], directions=[[1.0, 0.0], [0.0, 1.0]])

    def up_envelope(self, dim):
        return ClosedForm(_on_quadrant(0.0), "0 on the closed quadrant", GAMMA0)

    def neg_down_cam(self):
        return True


@dataclass
class LogMeanScaling(_QuadrantMean):
    """(y2 − y1)/(log y2 − log y1) on the open quadrant, 0 on its edges."""

    tag = "log_mean"

    def values(self, X):
        return log_mean_values(X[:, 0], X[:, 1])


@dataclass
class GeoMeanScaling(_QuadrantMean):
    tag = "geo_mean"

    def values(self, X):
        return geo_mean_values(X[:, 0], X[:, 1])


def log_mean_values(y1, y2) -> np.ndarray:
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    quadrant = (y1 >= 0) & (y2 >= 0)
    edge = quadrant & ((y1 == 0) | (y2 == 0))
    open_part = quadrant & ~edge
    scale = np.maximum(np.abs(y1), np.abs(y2))
    diagonal = open_part & (np.abs(y1 - y2) < 1e-12 * scale)
    safe1 = np.where(open_part, y1, 1.0)
    safe2 = np.where(open_part, y2, 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = (safe2 - safe1) / (np.log(safe2) - np.log(safe1))
    out = np.full(y1.shape, -np.inf)
    out = np.where(open_part, quotient, out)
    out = np.where(diagonal, y1, out)
    return np.where(edge, 0.0, out)


def geo_mean_values(y1, y2) -> np.ndarray:
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    quadrant = (y1 >= 0) & (y2 >= 0)
    return np.where(quadrant, np.sqrt(np.abs(y1 * y2)), -np.inf)


@dataclass
class BrenierMobility(SpecFamily):
    """y(1−y)/(α(1−y) + βy) on [0, 1], −inf elsewhere."""

    tag = "brenier_mobility"

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        _check_positive(self.alpha, "alpha")
        _check_positive(self.beta, "beta")

    def check_dim(self, dim):
        _require_dim(dim, 1, self.tag)

    def values(self, X):
        y = _y(X)
        inside = (y >= 0) & (y <= 1)
        denom = self.alpha * (1.0 - y) + self.beta * y
        safe = np.where(inside, denom, 1.0)
        return np.where(inside, y * (1.0 - y) / safe, -np.inf)

    def meta(self, dim):
        return CONCAVE_ONLY

    def infimum(self, dim):
        return -np.inf

    def positive_hull(self, dim):
        return Interval(0.0, 1.0)

    def up_envelope(self, dim):
        def fn(X):
            y = _y(X)
            return np.where((y >= 0) & (y <= 1), 0.0, np.inf)

        return ClosedForm(fn, "0 on [0,1]", GAMMA0)

    def neg_down_cam(self):
        return True


FAMILIES: Dict[str, Type[SpecFamily]] = {
    cls.tag: cls
    for cls in (
        NormPowerShifted,
        Huber,
        Berhu,
        NormPowerPositivePart,
        ScaledNorm,
        RadialIndicator,
        RadialConjugate,
        RadialStarEnvelope,
        Affine,
        SingletonIndicator,
        Constant,
        PowerScaling,
        ClippedQuadraticScaling,
        MaxZeroAffine,
        LogMeanScaling,
        GeoMeanScaling,
        BrenierMobility,
    )
}
