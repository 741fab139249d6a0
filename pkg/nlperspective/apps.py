"""Application functionals built on the perspective: transport integrands,
mean scalings and the generalized Fisher information."""
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np
from dbt.adapters.events.logging import AdapterLogger
from dbt_common.dataclass_schema import dbtClassMixin
from scipy.integrate import trapezoid

from nlperspective.exceptions import DimensionMismatch, GammaOutOfRange, ParameterOutOfRange
from nlperspective.extreal import ExtReal
from nlperspective.families import (
    BrenierMobility,
    GeoMeanScaling,
    LogMeanScaling,
    NormPowerShifted,
    PowerScaling,
    RadialIndicator,
    ScalingBelow,
    geo_mean_values,
    log_mean_values,
)
from nlperspective.funcs import FuncHandle, GridFunction, GridSpec, Norm
from nlperspective.perspective import OracleGrids, Perspective, preperspective_values

logger = AdapterLogger("nlperspective")


def brenier_mobility(alpha: float = 1.0, beta: float = 1.0) -> FuncHandle:
    return FuncHandle(BrenierMobility(alpha=alpha, beta=beta), 1, name=f"brenier({alpha},{beta})")


def log_mean(y1: float, y2: float) -> ExtReal:
    return ExtReal(float(log_mean_values(np.array([y1]), np.array([y2]))[0]))


def geo_mean(y1: float, y2: float) -> ExtReal:
    return ExtReal(float(geo_mean_values(np.array([y1]), np.array([y2]))[0]))


def log_mean_scaling() -> FuncHandle:
    return FuncHandle(LogMeanScaling(), 2, name="log_mean")


def geo_mean_scaling() -> FuncHandle:
    return FuncHandle(GeoMeanScaling(), 2, name="geo_mean")


def mobility_scaling(q: float) -> FuncHandle:
    """y ↦ y^q on y >= 0 and -inf below."""
    return FuncHandle(PowerScaling(q=q, below=ScalingBelow.neg_inf), 1, name=f"y^{q}")


def _surface(phi: FuncHandle, s: FuncHandle, spec: GridSpec, grids: Optional[OracleGrids]) -> GridFunction:
    dx = spec.dim - s.dim
    if dx != phi.dim:
        raise DimensionMismatch(f"A grid on R^{spec.dim} cannot carry (x, y) in R^{phi.dim} x R^{s.dim}")
    model = Perspective(phi, s, grids)
    nodes = spec.nodes()
    X, Y = nodes[:, :dx], nodes[:, dx:]
    values = model.values(X, Y)
    logger.debug(f"Surface of {phi.name}⋉̄{s.name} on {spec.size} nodes via {model.branch}")
    return GridFunction(
        spec,
        values,
        notes={"branch": str(model.branch), "preperspective": preperspective_values(phi, s, X, Y)},
    )


def transport_integrand_surface(
    p: float,
    q: float,
    spec: GridSpec,
    norm: Norm = Norm.euclidean,
    mobility: Optional[FuncHandle] = None,
) -> GridFunction:
    """(x, y) ↦ perspective of ‖x‖^p/p under the mobility y^q (or ``mobility``)."""
    if spec.dim not in (2, 3):
        raise ParameterOutOfRange(f"Transport surfaces live on R^2 or R^3, got R^{spec.dim}")
    phi = FuncHandle(NormPowerShifted(norm=norm, p=p), spec.dim - 1, name=f"‖·‖^{p}/{p}")
    s = mobility if mobility is not None else mobility_scaling(q)
    return _surface(phi, s, spec, OracleGrids(joint=spec))


def speed_constrained_cost(
    p: float, a: float, b: float, penalty: float = 0.0, norm: Norm = Norm.euclidean, dim: int = 1
) -> FuncHandle:
    """‖x‖^p/p + penalty on a <= ‖x‖ <= b, +inf off the speed band."""
    if not (0 < a <= b):
        raise ParameterOutOfRange(f"Speed interval must satisfy 0 < a <= b, got [{a}, {b}]")
    base = NormPowerShifted(norm=norm, p=p, mult=1.0, shift=penalty)
    return FuncHandle(RadialIndicator(norm=norm, a=a, b=b, base=base), dim, name=f"speed[{a},{b}]")


def constrained_speed_integrand(
    p: float,
    q: float,
    a: float,
    b: float,
    spec: GridSpec,
    penalty: float = 0.0,
    norm: Norm = Norm.euclidean,
    grids: Optional[OracleGrids] = None,
) -> GridFunction:
    if spec.dim not in (2, 3):
        raise ParameterOutOfRange(f"Transport surfaces live on R^2 or R^3, got R^{spec.dim}")
    phi = speed_constrained_cost(p, a, b, penalty, norm, spec.dim - 1)
    s = FuncHandle(PowerScaling(q=q), 1, name=f"y^{q}")
    return _surface(phi, s, spec, grids or OracleGrids(joint=spec))


def _check_gamma(gamma: float, p: float) -> None:
    if not (math.isfinite(p) and p > 1):
        raise ParameterOutOfRange(f"Exponent p must be finite and > 1, got {p}")
    if not (1.0 / p < gamma <= 1.0):
        raise GammaOutOfRange(f"gamma must lie in (1/{p}, 1], got {gamma}")


def ln_gamma(y: float, gamma: float, p: float = 2.0) -> ExtReal:
    """(y^{1-γ} - 1)/(1 - γ), or ln y when γ = 1; -inf for y <= 0."""
    _check_gamma(gamma, p)
    if y <= 0:
        return ExtReal(-np.inf)
    if gamma == 1:
        return ExtReal(math.log(y))
    return ExtReal((y ** (1.0 - gamma) - 1.0) / (1.0 - gamma))


@dataclass
class DensityPath1D:
    lower: float
    upper: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).ravel()
        if len(self.samples) < 3:
            raise ParameterOutOfRange("A density path needs at least 3 samples")
        if not np.isfinite(self.samples).all():
            raise ParameterOutOfRange("Density samples must be finite")
        if not self.upper > self.lower:
            raise ParameterOutOfRange(f"Empty interval [{self.lower}, {self.upper}]")

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], lower: float, upper: float, h: float):
        if not h > 0:
            raise ParameterOutOfRange(f"Spacing must be > 0, got {h}")
        count = int(round((upper - lower) / h)) + 1
        return cls(lower, upper, fn(np.linspace(lower, upper, count)))

    @property
    def h(self) -> float:
        return (self.upper - self.lower) / (len(self.samples) - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, len(self.samples))

    def coarsened(self) -> "DensityPath1D":
        """Every other sample; the node count must be odd."""
        if len(self.samples) % 2 == 0 or len(self.samples) < 5:
            raise ParameterOutOfRange("Coarsening needs an odd node count of at least 5")
        return DensityPath1D(self.lower, self.upper, self.samples[::2])


def fisher_integrand(path: DensityPath1D, gamma: float, p: float = 2.0, norm: Norm = Norm.euclidean) -> np.ndarray:
    """y |∇ln_γ y|^p per node, as the perspective of ‖·‖^p under y^{(γp-1)/(p-1)}."""
    _check_gamma(gamma, p)
    y = path.samples
    if (y < 0).any():
        return np.full(len(y), np.inf)
    g = np.gradient(y, path.h)
    q = (gamma * p - 1.0) / (p - 1.0)
    phi = FuncHandle(NormPowerShifted(norm=norm, p=p, mult=p), 1, name=f"‖·‖^{p}")
    model = Perspective(phi, mobility_scaling(q))
    values = model.values(g[:, None], y[:, None])
    # a vanishing density needs a vanishing slope
    zero = y == 0
    values[zero] = np.where(np.abs(g[zero]) <= path.h, 0.0, np.inf)
    return values


def fisher_functional(path: DensityPath1D, gamma: float, p: float = 2.0, norm: Norm = Norm.euclidean) -> ExtReal:
    values = fisher_integrand(path, gamma, p, norm)
    if np.isposinf(values).any():
        return ExtReal(np.inf)
    return ExtReal(float(trapezoid(values, dx=path.h)))


@dataclass
class FisherReport(dbtClassMixin):
    gamma: float
    p: float
    h: float
    value: float
    refinement_check: Dict[str, Any] = field(default_factory=dict)


def fisher_report(path: DensityPath1D, gamma: float, p: float = 2.0, norm: Norm = Norm.euclidean) -> FisherReport:
    """The functional at h, checked against the same samples at 2h."""
    value = fisher_functional(path, gamma, p, norm)
    check: Dict[str, Any] = {}
    if len(path.samples) % 2 == 1 and len(path.samples) >= 5:
        coarse = path.coarsened()
        coarse_value = fisher_functional(coarse, gamma, p, norm)
        check = {"coarse_h": coarse.h, "coarse_value": float(coarse_value)}
        if value.is_finite and coarse_value.is_finite:
            check["difference"] = abs(float(value) - float(coarse_value))
    logger.debug(f"Fisher functional gamma={gamma} p={p} h={path.h}: {value}")
    return FisherReport(gamma=gamma, p=p, h=path.h, value=float(value), refinement_check=check)
