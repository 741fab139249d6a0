"""The ▼ and ▲ envelopes, f▼ = (f∨)** and f▲ = (f∧)**.

Stored family envelopes win; certified Γ0 inputs use the closed forms
f + ι_{f<=0} and max{f, 0} + ι_{conv̄ F}; anything else goes through the
grid oracle.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from dbt.adapters.events.logging import AdapterLogger
from dbt_common.dataclass_schema import StrEnum, dbtClassMixin

from nlperspective.exceptions import EmptyPositiveSet, GridRequired, HypothesisViolated
from nlperspective.families import Berhu, Constant, Huber
from nlperspective.funcs import (
    DownClosedForm,
    FuncHandle,
    FuncMeta,
    GridBacked,
    GridFunction,
    GridSpec,
    Norm,
    Restricted,
    UpClosedForm,
    ensure_points,
    sample,
)
from nlperspective.hulls import ConvexSet
from nlperspective.transform import (
    biconjugate_grid,
    conjugate_grid,
    default_dual_spec,
    hull_of_positive_set,
    oracle_tolerance,
)

logger = AdapterLogger("nlperspective")

ENVELOPE_TOL = 1e-9


class EnvelopeRoute(StrEnum):
    closed_form_gamma0 = "ClosedFormGamma0"
    oracle_biconjugate = "OracleBiconjugate"
    analytic = "Analytic"
    degenerate = "Degenerate"


@dataclass
class EnvelopeResult:
    handle: FuncHandle
    route: EnvelopeRoute
    cam_empty: bool = False
    notes: Dict[str, Any] = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.route == EnvelopeRoute.degenerate


def restrict_down(f: FuncHandle) -> FuncHandle:
    return FuncHandle(Restricted(f, "down"), f.dim, name=f"({f.name})∨")


def restrict_up(f: FuncHandle) -> FuncHandle:
    return FuncHandle(Restricted(f, "up"), f.dim, name=f"({f.name})∧")


def _constant(value: float, dim: int, name: str) -> FuncHandle:
    return FuncHandle(Constant(value=value), dim, name=name)


def _oracle_envelope(
    restricted: FuncHandle,
    grid: Optional[GridSpec],
    dual: Optional[GridSpec],
    name: str,
) -> Optional[EnvelopeResult]:
    if grid is None:
        raise GridRequired(f"{restricted.name} is not certified Γ0; pass a grid for the oracle")
    sampled = sample(restricted, grid)
    if np.isposinf(sampled.values).all():
        return None
    dual = dual or default_dual_spec(sampled)
    bic = biconjugate_grid(sampled, dual)
    meta = FuncMeta(is_convex=True, is_lsc=True, is_proper=not bic.poisoned)
    handle = FuncHandle(GridBacked(bic, meta), restricted.dim, name=name)
    return EnvelopeResult(handle, EnvelopeRoute.oracle_biconjugate, notes={"slack": bic.slack})


def _negative_node(f: FuncHandle, grid: Optional[GridSpec]) -> bool:
    if grid is None:
        raise GridRequired(f"{f.name} has no known infimum; pass a grid to look for f < 0")
    found = bool((sample(f, grid).values < 0).any())
    logger.debug(f"{f.name}: negative node on the grid: {found}")
    return found


def envelope_down(
    f: FuncHandle,
    grid: Optional[GridSpec] = None,
    dual: Optional[GridSpec] = None,
) -> EnvelopeResult:
    name = f"({f.name})▼"
    stored = f.family.down_envelope(f.dim)
    if stored is not None:
        cam_empty = f.family.down_cam() is False
        logger.debug(f"{name}: stored envelope (cam empty: {cam_empty})")
        return EnvelopeResult(FuncHandle(stored, f.dim, name=name), EnvelopeRoute.analytic, cam_empty=cam_empty)
    negative = f.family.negative_set_nonempty(f.dim)
    if f.meta.gamma0 and negative is None:
        negative = _negative_node(f, grid)
    if negative is False:
        logger.debug(f"{name}: f never negative, envelope is +inf")
        return EnvelopeResult(_constant(np.inf, f.dim, name), EnvelopeRoute.degenerate)
    if f.meta.gamma0:
        logger.debug(f"{name}: closed form f + ι(f <= 0)")
        return EnvelopeResult(FuncHandle(DownClosedForm(f), f.dim, name=name), EnvelopeRoute.closed_form_gamma0)
    result = _oracle_envelope(restrict_down(f), grid, dual, name)
    if result is None:
        logger.debug(f"{name}: no negative node on the grid")
        return EnvelopeResult(_constant(np.inf, f.dim, name), EnvelopeRoute.degenerate)
    return result


def positive_hull(f: FuncHandle, grid: Optional[GridSpec] = None) -> ConvexSet:
    """conv̄ f^{-1}(]0,+inf[), analytic when the family knows it."""
    hull = f.family.positive_hull(f.dim)
    if hull is not None:
        return hull
    if grid is None:
        raise GridRequired(f"The positive set of {f.name} is not known analytically; pass a grid")
    return hull_of_positive_set(f, grid)


def envelope_up(
    f: FuncHandle,
    grid: Optional[GridSpec] = None,
    dual: Optional[GridSpec] = None,
) -> EnvelopeResult:
    name = f"({f.name})▲"
    stored = f.family.up_envelope(f.dim)
    if stored is not None:
        logger.debug(f"{name}: stored envelope")
        return EnvelopeResult(FuncHandle(stored, f.dim, name=name), EnvelopeRoute.analytic)
    if f.meta.gamma0:
        hull = positive_hull(f, grid)
        logger.debug(f"{name}: closed form max(f, 0) + ι over {hull}")
        return EnvelopeResult(FuncHandle(UpClosedForm(f, hull), f.dim, name=name), EnvelopeRoute.closed_form_gamma0)
    result = _oracle_envelope(restrict_up(f), grid, dual, name)
    if result is None:
        raise EmptyPositiveSet(f"{f.name} has no positive node on the grid")
    return result


def huber(alpha: float = 1.0, p: float = 2.0, norm: Norm = Norm.euclidean, dim: int = 1) -> FuncHandle:
    return FuncHandle(Huber(alpha=alpha, p=p, norm=norm), dim, name=f"huber({alpha},{p})")


def berhu(alpha: float = 1.0, p: float = 2.0, norm: Norm = Norm.euclidean, dim: int = 1) -> FuncHandle:
    return FuncHandle(Berhu(alpha=alpha, p=p, norm=norm), dim, name=f"berhu({alpha},{p})")


@dataclass
class DecompositionRow(dbtClassMixin):
    point: List[float]
    value: float
    lower: float
    upper: float
    gap: float


@dataclass
class DecompositionReport(dbtClassMixin):
    """f against max{(f*▼)*, (f*▲)*} at test points."""

    route: str
    max_gap: float
    rows: List[DecompositionRow] = field(default_factory=list)


def _star_envelopes_on_grid(f: FuncHandle, primal: GridSpec, dual: Optional[GridSpec]):
    sampled = sample(f, primal)
    dual = dual or default_dual_spec(sampled)
    conj = conjugate_grid(sampled, dual).values
    lower = np.where(conj < 0, conj, np.inf)
    upper = np.where((conj > 0) & (conj < np.inf), conj, np.inf)
    out = []
    for masked in (lower, upper):
        back = conjugate_grid(GridFunction(dual, masked), primal)
        out.append(FuncHandle(GridBacked(back), f.dim))
    return out


def max_decomposition_check(
    f: FuncHandle,
    points: Sequence,
    primal: Optional[GridSpec] = None,
    dual: Optional[GridSpec] = None,
) -> DecompositionReport:
    if not f.meta.gamma0:
        raise HypothesisViolated(f"{f.name} is not certified Γ0")
    at_origin = float(f.values(np.zeros((1, f.dim)))[0])
    if not at_origin > 0:
        # inf f* = -f(0), so f* has no strictly negative value
        raise HypothesisViolated(f"inf ({f.name})* = {-at_origin} is not negative")
    X = ensure_points(points)
    pair = f.family.star_envelopes(f.dim)
    if pair is not None:
        route = "analytic"
        low_h, high_h = (FuncHandle(member, f.dim) for member in pair)
    elif primal is not None:
        route = "oracle"
        low_h, high_h = _star_envelopes_on_grid(f, primal, dual)
    else:
        raise GridRequired(f"No stored star envelopes for {f.name}; pass a grid")
    values = f.values(X)
    low = low_h.values(X)
    high = high_h.values(X)
    combined = np.maximum(low, high)
    with np.errstate(invalid="ignore"):
        gaps = np.where(values == combined, 0.0, np.abs(values - combined))
    rows = [
        DecompositionRow(point=list(map(float, x)), value=float(v), lower=float(lo), upper=float(hi), gap=float(g))
        for x, v, lo, hi, g in zip(X, values, low, high, gaps)
    ]
    max_gap = float(gaps.max()) if len(gaps) else 0.0
    logger.debug(f"Max decomposition of {f.name} ({route}): max gap {max_gap}")
    return DecompositionReport(route=route, max_gap=max_gap, rows=rows)


@dataclass
class BoundsReport(dbtClassMixin):
    """0 <= s▲ <= -(-s)▼ on conv̄ S, and dom s▲ = conv̄ S when cam (-s)∨ is nonempty."""

    nodes_checked: int
    order_violations: int
    domain_violations: int
    cam_nonempty: Optional[bool] = None

    @property
    def passed(self) -> bool:
        return self.order_violations == 0 and self.domain_violations == 0


def _central(spec: GridSpec, fraction: float) -> GridSpec:
    """The sub-grid of ``spec`` over the middle ``fraction`` of every axis."""
    lower, upper, counts = [], [], []
    for axis, n in zip(spec.axes(), spec.counts):
        cut = int(round((n - 1) * (1.0 - fraction) / 2.0))
        lower.append(float(axis[cut]))
        upper.append(float(axis[n - 1 - cut]))
        counts.append(n - 2 * cut)
    return GridSpec(lower=lower, upper=upper, counts=counts)


def _sampled_neg_down_cam(s: FuncHandle, grid: GridSpec) -> Optional[bool]:
    """Decide cam (-s)∨ ≠ ∅ on nested boxes (central quarter, central half, whole grid).

    The grid convex envelope of (-s)∨ at the nodes of the quarter box can only
    fall as the box grows. With an affine minorant the falls level off; with
    superlinear growth of s each doubling falls further than the last.
    """
    if min(grid.counts) < 9:
        logger.debug(f"(-{s.name})∨: grid too coarse for nested boxes")
        return None
    restricted = restrict_down(s.negated())
    boxes = [_central(grid, 0.25), _central(grid, 0.5), grid]
    samples = [sample(restricted, box) for box in boxes]
    if np.isposinf(samples[-1].values).all():
        return True
    finite = np.isfinite(samples[0].values)
    if not finite.any():
        logger.debug(f"(-{s.name})∨: nothing finite in the central box")
        return None
    dual = default_dual_spec(samples[-1])
    hulls = [conjugate_grid(conjugate_grid(g, dual), boxes[0]).values[finite] for g in samples]
    first, second = float((hulls[0] - hulls[1]).max()), float((hulls[1] - hulls[2]).max())
    tol = 4.0 * oracle_tolerance(grid, dual) + ENVELOPE_TOL
    accelerating = second > tol and second > first + tol
    logger.debug(f"(-{s.name})∨: envelope falls {first:.3g} then {second:.3g} under box doubling")
    return not accelerating


def neg_down_cam(s: FuncHandle, grid: Optional[GridSpec] = None) -> Optional[bool]:
    """Whether (-s)∨ has a continuous affine minorant; None when unknown.

    Family knowledge wins; otherwise a scaling grid decides by sampling.
    """
    known = s.family.neg_down_cam()
    if known is not None:
        return known
    if s.meta.is_concave or s.family.is_affine:
        return True
    if grid is None:
        return None
    return _sampled_neg_down_cam(s, grid)


def up_envelope_bounds(s: FuncHandle, grid: GridSpec, tol: float = 1e-9) -> BoundsReport:
    nodes = grid.nodes()
    hull = positive_hull(s, grid)
    inside = hull.contains(nodes)
    s_up = envelope_up(s, grid).handle.values(nodes)
    neg_down = envelope_down(s.negated(), grid).handle.values(nodes)
    cam = neg_down_cam(s, grid)
    su, bound = s_up[inside], -neg_down[inside]
    scale = np.maximum(1.0, np.abs(bound[np.isfinite(bound)])).max() if np.isfinite(bound).any() else 1.0
    order_bad = (su < -tol) | (su > bound + tol * scale)
    domain_bad = 0
    if cam:
        domain_bad = int((~np.isfinite(su)).sum() + np.isfinite(s_up[~inside]).sum())
    report = BoundsReport(
        nodes_checked=int(inside.sum()),
        order_violations=int(order_bad.sum()),
        domain_violations=domain_bad,
        cam_nonempty=cam,
    )
    logger.debug(f"Scaling envelope bounds for {s.name}: {report.to_dict()}")
    return report
