"""The brute-force Legendre-Fenchel oracle on uniform grids.

Conjugation is the exact discrete sup over the primal nodes. On product
grids the sup is taken one axis at a time,

    f*(ξ) = max_{x_1} (x_1 ξ_1 + max_{x_2} (x_2 ξ_2 + ... − f(x))),

which is the same number as the full double loop but keeps the working set
bounded by ``CHUNK_ELEMENTS``.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from dbt.adapters.events.logging import AdapterLogger
from dbt_common.dataclass_schema import StrEnum, dbtClassMixin

from nlperspective.exceptions import (
    AllInfinite,
    BasepointOutsideDomain,
    DimensionMismatch,
    EmptyPositiveSet,
    ParameterOutOfRange,
)
from nlperspective.extreal import NEG_INF, POS_INF, ExtReal
from nlperspective.funcs import (
    FuncHandle,
    FuncMeta,
    GridBacked,
    GridFunction,
    GridSpec,
    as_point,
    as_rows,
    sample,
)
from nlperspective.hulls import ConvexSet, hull_from_points

logger = AdapterLogger("nlperspective")

CHUNK_ELEMENTS = 1 << 22
DIVERGENCE_THRESHOLD = 1e8
GROWTH_CUTOFF = 0.01
DEFAULT_T_MAX = float(2 ** 16)


class ConjugateMethod(StrEnum):
    brute = "brute"
    llt = "llt"


def _partial_conjugate(A: np.ndarray, nodes: np.ndarray, duals: np.ndarray, axis: int) -> np.ndarray:
    """Replace ``axis`` of A by max over it of A + x·ξ."""
    A = np.moveaxis(A, axis, -1)
    lead = A.shape[:-1]
    flat = A.reshape(-1, A.shape[-1])
    pairing = np.multiply.outer(nodes, duals)
    out = np.empty((flat.shape[0], len(duals)))
    rows = max(1, CHUNK_ELEMENTS // pairing.size)
    for start in range(0, flat.shape[0], rows):
        block = flat[start:start + rows]
        out[start:start + rows] = (block[:, :, None] + pairing[None, :, :]).max(axis=1)
    return np.moveaxis(out.reshape(lead + (len(duals),)), -1, axis)


def lower_hull_1d(x: np.ndarray, fx: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of (x, fx), x sorted ascending (monotone chain)."""
    hull: List[int] = []
    for i in range(len(x)):
        while len(hull) > 1:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (fx[i] - fx[i0]) - (x[i] - x[i0]) * (fx[i1] - fx[i0])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def _llt_conjugate_1d(x: np.ndarray, fx: np.ndarray, xi: np.ndarray) -> np.ndarray:
    finite = np.isfinite(fx)
    px, pf = x[finite], fx[finite]
    idx = lower_hull_1d(px, pf)
    hx, hf = px[idx], pf[idx]
    if len(hx) == 1:
        return hx[0] * xi - hf[0]
    slopes = np.diff(hf) / np.diff(hx)
    pick = np.searchsorted(slopes, xi, side="left")
    return hx[pick] * xi - hf[pick]


def conjugate_grid(
    f: GridFunction,
    dual_spec: GridSpec,
    method: Union[ConjugateMethod, str] = ConjugateMethod.brute,
) -> GridFunction:
    if f.dim != dual_spec.dim:
        raise DimensionMismatch(f"Primal grid in R^{f.dim}, dual grid in R^{dual_spec.dim}")
    values = f.values
    if np.isposinf(values).all():
        raise AllInfinite("Cannot conjugate a function that is +inf at every node")
    if np.isneginf(values).any():
        logger.debug("A -inf node poisons the conjugate to +inf")
        return GridFunction(dual_spec, np.full(dual_spec.size, np.inf), poisoned=True)
    method = ConjugateMethod(method)
    if method == ConjugateMethod.llt:
        if f.dim != 1:
            raise DimensionMismatch("The linear-time transform is one-dimensional")
        out = _llt_conjugate_1d(f.spec.axes()[0], values, dual_spec.axes()[0])
    else:
        A = -f.grid()
        for axis, (nodes, duals) in enumerate(zip(f.spec.axes(), dual_spec.axes())):
            A = _partial_conjugate(A, nodes, duals, axis)
        out = A.ravel()
    logger.debug(f"Conjugated {f.spec.size} primal nodes onto {dual_spec.size} dual nodes ({method})")
    return GridFunction(dual_spec, out, slack=oracle_tolerance(f.spec, dual_spec))


def biconjugate_grid(
    f: GridFunction,
    dual_spec: GridSpec,
    method: Union[ConjugateMethod, str] = ConjugateMethod.brute,
) -> GridFunction:
    """f** on the primal nodes; never above f, up to rounding."""
    conj = conjugate_grid(f, dual_spec, method)
    if conj.poisoned:
        return GridFunction(f.spec, np.full(f.spec.size, -np.inf), poisoned=True)
    back = conjugate_grid(conj, f.spec, method)
    back.slack = oracle_tolerance(f.spec, dual_spec)
    return back


def oracle_tolerance(primal: GridSpec, dual: GridSpec) -> float:
    """Σ_k h_k·ĥ_k: the discretization allowance of one conjugation round."""
    return float(np.sum(primal.spacing * dual.spacing))


def default_dual_spec(f: GridFunction, pad: float = 0.1, counts: Optional[Sequence[int]] = None) -> GridSpec:
    """Dual box spanned by the finite-difference slopes of f, padded by ``pad``."""
    grid = f.grid()
    lower, upper = [], []
    for axis, h in enumerate(f.spec.spacing):
        ahead = np.take(grid, np.arange(1, grid.shape[axis]), axis=axis)
        behind = np.take(grid, np.arange(0, grid.shape[axis] - 1), axis=axis)
        usable = np.isfinite(ahead) & np.isfinite(behind)
        slopes = ((ahead - behind)[usable]) / h
        if slopes.size == 0:
            lo, hi = 0.0, 0.0
        else:
            lo, hi = float(slopes.min()), float(slopes.max())
        center, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        half = half * (1.0 + pad) if half > 0 else pad * max(abs(center), 1.0)
        lower.append(center - half)
        upper.append(center + half)
    counts = list(counts) if counts is not None else list(f.spec.counts)
    return GridSpec(lower=lower, upper=upper, counts=counts)


def is_discretely_convex(g: GridFunction, tol: float = 1e-9) -> bool:
    """Midpoint convexity along every axis at interior nodes with finite neighbours."""
    grid = g.grid()
    for axis in range(g.dim):
        n = grid.shape[axis]
        if n < 3:
            continue
        left = np.take(grid, np.arange(0, n - 2), axis=axis)
        mid = np.take(grid, np.arange(1, n - 1), axis=axis)
        right = np.take(grid, np.arange(2, n), axis=axis)
        usable = np.isfinite(left) & np.isfinite(mid) & np.isfinite(right)
        scale = np.maximum(1.0, np.abs(mid[usable]))
        if (mid[usable] - (left[usable] + right[usable]) / 2.0 > tol * scale).any():
            return False
    return True


def oracle_biconjugate(
    f: FuncHandle,
    primal: GridSpec,
    dual: Optional[GridSpec] = None,
    name: Optional[str] = None,
) -> FuncHandle:
    """f** sampled on ``primal`` and interpolated between nodes."""
    sampled = sample(f, primal)
    dual = dual or default_dual_spec(sampled)
    bic = biconjugate_grid(sampled, dual)
    meta = FuncMeta(is_convex=True, is_lsc=True, is_proper=not bic.poisoned)
    return FuncHandle(GridBacked(bic, meta), f.dim, name=name or f"({f.name})**")


def recession_analytic(f: FuncHandle, direction) -> Optional[ExtReal]:
    """σ_{dom f*}(direction) when the family knows its conjugate's domain."""
    d = as_rows(as_point(direction).array, f.dim)
    out = f.family.recession(d)
    return None if out is None else ExtReal(float(out[0]))


def recession_numeric(
    f: FuncHandle,
    direction,
    basepoint,
    t_max: float = DEFAULT_T_MAX,
) -> ExtReal:
    """Limit of (f(b + t d) − f(b))/t along t = 1, 2, 4, ..., t_max.

    A stored σ_{dom f*} overrides the ladder when the two disagree on finiteness.
    """
    d = as_point(direction).array
    b = as_point(basepoint).array
    if len(d) != f.dim or len(b) != f.dim:
        raise DimensionMismatch(f"{f.name} lives on R^{f.dim}")
    f_b = float(f.values(b[None, :])[0])
    if not math.isfinite(f_b):
        raise BasepointOutsideDomain(f"f({b.tolist()}) = {f_b}")
    ladder = 2.0 ** np.arange(0, int(math.log2(t_max)) + 1)
    moved = f.values(b[None, :] + ladder[:, None] * d[None, :])
    if np.isposinf(moved).any():
        result = POS_INF
    else:
        quotients = (moved - f_b) / ladder
        last, previous = quotients[-1], quotients[-2] if len(quotients) > 1 else quotients[-1]
        growth = abs(last - previous) / max(1.0, abs(last))
        if last > DIVERGENCE_THRESHOLD or growth > GROWTH_CUTOFF:
            result = POS_INF
        else:
            # quotients approach the limit like 1/t, so extrapolate the last doubling
            result = ExtReal(max(last, 2.0 * last - previous))
    analytic = recession_analytic(f, d)
    if analytic is not None and analytic.is_finite != result.is_finite:
        logger.warning(
            f"Numeric recession {result} of {f.name} disagrees with σ_dom f* = {analytic}; using the latter"
        )
        return analytic
    return result


def hull_of_positive_set(s: FuncHandle, spec: GridSpec) -> ConvexSet:
    """Hull of the grid nodes where 0 < s < +inf, closed up by the zero or
    sign-change neighbours, with recession directions where positive nodes
    touch the box."""
    if spec.dim != s.dim:
        raise DimensionMismatch(f"{s.name} lives on R^{s.dim}, grid on R^{spec.dim}")
    if spec.dim > 2:
        raise DimensionMismatch("Positive-set hulls are computed in dimension 1 or 2")
    X = spec.nodes()
    vals = s.values(X).reshape(spec.shape)
    positive = (vals > 0) & (vals < np.inf)
    if not positive.any():
        raise EmptyPositiveSet(f"{s.name} has no positive node on the grid")
    keep = positive.copy()
    extra: List[np.ndarray] = []
    axes = spec.axes()
    offsets = np.stack(np.meshgrid(*[[-1, 0, 1]] * spec.dim, indexing="ij"), axis=-1).reshape(-1, spec.dim)
    for idx in zip(*np.nonzero(positive)):
        for off in offsets:
            nb = tuple(np.asarray(idx) + off)
            if any(k < 0 or k >= n for k, n in zip(nb, spec.shape)):
                continue
            v = vals[nb]
            if v == 0:
                keep[nb] = True
            elif spec.dim == 1 and -np.inf < v < 0:
                x_pos, x_neg = axes[0][idx[0]], axes[0][nb[0]]
                v_pos = vals[idx]
                extra.append(np.array([x_pos + (x_neg - x_pos) * v_pos / (v_pos - v)]))
    points = np.stack([axes[k][np.nonzero(keep)[k]] for k in range(spec.dim)], axis=1)
    if extra:
        points = np.vstack([points, np.asarray(extra)])
    directions = []
    for k in range(spec.dim):
        low_face = np.take(positive, 0, axis=k)
        high_face = np.take(positive, spec.shape[k] - 1, axis=k)
        e = np.zeros(spec.dim)
        e[k] = 1.0
        if low_face.any():
            directions.append(-e)
        if high_face.any():
            directions.append(e)
    hull = hull_from_points(points, directions)
    logger.debug(f"Positive-set hull of {s.name}: {hull}")
    return hull


def support_function(hull: ConvexSet, x) -> ExtReal:
    X = as_rows(as_point(x).array, hull.dim)
    return ExtReal(float(hull.support(X)[0]))


@dataclass
class ConvergenceReport(dbtClassMixin):
    spacings: List[float]
    sup_errors: List[float]
    empirical_order: List[Optional[float]] = field(default_factory=list)
    reference: str = "successive"


def _interior_error(a: GridFunction, b_handle: FuncHandle, margin_fraction: float) -> float:
    spec = a.spec
    width = np.asarray(spec.upper) - np.asarray(spec.lower)
    mask = spec.interior_mask(float(margin_fraction * width.min()))
    X = spec.nodes()[mask]
    va = a.values[mask]
    vb = b_handle.values(X)
    usable = np.isfinite(va) & np.isfinite(vb)
    if not usable.any():
        return 0.0
    return float(np.abs(va[usable] - vb[usable]).max())


def oracle_convergence(
    f: FuncHandle,
    specs: Sequence[GridSpec],
    dual_specs: Optional[Sequence[GridSpec]] = None,
    margin_fraction: float = 0.1,
) -> ConvergenceReport:
    """Sup errors of the grid biconjugate over a refinement sweep.

    Certified Γ0 inputs are compared with their own samples; anything else
    is compared between successive biconjugates on the coarser nodes.
    """
    if len(specs) < 2:
        raise ParameterOutOfRange("A convergence sweep needs at least two grids")
    spacings = [float(spec.spacing.max()) for spec in specs]
    if any(b >= a for a, b in zip(spacings, spacings[1:])):
        raise ParameterOutOfRange(f"Spacings must strictly decrease: {spacings}")
    bics = []
    for i, spec in enumerate(specs):
        sampled = sample(f, spec)
        dual = dual_specs[i] if dual_specs is not None else default_dual_spec(sampled)
        bics.append((sampled, biconjugate_grid(sampled, dual)))
    errors: List[float] = []
    if f.meta.gamma0:
        reference = "sampled"
        for sampled, bic in bics:
            errors.append(_interior_error(bic, FuncHandle(GridBacked(sampled), f.dim), margin_fraction))
    else:
        reference = "successive"
        for (_, coarse), (_, fine) in zip(bics, bics[1:]):
            errors.append(_interior_error(coarse, FuncHandle(GridBacked(fine), f.dim), margin_fraction))
        spacings = spacings[:-1]
    orders: List[Optional[float]] = []
    for (h0, e0), (h1, e1) in zip(zip(spacings, errors), zip(spacings[1:], errors[1:])):
        if e0 > 0 and e1 > 0:
            orders.append(math.log(e0 / e1) / math.log(h0 / h1))
        else:
            orders.append(None)
    logger.debug(f"Convergence sweep of {f.name}: spacings={spacings} errors={errors}")
    return ConvergenceReport(spacings=spacings, sup_errors=errors, empirical_order=orders, reference=reference)
