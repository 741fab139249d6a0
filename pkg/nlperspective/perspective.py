"""Preperspectives, their conjugates and the closed-form perspective φ⋉̄s.

The preperspective is (φ⋉s)(x, y) = s(y)·φ(x/s(y)) when 0 < s(y) < +inf
and +inf otherwise. The perspective is its largest lsc convex minorant;
:class:`Perspective` decides which closed form applies from the sign of
φ*, the scaling envelopes s▲ and (-s)▼ and the metadata of both inputs,
and falls back to the grid biconjugate when nothing can be certified.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dbt.adapters.events.logging import AdapterLogger
from dbt_common.dataclass_schema import StrEnum, dbtClassMixin

from nlperspective.envelopes import envelope_down, envelope_up, neg_down_cam, positive_hull
from nlperspective.exceptions import (
    DimensionMismatch,
    EmptyPositiveSet,
    GridRequired,
    HypothesisViolated,
    NLPerspectiveError,
    ParameterOutOfRange,
    UndeterminedCondition,
    UnknownConjugate,
)
from nlperspective.extreal import ExtReal, add_arrays, scale_array
from nlperspective.funcs import (
    Family,
    FuncHandle,
    FuncMeta,
    GridSpec,
    SignProfile,
    as_point,
    as_rows,
    conjugate_analytic,
    sample,
)
from nlperspective.hulls import ConvexSet
from nlperspective.transform import (
    CHUNK_ELEMENTS,
    ConvergenceReport,
    conjugate_grid,
    default_dual_spec,
    oracle_biconjugate,
    recession_numeric,
)

logger = AdapterLogger("nlperspective")

WITNESS_MARGIN = 10.0
SAMPLED_TESTS = 1000


class SignKind(StrEnum):
    non_positive = "NonPositive"
    zero_infty = "ZeroInfty"
    non_negative = "NonNegative"
    mixed = "Mixed"


class Branch(StrEnum):
    up_scaled = "T55_i"
    recession_on_hull = "T55_ii"
    zero_level_on_hull = "T55_iiia"
    neg_down_scaled = "T55_iiib"
    lower_star_scaled = "T55_va"
    star_pair_max = "T55_vb"
    convex_scaling = "C305_i"
    homogeneous = "C305_ii"
    concave_scaling = "C305_iii"
    affine_scaling = "Affine_Ex51"
    oracle = "Oracle"
    degenerate = "Degenerate"


@dataclass
class ConjugateSignClass(dbtClassMixin):
    kind: SignKind
    negative_witness: Optional[List[float]] = None
    positive_witness: Optional[List[float]] = None
    zero_attained: bool = False
    source: str = "analytic"

    @property
    def has_nonpositive_value(self) -> bool:
        """(φ*)^{-1}(]-inf, 0]) is nonempty."""
        return self.negative_witness is not None or self.zero_attained


@dataclass
class OracleGrids(dbtClassMixin):
    """Grids for the routes that cannot be closed analytically.

    ``phi`` samples φ (classification, φ̆), ``scaling`` samples s (positive
    hull, envelopes, conjugate window) and ``joint`` samples (x, y).
    """

    phi: Optional[GridSpec] = None
    phi_dual: Optional[GridSpec] = None
    scaling: Optional[GridSpec] = None
    joint: Optional[GridSpec] = None
    joint_dual: Optional[GridSpec] = None


def _split(Z: np.ndarray, dx: int) -> Tuple[np.ndarray, np.ndarray]:
    return Z[:, :dx], Z[:, dx:]


def _pair_rows(phi: FuncHandle, s: FuncHandle, X, Y) -> Tuple[np.ndarray, np.ndarray]:
    X = as_rows(X, phi.dim)
    Y = as_rows(Y, s.dim)
    if len(X) != len(Y):
        raise DimensionMismatch(f"{len(X)} x-points against {len(Y)} y-points")
    return X, Y


def _scaled(
    fn: Callable[[np.ndarray], np.ndarray],
    rec: Callable[[np.ndarray], np.ndarray],
    X: np.ndarray,
    r: np.ndarray,
) -> np.ndarray:
    """r·fn(x/r) for 0 < r < +inf, rec(x) for r = 0, +inf otherwise."""
    out = np.full(len(X), np.inf)
    pos = (r > 0) & (r < np.inf)
    if pos.any():
        out[pos] = scale_array(r[pos], fn(X[pos] / r[pos, None]))
    zero = r == 0
    if zero.any():
        out[zero] = rec(X[zero])
    return out


def preperspective_values(phi: FuncHandle, s: FuncHandle, X, Y) -> np.ndarray:
    X, Y = _pair_rows(phi, s, X, Y)
    sv = s.values(Y)
    return _scaled(phi.values, lambda rows: np.full(len(rows), np.inf), X, np.where(sv > 0, sv, -1.0))


def preperspective_eval(phi: FuncHandle, s: FuncHandle, x, y) -> ExtReal:
    x, y = as_point(x), as_point(y)
    if x.dim != phi.dim or y.dim != s.dim:
        raise DimensionMismatch(f"Point ({x.dim}, {y.dim}) for a pair on R^{phi.dim} x R^{s.dim}")
    return ExtReal(preperspective_values(phi, s, x.array[None, :], y.array[None, :])[0])


class Preperspective(Family):
    tag = "preperspective"
    analytic = False

    def __init__(self, phi: FuncHandle, s: FuncHandle):
        self.phi = phi
        self.s = s

    def check_dim(self, dim):
        if dim != self.phi.dim + self.s.dim:
            raise DimensionMismatch(f"The preperspective lives on R^{self.phi.dim + self.s.dim}")

    def values(self, Z):
        X, Y = _split(Z, self.phi.dim)
        return preperspective_values(self.phi, self.s, X, Y)

    def describe(self):
        return {"family": self.tag, "phi": self.phi.describe(), "s": self.s.describe()}


def preperspective_handle(phi: FuncHandle, s: FuncHandle) -> FuncHandle:
    return FuncHandle(Preperspective(phi, s), phi.dim + s.dim, name=f"{phi.name}⋉{s.name}")


def _positive_set_nonempty(s: FuncHandle, grid: Optional[GridSpec] = None) -> Optional[bool]:
    try:
        positive_hull(s, grid)
    except EmptyPositiveSet:
        return False
    except GridRequired:
        sup = s.family.supremum(s.dim)
        if sup is not None and sup <= 0:
            return False
        return None
    return True


def preperspective_properness(phi: FuncHandle, s: FuncHandle, grid: Optional[GridSpec] = None) -> bool:
    """φ⋉s is proper iff φ is proper and S is nonempty."""
    proper = phi.meta.is_proper
    if proper is None:
        raise UndeterminedCondition(f"Properness of {phi.name} is not certified")
    nonempty = _positive_set_nonempty(s, grid)
    if nonempty is None:
        raise UndeterminedCondition(f"Cannot decide whether {s.name} is ever positive; pass a grid")
    return bool(proper and nonempty)


def _grid_sign_profile(phi: FuncHandle, primal: GridSpec, dual: Optional[GridSpec]) -> SignProfile:
    sampled = sample(phi, primal)
    conj = conjugate_grid(sampled, dual or default_dual_spec(sampled))
    if conj.poisoned:
        raise HypothesisViolated(f"{phi.name} takes the value -inf")
    margin = WITNESS_MARGIN * conj.slack
    values = conj.values
    nodes = conj.nodes()
    finite = np.isfinite(values)
    negative = np.nonzero(values < -margin)[0]
    positive = np.nonzero(finite & (values > margin))[0]
    near_zero = (np.abs(values) <= margin).any()
    return SignProfile(
        negative_witness=tuple(nodes[negative[np.argmin(values[negative])]]) if len(negative) else None,
        positive_witness=tuple(nodes[positive[0]]) if len(positive) else None,
        zero_attained=bool(near_zero or (len(negative) and len(positive))),
    )


def classify_phi_star(
    phi: FuncHandle,
    primal: Optional[GridSpec] = None,
    dual: Optional[GridSpec] = None,
) -> ConjugateSignClass:
    profile = phi.family.sign_profile(phi.dim) if phi.family.analytic else None
    source = "analytic"
    if profile is None:
        if primal is None:
            raise UnknownConjugate(f"No analytic conjugate for {phi.name} and no grid to sample it on")
        profile = _grid_sign_profile(phi, primal, dual)
        source = "grid"
    neg, pos = profile.negative_witness, profile.positive_witness
    if neg is not None and pos is not None:
        kind = SignKind.mixed
    elif neg is not None:
        kind = SignKind.non_positive
    elif pos is not None:
        kind = SignKind.non_negative
    elif profile.zero_attained:
        kind = SignKind.zero_infty
    else:
        raise HypothesisViolated(f"({phi.name})* is identically +inf, so {phi.name} has no affine minorant")
    result = ConjugateSignClass(
        kind=kind,
        negative_witness=None if neg is None else [float(c) for c in neg],
        positive_witness=None if pos is None else [float(c) for c in pos],
        zero_attained=bool(profile.zero_attained),
        source=source,
    )
    logger.debug(f"Sign class of ({phi.name})*: {kind} from {source}")
    return result


def cam_nonempty(
    phi: FuncHandle,
    s: FuncHandle,
    sign_class: Optional[ConjugateSignClass] = None,
    grids: Optional[OracleGrids] = None,
) -> bool:
    """cam(φ⋉s) ≠ ∅ iff (φ*)^{-1}(]-inf,0]) ≠ ∅ or cam (-s)∨ ≠ ∅."""
    grids = grids or OracleGrids()
    sign_class = sign_class or classify_phi_star(phi, grids.phi, grids.phi_dual)
    if sign_class.has_nonpositive_value:
        return True
    cam = neg_down_cam(s, grids.scaling)
    if cam is None:
        raise UndeterminedCondition(f"cam (-{s.name})∨ cannot be certified for this scaling; pass a scaling grid")
    return cam


class ConditionStatus(StrEnum):
    satisfied = "satisfied"
    violated = "violated"
    undetermined = "undetermined"


class ConvexityCondition(StrEnum):
    subhomogeneous = "P30_iii"
    origin_nonpositive = "P30_ii"
    affine_scaling = "P30_i"


@dataclass
class ConvexityReport(dbtClassMixin):
    conditions: Dict[str, ConditionStatus] = field(default_factory=dict)
    sources: Dict[str, str] = field(default_factory=dict)

    @property
    def satisfied(self) -> List[str]:
        return [tag for tag, status in self.conditions.items() if status == ConditionStatus.satisfied]


def _all_of(*flags: Optional[bool]) -> ConditionStatus:
    if any(flag is False for flag in flags):
        return ConditionStatus.violated
    if any(flag is None for flag in flags):
        return ConditionStatus.undetermined
    return ConditionStatus.satisfied


def _sampled_subhomogeneity(phi: FuncHandle, box: float, seed: int) -> Optional[bool]:
    rng = np.random.default_rng(seed)
    X = rng.uniform(-box, box, size=(SAMPLED_TESTS, phi.dim))
    lam = rng.uniform(1.0, 4.0, size=SAMPLED_TESTS)
    base = phi.values(X)
    keep = np.isfinite(base)
    if not keep.any():
        return None
    stretched = phi.values(X[keep] * lam[keep, None])
    bound = lam[keep] * base[keep]
    return bool((stretched <= bound + 1e-9 * np.maximum(1.0, np.abs(bound))).all())


def _positive_set_convex(s: FuncHandle, grid: Optional[GridSpec]) -> Optional[bool]:
    if s.meta.is_concave or s.family.is_affine:
        return True
    if grid is None or grid.dim != 1 or s.dim != 1:
        return None
    values = s.values(grid.nodes())
    positive = np.nonzero((values > 0) & (values < np.inf))[0]
    if len(positive) == 0:
        return True
    return bool(positive[-1] - positive[0] + 1 == len(positive))


def convexity_conditions(
    phi: FuncHandle,
    s: FuncHandle,
    grid: Optional[GridSpec] = None,
    box: float = 2.0,
    seed: int = 0,
) -> ConvexityReport:
    """Which sufficient conditions for the convexity of φ⋉s hold."""
    report = ConvexityReport()
    try:
        sign = classify_phi_star(phi)
        subhomogeneous: Optional[bool] = sign.positive_witness is None
        report.sources[ConvexityCondition.subhomogeneous] = "dual"
    except NLPerspectiveError:
        subhomogeneous = _sampled_subhomogeneity(phi, box, seed)
        report.sources[ConvexityCondition.subhomogeneous] = "sampled"
    s_convex = None if s.meta.is_convex is None or s.meta.is_proper is None else bool(
        s.meta.is_convex and s.meta.is_proper
    )
    report.conditions[ConvexityCondition.subhomogeneous] = _all_of(
        phi.meta.is_convex, subhomogeneous, s_convex, _positive_set_convex(s, grid)
    )
    at_origin = float(phi.values(np.zeros((1, phi.dim)))[0])
    report.conditions[ConvexityCondition.origin_nonpositive] = _all_of(
        phi.meta.is_convex, at_origin <= 0, s.meta.is_concave
    )
    affine: Optional[bool] = s.family.is_affine or (False if s.family.analytic else None)
    report.conditions[ConvexityCondition.affine_scaling] = _all_of(phi.meta.is_convex, affine)
    logger.debug(f"Convexity conditions for {phi.name}⋉{s.name}: {report.satisfied}")
    return report


def _affine_parts(s: FuncHandle) -> Tuple[np.ndarray, float]:
    return np.asarray(s.family.slope, dtype=float), float(s.family.b)


def _affine_conjugate(c: np.ndarray, YS: np.ndarray, w: np.ndarray, b: float) -> np.ndarray:
    """ι{y* = βw, β <= -φ*(x*)} - βb for s = ⟨w, ·⟩ + b."""
    ww = float(w @ w)
    out = np.full(len(YS), np.inf)
    finite = np.isfinite(c)
    if ww == 0:
        hit = finite & (np.abs(YS).max(axis=1) == 0) & (b > 0)
        out[hit] = c[hit] * b
        return out
    beta = (YS @ w) / ww
    residual = np.linalg.norm(YS - beta[:, None] * w, axis=1)
    scale = np.maximum(1.0, np.linalg.norm(YS, axis=1))
    hit = finite & (residual <= 1e-12 * scale) & (beta <= -np.where(finite, c, 0.0) + 1e-12 * scale)
    out[hit] = -beta[hit] * b
    return out


def _windowed_sup(c: np.ndarray, YS: np.ndarray, nodes: np.ndarray, sv: np.ndarray) -> np.ndarray:
    """max over window nodes y of ⟨y, y*⟩ + c·s(y)."""
    out = np.empty(len(YS))
    rows = max(1, CHUNK_ELEMENTS // max(1, len(nodes)))
    for start in range(0, len(YS), rows):
        block = slice(start, start + rows)
        pairing = YS[block] @ nodes.T
        out[block] = (pairing + c[block, None] * sv[None, :]).max(axis=1)
    return out


def preperspective_conjugate_values(
    phi: FuncHandle,
    s: FuncHandle,
    XS,
    YS,
    window: Optional[GridSpec] = None,
    phi_star: Optional[FuncHandle] = None,
) -> np.ndarray:
    """(φ⋉s)*(x*, y*) by the sign of φ*(x*).

    Non-affine scalings take the sup over S on the nodes of ``window``;
    φ*(x*) = 0 uses σ_{conv̄ S} when the hull is known analytically.
    """
    XS, YS = _pair_rows(phi, s, XS, YS)
    phi_star = phi_star or conjugate_analytic(phi)
    if phi_star is None:
        raise UnknownConjugate(f"({phi.name})* is neither analytic nor supplied")
    c = phi_star.values(XS)
    if s.family.is_affine:
        w, b = _affine_parts(s)
        return _affine_conjugate(c, YS, w, b)
    out = np.full(len(XS), np.inf)
    zero = c == 0
    hull = s.family.positive_hull(s.dim) if zero.any() else None
    if hull is not None:
        out[zero] = hull.support(YS[zero])
    rest = np.isfinite(c) & ~zero
    if hull is None:
        rest = rest | zero
    if rest.any():
        if window is None:
            raise GridRequired(f"Pass a scaling window to take the sup over the positive set of {s.name}")
        nodes = window.nodes()
        sv = s.values(nodes)
        keep = (sv > 0) & (sv < np.inf)
        if not keep.any():
            raise EmptyPositiveSet(f"{s.name} has no positive node in the window")
        out[rest] = _windowed_sup(c[rest], YS[rest], nodes[keep], sv[keep])
    return out


def preperspective_conjugate_eval(
    phi: FuncHandle,
    s: FuncHandle,
    xstar,
    ystar,
    window: Optional[GridSpec] = None,
    phi_star: Optional[FuncHandle] = None,
) -> ExtReal:
    xs, ys = as_point(xstar), as_point(ystar)
    return ExtReal(
        preperspective_conjugate_values(phi, s, xs.array[None, :], ys.array[None, :], window, phi_star)[0]
    )


@dataclass
class HypothesisCheck(dbtClassMixin):
    name: str
    passed: Optional[bool]
    witness: Optional[List[float]] = None


class Perspective:
    """Branch selection and closed-form evaluation of φ⋉̄s for one pair.

    Immutable once built; the pieces a branch needs (φ̆, rec φ̆, s▲, (-s)▼,
    conv̄ S, the star envelopes of φ) are resolved on first use.
    """

    def __init__(
        self,
        phi: FuncHandle,
        s: FuncHandle,
        grids: Optional[OracleGrids] = None,
        branch: Optional[Branch] = None,
        unchecked: bool = False,
    ):
        self.phi = phi
        self.s = s
        self.grids = grids or OracleGrids()
        self.checks: List[HypothesisCheck] = []
        self.sign_class = self._classify()
        self.neg_down_cam = neg_down_cam(s, self.grids.scaling)
        self.cam = self._cam()
        self.applicable = self._applicable()
        self.branch = self._select(branch, unchecked)
        logger.debug(
            f"{phi.name}⋉̄{s.name}: branch {self.branch} (applicable: {[str(b) for b in self.applicable]})"
        )

    @property
    def dim(self) -> int:
        return self.phi.dim + self.s.dim

    @property
    def degenerate(self) -> bool:
        return self.branch == Branch.degenerate

    def _classify(self) -> Optional[ConjugateSignClass]:
        nonempty = _positive_set_nonempty(self.s, self.grids.scaling)
        self.checks.append(HypothesisCheck("positive set nonempty", nonempty))
        if nonempty is False:
            raise EmptyPositiveSet(f"{self.s.name} is never strictly positive")
        try:
            sign = classify_phi_star(self.phi, self.grids.phi, self.grids.phi_dual)
        except UnknownConjugate:
            self.checks.append(HypothesisCheck("sign of conjugate", None))
            return None
        self.checks.append(HypothesisCheck("strictly negative conjugate value", sign.negative_witness is not None,
                                           sign.negative_witness))
        self.checks.append(HypothesisCheck("strictly positive conjugate value", sign.positive_witness is not None,
                                           sign.positive_witness))
        return sign

    def _cam(self) -> Optional[bool]:
        if self.sign_class is None:
            return None
        if self.sign_class.has_nonpositive_value:
            cam: Optional[bool] = True
        else:
            cam = self.neg_down_cam
        self.checks.append(HypothesisCheck("affine minorant of the preperspective", cam))
        return cam

    def _available(self, attr: str) -> bool:
        try:
            return getattr(self, attr) is not None
        except (GridRequired, UnknownConjugate, EmptyPositiveSet):
            return False

    def _applicable(self) -> List[Branch]:
        out: List[Branch] = []
        phi, s, sign = self.phi, self.s, self.sign_class
        gamma0 = phi.meta.gamma0
        if gamma0 and s.family.is_affine and np.any(_affine_parts(s)[0] != 0):
            out.append(Branch.affine_scaling)
        if gamma0 and sign is not None:
            at_origin = float(phi.values(np.zeros((1, phi.dim)))[0])
            if sign.kind == SignKind.zero_infty and self._available("hull"):
                out.append(Branch.homogeneous)
            if sign.kind == SignKind.non_positive and s.meta.gamma0 and self._available("hull"):
                out.append(Branch.convex_scaling)
            if sign.kind != SignKind.zero_infty and at_origin <= 0 and s.meta.is_concave:
                out.append(Branch.concave_scaling)
        if sign is not None and self.cam is False:
            out.append(Branch.degenerate)
        elif sign is not None and self.cam:
            closed = self._envelope_branch(sign)
            if closed is not None:
                out.append(closed)
        if self.grids.joint is not None:
            out.append(Branch.oracle)
        return out

    def _envelope_branch(self, sign: ConjugateSignClass) -> Optional[Branch]:
        cam = self.neg_down_cam
        if sign.kind == SignKind.non_positive:
            needs, branch = ("phi_breve", "s_up"), Branch.up_scaled
        elif sign.kind == SignKind.zero_infty:
            needs, branch = ("hull",), Branch.recession_on_hull
        elif sign.kind == SignKind.non_negative:
            if cam is None:
                return None
            if cam:
                needs, branch = ("phi_breve", "neg_s_down"), Branch.neg_down_scaled
            elif sign.zero_attained:
                needs, branch = ("zero_support", "hull"), Branch.zero_level_on_hull
            else:
                return None
        else:
            if cam is None:
                return None
            if cam:
                needs, branch = ("star_pair", "s_up", "neg_s_down"), Branch.star_pair_max
            else:
                needs, branch = ("star_pair", "s_up"), Branch.lower_star_scaled
        return branch if all(self._available(attr) for attr in needs) else None

    def _select(self, forced: Optional[Branch], unchecked: bool) -> Branch:
        if forced is not None:
            forced = Branch(forced)
            if unchecked or forced in self.applicable:
                return forced
            raise HypothesisViolated(f"Branch {forced} does not apply; applicable: {[str(b) for b in self.applicable]}")
        if self.applicable:
            return self.applicable[0]
        if self.sign_class is None:
            raise UnknownConjugate(f"({self.phi.name})* is unknown and no joint grid was given for the oracle")
        raise UndeterminedCondition(
            f"No closed form certified for {self.phi.name}⋉̄{self.s.name} and no joint grid was given"
        )

    @cached_property
    def phi_breve(self) -> FuncHandle:
        if self.phi.meta.gamma0:
            return self.phi
        if self.grids.phi is None:
            raise GridRequired(f"{self.phi.name} is not certified Γ0; its biconjugate needs a grid")
        return oracle_biconjugate(self.phi, self.grids.phi, self.grids.phi_dual, name=f"({self.phi.name})**")

    @cached_property
    def basepoint(self) -> np.ndarray:
        origin = np.zeros((1, self.phi.dim))
        if np.isfinite(self.phi_breve.values(origin)[0]):
            return origin[0]
        if self.grids.phi is None:
            raise GridRequired(f"Need a grid to find a point of dom {self.phi.name}")
        nodes = self.grids.phi.nodes()
        vals = self.phi_breve.values(nodes)
        return nodes[int(np.argmin(np.where(np.isfinite(vals), vals, np.inf)))]

    def recession(self, X: np.ndarray) -> np.ndarray:
        """rec φ̆ = σ_{dom φ*}; numeric along each row when the family does not know it."""
        known = self.phi.family.recession(X) if self.phi.family.analytic else None
        if known is not None:
            return np.asarray(known, dtype=float)
        out = np.zeros(len(X))
        for i, row in enumerate(X):
            if np.any(row != 0):
                out[i] = float(recession_numeric(self.phi_breve, row, self.basepoint))
        return out

    @cached_property
    def s_up(self) -> FuncHandle:
        return envelope_up(self.s, self.grids.scaling).handle

    @cached_property
    def neg_s_down(self) -> FuncHandle:
        return envelope_down(self.s.negated(), self.grids.scaling).handle

    @cached_property
    def hull(self) -> ConvexSet:
        return positive_hull(self.s, self.grids.scaling)

    @cached_property
    def star_pair(self) -> Optional[Tuple[FuncHandle, FuncHandle]]:
        pair = self.phi.family.star_envelopes(self.phi.dim)
        if pair is None:
            return None
        low, high = pair
        return (
            FuncHandle(low, self.phi.dim, name=f"({self.phi.name})*▼*"),
            FuncHandle(high, self.phi.dim, name=f"({self.phi.name})*▲*"),
        )

    @cached_property
    def zero_support(self) -> Optional[Callable[[np.ndarray], np.ndarray]]:
        at_origin = self.phi.family.zero_level_support(np.zeros((1, self.phi.dim)))
        return None if at_origin is None else self.phi.family.zero_level_support

    @cached_property
    def oracle(self) -> FuncHandle:
        if self.grids.joint is None:
            raise GridRequired("The oracle route needs a joint (x, y) grid")
        return oracle_biconjugate(
            preperspective_handle(self.phi, self.s), self.grids.joint, self.grids.joint_dual,
            name=f"({self.phi.name}⋉{self.s.name})**",
        )

    def _low_recession(self, X: np.ndarray) -> np.ndarray:
        low = self.star_pair[0]
        known = low.family.recession(X)
        if known is not None:
            return np.asarray(known, dtype=float)
        return np.array([float(recession_numeric(low, row, np.zeros(self.phi.dim))) if np.any(row != 0) else 0.0
                         for row in X])

    def _hull_indicator(self, Y: np.ndarray) -> np.ndarray:
        return np.where(self.hull.contains(Y), 0.0, np.inf)

    def values(self, X, Y) -> np.ndarray:
        X, Y = _pair_rows(self.phi, self.s, X, Y)
        branch = self.branch
        if branch == Branch.degenerate:
            raise HypothesisViolated(
                f"{self.phi.name}⋉{self.s.name} has no continuous affine minorant; its perspective only takes ±inf"
            )
        if branch == Branch.oracle:
            return self.oracle.values(np.hstack([X, Y]))
        if branch in (Branch.affine_scaling, Branch.concave_scaling):
            return _scaled(self.phi.values, self.recession, X, self.s.values(Y))
        if branch == Branch.convex_scaling:
            sv = self.s.values(Y)
            r = np.where(sv > 0, sv, np.where(self.hull.contains(Y) & (sv <= 0), 0.0, -1.0))
            return _scaled(self.phi.values, self.recession, X, r)
        if branch == Branch.homogeneous:
            return add_arrays(self.phi.values(X), self._hull_indicator(Y))
        if branch == Branch.up_scaled:
            return _scaled(self.phi_breve.values, self.recession, X, self.s_up.values(Y))
        if branch == Branch.recession_on_hull:
            return add_arrays(self.recession(X), self._hull_indicator(Y))
        if branch == Branch.zero_level_on_hull:
            return add_arrays(self.zero_support(X), self._hull_indicator(Y))
        if branch == Branch.neg_down_scaled:
            return _scaled(self.phi_breve.values, self.recession, X, -self.neg_s_down.values(Y))
        low, high = self.star_pair
        su = self.s_up.values(Y)
        if branch == Branch.lower_star_scaled:
            return _scaled(low.values, self._low_recession, X, su)
        return self._star_pair_max(X, Y, low, high, su)

    def _star_pair_max(self, X, Y, low: FuncHandle, high: FuncHandle, su: np.ndarray) -> np.ndarray:
        nd = self.neg_s_down.values(Y)
        r = -nd
        out = np.full(len(X), np.inf)
        scaled_high = _scaled(high.values, lambda rows: np.full(len(rows), np.inf), X, np.where(r > 0, r, -1.0))
        open_part = (su > 0) & (su < np.inf)
        if open_part.any():
            scaled_low = _scaled(low.values, self._low_recession, X[open_part], su[open_part])
            out[open_part] = np.maximum(scaled_low, scaled_high[open_part])
        edge = (nd < 0) & (su == 0)
        if edge.any():
            out[edge] = np.maximum(self._low_recession(X[edge]), scaled_high[edge])
        corner = (nd == 0) & (su == 0)
        if corner.any():
            out[corner] = self.recession(X[corner])
        return out

    def handle(self) -> FuncHandle:
        return FuncHandle(PerspectiveFamily(self), self.dim, name=f"{self.phi.name}⋉̄{self.s.name}")


class PerspectiveFamily(Family):
    tag = "perspective"
    analytic = False

    def __init__(self, model: Perspective):
        self.model = model

    def check_dim(self, dim):
        if dim != self.model.dim:
            raise DimensionMismatch(f"The perspective lives on R^{self.model.dim}")

    def values(self, Z):
        X, Y = _split(Z, self.model.phi.dim)
        return self.model.values(X, Y)

    def meta(self, dim):
        return FuncMeta(is_convex=True, is_lsc=True, is_proper=True)

    def describe(self):
        return {"family": self.tag, "branch": str(self.model.branch)}


class PreperspectiveConjugate(Family):
    tag = "preperspective_conjugate"
    analytic = False

    def __init__(self, phi: FuncHandle, s: FuncHandle, window: Optional[GridSpec]):
        self.phi = phi
        self.s = s
        self.window = window

    def values(self, Z):
        XS, YS = _split(Z, self.phi.dim)
        return preperspective_conjugate_values(self.phi, self.s, XS, YS, self.window)


def perspective_case(phi: FuncHandle, s: FuncHandle, grids: Optional[OracleGrids] = None) -> Branch:
    return Perspective(phi, s, grids).branch


def perspective_values(
    phi: FuncHandle,
    s: FuncHandle,
    X,
    Y,
    branch: Optional[Branch] = None,
    unchecked: bool = False,
    grids: Optional[OracleGrids] = None,
) -> np.ndarray:
    return Perspective(phi, s, grids, branch, unchecked).values(X, Y)


def perspective_eval(
    phi: FuncHandle,
    s: FuncHandle,
    x,
    y,
    branch: Optional[Branch] = None,
    unchecked: bool = False,
    grids: Optional[OracleGrids] = None,
) -> ExtReal:
    x, y = as_point(x), as_point(y)
    return ExtReal(perspective_values(phi, s, x.array[None, :], y.array[None, :], branch, unchecked, grids)[0])


@dataclass
class PerspectiveReport:
    branch: Branch
    applicable: List[Branch]
    sign_class: Optional[ConjugateSignClass]
    cam_nonempty: Optional[bool]
    hypotheses_checked: List[HypothesisCheck]
    preperspective: FuncHandle
    perspective: Optional[FuncHandle]
    preperspective_conjugate: Optional[FuncHandle]
    s_up: Optional[FuncHandle] = None
    neg_s_down: Optional[FuncHandle] = None

    @property
    def degenerate(self) -> bool:
        return self.branch == Branch.degenerate

    def to_dict(self) -> Dict[str, Any]:
        return {
            "branch": str(self.branch),
            "applicable": [str(b) for b in self.applicable],
            "sign_class": None if self.sign_class is None else self.sign_class.to_dict(omit_none=True),
            "cam": self.cam_nonempty,
            "degenerate": self.degenerate,
            "hypotheses_checked": [check.to_dict(omit_none=True) for check in self.hypotheses_checked],
        }


def perspective_report(
    phi: FuncHandle,
    s: FuncHandle,
    grids: Optional[OracleGrids] = None,
    branch: Optional[Branch] = None,
    unchecked: bool = False,
) -> PerspectiveReport:
    model = Perspective(phi, s, grids, branch, unchecked)
    s_up = model.s_up if model._available("s_up") else None
    neg_s_down = model.neg_s_down if model._available("neg_s_down") else None
    conj = None
    if conjugate_analytic(phi) is not None:
        conj = FuncHandle(PreperspectiveConjugate(phi, s, model.grids.scaling), model.dim,
                          name=f"({phi.name}⋉{s.name})*")
    return PerspectiveReport(
        branch=model.branch,
        applicable=list(model.applicable),
        sign_class=model.sign_class,
        cam_nonempty=model.cam,
        hypotheses_checked=list(model.checks),
        preperspective=preperspective_handle(phi, s),
        perspective=None if model.degenerate else model.handle(),
        preperspective_conjugate=conj,
        s_up=s_up,
        neg_s_down=neg_s_down,
    )


class DeltaVariant(StrEnum):
    delta1 = "delta1"
    delta2 = "delta2"
    homogeneous = "delta2_homogeneous"


@dataclass
class DeltaRow(dbtClassMixin):
    x: List[float]
    y: List[float]
    delta: float
    perspective: float


@dataclass
class DeltaReport(dbtClassMixin):
    variant: DeltaVariant
    hypotheses_met: bool
    points: int
    violations: int
    strict_gaps: int
    rows: List[DeltaRow] = field(default_factory=list)


def delta_values(phi: FuncHandle, s: FuncHandle, X, Y, variant: DeltaVariant = DeltaVariant.delta2) -> np.ndarray:
    """The older operations that coincide with φ⋉̄s only under extra hypotheses."""
    X, Y = _pair_rows(phi, s, X, Y)
    sv = s.values(Y)
    if DeltaVariant(variant) == DeltaVariant.homogeneous:
        return add_arrays(phi.values(X), np.where(sv < np.inf, 0.0, np.inf))
    model_rec = phi.family.recession(X[:0]) is not None

    def rec(rows):
        if model_rec:
            return phi.family.recession(rows)
        return np.array([float(recession_numeric(phi, row, np.zeros(phi.dim))) if np.any(row != 0) else 0.0
                         for row in rows])

    return _scaled(phi.values, rec, X, sv)


def delta_comparison(
    phi: FuncHandle,
    s: FuncHandle,
    points: Sequence[Tuple[Any, Any]],
    variant: DeltaVariant = DeltaVariant.delta2,
    grids: Optional[OracleGrids] = None,
    keep_rows: bool = True,
) -> DeltaReport:
    """Δ against φ⋉̄s: counts points where Δ exceeds the perspective and strict gaps below it."""
    if not phi.meta.gamma0:
        raise HypothesisViolated(f"{phi.name} is not certified Γ0")
    variant = DeltaVariant(variant)
    X = np.asarray([as_point(x).array for x, _ in points])
    Y = np.asarray([as_point(y).array for _, y in points])
    model = Perspective(phi, s, grids)
    sign = model.sign_class
    if variant == DeltaVariant.delta1:
        met = bool(sign is not None and sign.kind != SignKind.zero_infty and s.meta.is_concave
                   and float(phi.values(np.zeros((1, phi.dim)))[0]) <= 0)
    elif variant == DeltaVariant.delta2:
        met = bool(sign is not None and sign.kind == SignKind.non_positive and s.meta.gamma0)
    else:
        met = bool(sign is not None and sign.kind == SignKind.zero_infty and s.meta.gamma0)
    delta = delta_values(phi, s, X, Y, variant)
    persp = model.values(X, Y)
    with np.errstate(invalid="ignore"):
        tol = 1e-9 * np.maximum(1.0, np.abs(np.where(np.isfinite(persp), persp, 0.0)))
        violations = delta > persp + tol
        gaps = delta < persp - tol
    rows = []
    if keep_rows:
        rows = [
            DeltaRow(x=list(map(float, x)), y=list(map(float, y)), delta=float(d), perspective=float(p))
            for x, y, d, p in zip(X, Y, delta, persp)
        ]
    report = DeltaReport(
        variant=variant,
        hypotheses_met=met,
        points=len(X),
        violations=int(violations.sum()),
        strict_gaps=int(gaps.sum()),
        rows=rows,
    )
    logger.debug(f"{variant} comparison: {report.violations} violations, {report.strict_gaps} strict gaps")
    return report


@dataclass
class OracleCheck(dbtClassMixin):
    """Closed form against the grid biconjugate of the sampled preperspective."""

    branch: str
    nodes_compared: int
    max_error: float
    infinite_mismatches: int
    slack: float
    tolerance: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.tolerance is not None and self.max_error <= self.tolerance


def _compared_nodes(joint: GridSpec, margin: float, window: Optional[GridSpec]) -> np.ndarray:
    mask = joint.interior_mask(margin)
    nodes = joint.nodes()
    if window is not None:
        mask &= window.contains(nodes)
    return mask


def oracle_check(
    phi: FuncHandle,
    s: FuncHandle,
    joint: GridSpec,
    dual: Optional[GridSpec] = None,
    margin: float = 0.2,
    window: Optional[GridSpec] = None,
    branch: Optional[Branch] = None,
    unchecked: bool = False,
    grids: Optional[OracleGrids] = None,
    tolerance: Optional[float] = None,
) -> OracleCheck:
    """Sup error between the dispatched closed form and the oracle on interior nodes.

    ``window`` restricts the comparison further; truncating y to a box changes
    the envelope wherever the closed form draws on scalings beyond it.
    """
    model = Perspective(phi, s, grids, branch, unchecked)
    sampled = sample(preperspective_handle(phi, s), joint)
    dual = dual or default_dual_spec(sampled)
    conj = conjugate_grid(sampled, dual)
    back = conjugate_grid(conj, joint)
    mask = _compared_nodes(joint, margin, window)
    Z = joint.nodes()[mask]
    closed = model.values(Z[:, :phi.dim], Z[:, phi.dim:])
    oracle = back.values[mask]
    both = np.isfinite(closed) & np.isfinite(oracle)
    error = float(np.abs(closed[both] - oracle[both]).max()) if both.any() else 0.0
    check = OracleCheck(
        branch=str(model.branch),
        nodes_compared=int(both.sum()),
        max_error=error,
        infinite_mismatches=int((np.isfinite(closed) != np.isfinite(oracle)).sum()),
        slack=float(back.slack or conj.slack),
        tolerance=tolerance,
    )
    logger.debug(f"Oracle check of {phi.name}⋉̄{s.name}: {check.to_dict()}")
    return check


def conjugate_check(
    phi: FuncHandle,
    s: FuncHandle,
    joint: GridSpec,
    dual: GridSpec,
    window: GridSpec,
    dual_window: Optional[GridSpec] = None,
    tolerance: Optional[float] = None,
) -> OracleCheck:
    """Sampled-window conjugate formula against the grid conjugate of the preperspective.

    ``window`` is the y-grid the formula takes its sup over; it should carry
    the y-nodes of ``joint`` so both sides see the same scalings.
    """
    sampled = sample(preperspective_handle(phi, s), joint)
    conj = conjugate_grid(sampled, dual)
    nodes = dual.nodes()
    mask = np.ones(len(nodes), dtype=bool) if dual_window is None else dual_window.contains(nodes)
    Z = nodes[mask]
    formula = preperspective_conjugate_values(phi, s, Z[:, :phi.dim], Z[:, phi.dim:], window)
    grid = conj.values[mask]
    both = np.isfinite(formula) & np.isfinite(grid)
    error = float(np.abs(formula[both] - grid[both]).max()) if both.any() else 0.0
    return OracleCheck(
        branch="conjugate",
        nodes_compared=int(both.sum()),
        max_error=error,
        infinite_mismatches=int((np.isfinite(formula) != np.isfinite(grid)).sum()),
        slack=float(conj.slack),
        tolerance=tolerance,
    )


def perspective_convergence(
    phi: FuncHandle,
    s: FuncHandle,
    joint: GridSpec,
    dual: Optional[GridSpec] = None,
    refinements: int = 1,
    margin: float = 0.2,
    window: Optional[GridSpec] = None,
    grids: Optional[OracleGrids] = None,
) -> ConvergenceReport:
    """Oracle errors of the closed form while primal and dual grids are halved together."""
    if refinements < 1:
        raise ParameterOutOfRange(f"refinements must be >= 1, got {refinements}")
    spacings: List[float] = []
    errors: List[float] = []
    for _ in range(refinements + 1):
        check = oracle_check(phi, s, joint, dual, margin, window, grids=grids)
        spacings.append(float(joint.spacing.max()))
        errors.append(check.max_error)
        joint = joint.refined()
        dual = dual.refined() if dual is not None else None
    orders: List[Optional[float]] = []
    for (h0, e0), (h1, e1) in zip(zip(spacings, errors), zip(spacings[1:], errors[1:])):
        orders.append(math.log(e0 / e1) / math.log(h0 / h1) if e0 > 0 and e1 > 0 else None)
    return ConvergenceReport(spacings=spacings, sup_errors=errors, empirical_order=orders, reference="closed_form")
