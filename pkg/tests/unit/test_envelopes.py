import unittest

import numpy as np
import pytest

from nlperspective.envelopes import (
    EnvelopeRoute,
    envelope_down,
    envelope_up,
    max_decomposition_check,
    neg_down_cam,
    restrict_down,
    restrict_up,
    up_envelope_bounds,
)
from nlperspective.exceptions import GridRequired, HypothesisViolated
from nlperspective.extreal import POS_INF, ExtReal
from nlperspective.families import BrenierMobility, ClippedQuadraticScaling, NormPowerShifted, PowerScaling
from nlperspective.funcs import GAMMA0, Family, FuncHandle, GridFunction, GridSpec, grid_backed, opaque
from nlperspective.hulls import HalfSpace


class QuadraticOverLinear(Family):
    """(ξ, η) ↦ ξ²/η − 1 for η > 0, −1 at the origin, +inf elsewhere."""

    tag = "quadratic_over_linear"

    def values(self, X):
        xi, eta = X[:, 0], X[:, 1]
        safe = np.where(eta > 0, eta, 1.0)
        out = np.where(eta > 0, xi * xi / safe - 1.0, np.inf)
        return np.where((xi == 0) & (eta == 0), -1.0, out)

    def meta(self, dim):
        return GAMMA0

    def infimum(self, dim):
        return -1.0

    def positive_hull(self, dim):
        return HalfSpace([0.0, 1.0], 0.0)


def square_minus_one():
    return FuncHandle(NormPowerShifted(p=2.0, mult=2.0, shift=-1.0), 1)


class TestRestrictions(unittest.TestCase):
    def test_down_keeps_negative_values(self):
        f = restrict_down(square_minus_one())
        np.testing.assert_array_equal(f.values([0.0, 0.5, 1.0, 2.0]), [-1.0, -0.75, np.inf, np.inf])

    def test_up_keeps_positive_values(self):
        f = restrict_up(square_minus_one())
        np.testing.assert_array_equal(f.values([0.0, 1.0, 2.0]), [np.inf, np.inf, 3.0])


class TestDownEnvelope(unittest.TestCase):
    def test_closed_form(self):
        result = envelope_down(FuncHandle(NormPowerShifted(p=2.0, shift=-0.5), 1))
        self.assertEqual(result.route, EnvelopeRoute.closed_form_gamma0)
        self.assertEqual(result.handle.eval(0.5), ExtReal(-0.375))
        self.assertEqual(result.handle.eval(2.0), POS_INF)

    def test_never_negative_is_degenerate(self):
        result = envelope_down(FuncHandle(NormPowerShifted(p=2.0), 1))
        self.assertTrue(result.degenerate)
        self.assertEqual(result.handle.eval(0.0), POS_INF)

    def test_stored_envelope_of_a_negated_scaling(self):
        result = envelope_down(FuncHandle(PowerScaling(q=2.0), 1).negated())
        self.assertEqual(result.route, EnvelopeRoute.analytic)
        self.assertTrue(result.cam_empty)

    def test_uncertified_input_needs_a_grid(self):
        f = opaque(lambda X: X[:, 0] ** 2 / 2 - 0.5, 1, vectorized=True)
        with self.assertRaises(GridRequired):
            envelope_down(f)
        result = envelope_down(f, GridSpec.box([-2.0], [2.0], 81))
        self.assertEqual(result.route, EnvelopeRoute.oracle_biconjugate)
        self.assertAlmostEqual(float(result.handle.eval(0.0)), -0.5, delta=1e-2)

    def test_quadratic_over_linear(self):
        f = FuncHandle(QuadraticOverLinear(), 2)
        down = envelope_down(f).handle
        self.assertEqual(down.eval([0.0, 1.0]), ExtReal(-1.0))
        self.assertEqual(down.eval([2.0, 1.0]), POS_INF)

    def test_certified_input_without_negative_values(self):
        f = opaque(lambda X: X[:, 0] ** 2, 1, meta=GAMMA0, vectorized=True)
        with self.assertRaises(GridRequired):
            envelope_down(f)
        result = envelope_down(f, GridSpec.box([-2.0], [2.0], 81))
        self.assertTrue(result.degenerate)
        self.assertEqual(result.handle.eval(0.0), POS_INF)

    def test_certified_input_with_a_negative_node(self):
        f = opaque(lambda X: X[:, 0] ** 2 - 0.5, 1, meta=GAMMA0, vectorized=True)
        result = envelope_down(f, GridSpec.box([-2.0], [2.0], 81))
        self.assertEqual(result.route, EnvelopeRoute.closed_form_gamma0)
        self.assertEqual(result.handle.eval(0.0), ExtReal(-0.5))
        self.assertEqual(result.handle.eval(1.0), POS_INF)

    def test_sampled_input_uses_its_smallest_node(self):
        g = GridFunction(GridSpec.box([-1.0], [1.0], 3), np.array([1.0, 0.0, 1.0]))
        result = envelope_down(grid_backed(g, meta=GAMMA0))
        self.assertTrue(result.degenerate)

    def test_negated_scaling_with_known_positive_set(self):
        result = envelope_down(FuncHandle(BrenierMobility(), 1).negated())
        self.assertEqual(result.route, EnvelopeRoute.closed_form_gamma0)
        self.assertEqual(result.handle.eval(0.5), ExtReal(-0.25))
        self.assertEqual(result.handle.eval(2.0), POS_INF)


class TestUpEnvelope(unittest.TestCase):
    def test_closed_form(self):
        up = envelope_up(FuncHandle(NormPowerShifted(p=2.0, shift=-0.5), 1)).handle
        self.assertEqual(up.eval(0.5), ExtReal(0.0))
        self.assertEqual(up.eval(2.0), ExtReal(1.5))

    def test_clipped_quadratic(self):
        up = envelope_up(FuncHandle(ClippedQuadraticScaling(beta=0.5), 1)).handle
        np.testing.assert_allclose(up.values([0.25, 0.75, 2.0]), [0.0, 0.15625, 1.375])
        self.assertEqual(up.eval(-1.5), POS_INF)

    def test_hull_comes_from_the_family(self):
        # a sampled hull would stop at the first grid row above η = 0
        up = envelope_up(FuncHandle(QuadraticOverLinear(), 2)).handle
        self.assertEqual(up.eval([0.0, 0.0]), ExtReal(0.0))
        self.assertEqual(up.eval([0.0, 1.0]), ExtReal(0.0))
        self.assertEqual(up.eval([2.0, 1.0]), ExtReal(3.0))
        self.assertEqual(up.eval([0.0, -1.0]), POS_INF)


class TestMaxDecomposition(unittest.TestCase):
    def test_shifted_square_is_exact(self):
        f = FuncHandle(NormPowerShifted(p=2.0, shift=0.5), 2)
        rng = np.random.default_rng(11)
        report = max_decomposition_check(f, rng.uniform(-3, 3, size=(200, 2)))
        self.assertEqual(report.route, "analytic")
        self.assertEqual(report.max_gap, 0.0)
        self.assertEqual(len(report.rows), 200)

    def test_requires_positive_value_at_origin(self):
        with self.assertRaises(HypothesisViolated):
            max_decomposition_check(FuncHandle(NormPowerShifted(p=2.0), 1), [[0.5]])

    def test_requires_gamma0(self):
        f = opaque(lambda X: X[:, 0] ** 2 + 1.0, 1, vectorized=True)
        with self.assertRaises(HypothesisViolated):
            max_decomposition_check(f, [[0.5]])


def test_scaling_bounds_hold_for_clipped_quadratic():
    s = FuncHandle(ClippedQuadraticScaling(beta=0.5), 1)
    report = up_envelope_bounds(s, GridSpec.box([-2.0], [4.0], 61))
    assert report.passed
    assert report.cam_nonempty is True
    assert report.nodes_checked > 0


def test_negated_down_envelope_of_clipped_quadratic():
    s = FuncHandle(ClippedQuadraticScaling(beta=0.5), 1)
    bound = envelope_down(s.negated()).handle
    np.testing.assert_allclose(-bound.values([-1.0, 0.0, 2.0]), [0.375, 1.375, 3.375])


@pytest.mark.parametrize("q,expected", [(2.0, False), (1.0, True), (0.5, True)])
def test_neg_down_cam_of_power_scalings(q, expected):
    assert neg_down_cam(FuncHandle(PowerScaling(q=q), 1)) is expected


def square_scaling():
    return opaque(lambda X: X[:, 0] ** 2, 1, vectorized=True, name="y^2")


def root_scaling():
    return opaque(lambda X: np.sqrt(np.maximum(X[:, 0], 0.0)), 1, vectorized=True, name="sqrt")


def test_neg_down_cam_of_sampled_scalings():
    grid = GridSpec.box([-1.0], [3.0], 81)
    assert neg_down_cam(square_scaling()) is None
    assert neg_down_cam(square_scaling(), grid) is False
    assert neg_down_cam(root_scaling(), grid) is True
