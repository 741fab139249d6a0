import io
import unittest

import numpy as np
import pytest

from nlperspective.exceptions import DimensionMismatch, MetadataMismatch, ParameterOutOfRange
from nlperspective.extreal import POS_INF, ExtReal
from nlperspective.families import (
    Affine,
    Berhu,
    BrenierMobility,
    ClippedQuadraticScaling,
    Huber,
    NormPowerShifted,
    PowerScaling,
    RadialIndicator,
    ScalingBelow,
)
from nlperspective.funcs import (
    GAMMA0,
    FuncHandle,
    FuncMeta,
    GridFunction,
    GridSpec,
    Norm,
    Point,
    as_rows,
    conjugate_analytic,
    grid_backed,
    norm_values,
    opaque,
    sample,
)


class TestNorms(unittest.TestCase):
    def test_norm_values(self):
        X = np.array([[3.0, -4.0]])
        self.assertEqual(norm_values(X)[0], 5.0)
        self.assertEqual(norm_values(X, Norm.sup)[0], 4.0)
        self.assertEqual(norm_values(X, Norm.one)[0], 7.0)

    def test_dual_norms(self):
        self.assertEqual(Norm.sup.dual(), Norm.one)
        self.assertEqual(Norm.one.dual(), Norm.sup)
        self.assertEqual(Norm.euclidean.dual(), Norm.euclidean)


class TestPoints(unittest.TestCase):
    def test_point_concat(self):
        z = Point.of(1.0).concat(Point.of(2.0, 3.0))
        self.assertEqual(z.dim, 3)
        self.assertEqual(z.coords, (1.0, 2.0, 3.0))

    def test_point_rejects_high_dimension(self):
        with self.assertRaises(DimensionMismatch):
            Point.of(1.0, 2.0, 3.0, 4.0)

    def test_point_rejects_infinite_coordinates(self):
        with self.assertRaises(ParameterOutOfRange):
            Point.of(np.inf)

    def test_as_rows(self):
        self.assertEqual(as_rows([1.0, 2.0, 3.0], 1).shape, (3, 1))
        self.assertEqual(as_rows([1.0, 2.0], 2).shape, (1, 2))
        with self.assertRaises(DimensionMismatch):
            as_rows([1.0, 2.0, 3.0], 2)


class TestFuncHandle(unittest.TestCase):
    def test_huber_values(self):
        f = FuncHandle(Huber(alpha=1.0, p=2.0), 1)
        self.assertEqual(f.eval(2.0), ExtReal(2.0))
        self.assertEqual(f.eval(0.0), ExtReal(0.5))
        self.assertEqual(f.eval(1.0), ExtReal(1.0))

    def test_scaling_below_zero(self):
        s = FuncHandle(PowerScaling(q=0.5), 1)
        self.assertEqual(s.eval(-1.0), POS_INF)
        self.assertEqual(s.eval(4.0), ExtReal(2.0))
        concave = FuncHandle(PowerScaling(q=0.5, below=ScalingBelow.neg_inf), 1)
        self.assertTrue(concave.eval(-1.0).is_neg_inf)

    def test_conflicting_metadata(self):
        with self.assertRaises(MetadataMismatch):
            FuncHandle(Huber(), 1, meta=FuncMeta(is_convex=False))

    def test_consistent_metadata_is_merged(self):
        f = FuncHandle(Huber(), 1, meta=FuncMeta(is_convex=True))
        self.assertTrue(f.meta.gamma0)

    def test_affine_dimension_must_match_slope(self):
        with self.assertRaises(DimensionMismatch):
            FuncHandle(Affine(w=[1.0, 2.0]), 1)

    def test_eval_rejects_wrong_dimension(self):
        f = FuncHandle(Huber(), 2)
        with self.assertRaises(DimensionMismatch):
            f.eval(1.0)

    def test_negated(self):
        f = FuncHandle(ClippedQuadraticScaling(beta=0.5), 1).negated()
        self.assertEqual(f.eval(0.0), ExtReal(0.125))
        self.assertTrue(f.eval(-2.0).is_neg_inf)
        self.assertTrue(f.meta.is_concave)

    def test_opaque_takes_meta_on_trust(self):
        f = opaque(lambda x: float(x[0] ** 2), 1, meta=GAMMA0)
        self.assertEqual(f.eval(3.0), ExtReal(9.0))
        self.assertTrue(f.meta.gamma0)

    def test_opaque_nan_is_rejected(self):
        from nlperspective.exceptions import IndeterminateForm

        f = opaque(lambda x: float("nan"), 1)
        with self.assertRaises(IndeterminateForm):
            f.eval(0.0)


class TestConjugates(unittest.TestCase):
    def test_shifted_square(self):
        conj = conjugate_analytic(FuncHandle(NormPowerShifted(p=2.0, shift=0.5), 1))
        self.assertEqual(conj.eval(0.0), ExtReal(-0.5))
        self.assertEqual(conj.eval(2.0), ExtReal(1.5))

    def test_huber(self):
        conj = conjugate_analytic(FuncHandle(Huber(), 1))
        self.assertAlmostEqual(float(conj.eval(0.5)), (0.25 - 1.0) / 2.0)
        self.assertEqual(conj.eval(1.0), ExtReal(0.0))
        self.assertEqual(conj.eval(2.0), POS_INF)

    def test_berhu(self):
        conj = conjugate_analytic(FuncHandle(Berhu(), 1))
        self.assertEqual(conj.eval(0.5), ExtReal(0.0))
        self.assertEqual(conj.eval(3.0), ExtReal(4.0))

    def test_affine(self):
        conj = conjugate_analytic(FuncHandle(Affine(w=[2.0], b=3.0), 1))
        self.assertEqual(conj.eval(2.0), ExtReal(-3.0))
        self.assertEqual(conj.eval(1.0), POS_INF)

    def test_radial_indicator_round_trip(self):
        f = FuncHandle(RadialIndicator(a=0.0, b=1.0), 1)
        conj = conjugate_analytic(f)
        np.testing.assert_allclose(conj.values([-2.0, 0.0, 3.0]), [2.0, 0.0, 3.0])

    def test_no_conjugate_for_scalings(self):
        self.assertIsNone(conjugate_analytic(FuncHandle(BrenierMobility(), 1)))


class TestGrids(unittest.TestCase):
    def test_spec_validation(self):
        with self.assertRaises(ParameterOutOfRange):
            GridSpec(lower=[1.0], upper=[0.0], counts=[3])
        with self.assertRaises(ParameterOutOfRange):
            GridSpec(lower=[0.0], upper=[1.0], counts=[1])
        with self.assertRaises(DimensionMismatch):
            GridSpec(lower=[0.0], upper=[1.0, 2.0], counts=[3])

    def test_nodes_and_refinement(self):
        spec = GridSpec.box([0.0, 0.0], [1.0, 2.0], 3)
        self.assertEqual(spec.size, 9)
        np.testing.assert_allclose(spec.nodes()[1], [0.0, 1.0])
        np.testing.assert_allclose(spec.refined().spacing, [0.25, 0.5])

    def test_sample(self):
        f = FuncHandle(NormPowerShifted(p=2.0, mult=2.0), 1)
        g = sample(f, GridSpec.box([-1.0], [1.0], 3))
        np.testing.assert_array_equal(g.values, [1.0, 0.0, 1.0])

    def test_sample_huber(self):
        g = sample(FuncHandle(Huber(), 1), GridSpec.box([-2.0], [2.0], 5))
        np.testing.assert_array_equal(g.values, [2.0, 1.0, 0.5, 1.0, 2.0])

    def test_grid_backed_interpolates(self):
        g = GridFunction(GridSpec.box([0.0], [2.0], 3), np.array([0.0, 2.0, np.inf]))
        f = grid_backed(g)
        self.assertEqual(f.eval(0.5), ExtReal(1.0))
        self.assertEqual(f.eval(1.5), POS_INF)
        self.assertEqual(f.eval(3.0), POS_INF)


def test_grid_function_json_keeps_infinities():
    g = GridFunction(GridSpec.box([0.0], [1.0], 3), np.array([np.inf, 0.5, -np.inf]))
    data = g.to_dict()
    assert data["values"] == ["+inf", "0.5", "-inf"]
    back = GridFunction.from_json(g.to_json())
    np.testing.assert_array_equal(back.values, g.values)


def test_grid_function_csv():
    spec = GridSpec.box([0.0, 0.0], [1.0, 1.0], 2)
    g = GridFunction(spec, np.array([0.0, 1.0, np.inf, 3.0]))
    stream = io.StringIO()
    g.write_csv(stream)
    assert stream.getvalue().splitlines()[0] == "x0,x1,value"
    stream.seek(0)
    back = GridFunction.read_csv(stream)
    assert back.spec.counts == [2, 2]
    np.testing.assert_array_equal(back.values, g.values)


def test_grid_function_size_mismatch():
    with pytest.raises(DimensionMismatch):
        GridFunction(GridSpec.box([0.0], [1.0], 3), np.zeros(4))
