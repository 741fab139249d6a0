import math
import unittest

import numpy as np
import pytest

from nlperspective.exceptions import IndeterminateForm, ScaleNotPositive
from nlperspective.extreal import (
    NEG_INF,
    POS_INF,
    ExtReal,
    add,
    add_arrays,
    check_no_nan,
    parse,
    render,
    scale,
    scale_array,
)


class TestExtRealArithmetic(unittest.TestCase):
    def test_finite_plus_pos_inf_absorbs(self):
        self.assertEqual(add(ExtReal(2.0), POS_INF), POS_INF)

    def test_finite_sum(self):
        self.assertEqual(ExtReal(1.0) + ExtReal(2.0), ExtReal(3.0))

    def test_opposite_infinities_are_indeterminate(self):
        with self.assertRaises(IndeterminateForm):
            add(POS_INF, NEG_INF)
        with self.assertRaises(IndeterminateForm):
            NEG_INF + POS_INF

    def test_scale_keeps_infinity(self):
        self.assertEqual(scale(0.5, POS_INF), POS_INF)
        self.assertEqual(scale(3.0, NEG_INF), NEG_INF)

    def test_scale_finite(self):
        self.assertEqual(scale(2.0, ExtReal(3.0)), ExtReal(6.0))

    def test_scale_rejects_non_positive_factor(self):
        for c in (0.0, -1.0, math.inf):
            with self.assertRaises(ScaleNotPositive):
                scale(c, ExtReal(3.0))

    def test_nan_is_not_an_extended_real(self):
        with self.assertRaises(IndeterminateForm):
            ExtReal(float("nan"))

    def test_order_and_negation(self):
        self.assertLess(NEG_INF, ExtReal(0.0))
        self.assertLess(ExtReal(0.0), POS_INF)
        self.assertEqual(-POS_INF, NEG_INF)
        self.assertTrue(ExtReal(1.5).is_finite)
        self.assertTrue(POS_INF.is_pos_inf)
        self.assertTrue(NEG_INF.is_neg_inf)

    def test_finite_constructor_rejects_infinity(self):
        with self.assertRaises(IndeterminateForm):
            ExtReal.finite(math.inf)


class TestExtRealText(unittest.TestCase):
    def test_render(self):
        self.assertEqual(render(math.inf), "+inf")
        self.assertEqual(render(-math.inf), "-inf")
        self.assertEqual(render(1.5), "1.5")
        self.assertEqual(str(ExtReal(0.25)), "0.25")

    def test_parse_accepts_unicode_minus(self):
        self.assertEqual(parse("−inf"), NEG_INF)
        self.assertEqual(parse(" +inf "), POS_INF)
        self.assertEqual(parse("2.5"), ExtReal(2.5))

    def test_parse_rejects_garbage(self):
        with self.assertRaises(IndeterminateForm):
            parse("plenty")


def test_add_arrays_rejects_clash():
    with pytest.raises(IndeterminateForm):
        add_arrays(np.array([np.inf, 1.0]), np.array([-np.inf, 1.0]))


def test_add_arrays_keeps_infinities():
    out = add_arrays(np.array([np.inf, 1.0, -np.inf]), np.array([2.0, np.inf, 3.0]))
    assert out[0] == np.inf and out[1] == np.inf and out[2] == -np.inf


def test_scale_array_contract():
    np.testing.assert_array_equal(scale_array(np.array([2.0, 0.5]), np.array([np.inf, 4.0])), [np.inf, 2.0])
    with pytest.raises(ScaleNotPositive):
        scale_array(np.array([0.0]), np.array([1.0]))


def test_check_no_nan():
    with pytest.raises(IndeterminateForm):
        check_no_nan(np.array([0.0, np.nan]))
    assert check_no_nan([1.0, np.inf]).tolist() == [1.0, np.inf]
