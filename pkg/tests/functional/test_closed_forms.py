import numpy as np
import pytest
from fixtures import analytic_pairs, classical_pair, power, shifted_square

from nlperspective.envelopes import berhu, huber
from nlperspective.exceptions import HypothesisViolated
from nlperspective.families import Constant
from nlperspective.funcs import FuncHandle, GridSpec
from nlperspective.perspective import (
    Branch,
    Perspective,
    perspective_report,
    perspective_values,
    preperspective_properness,
    preperspective_values,
)


SAMPLES = 10_000


class TestStarPair:
    @pytest.fixture(scope="class")
    def points(self):
        return np.random.default_rng(11).uniform(-4.0, 4.0, size=(SAMPLES, 2))

    def test_max_of_huber_and_berhu(self, points):
        f = shifted_square(dim=2)
        combined = np.maximum(huber(dim=2).values(points), berhu(dim=2).values(points))
        np.testing.assert_allclose(combined, f.values(points), rtol=1e-15)

    def test_root_scaling_is_the_max_of_two_perspectives(self):
        s = power(0.5)
        rng = np.random.default_rng(12)
        X = rng.uniform(-3.0, 3.0, size=(SAMPLES, 1))
        Y = np.vstack([rng.uniform(-1.0, 3.0, size=(SAMPLES - 10, 1)), np.zeros((10, 1))])
        model = Perspective(shifted_square(), s)
        assert model.branch == Branch.star_pair_max
        expected = np.maximum(Perspective(huber(), s).values(X, Y), Perspective(berhu(), s).values(X, Y))
        np.testing.assert_allclose(model.values(X, Y), expected, rtol=1e-12)

    def test_square_scaling_keeps_the_lower_envelope(self):
        s = power(2.0)
        rng = np.random.default_rng(13)
        X = rng.uniform(-3.0, 3.0, size=(SAMPLES, 1))
        Y = rng.uniform(-1.0, 3.0, size=(SAMPLES, 1))
        model = Perspective(shifted_square(), s)
        assert model.branch == Branch.lower_star_scaled
        np.testing.assert_allclose(model.values(X, Y), Perspective(huber(), s).values(X, Y), rtol=1e-12)


class TestClassicalPerspective:
    def test_grid(self):
        phi, s = classical_pair()
        nodes = GridSpec.box([-2.0, -1.0], [2.0, 2.0], 101).nodes()
        x, y = nodes[:, 0], nodes[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            expected = np.where(y > 0, x * x / (2 * y), np.inf)
        np.testing.assert_allclose(perspective_values(phi, s, nodes[:, :1], nodes[:, 1:]), expected, rtol=1e-12)

    def test_boundary(self):
        phi, s = classical_pair()
        X = np.array([[0.0], [1.0], [-1.0]])
        Y = np.zeros((3, 1))
        np.testing.assert_array_equal(perspective_values(phi, s, X, Y), [0.0, np.inf, np.inf])


class TestDegeneratePair:
    @pytest.fixture(scope="class")
    def pair(self):
        return FuncHandle(Constant(value=-1.0), 1), power(2.0)

    def test_preperspective_is_proper(self, pair):
        assert preperspective_properness(*pair)
        assert preperspective_values(*pair, [[0.0]], [[2.0]])[0] == -4.0

    def test_reported_without_a_closed_form(self, pair):
        report = perspective_report(*pair)
        assert report.degenerate
        assert report.cam_nonempty is False
        assert report.perspective is None
        with pytest.raises(HypothesisViolated):
            Perspective(*pair).values([[0.0]], [[1.0]])


TRIPLES = 3000


def _model(name):
    phi, s, _ = analytic_pairs()[name]
    return Perspective(phi, s)


@pytest.mark.parametrize("name", sorted(analytic_pairs()))
class TestClosedFormProperties:
    def test_dispatch(self, name):
        assert _model(name).branch == analytic_pairs()[name][2]

    def test_midpoint_convexity(self, name):
        f = _model(name).handle()
        rng = np.random.default_rng(21)
        a = np.column_stack([rng.uniform(-3, 3, TRIPLES), rng.uniform(-2, 4, TRIPLES)])
        b = np.column_stack([rng.uniform(-3, 3, TRIPLES), rng.uniform(-2, 4, TRIPLES)])
        fa, fb, fm = f.values(a), f.values(b), f.values((a + b) / 2)
        finite = np.isfinite(fa) & np.isfinite(fb)
        assert finite.sum() > 100
        assert np.isfinite(fm[finite]).all()
        slack = 1e-9 * (1.0 + np.abs(fa[finite]) + np.abs(fb[finite]))
        assert (fm[finite] <= (fa[finite] + fb[finite]) / 2 + slack).all()

    def test_minorant_of_the_preperspective(self, name):
        model = _model(name)
        rng = np.random.default_rng(22)
        X = rng.uniform(-3, 3, size=(3000, 1))
        Y = rng.uniform(-2, 4, size=(3000, 1))
        pre = preperspective_values(model.phi, model.s, X, Y)
        persp = model.values(X, Y)
        finite = np.isfinite(pre)
        assert (persp[finite] <= pre[finite] + 1e-9 * (1.0 + np.abs(pre[finite]))).all()


LADDER = 2.0 ** -np.arange(10, 15)
BOUNDARY_POINTS = 100
BOUNDARY = {
    "convex_huber": -1.0,
    "berhu": -1.0,
    "shifted_root": 0.0,
    "shifted_square": 0.0,
    "concave_mobility": 0.0,
    "classical": 0.0,
}


@pytest.mark.parametrize("name", sorted(BOUNDARY))
def test_lower_semicontinuity_along_the_scaling_axis(name):
    model = _model(name)
    rng = np.random.default_rng(23)
    x = rng.choice([-1.0, 1.0], BOUNDARY_POINTS) * rng.uniform(0.25, 2.0, BOUNDARY_POINTS)
    y0 = np.full((BOUNDARY_POINTS, 1), BOUNDARY[name])
    at_boundary = model.values(x[:, None], y0)
    ladder = np.stack([model.values(x[:, None], y0 + t) for t in LADDER], axis=1)
    for value, steps in zip(at_boundary, ladder):
        if np.isfinite(value):
            assert value <= steps.min() + 0.05 * (1.0 + abs(value))
        else:
            assert (np.diff(steps) >= -1e-12 * np.abs(steps[:-1])).all()
