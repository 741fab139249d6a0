import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from nlperspective.apps import DensityPath1D, fisher_functional, fisher_report


def gaussian(x):
    return np.exp(-(x**2) / 2) / math.sqrt(2 * math.pi)


class TestGaussianFisherInformation:
    @pytest.fixture(scope="class")
    def reference(self):
        x = np.linspace(-8.0, 8.0, 16 * 1024 + 1)
        return float(trapezoid(x * x * gaussian(x), x))

    @pytest.fixture(scope="class")
    def errors(self, reference):
        out = {}
        for h in (1.0 / 32, 1.0 / 64):
            path = DensityPath1D.from_function(gaussian, -8.0, 8.0, h)
            out[h] = abs(float(fisher_functional(path, 1.0)) - reference)
        return out

    def test_value(self, reference):
        path = DensityPath1D.from_function(gaussian, -8.0, 8.0, 1.0 / 64)
        assert abs(reference - 1.0) < 1e-9
        assert abs(float(fisher_functional(path, 1.0)) - 1.0) < 1e-3

    def test_refinement_ratio(self, errors):
        assert errors[1.0 / 32] / errors[1.0 / 64] >= 3.5

    def test_report(self):
        path = DensityPath1D.from_function(gaussian, -8.0, 8.0, 1.0 / 64)
        report = fisher_report(path, 1.0)
        assert report.refinement_check["coarse_h"] == pytest.approx(1.0 / 32)
        assert report.refinement_check["difference"] < 1e-3
