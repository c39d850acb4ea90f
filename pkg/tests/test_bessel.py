import math

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from ghlab.bessel import EULER_GAMMA, NonpositiveArgument, k0, k0_mp


def k0_integral_oracle(x):
    """Independent oracle: K0(x) = int_0^inf exp(-x cosh t) dt."""
    tmax = math.acosh(745.0 / x) if x < 745.0 else 1.0
    val, err = quad(lambda t: math.exp(-x * math.cosh(t)), 0.0, tmax,
                    epsabs=1e-16, epsrel=1e-13, limit=400)
    return val, err


class TestAgainstIntegralOracle:
    def test_reference_value_at_1(self):
        oracle, _ = k0_integral_oracle(1.0)
        assert abs(oracle - 0.4210244382) < 1e-9
        assert abs(k0(1.0) - 0.4210244382) < 1e-9

    def test_max_relative_error_on_working_range(self):
        xs = np.geomspace(0.05, 30.0, 90)
        worst = 0.0
        for x in xs:
            oracle, err = k0_integral_oracle(float(x))
            rel = abs(k0(float(x)) - oracle) / oracle
            worst = max(worst, rel - err / oracle)
        assert worst < 1e-10

    def test_extended_precision_path(self):
        for x in (0.3, 2.0, 7.5, 20.0, 33.0):
            oracle, _ = k0_integral_oracle(x)
            assert abs(float(k0_mp(x)) - oracle) / oracle < 1e-11


class TestBranches:
    def test_cross_branch_agreement(self):
        # series vs Chebyshev at the low switch, Chebyshev vs asymptotic high
        for x in (3.999999, 4.000001, 4.0):
            ref = float(k0_mp(x))
            assert abs(k0(x) - ref) / ref < 1e-11
        for x in (31.999, 32.001, 32.0):
            ref = float(k0_mp(x))
            assert abs(k0(x) - ref) / ref < 1e-11

    def test_asymptotic_ratio_band(self):
        ratio = k0(10.0) / (math.sqrt(math.pi / 20.0) * math.exp(-10.0))
        assert 0.9 <= ratio <= 1.0

    def test_small_argument_log_limit(self):
        # K0(x) = -log(x/2) - gamma + O(x^2 log x); the limit of
        # |K0(x) + log(x/2)| is the Euler constant
        x = 1e-4
        assert abs(abs(k0(x) + math.log(x / 2.0)) - EULER_GAMMA) < 1e-6

    def test_vectorized(self):
        xs = np.array([0.1, 1.0, 5.0, 40.0])
        vals = k0(xs)
        assert vals.shape == xs.shape
        assert np.all(np.diff(vals) < 0)

    def test_rejects_nonpositive(self):
        with pytest.raises(NonpositiveArgument):
            k0(0.0)
        with pytest.raises(NonpositiveArgument):
            k0(-1.0)
        with pytest.raises(NonpositiveArgument):
            k0_mp(-2.0)


class TestShapeProperties:
    def test_positive_decreasing_logconvex(self):
        xs = np.linspace(0.05, 25.0, 400)
        vals = k0(xs)
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) < 0)
        logs = np.log(vals)
        second = logs[2:] - 2 * logs[1:-1] + logs[:-2]
        assert np.all(second >= -1e-9)

    def test_mp_matches_mpmath_library(self):
        # cross-check the in-house extended-precision path against an
        # independent high-precision implementation
        for x in (0.05, 1.0, 10.0, 30.0):
            with mp.workdps(50):
                ref = mp.besselk(0, mp.mpf(x))
            assert abs(float(k0_mp(x) - ref)) / float(ref) < 1e-14
