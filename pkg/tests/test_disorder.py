import math

import numpy as np
import pytest
from scipy import integrate

from polymerlab.disorder import (Environment, WeightModel, log_mgf,
                                 log_mgf_prime, relative_entropy,
                                 second_moment_ratio)

UNIFORM = WeightModel("uniform01")
GAUSS = WeightModel("gaussian", (0.25, 1.5))
BERN = WeightModel("bernoulli", (0.3,))
POINT = WeightModel("pointmass", (0.7,))
ALL = [UNIFORM, GAUSS, BERN, POINT]


class TestCumulants:
    def test_uniform_closed_form(self):
        assert log_mgf(UNIFORM, 1.0) == pytest.approx(math.log(math.e - 1),
                                                      abs=1e-14)

    @pytest.mark.parametrize("model", ALL)
    @pytest.mark.parametrize("beta", [-2.0, -0.5, 0.0, 1e-6, 0.3, 1.0, 5.0])
    def test_log_mgf_quadrature_oracle(self, model, beta):
        # independent oracle: numeric integration / direct sums
        if model.family == "uniform01":
            val, _ = integrate.quad(lambda w: math.exp(beta * w), 0, 1)
        elif model.family == "gaussian":
            mu, s = model.params
            val, _ = integrate.quad(
                lambda w: math.exp(beta * w - 0.5 * ((w - mu) / s) ** 2)
                / (s * math.sqrt(2 * math.pi)), -30, 30)
        elif model.family == "bernoulli":
            p = model.params[0]
            val = (1 - p) + p * math.exp(beta)
        else:
            val = math.exp(beta * model.params[0])
        assert log_mgf(model, beta) == pytest.approx(math.log(val),
                                                     rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("model", ALL)
    @pytest.mark.parametrize("beta", [-1.0, 0.0, 1e-5, 0.5, 3.0])
    def test_prime_matches_finite_difference(self, model, beta):
        eps = 1e-6
        fd = (log_mgf(model, beta + eps) - log_mgf(model, beta - eps)) / (
            2 * eps)
        assert log_mgf_prime(model, beta) == pytest.approx(fd, abs=1e-7)

    def test_large_beta_no_overflow(self):
        # Lambda(beta) ~ beta - log beta for uniform weights
        val = log_mgf(UNIFORM, 800.0)
        assert val == pytest.approx(800.0 - math.log(800.0), abs=1e-9)

    @pytest.mark.parametrize("model", ALL)
    def test_relative_entropy_nonnegative_zero_at_zero(self, model):
        assert relative_entropy(model, 0.0) == 0.0
        for beta in (0.2, 1.0, 4.0):
            expect = 0.0 if model.is_degenerate else None
            val = relative_entropy(model, beta)
            assert val >= 0.0
            if expect is not None:
                assert val == pytest.approx(0.0, abs=1e-12)

    def test_second_moment_ratio_gaussian(self):
        g = WeightModel("gaussian", (0.0, 1.0))
        for beta in (0.3, 1.0):
            assert second_moment_ratio(g, beta) == pytest.approx(
                math.exp(beta ** 2), rel=1e-12)

    def test_second_moment_ratio_uniform_at_one(self):
        # M(2)/M(1)^2 = ((e^2-1)/2)/(e-1)^2 = (e+1)/(2(e-1))
        expect = (math.e + 1) / (2 * (math.e - 1))
        assert second_moment_ratio(UNIFORM, 1.0) == pytest.approx(
            expect, rel=1e-12)
        assert expect == pytest.approx(1.0820, abs=5e-5)

    def test_beta_zero_ratio_is_one(self):
        for model in ALL:
            assert second_moment_ratio(model, 0.0) == 1.0


class TestValidation:
    def test_unknown_family(self):
        with pytest.raises(ValueError):
            WeightModel("lognormal")

    def test_param_counts(self):
        with pytest.raises(ValueError):
            WeightModel("uniform01", (1.0,))
        with pytest.raises(ValueError):
            WeightModel("gaussian", (0.0,))

    def test_bernoulli_range(self):
        with pytest.raises(ValueError):
            WeightModel("bernoulli", (1.5,))

    def test_config_round_trip(self):
        for model in ALL:
            assert WeightModel.from_config(model.to_config()) == model

    def test_config_unknown_key(self):
        with pytest.raises(ValueError):
            WeightModel.from_config({"family": "uniform01", "scale": 2})

    def test_seed_validation(self):
        with pytest.raises(ValueError):
            Environment(UNIFORM, -1)
        with pytest.raises(ValueError):
            Environment(UNIFORM, 3, -2)


class TestEnvironment:
    def test_reproducible_and_random_access(self):
        env = Environment(UNIFORM, 99, 4)
        box = env.weight_box(3, [-5, -5], [5, 5])
        assert box.shape == (11, 11)
        # single-site access equals the boxed value at the same site
        assert env.sample_weight(3, [2, -4]) == box[7, 1]
        # rebuilt environment gives identical values
        assert np.array_equal(
            Environment(UNIFORM, 99, 4).weight_box(3, [-5, -5], [5, 5]), box)

    def test_streams_differ_by_sample_and_time(self):
        env = Environment(UNIFORM, 7, 0)
        a = env.weight_box(1, [-20], [20])
        b = env.weight_box(2, [-20], [20])
        c = env.with_sample(1).weight_box(1, [-20], [20])
        assert not np.allclose(a, b)
        assert not np.allclose(a, c)

    def test_uniform_statistics(self):
        env = Environment(UNIFORM, 5, 0)
        w = np.concatenate([env.weight_box(t, [-500], [500])
                            for t in range(1, 21)])
        assert np.all((w > 0) & (w < 1))
        assert w.mean() == pytest.approx(0.5, abs=0.01)
        assert w.var() == pytest.approx(1 / 12, abs=0.005)

    def test_gaussian_transform(self):
        env = Environment(GAUSS, 5, 0)
        w = np.concatenate([env.weight_box(t, [-2000], [2000])
                            for t in range(1, 6)])
        assert w.mean() == pytest.approx(0.25, abs=0.05)
        assert w.std() == pytest.approx(1.5, abs=0.05)

    def test_bernoulli_transform(self):
        env = Environment(BERN, 5, 0)
        w = env.weight_box(1, [-3000], [3000])
        assert set(np.unique(w)) <= {0.0, 1.0}
        assert w.mean() == pytest.approx(0.3, abs=0.03)

    def test_pointmass_transform(self):
        env = Environment(POINT, 5, 0)
        assert np.all(env.weight_box(2, [-4], [4]) == 0.7)

    def test_weights_require_positive_time(self):
        env = Environment(UNIFORM, 5, 0)
        with pytest.raises(ValueError):
            env.weight_box(0, [0], [0])
