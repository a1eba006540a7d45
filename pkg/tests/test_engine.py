import itertools
import math

import numpy as np
import pytest

from polymerlab import kernels as km
from polymerlab.disorder import Environment, WeightModel, log_mgf
from polymerlab.engine import (endpoint_measure, localization_average,
                               make_field, normalized_martingale,
                               run_polymer, step)
from polymerlab.errors import ResourceError

UNIFORM = WeightModel("uniform01")


def brute_force_logz(kernel, beta, env, n):
    """Exhaustive path-sum oracle: log sum over paths of
    exp(beta * H(path)) * prod p(steps)."""
    vals = []
    for path in itertools.product(range(len(kernel.steps)), repeat=n):
        x = np.zeros(kernel.d, dtype=np.int64)
        lw = 0.0
        for t, idx in enumerate(path, start=1):
            x = x + kernel.steps[idx]
            lw += kernel.logp[idx] + beta * env.sample_weight(t, x)
        vals.append(lw)
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals))


class TestOracleEquivalence:
    @pytest.mark.parametrize("mode", ["log", "linear"])
    def test_d1_small(self, mode):
        env = Environment(UNIFORM, 11, 2)
        p = km.simple_walk(1)
        res = run_polymer(p, 0.9, env, 5, force_generic=True, mode=mode)
        expect = brute_force_logz(p, 0.9, env, 5)
        assert res.logz_pl[-1] == pytest.approx(expect, rel=1e-12)

    def test_d2_small(self):
        env = Environment(WeightModel("gaussian", (0.0, 1.0)), 5, 0)
        p = km.simple_walk(2)
        res = run_polymer(p, 0.6, env, 4, force_generic=True)
        expect = brute_force_logz(p, 0.6, env, 4)
        assert res.logz_pl[-1] == pytest.approx(expect, rel=1e-12)

    def test_asymmetric_table_kernel(self):
        env = Environment(UNIFORM, 3, 1)
        p = km.table_kernel([[-1], [0], [2]], [0.3, 0.5, 0.2])
        res = run_polymer(p, 1.2, env, 5, force_generic=True)
        expect = brute_force_logz(p, 1.2, env, 5)
        assert res.logz_pl[-1] == pytest.approx(expect, rel=1e-12)

    def test_tilted_kernel(self):
        env = Environment(UNIFORM, 8, 0)
        q = km.tilt(km.simple_walk(1), 0.7, [0.5])
        res = run_polymer(q, 0.7, env, 5, force_generic=True)
        expect = brute_force_logz(q, 0.7, env, 5)
        assert res.logz_pl[-1] == pytest.approx(expect, rel=1e-12)


class TestModesAndFastPath:
    def test_log_linear_equivalence(self):
        env = Environment(UNIFORM, 21, 0)
        p = km.simple_walk(2)
        a = run_polymer(p, 1.5, env, 10, stats=True, force_generic=True,
                        mode="log")
        b = run_polymer(p, 1.5, env, 10, stats=True, force_generic=True,
                        mode="linear")
        assert np.allclose(a.logz_pl, b.logz_pl, atol=1e-11)
        assert np.allclose(a.J, b.J, atol=1e-12)
        assert np.array_equal(a.A, b.A)
        assert np.allclose(a.mean_vec, b.mean_vec, atol=1e-11)

    @pytest.mark.parametrize("family,params", [
        ("uniform01", ()), ("bernoulli", (0.4,)), ("pointmass", (0.3,))])
    @pytest.mark.parametrize("d", [1, 3])
    def test_fast_path_matches_generic(self, family, params, d):
        model = WeightModel(family, params)
        env = Environment(model, 17, 5)
        p = km.simple_walk(d)
        n = 9
        for beta in (0.0, 0.8):
            fast = run_polymer(p, beta, env, n, stats=True)
            gen = run_polymer(p, beta, env, n, stats=True,
                              force_generic=True, mode="log")
            assert np.allclose(fast.logz_pl, gen.logz_pl, atol=1e-11)
            assert np.allclose(fast.J, gen.J, atol=1e-12)
            if beta > 0 and family == "uniform01":
                # argmax sites must agree whenever the maximum is
                # unique; degenerate weights create exact ties whose
                # resolution is sensitive to summation order
                assert np.array_equal(fast.A, gen.A)
            assert np.allclose(fast.mean_vec, gen.mean_vec, atol=1e-10)
            assert np.allclose(fast.mean_abs, gen.mean_abs, atol=1e-10)
            assert np.allclose(fast.mean_sq, gen.mean_sq, atol=1e-9)
            assert np.allclose(fast.final_mean, gen.final_mean, atol=1e-10)
            assert np.allclose(fast.final_cov, gen.final_cov, atol=1e-9)

    @pytest.mark.parametrize("d", [1, 3])
    def test_fast_path_tilted_and_field(self, d):
        env = Environment(UNIFORM, 4, 0)
        h = np.zeros(d)
        h[0] = 0.6
        q = km.tilt(km.simple_walk(d), 0.9, h)
        fast = run_polymer(q, 0.9, env, 8, keep_field=True)
        gen = run_polymer(q, 0.9, env, 8, keep_field=True,
                          force_generic=True)
        lf, lg = fast.final_field.logz(), gen.final_field.logz()
        mask = np.isfinite(lg)
        assert np.array_equal(mask, np.isfinite(lf))
        assert np.allclose(lf[mask], lg[mask], atol=1e-10)

    def test_fast_path_dispatch_rules(self):
        from polymerlab import _fast
        assert _fast.supported(km.simple_walk(1), UNIFORM)
        assert _fast.supported(km.simple_walk(3), UNIFORM)
        assert not _fast.supported(km.simple_walk(2), UNIFORM)
        assert not _fast.supported(km.simple_walk(1),
                                   WeightModel("gaussian", (0, 1)))
        assert not _fast.supported(
            km.table_kernel([[-1], [0], [1]], [0.25, 0.5, 0.25]), UNIFORM)


class TestGibbsMeasure:
    def test_normalization_and_moments(self):
        env = Environment(UNIFORM, 2, 0)
        p = km.simple_walk(2)
        res = run_polymer(p, 1.0, env, 6, keep_field=True,
                          force_generic=True)
        em = endpoint_measure(res.final_field)
        assert em.mu.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(em.mu >= 0)
        # covariance positive semidefinite
        assert np.all(np.linalg.eigvalsh(em.cov) > -1e-12)
        assert em.mean_sq >= em.mean_abs ** 2 - 1e-12
        assert 0 < em.max_prob <= 1
        assert 0 < em.J <= 1

    def test_beta_zero_reduces_to_walk(self):
        env = Environment(UNIFORM, 2, 0)
        p = km.simple_walk(1)
        n = 12
        res = run_polymer(p, 0.0, env, n, keep_field=True,
                          force_generic=True)
        em = endpoint_measure(res.final_field)
        xs = np.arange(-n, n + 1)
        exact = np.array([math.comb(n, (x + n) // 2) * 0.5 ** n
                          if (x + n) % 2 == 0 else 0.0 for x in xs])
        assert np.allclose(em.mu, exact, atol=1e-14)
        assert res.logz_pl[-1] == pytest.approx(0.0, abs=1e-12)

    def test_argmax_tie_breaks_lexicographically(self):
        # beta = 0, symmetric walk: every step's pre-weight argmax is
        # unique except t=1 where (-1) and (1) tie -> lex-smallest
        env = Environment(WeightModel("pointmass", (0.0,)), 1, 0)
        p = km.simple_walk(1)
        res = run_polymer(p, 1.0, env, 3, force_generic=True)
        assert res.A[0, 0] == -1   # tie at t=1 between -1 and +1
        assert res.A[1, 0] == 0


class TestMartingale:
    def test_pointmass_martingale_is_one(self):
        model = WeightModel("pointmass", (0.4,))
        env = Environment(model, 1, 0)
        p = km.simple_walk(3)
        res = run_polymer(p, 2.0, env, 10)
        w = res.martingale(model, 2.0)
        assert np.allclose(w, 1.0, atol=1e-10)

    def test_field_martingale_value(self):
        env = Environment(UNIFORM, 9, 0)
        p = km.simple_walk(1)
        beta = 0.8
        res = run_polymer(p, beta, env, 7, keep_field=True)
        w = normalized_martingale(res.final_field, UNIFORM)
        assert w == pytest.approx(
            math.exp(res.logz_pl[-1] - 7 * log_mgf(UNIFORM, beta)),
            rel=1e-12)
        assert w > 0


class TestInvariants:
    def test_weight_checksum_common_random_numbers(self):
        env = Environment(UNIFORM, 13, 0)
        p = km.simple_walk(2)
        a = run_polymer(p, 0.5, env, 8, force_generic=True, mode="log")
        b = run_polymer(p, 2.5, env, 8, force_generic=True, mode="linear")
        # same environment, same windows -> identical weight access sums
        assert a.weight_checksum == pytest.approx(b.weight_checksum,
                                                  rel=1e-14)
        assert a.weight_checksum > 0

    def test_memory_budget_rejected(self):
        env = Environment(UNIFORM, 1, 0)
        with pytest.raises(ResourceError):
            run_polymer(km.simple_walk(3), 1.0, env, 64,
                        budget=1024 * 1024)

    def test_localization_average(self):
        assert localization_average([0.2, 0.4, 0.6]) == pytest.approx(0.4)
        with pytest.raises(ValueError):
            localization_average([])

    def test_field_logz_pl_matches_series(self):
        env = Environment(UNIFORM, 6, 1)
        p = km.simple_walk(1)
        res = run_polymer(p, 1.1, env, 9, keep_field=True,
                          force_generic=True)
        assert res.final_field.logz_pl() == pytest.approx(res.logz_pl[-1],
                                                          rel=1e-13)

    def test_stepwise_api(self):
        env = Environment(UNIFORM, 6, 1)
        p = km.simple_walk(2)
        fld = make_field(p, 0.7, env)
        for _ in range(4):
            fld, info = step(fld)
            assert 0 < info.J <= 1
        assert fld.t == 4
        assert np.array_equal(fld.lo, [-4, -4])
        assert np.array_equal(fld.hi, [4, 4])
