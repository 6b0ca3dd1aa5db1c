import numpy as np
import pytest

from submatrix_mp.errors import SubcriticalLambda, ValidationError
from submatrix_mp.model import gen_symmetric
from submatrix_mp.polynomials import build_schedule
from submatrix_mp.recovery import (
    FALLBACK_S_STAR,
    AlgorithmParams,
    cleanup_s_star,
    make_schedule,
    recover,
    run_alg1,
)


class TestSchedule:
    def test_default_uses_d_star(self):
        s = make_schedule(0.5, AlgorithmParams())
        assert s.d == 2
        assert s.mu_hat[-1] > AlgorithmParams().threshold_level()

    def test_cap(self):
        s = make_schedule(0.5, AlgorithmParams(max_horizon=4))
        assert s.horizon == 4 and s.d == 2

    def test_subcritical(self):
        with pytest.raises(SubcriticalLambda):
            make_schedule(0.2, AlgorithmParams())
        s = make_schedule(0.2, AlgorithmParams(max_horizon=3))
        assert s.horizon == 3 and s.d == AlgorithmParams().fallback_d

    def test_fixed_horizon(self):
        s = make_schedule(0.2, AlgorithmParams(horizon=5, d=3))
        assert s.horizon == 5 and s.d == 3

    def test_linear(self):
        s = make_schedule(4.0, AlgorithmParams(variant="linear", M=10.0))
        assert s.d == 1 and s.mu_hat[-1] > 10

    def test_s_star_fallback(self):
        assert cleanup_s_star(0.4, AlgorithmParams(eps=9e-4)) == FALLBACK_S_STAR
        assert cleanup_s_star(1.0, AlgorithmParams(s_star=2.5)) == 2.5


class TestAlg1:
    def test_noiseless_exact(self):
        inst = gen_symmetric(300, 30, 1.0, seed=3, noiseless=True)
        res = recover(inst, seed=1)
        np.testing.assert_array_equal(res.estimate, inst.support)
        assert res.errors["cleanup"]["exact"]
        assert set(res.timings) == {"message_passing", "threshold", "cleanup"}

    def test_strong_signal(self):
        inst = gen_symmetric(1000, 60, 1.0, seed=4)
        res = recover(inst, AlgorithmParams(max_horizon=4), seed=1)
        assert res.errors["cleanup"]["fraction"] <= 0.1
        assert len(res.estimate) == 60

    def test_seeded(self):
        inst = gen_symmetric(300, 20, 1.5, seed=5)
        a = recover(inst, AlgorithmParams(max_horizon=3), seed=2)
        b = recover(inst, AlgorithmParams(max_horizon=3), seed=2)
        np.testing.assert_array_equal(a.estimate, b.estimate)

    def test_lambda_override(self):
        # mu^2 K^2 / n lands a hair above 1 here; the nominal value keeps d* = 2
        inst = gen_symmetric(2000, 100, np.sqrt(2000) / 100, seed=0)
        assert inst.lam != 1.0
        res = recover(inst, AlgorithmParams(max_horizon=4), seed=0, lam=1.0)
        assert res.schedule.d == 2

    def test_explicit_schedule(self):
        inst = gen_symmetric(200, 20, 1.5, seed=6)
        sched = build_schedule(inst.lam, 2, horizon=2)
        res = run_alg1(inst.A, 20, 1.5, schedule=sched)
        assert res.t_star == 2

    def test_validation(self):
        with pytest.raises(ValidationError):
            run_alg1(np.zeros((5, 5)), 6, 1.0)
        with pytest.raises(ValidationError):
            run_alg1(np.zeros((5, 5)), 2, 0.0)
