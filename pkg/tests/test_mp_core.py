import time

import numpy as np
import pytest

from submatrix_mp.errors import ValidationError
from submatrix_mp.model import gen_bicluster, gen_symmetric
from submatrix_mp.mp_core import (
    BeliefDump,
    BiclusterMessageState,
    MessageState,
    mp_step,
    mp_step_bicluster,
    mp_step_bicluster_direct,
    mp_step_direct,
    run_mp,
    run_mp_bicluster,
    threshold_beliefs,
)
from submatrix_mp.polynomials import (
    CONSTANT_ONE,
    HermiteCoeffs,
    build_schedule,
    build_schedule_bicluster,
)


def random_sym(n, seed):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, n))
    return (np.triu(Z) + np.triu(Z, 1).T) / np.sqrt(n)


CUBIC = HermiteCoeffs((0.3, 0.8, -0.2, 0.1))


class TestSymmetricStep:
    def test_first_step_column_sums(self):
        A = random_sym(12, 0)
        st = mp_step(A, MessageState.initial(12), CONSTANT_ONE)
        off = A - np.diag(np.diag(A))
        np.testing.assert_allclose(st.beliefs, off.sum(axis=0), atol=1e-13)
        for i in range(12):
            for j in range(12):
                if i != j:
                    assert abs(st.messages[i, j] - (st.beliefs[i] - A[j, i])) < 1e-13

    def test_constant_matrix(self):
        n, c = 9, 0.37
        st = mp_step(np.full((n, n), c), MessageState.initial(n), CONSTANT_ONE)
        off = ~np.eye(n, dtype=bool)
        np.testing.assert_allclose(st.messages[off], (n - 2) * c)

    def test_oracle_equivalence(self):
        n = 30
        A = random_sym(n, 3)
        st = MessageState.initial(n)
        msgs = np.zeros((n, n))
        for t, f in enumerate([CONSTANT_ONE, CUBIC, CUBIC, CUBIC]):
            st = mp_step(A, st, f)
            msgs, bel = mp_step_direct(A, msgs, f)
            off = ~np.eye(n, dtype=bool)
            np.testing.assert_allclose(st.messages[off], msgs[off], atol=1e-10)
            np.testing.assert_allclose(st.beliefs, bel, atol=1e-10)

    def test_non_backtracking_identity(self):
        n = 25
        A = random_sym(n, 4)
        st = MessageState.initial(n)
        for f in [CONSTANT_ONE, CUBIC, CUBIC]:
            prev = st.messages
            st = mp_step(A, st, f)
            g = np.asarray(CUBIC(prev) if f is CUBIC else np.ones((n, n)))
            for i in range(n):
                for j in range(n):
                    if i != j:
                        assert abs(st.messages[i, j] + A[j, i] * g[j, i] - st.beliefs[i]) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            mp_step(np.zeros((3, 3)), MessageState.initial(4), CONSTANT_ONE)

    def test_plain_callable(self):
        A = random_sym(8, 5)
        a = mp_step(A, MessageState.initial(8), lambda x: np.ones_like(x))
        b = mp_step(A, MessageState.initial(8), CONSTANT_ONE)
        np.testing.assert_array_equal(a.beliefs, b.beliefs)


class TestRunMP:
    def test_horizon_one(self):
        A = random_sym(15, 6)
        sched = build_schedule(2.0, 1, horizon=1)
        off = A - np.diag(np.diag(A))
        np.testing.assert_allclose(run_mp(A, sched), off.sum(axis=0), atol=1e-13)

    def test_noiseless_separates(self):
        inst = gen_symmetric(300, 30, 1.0, seed=1, noiseless=True)
        sched = build_schedule(inst.lam, 1, M=10.0)
        b = run_mp(inst.A, sched)
        on = b[inst.support]
        off = np.delete(b, inst.support)
        assert on.min() > off.max()

    def test_linear_variant_tracks_powers(self):
        n = 1600
        A = gen_symmetric(n, 20, 1.0, seed=1).A.copy()
        np.fill_diagonal(A, 0.0)
        v = np.ones(n)
        for T in (1, 2, 3):
            v = A @ v
            b = run_mp(A, build_schedule(1.5, 1, variant="linear", horizon=T))
            if T == 1:
                np.testing.assert_allclose(b, v, atol=1e-12)
            # A^t 1 also counts backtracking walks, so compare directions
            diff = np.abs(b / np.linalg.norm(b) - v / np.linalg.norm(v)).max()
            assert diff <= 5 / np.sqrt(n)

    def test_history_and_dump(self, tmp_path):
        inst = gen_symmetric(40, 5, 1.0, seed=2)
        sched = build_schedule(1.5, 2, horizon=3)
        dump = BeliefDump(inst.support)
        b, states = run_mp(inst.A, sched, history=True, dump=dump)
        assert [s.t for s in states] == [0, 1, 2, 3]
        np.testing.assert_array_equal(states[-1].beliefs, b)
        assert len(dump.rows) == 3 * 40
        path = tmp_path / "beliefs.csv"
        dump.write(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,index,belief,in_support"
        assert len(lines) == 121
        assert sum(int(l.split(",")[3]) for l in lines[1:]) == 15

    def test_deterministic(self):
        inst = gen_symmetric(200, 20, 1.0, seed=9)
        sched = build_schedule(2.0, 2, horizon=4)
        np.testing.assert_array_equal(run_mp(inst.A, sched), run_mp(inst.A, sched))

    def test_rejects_empty_schedule(self):
        sched = build_schedule(2.0, 2, horizon=1)
        empty = type(sched)(2, "optimal", (), (0.0,), 2.0)
        with pytest.raises(ValidationError):
            run_mp(np.zeros((3, 3)), empty)

    @pytest.mark.slow
    def test_quadratic_scaling(self):
        sched = build_schedule(2.0, 2, horizon=4)
        times = []
        for n in (1000, 2000):
            A = random_sym(n, 0)
            run_mp(A, sched)
            best = min(_timed(run_mp, A, sched) for _ in range(3))
            times.append(best)
        assert 3 <= times[1] / times[0] <= 6


def _timed(fn, *args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


class TestThreshold:
    def test_cases(self):
        assert threshold_beliefs(np.zeros(5), 1.0).size == 0
        b = np.array([0, 2.0, 0, 2.0])
        np.testing.assert_array_equal(threshold_beliefs(b, 2.0), [1, 3])
        np.testing.assert_array_equal(threshold_beliefs(np.array([0.5, 0.49]), 1.0), [0])

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            threshold_beliefs(np.zeros(3), 0.0)


class TestBicluster:
    def test_initial_zero(self):
        st = BiclusterMessageState.initial(4, 6)
        assert st.row_msgs.shape == (4, 6) and st.col_msgs.shape == (6, 4)
        assert not st.col_msgs.any() and not st.row_msgs.any()

    def test_first_step(self):
        rng = np.random.default_rng(0)
        W = rng.standard_normal((7, 9))
        st = mp_step_bicluster(W, BiclusterMessageState.initial(7, 9), CONSTANT_ONE, parity=0)
        col = W.sum(axis=0) / np.sqrt(7)
        np.testing.assert_allclose(st.col_beliefs, col)
        np.testing.assert_allclose(st.col_msgs, col[:, None] - W.T / np.sqrt(7))

    def test_oracle(self):
        rng = np.random.default_rng(1)
        W = rng.standard_normal((20, 25))
        st = BiclusterMessageState.initial(20, 25)
        for t, f in enumerate([CONSTANT_ONE, CUBIC, CUBIC, CUBIC]):
            new, bel = mp_step_bicluster_direct(W, st, f)
            st = mp_step_bicluster(W, st, f, parity=t % 2)
            got = st.col_msgs if t % 2 == 0 else st.row_msgs
            got_b = st.col_beliefs if t % 2 == 0 else st.row_beliefs
            np.testing.assert_allclose(got, new, atol=1e-10)
            np.testing.assert_allclose(got_b, bel, atol=1e-10)

    def test_parity_check(self):
        with pytest.raises(ValidationError):
            mp_step_bicluster(np.zeros((2, 3)), BiclusterMessageState.initial(2, 3),
                              CONSTANT_ONE, parity=1)
        with pytest.raises(ValidationError):
            mp_step_bicluster(np.zeros((3, 3)), BiclusterMessageState.initial(2, 3),
                              CONSTANT_ONE)

    def test_symmetric_degeneration(self):
        n = 30
        A = random_sym(n, 7)
        np.fill_diagonal(A, 0.0)
        W = A * np.sqrt(n)
        fs = [CONSTANT_ONE, CUBIC, CUBIC, CUBIC, CUBIC]
        sym = MessageState.initial(n)
        bic = BiclusterMessageState.initial(n, n)
        for t, f in enumerate(fs):
            sym = mp_step(A, sym, f)
            bic = mp_step_bicluster(W, bic, f)
            got = bic.col_beliefs if t % 2 == 0 else bic.row_beliefs
            np.testing.assert_allclose(got, sym.beliefs, atol=1e-10)

    def test_run_returns_read_times(self):
        inst = gen_bicluster(60, 80, 15, 20, 1.0, seed=3)
        sched = build_schedule_bicluster(inst.lam1, inst.lam2, 1, horizon=2)
        rows, cols, st = run_mp_bicluster(inst.W, sched)
        assert st.row_t == 2 and st.col_t == 3
        assert rows.shape == (60,) and cols.shape == (80,)

    def test_odd_horizon_rejected(self):
        sched = build_schedule_bicluster(2.0, 2.0, 1, horizon=2)
        odd = type(sched)(1, "optimal", sched.coeffs[:2], sched.mu_hat[:3], sched.lam)
        with pytest.raises(ValidationError):
            run_mp_bicluster(np.zeros((3, 3)), odd)
