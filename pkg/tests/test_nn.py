import numpy as np
import pytest

from latentsynth import nn
from latentsynth.errors import InvalidArgument, InvalidState, TrainingDiverged
from latentsynth.rng import SplitMix64


def finite_difference(loss_fn, arrays, h=1e-5):
    """Central-difference gradients of loss_fn with respect to each array.

    loss_fn is re-evaluated from scratch per perturbation, so this oracle is
    independent of the reverse-mode implementation.
    """
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = loss_fn()
            flat[i] = keep - h
            down = loss_fn()
            flat[i] = keep
            gflat[i] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / denom))


class TestDense:
    def test_identity_weights(self):
        x = np.array([[1.0, -2.0], [3.0, 4.0]])
        ps = nn.ParameterSet()
        w = ps.add("w", np.eye(2))
        b = ps.add("b", np.zeros(2))
        out = nn.dense(nn.const(x), nn.param(w), nn.param(b))
        assert np.array_equal(out.value, x)

    def test_bias_only(self):
        ps = nn.ParameterSet()
        w = ps.add("w", np.zeros((3, 2)))
        b = ps.add("b", np.array([1.0, 2.0]))
        out = nn.dense(nn.const(np.ones((4, 3))), nn.param(w), nn.param(b))
        assert np.array_equal(out.value, np.tile([1.0, 2.0], (4, 1)))

    def test_matches_triple_loop_oracle(self):
        rng = SplitMix64(1)
        x = rng.normal((3, 4))
        w = rng.normal((4, 5))
        b = rng.normal((5,))
        ps = nn.ParameterSet()
        out = nn.dense(nn.const(x), nn.param(ps.add("w", w)), nn.param(ps.add("b", b)))
        oracle = np.zeros((3, 5))
        for i in range(3):
            for j in range(5):
                acc = b[j]
                for k in range(4):
                    acc += x[i, k] * w[k, j]
                oracle[i, j] = acc
        assert np.max(np.abs(out.value - oracle)) <= 1e-12

    def test_shape_mismatch(self):
        ps = nn.ParameterSet()
        w = ps.add("w", np.zeros((3, 2)))
        b = ps.add("b", np.zeros(2))
        with pytest.raises(InvalidArgument):
            nn.dense(nn.const(np.zeros((4, 5))), nn.param(w), nn.param(b))


class TestBackward:
    def test_sum_gives_ones(self):
        ps = nn.ParameterSet()
        x = ps.add("x", np.array([[1.0, 2.0], [3.0, 4.0]]))
        loss = nn.reduce_sum(nn.param(x))
        nn.backward(loss)
        assert np.array_equal(x.grad, np.ones((2, 2)))

    def test_half_square_norm_gives_x(self):
        ps = nn.ParameterSet()
        x = ps.add("x", np.array([[1.0, -2.0, 0.5]]))
        loss = nn.scale(nn.reduce_sum(nn.square(nn.param(x))), 0.5)
        nn.backward(loss)
        assert np.array_equal(x.grad, x.value)

    def test_double_backward_is_state_error(self):
        ps = nn.ParameterSet()
        x = ps.add("x", np.ones((2, 2)))
        loss = nn.reduce_sum(nn.param(x))
        nn.backward(loss)
        with pytest.raises(InvalidState):
            nn.backward(loss)

    def test_two_layer_tanh_matches_finite_differences(self):
        rng = SplitMix64(7)
        x = rng.normal((4, 3))
        target = rng.normal((4, 2))
        ps = nn.ParameterSet()
        w1 = ps.add("w1", rng.normal((3, 5)) * 0.5)
        b1 = ps.add("b1", rng.normal((5,)) * 0.1)
        w2 = ps.add("w2", rng.normal((5, 2)) * 0.5)
        b2 = ps.add("b2", rng.normal((2,)) * 0.1)

        def forward():
            h = nn.tanh(nn.dense(nn.const(x), nn.param(w1), nn.param(b1)))
            return nn.mse_loss(nn.dense(h, nn.param(w2), nn.param(b2)), target)

        loss = forward()
        nn.backward(loss)
        numeric = finite_difference(lambda: float(forward().value),
                                    [w1.value, b1.value, w2.value, b2.value])
        for p, num in zip([w1, b1, w2, b2], numeric):
            assert max_rel_error(p.grad, num) <= 1e-6


class TestGradientReversal:
    def test_forward_identity(self):
        x = nn.const(np.array([[1.0, -2.0, 3.0]]))
        for lam in (0.0, 0.5, 3.7):
            assert np.array_equal(nn.gradient_reversal(x, lam).value, x.value)

    def test_upstream_flip(self):
        ps = nn.ParameterSet()
        x = ps.add("x", np.array([[1.0, -1.0]]))
        # loss = sum(grl(x)); upstream grad is ones -> grad at x is -lam
        loss = nn.reduce_sum(nn.gradient_reversal(nn.param(x), 1.0))
        nn.backward(loss)
        assert np.array_equal(x.grad, -np.ones((1, 2)))

    def test_lambda_zero_annihilates(self):
        ps = nn.ParameterSet()
        x = ps.add("x", np.array([[2.0, 5.0]]))
        loss = nn.reduce_sum(nn.gradient_reversal(nn.param(x), 0.0))
        nn.backward(loss)
        assert np.array_equal(x.grad, np.zeros((1, 2)))

    def test_rejects_negative_lambda(self):
        with pytest.raises(InvalidArgument):
            nn.gradient_reversal(nn.const(np.zeros(2)), -1.0)

    @pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 2.0])
    def test_exact_scaled_contract_through_network(self, lam):
        """Gradients through the reversal equal -lam times the identity path.

        lam is a power of two (or zero), so the comparison is bitwise exact:
        the two graphs perform the same floating-point operations up to an
        exact exponent shift.
        """
        rng = SplitMix64(int(lam * 4) + 99)
        x = rng.normal((6, 4))
        target = rng.normal((6, 1))

        def run(use_reversal):
            ps = nn.ParameterSet()
            rng2 = SplitMix64(13)
            w1 = ps.add("w1", rng2.normal((4, 8)) * 0.3)
            b1 = ps.add("b1", np.zeros(8))
            w2 = ps.add("w2", rng2.normal((8, 1)) * 0.3)
            b2 = ps.add("b2", np.zeros(1))
            inp = nn.param(w1)
            h = nn.tanh(nn.dense(nn.const(x), inp, nn.param(b1)))
            z = nn.gradient_reversal(h, lam) if use_reversal else h
            out = nn.dense(z, nn.param(w2), nn.param(b2))
            nn.backward(nn.mse_loss(out, target))
            return w1.grad.copy()

        reversed_grad = run(True)
        identity_grad = run(False)
        assert np.array_equal(reversed_grad, -lam * identity_grad)


class TestAdam:
    def test_zero_gradient_fixed_point(self):
        ps = nn.ParameterSet()
        p = ps.add("p", np.array([1.0, 2.0, 3.0]))
        before = p.value.copy()
        nn.adam_step(ps, lr=0.1)
        assert np.array_equal(p.value, before)

    def test_first_step_is_signed_lr(self):
        # hand evaluation: with constant grad 1, bias correction makes the
        # first update lr * m_hat / (sqrt(v_hat) + eps) = lr / (1 + eps)
        ps = nn.ParameterSet()
        p = ps.add("p", np.array([0.0]))
        p.grad[...] = 1.0
        nn.adam_step(ps, lr=0.1)
        assert abs(p.value[0] + 0.1) < 1e-8
        assert np.array_equal(p.grad, np.zeros(1))  # cleared

    def test_non_finite_gradient_diverges(self):
        ps = nn.ParameterSet()
        p = ps.add("p", np.zeros(2))
        p.grad[...] = np.array([np.inf, 0.0])
        with pytest.raises(TrainingDiverged):
            nn.adam_step(ps, lr=0.1)

    def test_quadratic_bowl_converges(self):
        # oracle descent: loss = ||p - c||^2 must fall below 1% of start
        rng = SplitMix64(4)
        c = rng.normal((1, 6))
        ps = nn.ParameterSet()
        p = ps.add("p", np.zeros((1, 6)))
        start = float(np.sum((p.value - c) ** 2))
        for _ in range(200):
            loss = nn.row_sq_error(nn.param(p), c)
            nn.backward(loss)
            nn.adam_step(ps, lr=0.05)
        final = float(np.sum((p.value - c) ** 2))
        assert final < 0.01 * start


class TestLosses:
    def test_kl_zero_at_prior(self):
        kl = nn.kl_gauss_std(nn.const(np.zeros((2, 3))), nn.const(np.zeros((2, 3))))
        assert float(kl.value) == 0.0

    def test_kl_unit_mean(self):
        kl = nn.kl_gauss_std(nn.const(np.array([[1.0]])), nn.const(np.array([[0.0]])))
        assert abs(float(kl.value) - 0.5) < 1e-15

    def test_kl_matches_formula_oracle(self):
        rng = SplitMix64(9)
        mu = rng.normal((5, 4))
        logvar = rng.normal((5, 4)) * 0.5
        kl = nn.kl_gauss_std(nn.const(mu), nn.const(logvar))
        oracle = 0.5 * np.sum(mu ** 2 + np.exp(logvar) - 1.0 - logvar) / 5
        assert abs(float(kl.value) - oracle) <= 1e-12

    def test_kl_nonnegative_property(self):
        rng = SplitMix64(10)
        for _ in range(100):
            kl = nn.kl_gauss_std(nn.const(rng.normal((3, 4))),
                                 nn.const(rng.normal((3, 4)) * 2))
            assert float(kl.value) >= 0.0

    def test_mse_matches_oracle(self):
        rng = SplitMix64(11)
        a = rng.normal((4, 6))
        b = rng.normal((4, 6))
        got = float(nn.mse_loss(nn.const(a), b).value)
        assert abs(got - np.mean((a - b) ** 2)) <= 1e-12

    def test_mse_shape_mismatch(self):
        with pytest.raises(InvalidArgument):
            nn.mse_loss(nn.const(np.zeros((2, 2))), np.zeros((2, 3)))

    def test_kl_grad_finite_difference(self):
        rng = SplitMix64(12)
        ps = nn.ParameterSet()
        mu = ps.add("mu", rng.normal((3, 2)))
        lv = ps.add("lv", rng.normal((3, 2)) * 0.3)

        def forward():
            return nn.kl_gauss_std(nn.param(mu), nn.param(lv))

        nn.backward(forward())
        numeric = finite_difference(lambda: float(forward().value), [mu.value, lv.value])
        assert max_rel_error(mu.grad, numeric[0]) <= 1e-6
        assert max_rel_error(lv.grad, numeric[1]) <= 1e-6


class TestDeterminism:
    def test_training_is_bit_reproducible(self):
        def run():
            rng = SplitMix64(42)
            ps = nn.ParameterSet()
            w = ps.add("w", nn.glorot_uniform(rng, 4, 3))
            b = ps.add("b", np.zeros(3))
            losses = []
            for _ in range(20):
                x = rng.normal((5, 4))
                t = rng.normal((5, 3))
                loss = nn.mse_loss(nn.dense(nn.const(x), nn.param(w), nn.param(b)), t)
                nn.backward(loss)
                nn.adam_step(ps, lr=1e-2)
                losses.append(float(loss.value))
            return losses, w.value.copy()

        l1, w1 = run()
        l2, w2 = run()
        assert l1 == l2
        assert np.array_equal(w1, w2)


class TestEmbedRows:
    def test_gather_and_scatter(self):
        ps = nn.ParameterSet()
        table = ps.add("t", np.arange(12.0).reshape(4, 3))
        idx = np.array([2, 0, 2])
        rows = nn.embed_rows(nn.param(table), idx)
        assert np.array_equal(rows.value, table.value[idx])
        loss = nn.reduce_sum(rows)
        nn.backward(loss)
        expected = np.zeros((4, 3))
        expected[2] = 2.0  # selected twice
        expected[0] = 1.0
        assert np.array_equal(table.grad, expected)
