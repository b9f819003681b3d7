"""Dense kernel: elementwise ops, softmax, SGD with clipping, the
finite-difference checker, and parameter snapshots."""

import numpy as np
import pytest

from capseq import numerics
from capseq.numerics import (
    NumericError,
    SgdConfig,
    ShapeError,
    clip_gradients,
    global_norm,
    grad_check,
    hadamard,
    load_params,
    matmul,
    save_params,
    sgd_step,
    sigmoid,
    softmax,
    xavier_uniform,
)


class TestElementwiseOps:
    def test_hadamard(self):
        np.testing.assert_array_equal(
            hadamard(np.array([1.0, 2.0]), np.array([3.0, 4.0])), [3.0, 8.0]
        )

    def test_tanh_zero(self):
        np.testing.assert_array_equal(numerics.tanh(np.zeros(4)), np.zeros(4))

    def test_matmul_fixture(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[5.0, 6.0], [7.0, 8.0]])
        np.testing.assert_array_equal(matmul(a, b), [[19.0, 22.0], [43.0, 50.0]])

    def test_shape_mismatch_reports_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2,\).*\(3,\)"):
            hadamard(np.zeros(2), np.zeros(3))
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_sigmoid_extremes_stay_finite(self):
        x = np.array([-1000.0, -10.0, 0.0, 10.0, 1000.0])
        s = sigmoid(x)
        assert np.all(np.isfinite(s))
        assert s[0] == 0.0 and s[-1] == 1.0
        assert s[2] == 0.5


class TestSoftmax:
    def test_uniform_logits(self):
        p = softmax(np.zeros(7))
        np.testing.assert_allclose(p, 1.0 / 7, atol=1e-15)

    def test_closed_form_pair(self):
        p = softmax(np.array([0.0, np.log(3.0)]))
        np.testing.assert_allclose(p, [0.25, 0.75], atol=1e-12)

    def test_shift_invariance_and_sum(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            x = rng.normal(scale=50.0, size=10)
            p1 = softmax(x)
            p2 = softmax(x + 123.456)
            np.testing.assert_allclose(p1, p2, atol=1e-12)
            assert abs(p1.sum() - 1.0) <= 1e-12
            assert np.all(p1 > 0)

    def test_argmax_preserved(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            x = rng.normal(size=8)
            assert np.argmax(softmax(x)) == np.argmax(x)

    def test_extreme_logits_stable(self):
        p = softmax(np.array([1000.0, 0.0, -1000.0]))
        assert np.isfinite(p).all()
        assert p[0] == pytest.approx(1.0)


class TestSgd:
    def test_norm_clip_halves_at_double(self):
        grads = {"w": np.array([6.0, 8.0])}  # norm 10
        clip_gradients(grads, 5.0)
        np.testing.assert_allclose(grads["w"], [3.0, 4.0])
        assert global_norm(grads) == pytest.approx(5.0)

    def test_clip_idempotent(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            grads = {"a": rng.normal(size=7), "b": rng.normal(size=(3, 2))}
            once = {k: v.copy() for k, v in grads.items()}
            clip_gradients(once, 5.0)
            twice = {k: v.copy() for k, v in once.items()}
            clip_gradients(twice, 5.0)
            for k in grads:
                np.testing.assert_array_equal(once[k], twice[k])

    def test_zero_grads_leave_params(self):
        params = {"w": np.array([1.0, -2.0])}
        sgd_step(params, {"w": np.zeros(2)}, SgdConfig())
        np.testing.assert_array_equal(params["w"], [1.0, -2.0])

    def test_scalar_update_arithmetic(self):
        params = {"w": np.array([1.0])}
        sgd_step(params, {"w": np.array([0.5])}, SgdConfig(learning_rate=0.002))
        assert params["w"][0] == pytest.approx(0.999)

    def test_nan_grads_name_the_block(self):
        params = {"good": np.zeros(2), "bad": np.zeros(2)}
        grads = {"good": np.zeros(2), "bad": np.array([np.nan, 0.0])}
        with pytest.raises(NumericError, match="bad"):
            sgd_step(params, grads, SgdConfig())

    def test_value_clip_mode(self):
        grads = {"w": np.array([-9.0, 2.0])}
        clip_gradients(grads, 5.0, mode="value")
        np.testing.assert_array_equal(grads["w"], [-5.0, 2.0])

    def test_config_defaults_and_validation(self):
        cfg = SgdConfig()
        assert cfg.learning_rate == 0.002
        assert cfg.clip_threshold == 5.0
        assert cfg.batch_size == 50
        assert cfg.epochs == 100
        with pytest.raises(ValueError):
            SgdConfig(batch_size=0)


class TestGradCheck:
    def test_quadratic_loss_exact(self):
        params = {"p": np.array([1.0, -2.0, 0.5])}

        def loss():
            return 0.5 * float(np.sum(params["p"] ** 2))

        err = grad_check(loss, params, {"p": params["p"].copy()}, eps=1e-5)
        assert err < 1e-8

    def test_detects_wrong_gradient(self):
        params = {"p": np.array([1.0, -2.0])}

        def loss():
            return 0.5 * float(np.sum(params["p"] ** 2))

        err = grad_check(loss, params, {"p": 2.0 * params["p"]}, eps=1e-5)
        assert err > 0.3

    def test_eps_bounds_enforced(self):
        with pytest.raises(ValueError):
            grad_check(lambda: 0.0, {"p": np.zeros(1)}, {"p": np.zeros(1)}, eps=1.0)


class TestDeterminism:
    def test_same_seed_same_init(self):
        a = xavier_uniform(np.random.default_rng(3), (4, 5))
        b = xavier_uniform(np.random.default_rng(3), (4, 5))
        np.testing.assert_array_equal(a, b)

    def test_xavier_limits(self):
        w = xavier_uniform(np.random.default_rng(0), (100, 50))
        limit = np.sqrt(6.0 / 150)
        assert np.abs(w).max() <= limit


class TestSnapshot:
    def test_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(8)
        params = {
            "emb": rng.normal(size=(7, 3)),
            "w": rng.normal(size=(4, 4)),
            "b": rng.normal(size=4),
        }
        path = tmp_path / "p.bin"
        save_params(path, params)
        loaded = load_params(path)
        assert set(loaded) == set(params)
        for k in params:
            np.testing.assert_array_equal(loaded[k], params[k])

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a snapshot at all")
        with pytest.raises(NumericError):
            load_params(path)
