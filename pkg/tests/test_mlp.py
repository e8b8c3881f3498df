import numpy as np
import numpy.testing as npt
import pytest

import reference
from asem.exceptions import CacheMismatchError, ShapeMismatchError
from asem.mlp import (
    MlpParams,
    load_checkpoint,
    mlp_backward,
    mlp_forward,
    mlp_init,
    save_checkpoint,
)


def random_head(rng, d_in=5, d_hidden=7, d_out=4):
    return MlpParams(
        rng.normal(size=(d_in, d_hidden)),
        rng.normal(size=d_hidden),
        rng.normal(size=(d_hidden, d_out)),
        rng.normal(size=d_out),
    )


class TestForward:
    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            d_in = int(rng.integers(1, 6))
            d_hidden = int(rng.integers(1, 6))
            d_out = int(rng.integers(1, 6))
            p = random_head(rng, d_in, d_hidden, d_out)
            x = rng.normal(size=(int(rng.integers(1, 5)), d_in))
            y, _ = mlp_forward(p, x)
            want = reference.mlp_forward_rows(
                x.tolist(), p.w1.tolist(), p.b1.tolist(), p.w2.tolist(), p.b2.tolist()
            )
            npt.assert_allclose(y, want, rtol=0, atol=1e-12)

    def test_relu_clamps_hidden(self):
        p = MlpParams(np.array([[1.0]]), np.array([0.0]), np.array([[1.0]]), np.array([0.0]))
        y, cache = mlp_forward(p, np.array([[-3.0], [2.0]]))
        npt.assert_array_equal(cache.h, [[0.0], [2.0]])
        npt.assert_array_equal(y, [[0.0], [2.0]])

    def test_input_dim_checked(self):
        p = mlp_init(4, 3, seed=0)
        with pytest.raises(ShapeMismatchError):
            mlp_forward(p, np.zeros((2, 5)))


class TestBackward:
    def test_matches_finite_differences(self):
        # kink avoidance: resample until every pre-activation is away from 0
        rng = np.random.default_rng(43)
        h = 1e-6
        for _ in range(10):
            p = random_head(rng)
            for _ in range(100):
                x = rng.normal(size=(3, p.d_in))
                _, cache = mlp_forward(p, x)
                if np.abs(cache.h_pre).min() > 1e-4:
                    break
            grad_y = rng.normal(size=(3, p.d_out))

            def scalar(params, x_in):
                y, _ = mlp_forward(params, x_in)
                return float((y * grad_y).sum())

            y, cache = mlp_forward(p, x)
            g = mlp_backward(p, cache, grad_y)

            arrays = {"w1": p.w1, "b1": p.b1, "w2": p.w2, "b2": p.b2}
            for name, arr in arrays.items():
                num = np.zeros_like(arr)
                it = np.nditer(arr, flags=["multi_index"])
                while not it.finished:
                    idx = it.multi_index
                    up = {k: v.copy() for k, v in arrays.items()}
                    dn = {k: v.copy() for k, v in arrays.items()}
                    up[name][idx] += h
                    dn[name][idx] -= h
                    num[idx] = (
                        scalar(MlpParams(**up), x) - scalar(MlpParams(**dn), x)
                    ) / (2 * h)
                    it.iternext()
                npt.assert_allclose(getattr(g, name), num, rtol=1e-6, atol=1e-8)

            num_x = np.zeros_like(x)
            for i in range(x.shape[0]):
                for j in range(x.shape[1]):
                    up = x.copy()
                    dn = x.copy()
                    up[i, j] += h
                    dn[i, j] -= h
                    num_x[i, j] = (scalar(p, up) - scalar(p, dn)) / (2 * h)
            npt.assert_allclose(g.x, num_x, rtol=1e-6, atol=1e-8)

    def test_relu_blocks_gradient_on_inactive_units(self):
        p = MlpParams(np.array([[1.0]]), np.array([0.0]), np.array([[1.0]]), np.array([0.0]))
        _, cache = mlp_forward(p, np.array([[-2.0]]))
        g = mlp_backward(p, cache, np.array([[1.0]]))
        npt.assert_array_equal(g.w1, [[0.0]])
        npt.assert_array_equal(g.x, [[0.0]])
        # the output bias is after the ReLU, so it always receives gradient
        npt.assert_array_equal(g.b2, [1.0])

    def test_relu_derivative_is_zero_at_exactly_zero(self):
        p = MlpParams(np.array([[1.0]]), np.array([0.0]), np.array([[1.0]]), np.array([0.0]))
        _, cache = mlp_forward(p, np.array([[0.0]]))
        assert cache.h_pre[0, 0] == 0.0
        g = mlp_backward(p, cache, np.array([[1.0]]))
        npt.assert_array_equal(g.w1, [[0.0]])

    def test_grad_shape_mismatch_raises(self):
        p = mlp_init(4, 3, seed=0)
        _, cache = mlp_forward(p, np.zeros((2, 4)))
        with pytest.raises(CacheMismatchError):
            mlp_backward(p, cache, np.zeros((2, 5)))
        with pytest.raises(CacheMismatchError):
            mlp_backward(p, cache, np.zeros((3, 3)))


class TestInit:
    def test_deterministic_per_seed(self):
        a = mlp_init(8, 4, seed=7)
        b = mlp_init(8, 4, seed=7)
        for x, y in zip(a.as_list(), b.as_list()):
            npt.assert_array_equal(x, y)

    def test_seeds_differ(self):
        a = mlp_init(8, 4, seed=7)
        b = mlp_init(8, 4, seed=8)
        assert not np.array_equal(a.w1, b.w1)

    def test_bounds_and_zero_biases(self):
        p = mlp_init(50, 30, d_hidden=40, seed=1)
        assert np.abs(p.w1).max() <= np.sqrt(6.0 / 50)
        assert np.abs(p.w2).max() <= np.sqrt(6.0 / 40)
        npt.assert_array_equal(p.b1, np.zeros(40))
        npt.assert_array_equal(p.b2, np.zeros(30))

    def test_hidden_defaults_to_output_width(self):
        p = mlp_init(6, 3, seed=0)
        assert p.d_hidden == 3

    def test_sequence_seed_supported(self):
        a = mlp_init(4, 2, seed=[3, 0])
        b = mlp_init(4, 2, seed=[3, 1])
        assert not np.array_equal(a.w1, b.w1)

    def test_bad_dims_rejected(self):
        with pytest.raises(ValueError):
            mlp_init(0, 3)


class TestParamsValidation:
    def test_dim_coherence_enforced(self):
        with pytest.raises(ShapeMismatchError):
            MlpParams(np.zeros((3, 4)), np.zeros(5), np.zeros((4, 2)), np.zeros(2))
        with pytest.raises(ShapeMismatchError):
            MlpParams(np.zeros((3, 4)), np.zeros(4), np.zeros((5, 2)), np.zeros(2))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            MlpParams(np.full((2, 2), np.nan), np.zeros(2), np.zeros((2, 2)), np.zeros(2))


class TestCheckpointIO:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(42)
        heads = [random_head(rng, 5, 7, 4), random_head(rng, 9, 4, 4)]
        path = tmp_path / "model.asem"
        save_checkpoint(path, heads, meta={"seed": 11, "objective": "nt-xent"})
        loaded, meta = load_checkpoint(path)
        assert len(loaded) == 2
        for a, b in zip(heads, loaded):
            for x, y in zip(a.as_list(), b.as_list()):
                npt.assert_array_equal(x, y)
        assert meta["seed"] == 11
        assert meta["objective"] == "nt-xent"
        assert meta["heads"][1]["d_in"] == 9

    def test_sidecar_is_valid_json(self, tmp_path):
        import json

        path = tmp_path / "m.asem"
        save_checkpoint(path, [mlp_init(3, 2, seed=0)])
        with open(str(path) + ".json") as fh:
            meta = json.load(fh)
        assert meta["heads"][0] == {"d_in": 3, "d_hidden": 2, "d_out": 2}

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.asem"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "m.asem"
        save_checkpoint(path, [mlp_init(3, 2, seed=0)])
        with open(path, "ab") as fh:
            fh.write(b"\x00")
        with pytest.raises(ValueError, match="trailing"):
            load_checkpoint(path)

    def test_missing_sidecar_gives_empty_meta(self, tmp_path):
        import os

        path = tmp_path / "m.asem"
        save_checkpoint(path, [mlp_init(3, 2, seed=0)])
        os.unlink(str(path) + ".json")
        _, meta = load_checkpoint(path)
        assert meta == {}

    def test_no_temp_files_left_behind(self, tmp_path):
        path = tmp_path / "m.asem"
        save_checkpoint(path, [mlp_init(3, 2, seed=0)])
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["m.asem", "m.asem.json"]
