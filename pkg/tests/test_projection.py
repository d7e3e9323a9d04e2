import numpy as np
import pytest

from refpipe.feature_store import WeightMatrix
from refpipe.projection import (LinearProjector, MlpProjector, linear_project,
                                mlp_project)


def loop_affine(v, w, b):
    """Explicit two-loop matmul oracle."""
    out = np.zeros(w.shape[1])
    for j in range(w.shape[1]):
        for i in range(w.shape[0]):
            out[j] += v[i] * w[i, j]
        if b is not None:
            out[j] += b[j]
    return out


class TestLinearProject:
    def test_zero_weights(self):
        w = WeightMatrix(np.zeros((3, 4)))
        assert np.all(linear_project(np.ones(3), w) == 0.0)

    def test_identity(self):
        w = WeightMatrix(np.eye(3))
        v = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(linear_project(v, w), v)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(5)
        w = WeightMatrix(rng.normal(size=(4, 6)), bias=rng.normal(size=6))
        v = rng.normal(size=4)
        np.testing.assert_allclose(linear_project(v, w),
                                   loop_affine(v, w.weights, w.bias), atol=1e-6)

    def test_dim_mismatch(self):
        w = WeightMatrix(np.zeros((3, 4)))
        with pytest.raises(ValueError):
            linear_project(np.ones(5), w)


class TestMlpProject:
    def test_zero_weights_give_zero(self):
        w1 = WeightMatrix(np.zeros((3, 4)), bias=np.zeros(4))
        w2 = WeightMatrix(np.zeros((4, 2)), bias=np.zeros(2))
        assert np.all(mlp_project(np.ones(3), w1, w2) == 0.0)

    def test_toy_linear_activation(self):
        # hand-computed: v=(1,2), w1=[[1,0],[0,1]], b1=(1,1) -> h=(2,3)
        # w2=[[2,0],[0,2]], b2=(0,1) -> y=(4,7)
        w1 = WeightMatrix(np.eye(2), bias=np.ones(2))
        w2 = WeightMatrix(2 * np.eye(2), bias=np.array([0.0, 1.0]))
        out = mlp_project(np.array([1.0, 2.0]), w1, w2, activation="linear")
        np.testing.assert_allclose(out, [4.0, 7.0])

    def test_matches_loop_oracle_with_gelu(self):
        rng = np.random.default_rng(9)
        w1 = WeightMatrix(rng.normal(size=(3, 5)), bias=rng.normal(size=5))
        w2 = WeightMatrix(rng.normal(size=(5, 4)), bias=rng.normal(size=4))
        v = rng.normal(size=3)
        h = loop_affine(v, w1.weights.astype(np.float64), w1.bias.astype(np.float64))
        from scipy.special import erf
        h = 0.5 * h * (1 + erf(h / np.sqrt(2)))
        want = loop_affine(h, w2.weights.astype(np.float64), w2.bias.astype(np.float64))
        np.testing.assert_allclose(mlp_project(v, w1, w2, "gelu"), want, atol=1e-5)

    def test_unknown_activation(self):
        w = WeightMatrix(np.eye(2))
        with pytest.raises(ValueError):
            mlp_project(np.ones(2), w, w, activation="swishish")


def test_affine_property_linear_activation():
    rng = np.random.default_rng(2)
    w1 = WeightMatrix(rng.normal(size=(3, 4)), bias=rng.normal(size=4))
    w2 = WeightMatrix(rng.normal(size=(4, 4)), bias=rng.normal(size=4))
    x = rng.normal(size=3)
    y = rng.normal(size=3)
    f = lambda v: mlp_project(v, w1, w2, "linear").astype(np.float64)
    residual = f(x + y) - f(x) - f(y) + f(np.zeros(3))
    np.testing.assert_allclose(residual, 0.0, atol=1e-5)


def test_weights_load_from_artf_files(tmp_path):
    from refpipe.feature_store import read_weight_matrix, write_tensor
    rng = np.random.default_rng(4)
    w = rng.normal(size=(3, 5)).astype(np.float32)
    b = rng.normal(size=5).astype(np.float32)
    write_tensor(w, tmp_path / "w.artf")
    write_tensor(b, tmp_path / "b.artf")
    wm = read_weight_matrix(tmp_path / "w.artf", bias_path=tmp_path / "b.artf")
    v = rng.normal(size=3)
    np.testing.assert_allclose(linear_project(v, wm), loop_affine(v, w, b),
                               atol=1e-6)


def test_estimator_wrappers():
    rng = np.random.default_rng(1)
    w = WeightMatrix(rng.normal(size=(3, 2)))
    proj = LinearProjector(w)
    out = proj.transform(rng.normal(size=(5, 3)))
    assert out.shape == (5, 2)
    assert "weights" in proj.get_params()

    mlp = MlpProjector(w1=WeightMatrix(np.eye(3)), w2=w, activation="relu")
    assert mlp.transform(np.ones(3)).shape == (2,)
    with pytest.raises(ValueError):
        MlpProjector().fit()
