"""Gradient checks for the autodiff core against central finite differences."""
import numpy as np
import pytest

from planarloco import nn
from planarloco.nn import tensor as T
from planarloco.nn.tensor import Tensor


def finite_diff_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of one array."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def check_op(build, x0: np.ndarray, tol: float = 1e-4):
    """build(tensor) -> scalar Tensor; compares autodiff grad to FD."""
    xt = Tensor(x0.copy(), requires_grad=True)
    out = build(xt)
    out.backward()
    analytic = xt.grad.copy()

    def f(arr):
        return float(build(Tensor(arr)).values)

    numeric = finite_diff_grad(f, x0.copy())
    denom = np.maximum(np.abs(numeric), 1e-6)
    rel = np.abs(analytic - numeric) / denom
    assert rel.max() < tol, f"max rel grad error {rel.max():.2e}"


RNG = np.random.default_rng(0)


@pytest.mark.parametrize("op", ["tanh", "relu", "sigmoid", "exp", "square", "softmax"])
def test_elementwise_grads(op):
    x0 = RNG.normal(size=(4, 5)) * 0.7
    fn = {"tanh": T.tanh, "relu": T.relu, "sigmoid": T.sigmoid,
          "exp": T.exp, "square": T.square,
          "softmax": lambda t: T.softmax(t, axis=-1)}[op]
    w = RNG.normal(size=(4, 5))
    check_op(lambda t: T.tsum(T.mul(fn(t), T.constant(w))), x0)


def test_matmul_grad_both_sides():
    a0 = RNG.normal(size=(3, 4))
    b0 = RNG.normal(size=(4, 2))
    w = RNG.normal(size=(3, 2))
    check_op(lambda t: T.tsum(T.mul(T.matmul(t, T.constant(b0)), T.constant(w))), a0)
    check_op(lambda t: T.tsum(T.mul(T.matmul(T.constant(a0), t), T.constant(w))), b0)


def test_stacked_matmul_grad():
    a0 = RNG.normal(size=(2, 3, 5, 4))
    b0 = RNG.normal(size=(2, 3, 4, 5))
    w = RNG.normal(size=(2, 3, 5, 5))
    check_op(lambda t: T.tsum(T.mul(T.matmul(t, T.constant(b0)), T.constant(w))), a0)


def test_layer_norm_grads():
    x0 = RNG.normal(size=(6, 8))
    g0 = RNG.normal(size=8) + 1.0
    b0 = RNG.normal(size=8)
    w = RNG.normal(size=(6, 8))
    check_op(lambda t: T.tsum(T.mul(T.layer_norm(t, T.constant(g0), T.constant(b0)),
                                    T.constant(w))), x0)
    check_op(lambda t: T.tsum(T.mul(T.layer_norm(T.constant(x0), t, T.constant(b0)),
                                    T.constant(w))), g0.copy())
    check_op(lambda t: T.tsum(T.mul(T.layer_norm(T.constant(x0), T.constant(g0), t),
                                    T.constant(w))), b0.copy())


def test_identity_gradient_is_one():
    x = Tensor(np.array([3.0]), requires_grad=True)
    y = T.tsum(x)
    y.backward()
    assert x.grad[0] == 1.0


def test_fanout_accumulates():
    x = Tensor(np.array([2.0]), requires_grad=True)
    y = T.add(T.mul(x, 3.0), T.square(x))  # 3x + x^2 -> dy/dx = 3 + 2x = 7
    T.tsum(y).backward()
    assert np.allclose(x.grad, 7.0)


def test_minimum_concat_clip_grads():
    x0 = RNG.normal(size=(5,))
    y0 = RNG.normal(size=(5,))
    w = RNG.normal(size=(10,))
    check_op(lambda t: T.tsum(T.mul(T.concat([T.minimum(t, T.constant(y0)), T.square(t)],
                                             axis=0), T.constant(w))), x0)
    # clip passes gradient only strictly inside the band
    x = Tensor(np.array([-6.0, 0.5, 3.0]), requires_grad=True)
    T.tsum(T.clip(x, -5.0, 2.0)).backward()
    assert np.allclose(x.grad, [0.0, 1.0, 0.0])


def test_mlp_gradcheck_random_3_layer():
    rng = np.random.default_rng(7)
    mlp = nn.MLP(rng, 6, (8, 8, 4), activation="tanh")
    head = nn.Linear(rng, 4, 1)
    x0 = rng.normal(size=(3, 6))

    def loss_from_param(p: Tensor, pname: str):
        out = head(mlp(Tensor(x0)))
        return T.tsum(out)

    params = {**{f"mlp.{k}": v for k, v in mlp.parameters().items()},
              **{f"head.{k}": v for k, v in head.parameters().items()}}
    for name, p in params.items():
        orig = p.values.copy()

        def f(arr):
            p.values[...] = arr
            val = float(T.tsum(head(mlp(Tensor(x0)))).values)
            p.values[...] = orig
            return val

        for q in params.values():
            q.zero_grad()
        T.tsum(head(mlp(Tensor(x0)))).backward()
        numeric = finite_diff_grad(f, orig.copy())
        denom = np.maximum(np.abs(numeric), 1e-6)
        assert (np.abs(p.grad - numeric) / denom).max() < 1e-4, name


def test_attention_singleton_sequence_identity():
    # length-1 sequence: softmax over a singleton is 1, output equals value row
    q = Tensor(RNG.normal(size=(1, 1, 1, 4)))
    k = Tensor(RNG.normal(size=(1, 1, 1, 4)))
    v = Tensor(RNG.normal(size=(1, 1, 1, 4)))
    out = T.attention(q, k, v)
    assert np.allclose(out.values, v.values)


def test_attention_gradcheck():
    x0 = RNG.normal(size=(2, 3, 4))
    w = RNG.normal(size=(2, 3, 4))

    def build(t):
        return T.tsum(T.mul(T.attention(t, T.mul(t, 0.5), T.square(t)), T.constant(w)))

    check_op(build, x0)


def test_adam_zero_grad_no_change():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    opt = nn.Adam({"p": p}, lr=0.1)
    p.grad = np.zeros(2)
    before = p.values.copy()
    opt.step()
    assert np.array_equal(p.values, before)


def test_adam_first_step_sign_scaled():
    # bias-corrected m/sqrt(v) on step one is g/|g| up to eps
    p = Tensor(np.array([0.0, 0.0]), requires_grad=True)
    opt = nn.Adam({"p": p}, lr=1e-3, eps=1e-12)
    p.grad = np.array([0.3, -7.0])
    opt.step()
    assert np.allclose(p.values, [-1e-3, 1e-3], atol=1e-9)


def test_clip_grad_norm():
    p = Tensor(np.zeros(3), requires_grad=True)
    p.grad = np.array([3.0, 0.0, 4.0])  # norm 5
    norm = nn.clip_grad_norm({"p": p}, 1.0)
    assert abs(norm - 5.0) < 1e-12
    assert abs(np.linalg.norm(p.grad) - 1.0) < 1e-12


def test_shape_mismatch_raises_at_build():
    a = Tensor(np.zeros((2, 3)))
    b = Tensor(np.zeros((4, 2)))
    with pytest.raises(T.ShapeError):
        T.matmul(a, b)
    with pytest.raises(T.ShapeError):
        T.add(a, Tensor(np.zeros((2, 4))))
