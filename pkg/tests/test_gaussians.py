"""Closed-form oracles for the diagonal-Gaussian ops and checkpoint round-trips."""
import numpy as np
import pytest

from planarloco import nn
from planarloco.nn import DiagGaussian
from planarloco.nn.tensor import Tensor


def scipy_style_kl(m1, s1, m2, s2):
    # independent-coordinate KL, summed
    return float(np.sum(np.log(s2 / s1) + (s1**2 + (m1 - m2) ** 2) / (2 * s2**2) - 0.5))


def test_kl_and_w2_zero_on_equal():
    rng = np.random.default_rng(1)
    m = rng.normal(size=6)
    ls = rng.normal(size=6) * 0.3
    p = DiagGaussian(m, ls)
    assert abs(float(nn.kl(p, p))) < 1e-12
    assert abs(float(nn.w2sq(p, p))) < 1e-12


def test_kl_unit_shift_half():
    p = DiagGaussian(np.array([1.0]), np.array([0.0]))
    q = DiagGaussian(np.array([0.0]), np.array([0.0]))
    assert abs(float(nn.kl(p, q)) - 0.5) < 1e-12
    assert abs(float(nn.w2sq(p, q)) - 1.0) < 1e-12


def test_kl_matches_independent_oracle():
    rng = np.random.default_rng(2)
    for _ in range(200):
        d = rng.integers(1, 8)
        m1, m2 = rng.normal(size=d), rng.normal(size=d)
        ls1, ls2 = rng.normal(size=d) * 0.5, rng.normal(size=d) * 0.5
        got = float(nn.kl(DiagGaussian(m1, ls1), DiagGaussian(m2, ls2)))
        want = scipy_style_kl(m1, np.exp(ls1), m2, np.exp(ls2))
        assert abs(got - want) < 1e-10
        assert got >= 0.0


def test_w2sq_closed_form_oracle_1000():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        d = rng.integers(1, 10)
        m1, m2 = rng.normal(size=d), rng.normal(size=d)
        ls1, ls2 = rng.normal(size=d) * 0.4, rng.normal(size=d) * 0.4
        got = float(nn.w2sq(DiagGaussian(m1, ls1), DiagGaussian(m2, ls2)))
        want = float(np.sum((m1 - m2) ** 2) + np.sum((np.exp(ls1) - np.exp(ls2)) ** 2))
        assert abs(got - want) <= 1e-10
        assert got >= 0.0


def test_sample_eps_zero_is_mean_and_deterministic():
    rng = np.random.default_rng(4)
    m = rng.normal(size=5)
    d = DiagGaussian(m, np.zeros(5))
    assert np.allclose(nn.sample(d, eps=np.zeros(5)), m)
    e = rng.standard_normal(5)
    assert np.array_equal(nn.sample(d, eps=e), nn.sample(d, eps=e))


def test_log_prob_matches_normal_density():
    rng = np.random.default_rng(5)
    m, ls = rng.normal(size=3), rng.normal(size=3) * 0.3
    x = rng.normal(size=3)
    got = float(nn.log_prob(DiagGaussian(m, ls), x))
    s = np.exp(ls)
    want = float(np.sum(-0.5 * ((x - m) / s) ** 2 - np.log(s) - 0.5 * np.log(2 * np.pi)))
    assert abs(got - want) < 1e-12


def test_graph_kl_gradients_flow():
    m = Tensor(np.array([0.5, -0.2]), requires_grad=True)
    ls = Tensor(np.array([0.1, 0.0]), requires_grad=True)
    q = DiagGaussian(m, ls)
    p = DiagGaussian(np.zeros(2), np.zeros(2))
    out = nn.kl(q, p)
    out.backward()
    assert m.grad is not None and np.all(np.isfinite(m.grad))
    assert ls.grad is not None and np.all(np.isfinite(ls.grad))


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(6)
    params = {"a.w": rng.normal(size=(4, 3)), "a.b": rng.normal(size=3),
              "z": np.array(2.5)}
    p1 = tmp_path / "one.ckpt"
    p2 = tmp_path / "two.ckpt"
    nn.save_checkpoint(p1, params, counters={"epoch": 7, "adam_t": 123})
    loaded, counters = nn.load_checkpoint(p1)
    assert counters == {"epoch": 7, "adam_t": 123}
    nn.save_checkpoint(p2, loaded, counters=counters)
    assert p1.read_bytes() == p2.read_bytes()
    # loaded values are exactly the float32 cast of the originals
    for k in params:
        assert np.array_equal(loaded[k], np.asarray(params[k], dtype=np.float32).astype(np.float64))


def test_checkpoint_rejects_bad_magic_and_truncation(tmp_path):
    p = tmp_path / "ck.ckpt"
    nn.save_checkpoint(p, {"w": np.ones(4)})
    raw = p.read_bytes()
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(nn.CheckpointError):
        nn.load_checkpoint(bad)
    trunc = tmp_path / "trunc.ckpt"
    trunc.write_bytes(raw[:-4])
    with pytest.raises(Exception):
        nn.load_checkpoint(trunc)
