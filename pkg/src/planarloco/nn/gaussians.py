"""Diagonal-Gaussian distribution ops, usable both inside the autodiff
graph (Tensor arguments) and on plain arrays."""
from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor

_LOG_2PI = float(np.log(2.0 * np.pi))


class DiagGaussian:
    """Mean/log-std pair; log_std is expected pre-clamped to [-5, 2]."""

    __slots__ = ("mean", "log_std")

    def __init__(self, mean, log_std):
        self.mean = mean
        self.log_std = log_std
        m = mean.values if isinstance(mean, Tensor) else np.asarray(mean)
        s = log_std.values if isinstance(log_std, Tensor) else np.asarray(log_std)
        if m.shape != s.shape:
            raise ValueError(f"mean/log_std shape mismatch {m.shape} vs {s.shape}")

    @property
    def mean_values(self) -> np.ndarray:
        return self.mean.values if isinstance(self.mean, Tensor) else np.asarray(self.mean)

    @property
    def std_values(self) -> np.ndarray:
        s = self.log_std.values if isinstance(self.log_std, Tensor) else np.asarray(self.log_std)
        return np.exp(s)


def sample(dist: DiagGaussian, eps=None, rng: np.random.Generator | None = None):
    """Reparameterized sample mean + std * eps; eps drawn from rng if absent."""
    if eps is None:
        if rng is None:
            raise ValueError("sample() needs eps or rng")
        eps = rng.standard_normal(dist.mean_values.shape)
    if isinstance(dist.mean, Tensor):
        return T.add(dist.mean, T.mul(T.exp(dist.log_std), T.constant(eps)))
    return dist.mean_values + dist.std_values * eps


def log_prob(dist: DiagGaussian, x) -> np.ndarray | Tensor:
    """Summed log density over the last axis."""
    if isinstance(dist.mean, Tensor) or isinstance(x, Tensor):
        xt = T.as_tensor(x)
        z = T.mul(T.add(xt, T.mul(dist.mean, -1.0)), T.exp(T.mul(dist.log_std, -1.0)))
        per = T.add(T.add(T.mul(T.square(z), -0.5), T.mul(dist.log_std, -1.0)),
                    -0.5 * _LOG_2PI)
        return T.tsum(per, axis=-1)
    std = dist.std_values
    z = (np.asarray(x) - dist.mean_values) / std
    return (-0.5 * z * z - np.log(std) - 0.5 * _LOG_2PI).sum(axis=-1)


def entropy(dist: DiagGaussian):
    """Summed differential entropy over the last axis."""
    if isinstance(dist.log_std, Tensor):
        return T.tsum(T.add(dist.log_std, 0.5 * (1.0 + _LOG_2PI)), axis=-1)
    return (dist.log_std + 0.5 * (1.0 + _LOG_2PI)).sum(axis=-1)


def kl(q: DiagGaussian, p: DiagGaussian):
    """KL(q || p) for diagonal Gaussians, summed over the last axis."""
    if isinstance(q.mean, Tensor) or isinstance(p.mean, Tensor):
        lq, lp = T.as_tensor(q.log_std), T.as_tensor(p.log_std)
        var_ratio = T.exp(T.mul(T.add(lq, T.mul(lp, -1.0)), 2.0))
        dmean = T.add(T.as_tensor(q.mean), T.mul(T.as_tensor(p.mean), -1.0))
        md = T.mul(T.square(dmean), T.exp(T.mul(lp, -2.0)))
        per = T.mul(T.add(T.add(var_ratio, md),
                          T.add(T.mul(T.add(lp, T.mul(lq, -1.0)), 2.0), -1.0)), 0.5)
        return T.tsum(per, axis=-1)
    vq, vp = np.exp(2.0 * np.asarray(q.log_std)), np.exp(2.0 * np.asarray(p.log_std))
    dmean = q.mean_values - p.mean_values
    per = 0.5 * (vq / vp + dmean * dmean / vp + np.log(vp) - np.log(vq) - 1.0)
    return per.sum(axis=-1)


def w2sq(a: DiagGaussian, b: DiagGaussian):
    """Squared 2-Wasserstein distance between diagonal Gaussians:
    ||mu_a - mu_b||^2 + sum_i (sigma_a_i - sigma_b_i)^2."""
    if isinstance(a.mean, Tensor) or isinstance(b.mean, Tensor):
        dm = T.add(T.as_tensor(a.mean), T.mul(T.as_tensor(b.mean), -1.0))
        ds = T.add(T.exp(T.as_tensor(a.log_std)), T.mul(T.exp(T.as_tensor(b.log_std)), -1.0))
        return T.add(T.tsum(T.square(dm), axis=-1), T.tsum(T.square(ds), axis=-1))
    dm = a.mean_values - b.mean_values
    ds = a.std_values - b.std_values
    return (dm * dm).sum(axis=-1) + (ds * ds).sum(axis=-1)
