"""Network blocks used across the pipeline: MLPs, a small transformer
encoder, and diagonal-Gaussian heads, all on the minimal autodiff core."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .tensor import Tensor

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0

_ACTIVATIONS = {"relu": T.relu, "tanh": T.tanh}


@dataclass
class NetworkSpec:
    """Sizes for the policy networks; defaults are desk scale."""

    mlp_hidden: tuple[int, ...] = (256, 256, 128)
    attn_layers: int = 2
    attn_heads: int = 2
    attn_width: int = 64
    attn_ff: int = 128
    activation: str = "relu"
    latent_dim: int = 16

    def __post_init__(self):
        sizes = list(self.mlp_hidden) + [self.attn_layers, self.attn_heads,
                                         self.attn_width, self.attn_ff, self.latent_dim]
        if any(s <= 0 for s in sizes):
            raise ValueError("network sizes must be positive")
        if self.attn_width % self.attn_heads != 0:
            raise ValueError("attention width must divide evenly across heads")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class Module:
    """Owns named parameters; supports nesting by attribute name."""

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, val in vars(self).items():
            if isinstance(val, Tensor) and val.requires_grad:
                out[name] = val
            elif isinstance(val, Module):
                for sub, p in val.parameters().items():
                    out[f"{name}.{sub}"] = p
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        for sub, p in item.parameters().items():
                            out[f"{name}.{i}.{sub}"] = p
        return out

    def zero_grad(self):
        for p in self.parameters().values():
            p.zero_grad()


def _param(rng: np.random.Generator, shape, scale: float) -> Tensor:
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)


class Linear(Module):
    def __init__(self, rng: np.random.Generator, in_dim: int, out_dim: int, scale: float | None = None):
        if scale is None:
            scale = np.sqrt(2.0 / in_dim)
        self.w = _param(rng, (in_dim, out_dim), scale)
        self.b = Tensor(np.zeros(out_dim), requires_grad=True)

    def __call__(self, x) -> Tensor:
        return T.add(T.matmul(x, self.w), self.b)


class MLP(Module):
    """Hidden stack only; attach output heads separately."""

    def __init__(self, rng, in_dim: int, hidden: tuple[int, ...], activation: str = "relu"):
        self.layers = []
        self.act = activation
        d = in_dim
        for h in hidden:
            self.layers.append(Linear(rng, d, h))
            d = h
        self.out_dim = d

    def __call__(self, x) -> Tensor:
        act = _ACTIVATIONS[self.act]
        for layer in self.layers:
            x = act(layer(x))
        return x


class LayerNorm(Module):
    def __init__(self, dim: int):
        self.gamma = Tensor(np.ones(dim), requires_grad=True)
        self.beta = Tensor(np.zeros(dim), requires_grad=True)

    def __call__(self, x) -> Tensor:
        return T.layer_norm(x, self.gamma, self.beta)


class MultiHeadSelfAttention(Module):
    def __init__(self, rng, dim: int, heads: int):
        self.heads = heads
        self.dim = dim
        s = 1.0 / np.sqrt(dim)
        self.q = Linear(rng, dim, dim, scale=s)
        self.k = Linear(rng, dim, dim, scale=s)
        self.v = Linear(rng, dim, dim, scale=s)
        self.o = Linear(rng, dim, dim, scale=s)

    def __call__(self, x) -> Tensor:
        # x: (B, T, D) -> split into heads -> attend -> merge
        b, t, d = x.shape
        hd = d // self.heads

        def split(z):
            z = T.reshape(z, (b, t, self.heads, hd))
            return T.transpose(z, (0, 2, 1, 3))

        q, k, v = split(self.q(x)), split(self.k(x)), split(self.v(x))
        out = T.attention(q, k, v)
        out = T.reshape(T.transpose(out, (0, 2, 1, 3)), (b, t, d))
        return self.o(out)


class TransformerLayer(Module):
    """Pre-norm encoder layer: attention then feedforward, both residual."""

    def __init__(self, rng, dim: int, heads: int, ff: int, activation: str = "relu"):
        self.ln1 = LayerNorm(dim)
        self.attn = MultiHeadSelfAttention(rng, dim, heads)
        self.ln2 = LayerNorm(dim)
        self.ff1 = Linear(rng, dim, ff)
        self.ff2 = Linear(rng, ff, dim)
        self.act = activation

    def __call__(self, x) -> Tensor:
        x = T.add(x, self.attn(self.ln1(x)))
        h = _ACTIVATIONS[self.act](self.ff1(self.ln2(x)))
        return T.add(x, self.ff2(h))


class TransformerEncoder(Module):
    """Token projector + learned slot embeddings + encoder stack.

    Tokens arrive pre-assembled as (B, T, token_dim); slot t gets the t-th
    positional embedding, so callers must keep slot meanings fixed.
    """

    def __init__(self, rng, token_dim: int, n_slots: int, spec: NetworkSpec):
        self.proj = Linear(rng, token_dim, spec.attn_width, scale=1.0 / np.sqrt(token_dim))
        self.pos = _param(rng, (n_slots, spec.attn_width), 0.02)
        self.layers = [TransformerLayer(rng, spec.attn_width, spec.attn_heads, spec.attn_ff,
                                        spec.activation) for _ in range(spec.attn_layers)]
        self.ln_out = LayerNorm(spec.attn_width)
        self.n_slots = n_slots
        self.width = spec.attn_width

    def __call__(self, tokens) -> Tensor:
        x = T.add(self.proj(tokens), self.pos)
        for layer in self.layers:
            x = layer(x)
        return self.ln_out(x)


class GaussianHead(Module):
    """Diagonal Gaussian output: mean plus clamped log-std."""

    def __init__(self, rng, in_dim: int, out_dim: int, mean_scale: float = 0.01):
        self.mean = Linear(rng, in_dim, out_dim, scale=mean_scale)
        self.log_std = Linear(rng, in_dim, out_dim, scale=mean_scale)

    def __call__(self, x) -> tuple[Tensor, Tensor]:
        return self.mean(x), T.clip(self.log_std(x), LOG_STD_MIN, LOG_STD_MAX)
