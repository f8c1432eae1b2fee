"""QKAN layers and networks.

A layer holds one activation edge per (output node, input node) pair,
with all edge parameters stacked into arrays of leading shape
(n_out, n_in) so forward/backward vectorize over batch and edges. Node
values are sums of incoming edge activations. A network optionally
wraps the stack with linear encoder/decoder layers (HQKAN).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import daruan
from .daruan import DaruanParams, silu, silu_grad


def _as_batch(x, dim: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
        squeeze = True
    elif x.ndim == 2:
        squeeze = False
    else:
        raise ValueError(f"{what} must be a vector or (batch, dim) matrix")
    if x.shape[1] != dim:
        raise ValueError(f"{what} has dimension {x.shape[1]}, expected {dim}")
    return x, squeeze


@dataclass
class QkanLayer:
    """n_out x n_in grid of activation edges sharing one repetition count."""

    enc_w: np.ndarray    # (n_out, n_in, r)
    enc_b: np.ndarray    # (n_out, n_in, r)
    angles: np.ndarray   # (n_out, n_in, r+1, 3)
    w_base: np.ndarray   # (n_out, n_in)
    w_quant: np.ndarray  # (n_out, n_in)
    out_bias: np.ndarray # (n_out, n_in)

    @property
    def n_out(self) -> int:
        return self.enc_w.shape[0]

    @property
    def n_in(self) -> int:
        return self.enc_w.shape[1]

    @property
    def r(self) -> int:
        return self.enc_w.shape[2]

    @classmethod
    def init(cls, n_in: int, n_out: int, r: int, rng: np.random.Generator,
             angle_scale: float = 0.1, geometric: bool = True) -> "QkanLayer":
        if n_in < 1 or n_out < 1 or r < 1:
            raise ValueError("n_in, n_out and r must be >= 1")
        if geometric:
            enc_w = np.broadcast_to(2.0 ** np.arange(r),
                                    (n_out, n_in, r)).copy()
        else:
            enc_w = np.ones((n_out, n_in, r))
        return cls(
            enc_w=enc_w,
            enc_b=np.zeros((n_out, n_in, r)),
            angles=rng.uniform(-angle_scale, angle_scale,
                               size=(n_out, n_in, r + 1, 3)),
            w_base=np.ones((n_out, n_in)),
            w_quant=np.ones((n_out, n_in)),
            out_bias=np.zeros((n_out, n_in)),
        )

    def get_edge(self, j: int, i: int) -> DaruanParams:
        return DaruanParams(
            enc_w=self.enc_w[j, i].copy(),
            enc_b=self.enc_b[j, i].copy(),
            angles=self.angles[j, i].copy(),
            w_base=float(self.w_base[j, i]),
            w_quant=float(self.w_quant[j, i]),
            out_bias=float(self.out_bias[j, i]),
        )

    def set_edge(self, j: int, i: int, p: DaruanParams) -> None:
        if p.r != self.r:
            raise ValueError("edge repetition count must match the layer")
        self.enc_w[j, i] = p.enc_w
        self.enc_b[j, i] = p.enc_b
        self.angles[j, i] = p.angles
        self.w_base[j, i] = p.w_base
        self.w_quant[j, i] = p.w_quant
        self.out_bias[j, i] = p.out_bias

    def forward(self, x) -> np.ndarray:
        """y_j = sum_i phi_{j,i}(x_i); x (B, n_in) -> (B, n_out)."""
        x, squeeze = _as_batch(x, self.n_in, "layer input")
        f = daruan.circuit_expectation(self.enc_w, self.enc_b, self.angles, x)
        phi = (self.w_base[None] * silu(x)[:, None, :]
               + self.w_quant[None] * f
               + self.out_bias[None])
        y = phi.sum(axis=2)
        return y[0] if squeeze else y

    def backward(self, x: np.ndarray, upstream: np.ndarray):
        """Gradients of sum_b upstream[b] . forward(x[b]).

        Returns (grads: LayerGrads, d_x: (B, n_in)).
        """
        f, g_enc, g_ang = daruan.circuit_gradients(
            self.enc_w, self.enc_b, self.angles, x)
        up = upstream[:, :, None]                      # (B, n_out, 1)
        upq = up * self.w_quant[None]                  # (B, n_out, n_in)
        grads = LayerGrads(
            enc_w=np.einsum("bnm,bnmr,bm->nmr", upq, g_enc, x),
            enc_b=np.einsum("bnm,bnmr->nmr", upq, g_enc),
            angles=np.einsum("bnm,bnmrk->nmrk", upq, g_ang),
            w_base=np.einsum("bnm,bm->nm", up * np.ones_like(f), silu(x)),
            w_quant=(up * f).sum(axis=0),
            out_bias=(up * np.ones_like(f)).sum(axis=0),
        )
        d_quant = np.einsum("bnm,nmr,bnmr->bm", upq, self.enc_w, g_enc)
        d_base = np.einsum("bnm,nm->bm", up * np.ones_like(f), self.w_base) \
            * silu_grad(x)
        return grads, d_quant + d_base

    def extend(self, new_r: int) -> None:
        """In-place layer extension with identity-initialized blocks."""
        if new_r <= self.r:
            raise ValueError(f"new_r must exceed current r={self.r}")
        extra = new_r - self.r
        n, m = self.n_out, self.n_in
        self.enc_w = np.concatenate([self.enc_w, np.zeros((n, m, extra))], axis=2)
        self.enc_b = np.concatenate([self.enc_b, np.zeros((n, m, extra))], axis=2)
        self.angles = np.concatenate(
            [self.angles, np.zeros((n, m, extra, 3))], axis=2)

    def param_count(self) -> int:
        return self.n_out * self.n_in * (5 * self.r + 6)

    def copy(self) -> "QkanLayer":
        return QkanLayer(self.enc_w.copy(), self.enc_b.copy(),
                         self.angles.copy(), self.w_base.copy(),
                         self.w_quant.copy(), self.out_bias.copy())


@dataclass
class LayerGrads:
    enc_w: np.ndarray
    enc_b: np.ndarray
    angles: np.ndarray
    w_base: np.ndarray
    w_quant: np.ndarray
    out_bias: np.ndarray


@dataclass
class LinearLayer:
    """Plain affine map y = W x + b."""

    weight: np.ndarray   # (n_out, n_in)
    bias: np.ndarray     # (n_out,)

    @property
    def n_in(self) -> int:
        return self.weight.shape[1]

    @property
    def n_out(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def init(cls, n_in: int, n_out: int, rng: np.random.Generator) -> "LinearLayer":
        bound = 1.0 / np.sqrt(n_in)
        return cls(weight=rng.uniform(-bound, bound, size=(n_out, n_in)),
                   bias=np.zeros(n_out))

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weight.T + self.bias

    def backward(self, x: np.ndarray, upstream: np.ndarray):
        d_w = upstream.T @ x
        d_b = upstream.sum(axis=0)
        d_x = upstream @ self.weight
        return (d_w, d_b), d_x

    def param_count(self) -> int:
        return self.weight.size + self.bias.size

    def copy(self) -> "LinearLayer":
        return LinearLayer(self.weight.copy(), self.bias.copy())


@dataclass
class NetworkGrads:
    layers: list
    encoder: tuple | None
    decoder: tuple | None
    d_input: np.ndarray


@dataclass
class QkanNetwork:
    """Composition of QKAN layers with optional linear encoder/decoder."""

    layers: list
    encoder: LinearLayer | None = None
    decoder: LinearLayer | None = None

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.n_out != b.n_in:
                raise ValueError("adjacent layer dimensions are inconsistent")
        if self.encoder is not None and self.layers \
                and self.encoder.n_out != self.layers[0].n_in:
            raise ValueError("encoder output must match the first layer input")
        if self.decoder is not None and self.layers \
                and self.decoder.n_in != self.layers[-1].n_out:
            raise ValueError("decoder input must match the last layer output")

    @property
    def shape(self) -> list[int]:
        return [self.layers[0].n_in] + [lay.n_out for lay in self.layers]

    @property
    def in_dim(self) -> int:
        return self.encoder.n_in if self.encoder else self.layers[0].n_in

    @property
    def out_dim(self) -> int:
        return self.decoder.n_out if self.decoder else self.layers[-1].n_out

    @classmethod
    def init(cls, shape: list[int], r: int, rng: np.random.Generator,
             angle_scale: float = 0.1, geometric: bool = True) -> "QkanNetwork":
        if len(shape) < 2:
            raise ValueError("shape needs at least input and output widths")
        layers = [QkanLayer.init(shape[i], shape[i + 1], r, rng,
                                 angle_scale, geometric)
                  for i in range(len(shape) - 1)]
        return cls(layers=layers)

    def forward(self, x) -> np.ndarray:
        x, squeeze = _as_batch(x, self.in_dim, "network input")
        if self.encoder is not None:
            x = self.encoder.forward(x)
        for layer in self.layers:
            x = layer.forward(x)
        if self.decoder is not None:
            x = self.decoder.forward(x)
        return x[0] if squeeze else x

    def backward(self, x, upstream) -> NetworkGrads:
        """Gradients of sum_b upstream[b] . forward(x[b]) for every
        trainable scalar, plus the input derivative."""
        x, _ = _as_batch(x, self.in_dim, "network input")
        upstream, _ = _as_batch(upstream, self.out_dim, "upstream")
        if upstream.shape[0] != x.shape[0]:
            raise ValueError("upstream batch size must match the input")

        inputs = []
        h = x
        if self.encoder is not None:
            inputs.append(h)
            h = self.encoder.forward(h)
        layer_inputs = []
        for layer in self.layers:
            layer_inputs.append(h)
            h = layer.forward(h)
        dec_input = h

        up = upstream
        dec_grads = None
        if self.decoder is not None:
            dec_grads, up = self.decoder.backward(dec_input, up)
        layer_grads = [None] * len(self.layers)
        for idx in range(len(self.layers) - 1, -1, -1):
            layer_grads[idx], up = self.layers[idx].backward(layer_inputs[idx], up)
        enc_grads = None
        if self.encoder is not None:
            enc_grads, up = self.encoder.backward(inputs[0], up)
        return NetworkGrads(layers=layer_grads, encoder=enc_grads,
                            decoder=dec_grads, d_input=up)

    def extend(self, new_r: int) -> None:
        for layer in self.layers:
            layer.extend(new_r)

    def param_count(self) -> int:
        total = sum(layer.param_count() for layer in self.layers)
        if self.encoder is not None:
            total += self.encoder.param_count()
        if self.decoder is not None:
            total += self.decoder.param_count()
        return total

    def copy(self) -> "QkanNetwork":
        return QkanNetwork(
            layers=[lay.copy() for lay in self.layers],
            encoder=self.encoder.copy() if self.encoder else None,
            decoder=self.decoder.copy() if self.decoder else None,
        )

    # Flat parameter vector, ordered: encoder (weight row-major, bias),
    # then per layer enc_w, enc_b, angles, w_base, w_quant, out_bias
    # (each raveled row-major over (out, in)), then decoder.

    def param_vector(self) -> np.ndarray:
        parts = []
        if self.encoder is not None:
            parts += [self.encoder.weight.ravel(), self.encoder.bias]
        for lay in self.layers:
            parts += [lay.enc_w.ravel(), lay.enc_b.ravel(), lay.angles.ravel(),
                      lay.w_base.ravel(), lay.w_quant.ravel(),
                      lay.out_bias.ravel()]
        if self.decoder is not None:
            parts += [self.decoder.weight.ravel(), self.decoder.bias]
        return np.concatenate(parts)

    def set_param_vector(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.param_count():
            raise ValueError(f"expected {self.param_count()} parameters, "
                             f"got {vec.size}")
        pos = 0

        def take(arr):
            nonlocal pos
            arr[...] = vec[pos:pos + arr.size].reshape(arr.shape)
            pos += arr.size

        if self.encoder is not None:
            take(self.encoder.weight)
            take(self.encoder.bias)
        for lay in self.layers:
            take(lay.enc_w)
            take(lay.enc_b)
            take(lay.angles)
            take(lay.w_base)
            take(lay.w_quant)
            take(lay.out_bias)
        if self.decoder is not None:
            take(self.decoder.weight)
            take(self.decoder.bias)

    def grad_vector(self, grads: NetworkGrads) -> np.ndarray:
        parts = []
        if grads.encoder is not None:
            parts += [grads.encoder[0].ravel(), grads.encoder[1]]
        for g in grads.layers:
            parts += [g.enc_w.ravel(), g.enc_b.ravel(), g.angles.ravel(),
                      g.w_base.ravel(), g.w_quant.ravel(), g.out_bias.ravel()]
        if grads.decoder is not None:
            parts += [grads.decoder[0].ravel(), grads.decoder[1]]
        return np.concatenate(parts)


def latent_dim(d: int) -> int:
    """HQKAN bottleneck width: floor(log2(d)) + 1 with a floor of 2."""
    if d < 1:
        raise ValueError("dimension must be positive")
    return max(2, int(d).bit_length())


def make_hqkan(in_dim: int, out_dim: int, r: int, hidden_shape=(),
               rng: np.random.Generator | None = None,
               angle_scale: float = 0.1, geometric: bool = True) -> QkanNetwork:
    """Linear compressor -> QKAN core -> linear expander.

    The core runs over [latent(in_dim), *hidden_shape, latent(out_dim)].
    """
    if in_dim < 1 or out_dim < 1:
        raise ValueError("in_dim and out_dim must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    lat_in, lat_out = latent_dim(in_dim), latent_dim(out_dim)
    core_shape = [lat_in, *hidden_shape, lat_out]
    net = QkanNetwork.init(core_shape, r, rng, angle_scale, geometric)
    net.encoder = LinearLayer.init(in_dim, lat_in, rng)
    net.decoder = LinearLayer.init(lat_out, out_dim, rng)
    return net


def param_count(net: QkanNetwork) -> int:
    """Exact trainable-scalar count: 5r+6 per edge plus linear layers."""
    return net.param_count()
