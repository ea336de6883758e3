"""Desk-scale dense networks: encoder, decoder, discriminator, LSTM, head.

All parameters are float64 numpy arrays in a flat name->array dict so the
finite-difference harness can perturb any single scalar. Forward passes
return caches consumed by the matching backward passes; gradients are
exact reverse-mode derivatives of the stated losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

__all__ = ["ModelDims", "ToyModel", "init_model", "encoder_forward", "reconstruct", "lstm_step", "classify"]

LEAKY_SLOPE = 0.2
INIT_STD = 0.02

Params = Dict[str, np.ndarray]


@dataclass(frozen=True)
class ModelDims:
    """Layer sizing; defaults target 3x32x32 byte images and 64-d features."""

    input_hw: int = 32
    in_channels: int = 3
    hidden: int = 128
    feature: int = 64
    lstm_hidden: int = 64
    classes: int = 7
    sequence_len: int = 3

    @property
    def input_dim(self) -> int:
        return self.in_channels * self.input_hw * self.input_hw

    @property
    def image_dim(self) -> int:
        return self.input_hw * self.input_hw


ENCODER_KEYS = ("enc.W1", "enc.b1", "enc.W2", "enc.b2")


@dataclass
class ToyModel:
    dims: ModelDims
    params: Params

    def copy(self) -> "ToyModel":
        return ToyModel(self.dims, {k: v.copy() for k, v in self.params.items()})

    def encoder_params(self) -> Params:
        return {k: self.params[k] for k in ENCODER_KEYS}


def _param_shapes(dims: ModelDims) -> List[Tuple[str, Tuple[int, ...]]]:
    d = dims
    return [
        ("enc.W1", (d.hidden, d.input_dim)),
        ("enc.b1", (d.hidden,)),
        ("enc.W2", (d.feature, d.hidden)),
        ("enc.b2", (d.feature,)),
        ("dec.W1", (d.hidden, d.feature)),
        ("dec.b1", (d.hidden,)),
        ("dec.W2", (d.image_dim, d.hidden)),
        ("dec.b2", (d.image_dim,)),
        ("disc.W1", (d.hidden, 2 * d.image_dim)),
        ("disc.b1", (d.hidden,)),
        ("disc.W2", (1, d.hidden)),
        ("disc.b2", (1,)),
        ("lstm.Wx", (4 * d.lstm_hidden, d.feature)),
        ("lstm.Wh", (4 * d.lstm_hidden, d.lstm_hidden)),
        ("lstm.b", (4 * d.lstm_hidden,)),
        ("head.W", (d.classes, d.lstm_hidden)),
        ("head.b", (d.classes,)),
    ]


def init_model(seed: int, dims: ModelDims = ModelDims()) -> ToyModel:
    """Weights ~ N(0, 0.02^2) from the seeded generator, biases zero.

    Parameter order is fixed, so equal seeds give bit-identical models.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    params: Params = {}
    for name, shape in _param_shapes(dims):
        if name.split(".")[-1].startswith("b"):
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.normal(0.0, INIT_STD, size=shape)
    return ToyModel(dims, params)


def leaky_relu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def leaky_relu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


# ---------------------------------------------------------------------------
# encoder


def encoder_forward(model: ToyModel, x: np.ndarray, want_cache: bool = False):
    """Flattened [0,1] image batch [N, input_dim] -> features [N, feature].

    Hidden activation is LeakyReLU(0.2); the feature layer is linear.
    """
    p = model.params
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.dims.input_dim:
        raise ValueError(f"encoder expects input dim {model.dims.input_dim}, got {x.shape[1]}")
    z1 = x @ p["enc.W1"].T + p["enc.b1"]
    h1 = leaky_relu(z1)
    feat = h1 @ p["enc.W2"].T + p["enc.b2"]
    if want_cache:
        return feat, (x, z1, h1)
    return feat


def encoder_backward(model: ToyModel, cache, dfeat: np.ndarray) -> Tuple[Params, np.ndarray]:
    p = model.params
    x, z1, h1 = cache
    grads = {
        "enc.W2": dfeat.T @ h1,
        "enc.b2": dfeat.sum(axis=0),
    }
    dh1 = dfeat @ p["enc.W2"]
    dz1 = dh1 * leaky_relu_grad(z1)
    grads["enc.W1"] = dz1.T @ x
    grads["enc.b1"] = dz1.sum(axis=0)
    dx = dz1 @ p["enc.W1"]
    return grads, dx


# ---------------------------------------------------------------------------
# decoder


def decoder_forward(model: ToyModel, feat: np.ndarray, want_cache: bool = False):
    """Feature batch -> reconstructed image batch in (-1, 1), [N, image_dim]."""
    p = model.params
    feat = np.atleast_2d(feat)
    z1 = feat @ p["dec.W1"].T + p["dec.b1"]
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ p["dec.W2"].T + p["dec.b2"]
    out = np.tanh(z2)
    if want_cache:
        return out, (feat, z1, h1, out)
    return out


def decoder_backward(model: ToyModel, cache, dout: np.ndarray) -> Tuple[Params, np.ndarray]:
    p = model.params
    feat, z1, h1, out = cache
    dz2 = dout * (1.0 - out * out)
    grads = {
        "dec.W2": dz2.T @ h1,
        "dec.b2": dz2.sum(axis=0),
    }
    dh1 = dz2 @ p["dec.W2"]
    dz1 = dh1 * (z1 > 0)
    grads["dec.W1"] = dz1.T @ feat
    grads["dec.b1"] = dz1.sum(axis=0)
    dfeat = dz1 @ p["dec.W1"]
    return grads, dfeat


def reconstruct(model: ToyModel, x: np.ndarray) -> np.ndarray:
    """Encoder + decoder; output bounded in (-1, 1)."""
    return decoder_forward(model, encoder_forward(model, x))


# ---------------------------------------------------------------------------
# discriminator


def discriminator_forward(model: ToyModel, target: np.ndarray, candidate: np.ndarray, want_cache: bool = False):
    """(target, candidate) image pair batch -> probability in (0, 1)."""
    p = model.params
    pair = np.concatenate([np.atleast_2d(target), np.atleast_2d(candidate)], axis=1)
    z1 = pair @ p["disc.W1"].T + p["disc.b1"]
    h1 = leaky_relu(z1)
    z2 = h1 @ p["disc.W2"].T + p["disc.b2"]
    prob = sigmoid(z2)[:, 0]
    if want_cache:
        return prob, (pair, z1, h1, prob)
    return prob


def discriminator_backward(model: ToyModel, cache, dprob: np.ndarray) -> Tuple[Params, np.ndarray]:
    """Returns (grads, d_candidate); gradient w.r.t. the target half is
    discarded (targets are data, never parameters)."""
    p = model.params
    pair, z1, h1, prob = cache
    dz2 = (dprob * prob * (1.0 - prob))[:, None]
    grads = {
        "disc.W2": dz2.T @ h1,
        "disc.b2": dz2.sum(axis=0),
    }
    dh1 = dz2 @ p["disc.W2"]
    dz1 = dh1 * leaky_relu_grad(z1)
    grads["disc.W1"] = dz1.T @ pair
    grads["disc.b1"] = dz1.sum(axis=0)
    dpair = dz1 @ p["disc.W1"]
    half = pair.shape[1] // 2
    return grads, dpair[:, half:]


# ---------------------------------------------------------------------------
# LSTM cell


def lstm_step(model: ToyModel, x: np.ndarray, h: np.ndarray, c: np.ndarray, want_cache: bool = False):
    """One step of a standard gated cell (gate order i, f, g, o)."""
    p = model.params
    x = np.atleast_2d(x)
    h = np.atleast_2d(h)
    c = np.atleast_2d(c)
    H = model.dims.lstm_hidden
    if x.shape[1] != model.dims.feature or h.shape[1] != H or c.shape[1] != H:
        raise ValueError("lstm_step dimension mismatch")
    z = x @ p["lstm.Wx"].T + h @ p["lstm.Wh"].T + p["lstm.b"]
    i = sigmoid(z[:, 0 * H : 1 * H])
    f = sigmoid(z[:, 1 * H : 2 * H])
    g = np.tanh(z[:, 2 * H : 3 * H])
    o = sigmoid(z[:, 3 * H : 4 * H])
    c_new = f * c + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    if want_cache:
        return h_new, c_new, (x, h, c, i, f, g, o, c_new, tanh_c)
    return h_new, c_new


def lstm_step_backward(
    model: ToyModel, cache, dh_new: np.ndarray, dc_new: np.ndarray
) -> Tuple[Params, np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grads, dx, dh_prev, dc_prev)."""
    p = model.params
    x, h, c, i, f, g, o, c_new, tanh_c = cache
    do = dh_new * tanh_c
    dc = dc_new + dh_new * o * (1.0 - tanh_c * tanh_c)
    di = dc * g
    df = dc * c
    dg = dc * i
    dc_prev = dc * f
    dz = np.concatenate(
        [
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ],
        axis=1,
    )
    grads = {
        "lstm.Wx": dz.T @ x,
        "lstm.Wh": dz.T @ h,
        "lstm.b": dz.sum(axis=0),
    }
    dx = dz @ p["lstm.Wx"]
    dh_prev = dz @ p["lstm.Wh"]
    return grads, dx, dh_prev, dc_prev


# ---------------------------------------------------------------------------
# classifier head


def head_forward(model: ToyModel, h: np.ndarray) -> np.ndarray:
    p = model.params
    return np.atleast_2d(h) @ p["head.W"].T + p["head.b"]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def classify(model: ToyModel, images: np.ndarray, use_lstm: bool = True) -> np.ndarray:
    """Class probabilities for one sample or a batch.

    With the LSTM, `images` is [N, seq, input_dim] (seq must equal the
    configured sequence length); hidden state starts at zero and the head
    reads the final hidden vector. Without it, `images` is [N, input_dim]
    and the head reads the encoder feature directly.
    """
    d = model.dims
    images = np.asarray(images, dtype=np.float64)
    if use_lstm:
        if images.ndim == 2:
            images = images[None]
        if images.shape[1] != d.sequence_len:
            raise ValueError(f"expected sequences of length {d.sequence_len}, got {images.shape[1]}")
        n = images.shape[0]
        h = np.zeros((n, d.lstm_hidden))
        c = np.zeros((n, d.lstm_hidden))
        for s in range(d.sequence_len):
            feat = encoder_forward(model, images[:, s])
            h, c = lstm_step(model, feat, h, c)
        logits = head_forward(model, h)
    else:
        feat = encoder_forward(model, np.atleast_2d(images))
        logits = head_forward(model, feat)
    return softmax(logits)
