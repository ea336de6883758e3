"""Loss functions and their exact parameter gradients.

Three objectives: L2 reconstruction, the adversarial pair (non-saturating
generator form by default), and cross-entropy classification through the
optional LSTM. Each *_grads function returns (scalar loss, grads dict)
where grads holds d loss / d parameter for every parameter it touches.
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

from .model import (
    Params,
    ToyModel,
    decoder_backward,
    decoder_forward,
    discriminator_backward,
    discriminator_forward,
    encoder_backward,
    encoder_forward,
    head_forward,
    lstm_step,
    lstm_step_backward,
    softmax,
)

__all__ = [
    "PROB_CLAMP",
    "cgan_losses",
    "reconstruction_grads",
    "cgan_grads",
    "classification_grads",
]

PROB_CLAMP = 1e-7


def cgan_losses(d_real: float, d_fake: float, saturating: bool = False) -> Tuple[float, float]:
    """(generator_loss, discriminator_loss) for one discriminator output pair.

    discriminator_loss = -[log d_real + log(1 - d_fake)].
    generator_loss defaults to the non-saturating -log d_fake; the
    saturating log(1 - d_fake) form is available for fidelity runs.
    """
    d_real = np.clip(d_real, PROB_CLAMP, 1.0 - PROB_CLAMP)
    d_fake = np.clip(d_fake, PROB_CLAMP, 1.0 - PROB_CLAMP)
    disc_loss = -(np.log(d_real) + np.log(1.0 - d_fake))
    if saturating:
        gen_loss = np.log(1.0 - d_fake)
    else:
        gen_loss = -np.log(d_fake)
    return float(np.mean(gen_loss)), float(np.mean(disc_loss))


def _merge(total: Params, part: Params) -> None:
    for k, v in part.items():
        if k in total:
            total[k] = total[k] + v
        else:
            total[k] = v


def reconstruction_grads(model: ToyModel, x: np.ndarray, y: np.ndarray) -> Tuple[float, Params]:
    """Mean squared error between reconstruction and target in (-1, 1)."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    feat, enc_cache = encoder_forward(model, x, want_cache=True)
    out, dec_cache = decoder_forward(model, feat, want_cache=True)
    diff = out - y
    loss = float(np.mean(diff * diff))
    dout = 2.0 * diff / diff.size
    grads: Params = {}
    dec_grads, dfeat = decoder_backward(model, dec_cache, dout)
    _merge(grads, dec_grads)
    enc_grads, _ = encoder_backward(model, enc_cache, dfeat)
    _merge(grads, enc_grads)
    return loss, grads


def cgan_grads(
    model: ToyModel, x: np.ndarray, y: np.ndarray, saturating: bool = False
) -> Tuple[float, float, Params, Params]:
    """One adversarial step on a batch of (representation, target frame).

    Returns (gen_loss, disc_loss, generator grads, discriminator grads);
    each side's gradient treats the other side's parameters as constants.
    """
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    n = x.shape[0]

    feat, enc_cache = encoder_forward(model, x, want_cache=True)
    fake, dec_cache = decoder_forward(model, feat, want_cache=True)
    d_real, real_cache = discriminator_forward(model, y, y, want_cache=True)
    d_fake, fake_cache = discriminator_forward(model, y, fake, want_cache=True)

    gen_loss, disc_loss = cgan_losses(d_real, d_fake, saturating=saturating)

    d_real_c = np.clip(d_real, PROB_CLAMP, 1.0 - PROB_CLAMP)
    d_fake_c = np.clip(d_fake, PROB_CLAMP, 1.0 - PROB_CLAMP)
    in_range_r = (d_real > PROB_CLAMP) & (d_real < 1.0 - PROB_CLAMP)
    in_range_f = (d_fake > PROB_CLAMP) & (d_fake < 1.0 - PROB_CLAMP)

    # discriminator side
    ddisc_dreal = -1.0 / d_real_c * in_range_r / n
    ddisc_dfake = 1.0 / (1.0 - d_fake_c) * in_range_f / n
    disc_grads: Params = {}
    g_real, _ = discriminator_backward(model, real_cache, ddisc_dreal)
    _merge(disc_grads, g_real)
    g_fake, _ = discriminator_backward(model, fake_cache, ddisc_dfake)
    _merge(disc_grads, g_fake)

    # generator side (through the discriminator, whose params are frozen)
    if saturating:
        dgen_dfake = -1.0 / (1.0 - d_fake_c) * in_range_f / n
    else:
        dgen_dfake = -1.0 / d_fake_c * in_range_f / n
    gen_grads: Params = {}
    _, dcandidate = discriminator_backward(model, fake_cache, dgen_dfake)
    dec_grads, dfeat = decoder_backward(model, dec_cache, dcandidate)
    _merge(gen_grads, dec_grads)
    enc_grads, _ = encoder_backward(model, enc_cache, dfeat)
    _merge(gen_grads, enc_grads)
    return gen_loss, disc_loss, gen_grads, disc_grads


def classification_grads(
    model: ToyModel,
    images: np.ndarray,
    labels: np.ndarray,
    use_lstm: bool = True,
    train_encoder: bool = True,
) -> Tuple[float, Params]:
    """Mean cross-entropy over a batch; optionally freezes the encoder.

    `images` is [N, seq, input_dim] with the LSTM, [N, input_dim] without.
    """
    d = model.dims
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    grads: Params = {}

    if use_lstm:
        if images.ndim == 2:
            images = images[None]
        n = images.shape[0]
        h = np.zeros((n, d.lstm_hidden))
        c = np.zeros((n, d.lstm_hidden))
        enc_caches = []
        lstm_caches = []
        for s in range(d.sequence_len):
            feat, ec = encoder_forward(model, images[:, s], want_cache=True)
            h, c, lc = lstm_step(model, feat, h, c, want_cache=True)
            enc_caches.append(ec)
            lstm_caches.append(lc)
        logits = head_forward(model, h)
    else:
        n = np.atleast_2d(images).shape[0]
        feat, enc_cache = encoder_forward(model, np.atleast_2d(images), want_cache=True)
        logits = head_forward(model, feat)

    probs = softmax(logits)
    n_batch = probs.shape[0]
    loss = float(-np.mean(np.log(np.maximum(probs[np.arange(n_batch), labels], 1e-300))))
    dlogits = probs.copy()
    dlogits[np.arange(n_batch), labels] -= 1.0
    dlogits /= n_batch

    grads["head.W"] = dlogits.T @ (h if use_lstm else feat)
    grads["head.b"] = dlogits.sum(axis=0)
    dtop = dlogits @ model.params["head.W"]

    if use_lstm:
        dh = dtop
        dc = np.zeros_like(dh)
        for s in reversed(range(d.sequence_len)):
            lstm_grads, dfeat, dh, dc = lstm_step_backward(model, lstm_caches[s], dh, dc)
            _merge(grads, lstm_grads)
            if train_encoder:
                enc_grads, _ = encoder_backward(model, enc_caches[s], dfeat)
                _merge(grads, enc_grads)
    else:
        if train_encoder:
            enc_grads, _ = encoder_backward(model, enc_cache, dtop)
            _merge(grads, enc_grads)
    return loss, grads
