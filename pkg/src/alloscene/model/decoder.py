"""Pixel-wise object decoder.

Each of the K object slots decodes every pixel of every frame
independently: the slot's object latent, the frame's temporal latent
and a periodic positional encoding of (u, v, t) feed a small MLP that
outputs RGB plus an alpha logit. A softmax over slots turns the alpha
logits into compositing weights; the argmax gives the predicted
segmentation.

The first MLP layer is evaluated as three broadcast summands (slot term
+ frame term + pixel term) instead of one giant concatenated matmul,
which is algebraically identical and avoids materializing the
K*T*P input matrix.
"""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from .config import ModelConfig


def positional_encoding(coords: np.ndarray, n_frequencies: int) -> np.ndarray:
    """Sinusoidal features of coordinates in [0, 1].

    For each coordinate c and frequency index j < n_frequencies the
    output contains sin(2^j * pi * c) and cos(2^j * pi * c); sin blocks
    for all coordinates come first, then the cos blocks, per frequency.

    Args:
        coords: [..., D] array of normalized coordinates.
        n_frequencies: number of octaves (frequencies 2^0..2^(n-1), times pi).

    Returns:
        [..., 2 * n_frequencies * D] float array.
    """
    coords = np.asarray(coords, dtype=np.float64)
    parts = []
    for j in range(n_frequencies):
        ang = (2.0 ** j) * np.pi * coords
        parts.append(np.sin(ang))
        parts.append(np.cos(ang))
    return np.concatenate(parts, axis=-1)


def pixel_grid(h: int, w: int) -> np.ndarray:
    """[h*w, 2] normalized (u, v) pixel-centre coordinates in [0, 1]."""
    us = (np.arange(w) + 0.5) / w
    vs = (np.arange(h) + 0.5) / h
    uu, vv = np.meshgrid(us, vs)
    return np.stack([uu.reshape(-1), vv.reshape(-1)], axis=1)


def decode_pixels(params: dict, config: ModelConfig, object_latents: T.Tensor,
                  temporal_latent: T.Tensor, uv: np.ndarray,
                  frame_times: np.ndarray) -> tuple[T.Tensor, T.Tensor]:
    """Run the slot MLP for all K slots, T frames and P pixels.

    Args:
        params: model parameter dict (uses the decoder.* entries).
        object_latents: [K, d_obj] slot codes.
        temporal_latent: [T, d_lec] per-frame codes.
        uv: [P, 2] normalized pixel coordinates.
        frame_times: [T] normalized frame times in [0, 1].

    Returns:
        (rgb, alpha_logits): [K, T, P, 3] sigmoid RGB and [K, T, P] logits.
    """
    k = object_latents.shape[0]
    t = temporal_latent.shape[0]
    p = uv.shape[0]
    dtype = object_latents.dtype
    nf = config.pos_enc_frequencies
    d_obj, d_lec = config.object_latent_dim, config.d_lec
    pe_uv = positional_encoding(uv, nf).astype(dtype)             # [P, 4*nf]
    pe_t = positional_encoding(frame_times[:, None], nf).astype(dtype)  # [T, 2*nf]

    w0, b0 = params["decoder.l0.w"], params["decoder.l0.b"]
    # row blocks of the first-layer weight: object latent, temporal
    # latent, then the (u, v) and t parts of the positional encoding
    o_end = d_obj
    l_end = o_end + d_lec
    uv_end = l_end + 4 * nf
    slot_term = T.matmul(object_latents, w0[:o_end])                       # [K, U]
    frame_term = T.matmul(temporal_latent, w0[o_end:l_end]) \
        + T.matmul(T.Tensor(pe_t), w0[uv_end:])                            # [T, U]
    pixel_term = T.matmul(T.Tensor(pe_uv), w0[l_end:uv_end])               # [P, U]

    units = config.decoder_units
    pre = (T.reshape(slot_term, (k, 1, 1, units))
           + T.reshape(frame_term, (1, t, 1, units))
           + T.reshape(pixel_term, (1, 1, p, units))
           + b0)
    h = T.relu(T.reshape(pre, (k * t * p, units)))
    for i in range(1, config.decoder_layers - 1):
        h = T.relu(T.matmul(h, params[f"decoder.l{i}.w"]) + params[f"decoder.l{i}.b"])
    last = config.decoder_layers - 1
    out = T.matmul(h, params[f"decoder.l{last}.w"]) + params[f"decoder.l{last}.b"]
    out = T.reshape(out, (k, t, p, 4))
    rgb = T.sigmoid(out[:, :, :, :3])
    alpha_logits = T.reshape(out[:, :, :, 3:4], (k, t, p))
    return rgb, alpha_logits


def composite(slot_rgb: T.Tensor, alpha_logits: T.Tensor) -> tuple[T.Tensor, T.Tensor, np.ndarray]:
    """Blend slot images with an alpha softmax over slots.

    Args:
        slot_rgb: [K, ..., 3] per-slot colours.
        alpha_logits: [K, ...] unnormalized slot weights.

    Returns:
        (recon, alpha, assignment): the blended [..., 3] reconstruction,
        the [K, ...] softmax weights, and the integer argmax assignment
        (ties resolved to the lowest slot index).
    """
    alpha = T.softmax(alpha_logits, axis=0)
    recon = T.sum_(T.reshape(alpha, alpha.shape + (1,)) * slot_rgb, axis=0)
    assignment = np.argmax(alpha_logits.numpy(), axis=0)
    return recon, alpha, assignment
