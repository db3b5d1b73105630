"""Training objectives.

The triplet loss defaults to a per-dimension hinge,

    L(a, p, n) = sum_i max(|a_i - p_i| - |a_i - n_i| + margin, 0),

which hinges each embedding dimension separately before summing. The
conventional euclidean form max(||a-p|| - ||a-n|| + margin, 0) is
available via ``form="euclidean"`` for comparison runs.

The reconstruction loss is squared error summed over frames, pixels and
channels, averaged over the batch. The head-direction auxiliary loss is
squared error on (sin, cos) targets, averaged over frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T

TRIPLET_FORMS = ("per_dim", "euclidean")
LOSS_MODES = ("triplet", "recon", "both")


@dataclass
class LossConfig:
    margin: float = 0.2
    loss_mode: str = "triplet"
    aux_hd_weight: float = 0.0
    triplet_layer: str = "CA1"
    triplet_form: str = "per_dim"
    triplet_weight: float = 1.0
    recon_weight: float = 1.0

    def __post_init__(self):
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}")
        if self.triplet_form not in TRIPLET_FORMS:
            raise ValueError(f"triplet_form must be one of {TRIPLET_FORMS}")
        if min(self.margin, self.aux_hd_weight, self.triplet_weight, self.recon_weight) < 0:
            raise ValueError("weights and margin must be nonnegative")
        if self.loss_mode == "triplet" and self.triplet_weight == 0:
            raise ValueError("triplet mode with zero triplet weight leaves no active loss")
        if self.loss_mode == "recon" and self.recon_weight == 0:
            raise ValueError("recon mode with zero recon weight leaves no active loss")


def triplet_loss(anchor, positive, negative, margin: float,
                 form: str = "per_dim") -> T.Tensor:
    """Hinge loss pulling same-scene embeddings together.

    Accepts [D] vectors or [B, D] batches; batches average the
    per-sample loss. Zero exactly when every dimension (or the norm, in
    euclidean form) separates positive from negative by the margin.
    """
    a, p, n = T.as_tensor(anchor), T.as_tensor(positive), T.as_tensor(negative)
    if not a.shape == p.shape == n.shape:
        raise ValueError(f"triplet embeddings differ in shape: {a.shape}, {p.shape}, {n.shape}")
    if form == "per_dim":
        hinge = T.relu(T.absolute(a - p) - T.absolute(a - n) + margin)
        per_sample = T.sum_(hinge, axis=-1) if a.ndim > 1 else T.sum_(hinge)
    elif form == "euclidean":
        dp = T.sqrt(T.sum_((a - p) ** 2.0, axis=-1) + 1e-12)
        dn = T.sqrt(T.sum_((a - n) ** 2.0, axis=-1) + 1e-12)
        per_sample = T.relu(dp - dn + margin)
    else:
        raise ValueError(f"unknown triplet form {form!r}")
    return T.mean(per_sample) if per_sample.ndim > 0 else per_sample


def recon_loss(target, prediction) -> T.Tensor:
    """Squared error summed over (T, H, W, C), averaged over the batch.

    Accepts [B, T, H, W, 3] or a single [T, H, W, 3] stack (B = 1).
    """
    x, xh = T.as_tensor(target), T.as_tensor(prediction)
    if x.shape != xh.shape:
        raise ValueError(f"reconstruction shape {xh.shape} != target {x.shape}")
    sq = (x - xh) ** 2.0
    if x.ndim == 5:
        return T.mean(T.sum_(T.reshape(sq, (x.shape[0], -1)), axis=1))
    return T.sum_(sq)


def hd_aux_loss(pred, true_azimuth) -> T.Tensor:
    """Squared error of (sin, cos) head-direction predictions.

    pred: [T, 2] as (sin, cos); true_azimuth: [T] radians. Averaged
    over frames; periodic in the azimuth by construction.
    """
    pred = T.as_tensor(pred)
    az = np.asarray(true_azimuth, dtype=pred.dtype)
    target = np.stack([np.sin(az), np.cos(az)], axis=-1)
    return T.mean(T.sum_((pred - T.Tensor(target)) ** 2.0, axis=-1))
