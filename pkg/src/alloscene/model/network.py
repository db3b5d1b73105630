"""Forward pass of the scene network and its parameter container.

Information flow for one stack of T views:

    image -> conv frontend -> V_feat [T, h, w, C]
    PH = strong(V_feat) per frame and position        ("where", keeps space)
    PR = strong(mean over positions of V_feat)        ("what", keeps time)
    RSC = strong(PH[t] flattened)  -> linear head predicts (sin, cos) azimuth
    MEC = strong(mean over time of PH) (+ weak residual)   spatial latent
    LEC = strong(PR) (+ weak residual)                     temporal latent
    CA3 = self-attention over [LEC tokens (time); MEC tokens (space)]
    CA1[t] = relu(W flatten(outer(u_t, v)) + b)  with u_t, v projected
             from CA3's time token t and pooled space tokens

The temporal average sits between PH and MEC (not before PH) so that
RSC sees per-frame activity and can decode per-view head direction;
LEC's input is averaged across space inside the PR pathway.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import tensor as T
from .config import ModelConfig
from .decoder import decode_pixels, composite, pixel_grid


@dataclass
class ActivationTrace:
    """Named per-layer activations for one stack (or a batch of stacks).

    Evaluation code addresses layers only through this map; ``aux``
    carries non-layer outputs (head-direction prediction, subsampled
    pixel indices).
    """

    layers: dict = field(default_factory=dict)
    aux: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> T.Tensor:
        return self.layers[name]

    def __contains__(self, name: str) -> bool:
        return name in self.layers

    def numpy(self, name: str) -> np.ndarray:
        return self.layers[name].numpy()


class ModelState:
    """All learnable parameters, keyed by a stable layer-tap name."""

    def __init__(self, config: ModelConfig, params: dict[str, T.Tensor]):
        self.config = config
        self.params = params

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0) -> "ModelState":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA11]))
        dtype = np.float32 if config.dtype == "float32" else np.float64
        params: dict[str, T.Tensor] = {}

        def param(name, shape, std=None, zero=False):
            if zero:
                data = np.zeros(shape, dtype=dtype)
            else:
                if std is None:  # He initialization for relu layers
                    fan_in = shape[0] if len(shape) == 2 else int(np.prod(shape[:-1]))
                    std = np.sqrt(2.0 / fan_in)
                data = rng.normal(0.0, std, size=shape).astype(dtype)
            params[name] = T.Tensor(data, requires_grad=True)

        cin = 3
        k = config.frontend_kernel
        for i, cout in enumerate(config.frontend_channels):
            param(f"frontend.conv{i}.w", (k, k, cin, cout))
            param(f"frontend.conv{i}.b", (cout,), zero=True)
            cin = cout
        c_feat = config.frontend_channels[-1]
        s = config.n_positions

        param("ph.w", (c_feat, config.d_ph))
        param("ph.b", (config.d_ph,), zero=True)
        param("pr.w", (c_feat, config.d_pr))
        param("pr.b", (config.d_pr,), zero=True)
        param("rsc.w", (s * config.d_ph, config.d_rsc))
        param("rsc.b", (config.d_rsc,), zero=True)
        param("rsc_head.w", (config.d_rsc, 2), std=0.05)
        param("rsc_head.b", (2,), zero=True)

        widths = {"V_feat": c_feat, "PH": config.d_ph, "PR": config.d_pr}
        for target, d_target in (("MEC", config.d_mec), ("LEC", config.d_lec)):
            edges = config.connectivity[target]
            d_src = widths[edges["strong"]]
            param(f"{target.lower()}.w", (d_src, d_target))
            param(f"{target.lower()}.b", (d_target,), zero=True)
            for src in edges["weak"]:
                param(f"{target.lower()}_weak.proj_{src}.w", (widths[src], d_target), std=0.05)
            if edges["weak"]:
                param(f"{target.lower()}_weak.out.w", (d_target, d_target), std=0.05)
                param(f"{target.lower()}_weak.out.b", (d_target,), zero=True)

        param("ca3.in_t.w", (config.d_lec, config.d_ca3))
        param("ca3.in_t.b", (config.d_ca3,), zero=True)
        param("ca3.in_s.w", (config.d_mec, config.d_ca3))
        param("ca3.in_s.b", (config.d_ca3,), zero=True)
        att_std = 1.0 / np.sqrt(config.d_ca3)
        for nm in ("q", "k", "v"):
            param(f"ca3.{nm}.w", (config.d_ca3, config.d_ca3), std=att_std)

        f = config.ca1_factor_dim
        param("ca1.t.w", (config.d_ca3, f))
        param("ca1.s.w", (config.d_ca3, f))
        param("ca1.out.w", (f * f, config.d_ca1))
        param("ca1.out.b", (config.d_ca1,), zero=True)

        if config.decoder_enabled:
            d_spatial = config.spatial_latent_dim
            param("obj.readout.w", (d_spatial, config.num_slots * config.object_latent_dim))
            param("obj.emb", (config.num_slots, config.object_latent_dim), std=0.5)
            u = config.decoder_units
            dims = [config.decoder_input_dim] + [u] * (config.decoder_layers - 1) + [4]
            for i in range(config.decoder_layers):
                param(f"decoder.l{i}.w", (dims[i], dims[i + 1]))
                param(f"decoder.l{i}.b", (dims[i + 1],), zero=True)

        return cls(config, params)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def astype(self, dtype: str) -> "ModelState":
        """Copy of the state in the given precision."""
        cfg = ModelConfig.from_json({**self.config.to_json(), "dtype": dtype})
        np_dtype = np.float32 if dtype == "float32" else np.float64
        params = {k: T.Tensor(v.numpy().astype(np_dtype), requires_grad=True)
                  for k, v in self.params.items()}
        return ModelState(cfg, params)


# ----------------------------------------------------------------------
# building blocks (unit-testable pieces of the forward pass)

def connect(params: dict, prefix: str, source: T.Tensor, edge_type: str,
            weak_inputs: list | None = None) -> T.Tensor:
    """Apply one connection of the edge table.

    strong: relu(W source + b). weak: affine readout of the summed
    projected earlier activations, returned WITHOUT nonlinearity so the
    caller can add it residually to a strong pre-activation.
    """
    if edge_type == "strong":
        return T.relu(T.matmul(source, params[f"{prefix}.w"]) + params[f"{prefix}.b"])
    if edge_type == "weak":
        total = None
        for name, act in weak_inputs:
            proj = T.matmul(act, params[f"{prefix}_weak.proj_{name}.w"])
            total = proj if total is None else total + proj
        return T.matmul(total, params[f"{prefix}_weak.out.w"]) + params[f"{prefix}_weak.out.b"]
    raise ValueError(f"unknown edge type {edge_type!r}")


def factorize(features: T.Tensor) -> tuple[T.Tensor, T.Tensor]:
    """Split a [T, h, w, C] feature stack into the two averaged codes.

    Returns (spatial_code, temporal_code): the time-averaged flattened
    spatial grid [h*w*C] and the space-averaged per-frame code [T, C].
    """
    t, h, w, c = features.shape
    flat = T.reshape(features, (t, h * w, c))
    spatial = T.reshape(T.reduce_mean(flat, axis=0), (h * w * c,))
    temporal = T.reduce_mean(flat, axis=1)
    return spatial, temporal


def ca3_attention(params: dict, tokens: T.Tensor) -> T.Tensor:
    """Single-head scaled dot-product self-attention with residual add."""
    d = tokens.shape[-1]
    q = T.matmul(tokens, params["ca3.q.w"])
    k = T.matmul(tokens, params["ca3.k.w"])
    v = T.matmul(tokens, params["ca3.v.w"])
    att = T.softmax(T.matmul(q, T.transpose(k)) * (1.0 / np.sqrt(d)), axis=-1)
    return tokens + T.matmul(att, v)


def ca1_bind(params: dict, temporal: T.Tensor, spatial: T.Tensor) -> T.Tensor:
    """Outer-product binding of per-frame temporal codes with the spatial code.

    temporal: [T, f]; spatial: [f]. Returns [T, d_ca1].
    """
    t, f = temporal.shape
    ou = T.reshape(temporal, (t, f, 1)) * T.reshape(spatial, (1, 1, spatial.shape[0]))
    flat = T.reshape(ou, (t, f * spatial.shape[0]))
    return T.relu(T.matmul(flat, params["ca1.out.w"]) + params["ca1.out.b"])


def rsc_head(params: dict, rsc_acts: T.Tensor) -> T.Tensor:
    """Linear head from RSC activity to per-frame (sin, cos) azimuth.

    Predictions are unnormalized; renormalize before recovering angles.
    """
    return T.matmul(rsc_acts, params["rsc_head.w"]) + params["rsc_head.b"]


# ----------------------------------------------------------------------
# forward

def _lesioned(layer: T.Tensor, name: str, lesion: dict | None) -> T.Tensor:
    if lesion and name in lesion:
        mask = np.asarray(lesion[name], dtype=layer.dtype)
        return layer * T.Tensor(mask)
    return layer


def forward(state: ModelState, images: np.ndarray, decode: bool | None = None,
            lesion: dict | None = None, pixel_indices: np.ndarray | None = None) -> ActivationTrace:
    """Run one stack of views through the network.

    Args:
        state: parameters + config.
        images: [T, H, W, 3] float array in [0, 1].
        decode: run the pixel decoder (defaults to config.decoder_enabled).
        lesion: optional {layer_name: unit mask} applied multiplicatively
            to the layer's last axis; downstream layers see the lesioned
            activity.
        pixel_indices: optional flat pixel subset for decoding (training
            uses this for cheap unbiased reconstruction gradients). The
            full-image recon/alpha trace entries are only produced when
            decoding the complete grid.

    Returns:
        ActivationTrace with every named layer; ``aux["hd_pred"]`` holds
        the head-direction readout.
    """
    cfg = state.config
    params = state.params
    if decode is None:
        decode = cfg.decoder_enabled
    images = np.asarray(images)
    if images.ndim != 4 or images.shape[-1] != 3:
        raise ValueError(f"expected images [T, H, W, 3], got {images.shape}")
    if images.shape[1:3] != cfg.image_size:
        raise ValueError(f"images are {images.shape[1:3]}, config expects {cfg.image_size}")
    dtype = np.float32 if cfg.dtype == "float32" else np.float64

    trace = ActivationTrace()
    x = T.Tensor(images.astype(dtype, copy=False))
    x = _lesioned(x, "image", lesion)
    trace.layers["image"] = x

    h = x
    n_layers = len(cfg.frontend_channels)
    for i in range(n_layers):
        h = T.conv2d(h, params[f"frontend.conv{i}.w"], params[f"frontend.conv{i}.b"],
                     stride=cfg.frontend_stride, pad=cfg.frontend_pad)
        if i < n_layers - 1:
            h = T.relu(h)
    v_feat = _lesioned(h, "V_feat", lesion)
    trace.layers["V_feat"] = v_feat

    t = v_feat.shape[0]
    s = cfg.n_positions
    v_flat = T.reshape(v_feat, (t, s, v_feat.shape[-1]))
    v_space_avg = T.reduce_mean(v_flat, axis=1)      # [T, C]  ("what" pathway input)
    v_time_avg = T.reduce_mean(v_flat, axis=0)       # [S, C]

    ph = _lesioned(connect(params, "ph", v_flat, "strong"), "PH", lesion)    # [T, S, d_ph]
    trace.layers["PH"] = ph
    pr = _lesioned(connect(params, "pr", v_space_avg, "strong"), "PR", lesion)  # [T, d_pr]
    trace.layers["PR"] = pr

    rsc = _lesioned(connect(params, "rsc", T.reshape(ph, (t, s * cfg.d_ph)), "strong"),
                    "RSC", lesion)
    trace.layers["RSC"] = rsc
    trace.aux["hd_pred"] = rsc_head(params, rsc)

    ph_time_avg = T.reduce_mean(ph, axis=0)          # [S, d_ph]
    mec_pre = T.matmul(ph_time_avg, params["mec.w"]) + params["mec.b"]
    weak_srcs = cfg.connectivity["MEC"]["weak"]
    if weak_srcs:
        acts = {"V_feat": v_time_avg, "PH": ph_time_avg}
        mec_pre = mec_pre + connect(params, "mec", None, "weak",
                                    [(nm, acts[nm]) for nm in weak_srcs])
    mec = _lesioned(T.relu(mec_pre), "MEC", lesion)  # [S, d_mec]
    trace.layers["MEC"] = mec

    lec_pre = T.matmul(pr, params["lec.w"]) + params["lec.b"]
    weak_srcs = cfg.connectivity["LEC"]["weak"]
    if weak_srcs:
        acts = {"V_feat": v_space_avg, "PR": pr}
        lec_pre = lec_pre + connect(params, "lec", None, "weak",
                                    [(nm, acts[nm]) for nm in weak_srcs])
    lec = _lesioned(T.relu(lec_pre), "LEC", lesion)  # [T, d_lec]
    trace.layers["LEC"] = lec

    time_tokens = T.matmul(lec, params["ca3.in_t.w"]) + params["ca3.in_t.b"]
    space_tokens = T.matmul(mec, params["ca3.in_s.w"]) + params["ca3.in_s.b"]
    tokens = T.concat([time_tokens, space_tokens], axis=0)
    ca3 = _lesioned(ca3_attention(params, tokens), "CA3", lesion)  # [T+S, d_ca3]
    trace.layers["CA3"] = ca3

    u_t = T.matmul(ca3[:t], params["ca1.t.w"])                    # [T, f]
    space_pooled = T.reshape(T.reduce_mean(ca3[t:], axis=0), (1, cfg.d_ca3))
    v_s = T.reshape(T.matmul(space_pooled, params["ca1.s.w"]), (cfg.ca1_factor_dim,))
    ca1 = _lesioned(ca1_bind(params, u_t, v_s), "CA1", lesion)    # [T, d_ca1]
    trace.layers["CA1"] = ca1

    if decode:
        if not cfg.decoder_enabled:
            raise ValueError("decoder requested but disabled in the model config")
        spatial_latent = T.reshape(mec, (cfg.spatial_latent_dim,))
        obj = T.reshape(
            T.matmul(T.reshape(spatial_latent, (1, cfg.spatial_latent_dim)),
                     params["obj.readout.w"]),
            (cfg.num_slots, cfg.object_latent_dim)) + params["obj.emb"]
        hh, ww = cfg.image_size
        grid = pixel_grid(hh, ww)
        if pixel_indices is not None:
            uv = grid[pixel_indices]
        else:
            uv = grid
        frame_times = (np.arange(t) / max(t - 1, 1)).astype(dtype)
        rgb, alpha_logits = decode_pixels(params, cfg, obj, lec, uv, frame_times)
        recon, alpha, assignment = composite(rgb, alpha_logits)
        if pixel_indices is None:
            trace.layers["recon"] = T.reshape(recon, (t, hh, ww, 3))
            trace.layers["alpha"] = T.reshape(alpha, (cfg.num_slots, t, hh, ww))
            trace.aux["assignment"] = assignment.reshape(t, hh, ww)
        else:
            trace.aux["recon_sampled"] = recon           # [T, P, 3]
            trace.aux["alpha_sampled"] = alpha
            trace.aux["pixel_indices"] = pixel_indices
    return trace


def forward_batch(state: ModelState, batch: np.ndarray, **kwargs) -> list[ActivationTrace]:
    """Forward a [B, T, H, W, 3] batch; one trace per stack."""
    batch = np.asarray(batch)
    if batch.ndim == 4:
        batch = batch[None]
    return [forward(state, batch[b], **kwargs) for b in range(batch.shape[0])]
