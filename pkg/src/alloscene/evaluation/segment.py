"""Unsupervised segmentation from the decoder's alpha weights."""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..model.network import ModelState, forward
from .rand_index import SegmentationResult


def segment(state: ModelState, video: np.ndarray,
            true_labels: np.ndarray | None = None,
            background_label: int = 0) -> SegmentationResult:
    """Per-pixel slot assignment (argmax over alpha) for one stack.

    Args:
        state: trained model; its config must enable the decoder.
        video: [T, H, W, 3] float frames in [0, 1].
        true_labels: optional [T, H, W] ground-truth labels to attach.
    """
    if not state.config.decoder_enabled:
        raise ValueError("segmentation requires a model with the decoder enabled")
    with T.no_grad():
        tr = forward(state, video, decode=True)
    pred = tr.aux["assignment"]
    if true_labels is None:
        true_labels = np.zeros_like(pred)
    return SegmentationResult(pred_labels=pred, true_labels=np.asarray(true_labels),
                              background_label=background_label)


def evaluate_segmentation(state: ModelState, dataset, split: str = "test",
                          views_per_stack: int | None = None,
                          background_label: int = 0, seed: int = 0) -> dict:
    """Mean and standard deviation of ARI / foreground ARI over the
    split's videos, each treated as one clustering problem."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E6]))
    aris, fgs, results = [], [], []
    for gid in dataset.group_ids(split):
        t = views_per_stack or min(dataset.n_views(gid), state.config.views_per_stack)
        idx = dataset.sample_view_indices(gid, t, rng)
        views = dataset.load_views(gid, idx)
        masks = dataset.load_masks(gid, idx)
        if masks is None:
            raise ValueError(f"video {gid} has no ground-truth masks")
        res = segment(state, views, true_labels=masks, background_label=background_label)
        results.append(res)
        aris.append(res.ari())
        fgs.append(res.fg_ari())
    return {
        "ari_mean": float(np.mean(aris)), "ari_std": float(np.std(aris)),
        "fg_ari_mean": float(np.mean(fgs)), "fg_ari_std": float(np.std(fgs)),
        "n_videos": len(aris), "results": results,
    }


def reconstruction_mse(state: ModelState, dataset, split: str = "test",
                       views_per_stack: int | None = None, seed: int = 0) -> dict:
    """Full-frame reconstruction MSE per stack (summed over frame,
    pixels, channels; mean over stacks) plus the mean-image baseline,
    which predicts every pixel with the training-split average frame."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x3B5]))
    train_ids = dataset.group_ids("train")
    mean_img = np.mean([dataset.load_view(g, 0) for g in train_ids], axis=0)

    losses, baselines = [], []
    for gid in dataset.group_ids(split):
        t = views_per_stack or min(dataset.n_views(gid), state.config.views_per_stack)
        idx = dataset.sample_view_indices(gid, t, rng)
        views = dataset.load_views(gid, idx)
        with T.no_grad():
            tr = forward(state, views, decode=True)
        recon = tr.numpy("recon")
        losses.append(float(((views - recon) ** 2).sum()))
        baselines.append(float(((views - mean_img[None]) ** 2).sum()))
    return {
        "mse": float(np.mean(losses)),
        "baseline_mse": float(np.mean(baselines)),
        "n_stacks": len(losses),
    }
