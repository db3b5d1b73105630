"""Lesioning: zero a random fraction of one layer's units and measure
scene discrimination at that layer.

The unit mask is drawn once per (fraction, seed) and applied inside
every forward pass, so downstream layers see the lesioned activity too.
Triplet sampling reuses the same seed across fractions: fraction 0
reproduces the unlesioned accuracy bit-exactly, fraction 1 collapses to
chance through the degenerate-triplet fallback.
"""

from __future__ import annotations

import numpy as np

from ..model.network import ModelState
from .triplets import make_trace_fn, triplet_accuracy


def lesion_curve(state: ModelState, dataset, layer: str, fractions,
                 seed: int = 0, n_triplets: int = 500, split: str = "test",
                 views_per_stack: int = 4) -> dict:
    """Triplet accuracy at ``layer`` after zeroing each fraction of its units.

    Returns {fraction: accuracy}; reports live via the returned dict in
    ascending fraction order.
    """
    units = state.config.trace_shapes(views_per_stack)[layer][-1]
    mask_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1E5]))
    out = {}
    for frac in fractions:
        if not 0.0 <= frac <= 1.0:
            raise ValueError(f"lesion fraction must be in [0, 1], got {frac}")
        k = int(round(frac * units))
        if k == 0:
            lesion = None
        else:
            mask = np.ones(units)
            mask[mask_rng.choice(units, size=k, replace=False)] = 0.0
            lesion = {layer: mask}
        report = triplet_accuracy(
            make_trace_fn(state, lesion=lesion), dataset, layer,
            n_triplets=n_triplets, seed=seed, split=split,
            views_per_stack=views_per_stack)
        out[float(frac)] = report.accuracy
    return out
