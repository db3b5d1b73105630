"""Scene-discrimination accuracy via triplet matching.

For each sampled triplet (anchor, positive, negative) the layer's
activations are flattened and the 3x3 Pearson correlation matrix
computed; the most-correlated off-diagonal pair is predicted to be the
same-scene pair, counted correct when it is (anchor, positive). Chance
is 1/3.

Degenerate triplets (a constant activation vector makes the correlation
undefined) fall back to a seeded uniform random choice among the three
pairs, so they contribute chance-level accuracy instead of being
dropped; their count is reported. This keeps fully lesioned layers at
chance rather than undefined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..model.network import ModelState, forward
from ..train.sampler import sample_triplet_indices

PAIRS = ((0, 1), (0, 2), (1, 2))  # (a,p), (a,n), (p,n)


@dataclass
class TripletEvalReport:
    layer: str
    accuracy: float
    n_triplets: int
    n_degenerate: int
    split: str


def make_trace_fn(state: ModelState, lesion: dict | None = None, decode: bool = False):
    """Gradient-free forward wrapper: stack images -> {layer: array}."""

    def trace_fn(views: np.ndarray) -> dict:
        with T.no_grad():
            tr = forward(state, views, decode=decode, lesion=lesion)
        return {name: tensor.numpy() for name, tensor in tr.layers.items()}

    return trace_fn


def _pick_most_correlated(vecs: list[np.ndarray], rng: np.random.Generator):
    """Index into PAIRS of the most-correlated pair, plus a degeneracy flag."""
    stds = [v.std() for v in vecs]
    if min(stds) == 0.0:
        return int(rng.integers(len(PAIRS))), True
    corr = np.corrcoef(np.stack(vecs))
    scores = np.array([corr[i, j] for i, j in PAIRS])
    best = np.flatnonzero(scores == scores.max())
    if len(best) > 1:
        return int(best[rng.integers(len(best))]), True
    return int(best[0]), False


def triplet_accuracy(trace_fn, dataset, layer: str, n_triplets: int, seed: int,
                     split: str = "test", views_per_stack: int = 4) -> TripletEvalReport:
    """Fraction of triplets whose most-correlated pair is the same-scene pair.

    Args:
        trace_fn: callable mapping a [T, H, W, 3] stack to {layer: array}.
        dataset: dataset-protocol object to sample stacks from.
        layer: which activation to evaluate.
        n_triplets: triplets to sample (>= 500 for quotable numbers).
        seed: drives both triplet sampling and degenerate tie-breaking.
        split: scene split to draw from.
        views_per_stack: views per element; anchor and positive use
            disjoint view sets of this size.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x731]))
    tie_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x732]))
    correct = 0
    degenerate = 0
    for _ in range(n_triplets):
        a_gid, a_idx, p_idx, n_gid, n_idx = sample_triplet_indices(
            dataset, split, views_per_stack, rng)
        vecs = []
        for gid, idx in ((a_gid, a_idx), (a_gid, p_idx), (n_gid, n_idx)):
            acts = trace_fn(dataset.load_views(gid, idx))
            if layer not in acts:
                raise KeyError(f"layer {layer!r} not in trace (have {sorted(acts)})")
            vecs.append(np.asarray(acts[layer], dtype=np.float64).reshape(-1))
        pick, degen = _pick_most_correlated(vecs, tie_rng)
        degenerate += degen
        correct += (pick == 0)
    return TripletEvalReport(
        layer=layer, accuracy=correct / n_triplets, n_triplets=n_triplets,
        n_degenerate=degenerate, split=split,
    )
