"""Triplet and stack sampling from a dataset.

A triplet element is a stack of views: anchor and positive come from
the same scene with disjoint view indices, the negative from a
different scene chosen uniformly. Sampling is fully determined by the
generator passed in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TripletBatch:
    anchor: np.ndarray        # [B, T, H, W, 3]
    positive: np.ndarray
    negative: np.ndarray
    scene_ids: list           # [(anchor_id, negative_id)] per element
    anchor_azimuths: np.ndarray | None = None   # [B, T] when poses exist
    positive_azimuths: np.ndarray | None = None
    negative_azimuths: np.ndarray | None = None


def sample_stack(dataset, gid: int, t: int, rng: np.random.Generator):
    idx = dataset.sample_view_indices(gid, t, rng)
    return idx, dataset.load_views(gid, idx)


def _azimuths(dataset, gid, indices):
    if not hasattr(dataset, "view_pose"):
        return None
    return np.array([dataset.view_pose(gid, i).azimuth for i in indices])


def sample_triplet_indices(dataset, split: str, t: int, rng: np.random.Generator):
    """(anchor_gid, anchor_idx, positive_idx, negative_gid, negative_idx).

    Anchor/positive view sets are disjoint, which requires scenes with
    at least 2*t views.
    """
    gids = dataset.group_ids(split)
    if len(gids) < 2:
        raise ValueError(f"triplet sampling needs at least 2 scenes in split {split!r}")
    a_gid = gids[rng.integers(len(gids))]
    n_views = dataset.n_views(a_gid)
    if n_views < 2 * t:
        raise ValueError(
            f"scene {a_gid} has {n_views} views; disjoint anchor/positive "
            f"stacks of {t} need at least {2 * t}")
    perm = rng.permutation(n_views)
    a_idx, p_idx = perm[:t], perm[t:2 * t]
    n_gid = a_gid
    while n_gid == a_gid:
        n_gid = gids[rng.integers(len(gids))]
    n_idx = dataset.sample_view_indices(n_gid, t, rng)
    return a_gid, a_idx, p_idx, n_gid, n_idx


def sample_triplets(dataset, batch_size: int, rng: np.random.Generator,
                    views_per_stack: int, split: str = "train") -> TripletBatch:
    anchors, positives, negatives, ids = [], [], [], []
    az_a, az_p, az_n = [], [], []
    for _ in range(batch_size):
        a_gid, a_idx, p_idx, n_gid, n_idx = sample_triplet_indices(
            dataset, split, views_per_stack, rng)
        anchors.append(dataset.load_views(a_gid, a_idx))
        positives.append(dataset.load_views(a_gid, p_idx))
        negatives.append(dataset.load_views(n_gid, n_idx))
        ids.append((a_gid, n_gid))
        for acc, gid, idx in ((az_a, a_gid, a_idx), (az_p, a_gid, p_idx), (az_n, n_gid, n_idx)):
            az = _azimuths(dataset, gid, idx)
            if az is not None:
                acc.append(az)
    return TripletBatch(
        anchor=np.stack(anchors), positive=np.stack(positives),
        negative=np.stack(negatives), scene_ids=ids,
        anchor_azimuths=np.stack(az_a) if az_a else None,
        positive_azimuths=np.stack(az_p) if az_p else None,
        negative_azimuths=np.stack(az_n) if az_n else None,
    )
