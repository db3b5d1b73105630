"""View-invariance score of a layer.

Per neuron and scene we compute the coefficient of variation of the
activation across single-view passes over that scene's images,
CV = std / (|mean| + eps). The layer score is -mean(ln(CV + eps)) over
neurons and scenes: a neuron that responds identically to every view of
a scene contributes the (clipped) maximum, a neuron that fluctuates
contributes negatively. Per-image activations come from running each
view through the network as a one-view stack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-6


@dataclass
class AllocentricityResult:
    layer: str
    score: float | None          # None when the layer is dead everywhere
    dead_layer: bool
    n_scenes: int
    per_scene: np.ndarray        # mean score per scene


def allocentricity(trace_fn, dataset, layer: str, split: str = "test",
                   max_scenes: int | None = None,
                   views_per_scene: int | None = None) -> AllocentricityResult:
    """Score view invariance of one layer over same-scene image groups.

    Args:
        trace_fn: stack -> {layer: array}; called with one-view stacks.
        dataset: dataset-protocol object with at least 2 views per scene.
        layer: activation name.
        split: which scenes to measure.
        max_scenes / views_per_scene: optional caps to bound runtime.
    """
    gids = dataset.group_ids(split)
    if max_scenes is not None:
        gids = gids[:max_scenes]
    per_scene = []
    any_alive = False
    for gid in gids:
        n = dataset.n_views(gid)
        if views_per_scene is not None:
            n = min(n, views_per_scene)
        if n < 2:
            raise ValueError(f"scene {gid} has fewer than 2 views")
        acts = np.stack([
            np.asarray(trace_fn(dataset.load_views(gid, [i]))[layer],
                       dtype=np.float64).reshape(-1)
            for i in range(n)
        ])                                    # [views, units]
        if (acts != 0).any():
            any_alive = True
        cv = acts.std(axis=0) / (np.abs(acts.mean(axis=0)) + EPS)
        per_scene.append(-np.mean(np.log(cv + EPS)))
    per_scene = np.array(per_scene)
    if not any_alive:
        return AllocentricityResult(layer, None, True, len(gids), per_scene)
    return AllocentricityResult(layer, float(per_scene.mean()), False, len(gids), per_scene)
