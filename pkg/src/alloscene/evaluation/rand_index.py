"""Adjusted Rand index over pixel labelings.

The Hubert-Arabie form computed from the label contingency table with
exact integer arithmetic. One video (all frames jointly) is one
clustering problem. The foreground variant restricts the comparison to
pixels whose TRUE label differs from the background label, so a
predictor is never penalized for how it carves up the background.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np


@dataclass
class SegmentationResult:
    """Predicted vs true per-pixel labels for one video/stack."""

    pred_labels: np.ndarray    # [T, H, W] int slot indices
    true_labels: np.ndarray    # [T, H, W] int mask labels
    background_label: int = 0

    def __post_init__(self):
        if self.pred_labels.shape != self.true_labels.shape:
            raise ValueError(
                f"label shapes differ: pred {self.pred_labels.shape} "
                f"vs true {self.true_labels.shape}")

    def ari(self) -> float:
        return ari(self.true_labels, self.pred_labels)

    def fg_ari(self) -> float:
        return fg_ari(self.true_labels, self.pred_labels, self.background_label)


def _contingency(a: np.ndarray, b: np.ndarray):
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    na, nb = ai.max() + 1, bi.max() + 1
    table = np.zeros((na, nb), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def ari(true_labels, pred_labels) -> float:
    """Adjusted Rand index in [-1, 1] over all entries jointly.

    Degenerate case: when both labelings are a single cluster (or both
    all singletons) the partitions are identical and the index is 1.
    """
    a = np.asarray(true_labels).reshape(-1)
    b = np.asarray(pred_labels).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"label arrays differ in size: {a.shape} vs {b.shape}")
    n = a.size
    if n == 0:
        raise ValueError("empty labelings")
    table = _contingency(a, b)
    sum_ij = int(sum(comb(int(v), 2) for v in table.reshape(-1)))
    sum_a = int(sum(comb(int(v), 2) for v in table.sum(axis=1)))
    sum_b = int(sum(comb(int(v), 2) for v in table.sum(axis=0)))
    total = comb(n, 2)
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def fg_ari(true_labels, pred_labels, background_label: int = 0) -> float:
    """ARI restricted to pixels whose TRUE label is not background.

    Raises ValueError when no foreground pixels exist (undefined).
    """
    a = np.asarray(true_labels).reshape(-1)
    b = np.asarray(pred_labels).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"label arrays differ in size: {a.shape} vs {b.shape}")
    fg = a != background_label
    if not fg.any():
        raise ValueError("no foreground pixels: foreground ARI undefined")
    return ari(a[fg], b[fg])
