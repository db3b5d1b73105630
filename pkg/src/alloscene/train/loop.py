"""Training loop: stack sampling, loss assembly, optimization, metric
logging and checkpointing.

Reconstruction training decodes a random pixel subset per step (an
unbiased estimate of the full-frame loss, scaled to full-frame units);
the reported reconstruction metric and all evaluation paths always use
the complete grid. Single-worker runs are deterministic given the seed:
two runs produce identical metric logs up to wall-clock fields.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..model.checkpoint import save_checkpoint
from ..model.network import ModelState, forward
from .losses import LossConfig, hd_aux_loss, recon_loss, triplet_loss
from .optimizer import Adam, LRSchedule
from .sampler import sample_stack, sample_triplets


@dataclass
class TrainConfig:
    steps: int = 1000
    batch_size: int = 1
    lr: float = 4e-4
    schedule: str = "fixed"          # fixed | cosine
    lr_min: float = 1e-5
    seed: int = 0
    views_per_stack: int = 4
    pixel_samples: int | None = None  # decoded pixels per frame per step
    log_every: int = 50
    checkpoint_every: int = 0         # 0 = final checkpoint only

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


class MetricLog:
    """Append-only JSON-lines metric log."""

    def __init__(self, path: str | None):
        self.path = path
        self.rows: list[dict] = []
        if path:
            os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
            self._f = open(path, "w")
        else:
            self._f = None

    def append(self, row: dict):
        self.rows.append(row)
        if self._f:
            self._f.write(json.dumps(row) + "\n")
            self._f.flush()

    def close(self):
        if self._f:
            self._f.close()


def _stack_embedding(trace, layer: str) -> T.Tensor:
    """Per-stack embedding: the layer's activations averaged over the
    leading (time) axis when one exists."""
    act = trace[layer]
    if act.ndim > 1:
        flat = T.reshape(act, (act.shape[0], -1))
        return T.reduce_mean(flat, axis=0)
    return act


def train(state: ModelState, dataset, loss_cfg: LossConfig, train_cfg: TrainConfig,
          out_dir: str | None = None, progress: bool = False) -> list[dict]:
    """Optimize the model in place; returns the metric rows.

    Writes metrics.jsonl and checkpoint files under out_dir when given.
    Steps whose gradients come back non-finite are rejected (parameters
    untouched) and recorded in the log with "rejected": true.
    """
    cfg = state.config
    rng = np.random.default_rng(np.random.SeedSequence([train_cfg.seed, 0x7121]))
    schedule = LRSchedule(kind=train_cfg.schedule, lr=train_cfg.lr,
                          lr_min=train_cfg.lr_min, total_steps=train_cfg.steps)
    opt = Adam(state.params)
    log = MetricLog(os.path.join(out_dir, "metrics.jsonl") if out_dir else None)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    t_stack = train_cfg.views_per_stack
    h, w = cfg.image_size
    use_triplet = loss_cfg.loss_mode in ("triplet", "both")
    use_recon = loss_cfg.loss_mode in ("recon", "both")

    for step in range(1, train_cfg.steps + 1):
        t0 = time.perf_counter()
        state.zero_grad()
        parts: dict[str, float] = {}
        total = None
        hd_terms = []

        if use_triplet:
            batch = sample_triplets(dataset, train_cfg.batch_size, rng, t_stack)
            embeds = {"a": [], "p": [], "n": []}
            for key, stacks, azs in (("a", batch.anchor, batch.anchor_azimuths),
                                     ("p", batch.positive, batch.positive_azimuths),
                                     ("n", batch.negative, batch.negative_azimuths)):
                for b in range(stacks.shape[0]):
                    tr = forward(state, stacks[b], decode=False)
                    embeds[key].append(_stack_embedding(tr, loss_cfg.triplet_layer))
                    if loss_cfg.aux_hd_weight > 0 and azs is not None:
                        hd_terms.append(hd_aux_loss(tr.aux["hd_pred"], azs[b]))
            l_trip = triplet_loss(T.stack(embeds["a"]), T.stack(embeds["p"]),
                                  T.stack(embeds["n"]), loss_cfg.margin,
                                  form=loss_cfg.triplet_form)
            parts["loss_triplet"] = l_trip.item()
            total = l_trip * loss_cfg.triplet_weight

        if use_recon:
            gids = dataset.group_ids("train")
            recon_losses = []
            for _ in range(train_cfg.batch_size):
                gid = gids[rng.integers(len(gids))]
                idx, views = sample_stack(dataset, gid, t_stack, rng)
                if train_cfg.pixel_samples and train_cfg.pixel_samples < h * w:
                    pix = rng.choice(h * w, size=train_cfg.pixel_samples, replace=False)
                    tr = forward(state, views, decode=True, pixel_indices=pix)
                    target = views.reshape(t_stack, h * w, 3)[:, pix, :]
                    scale = (h * w) / train_cfg.pixel_samples
                    l_rec = T.sum_((T.Tensor(target.astype(tr.aux["recon_sampled"].dtype))
                                    - tr.aux["recon_sampled"]) ** 2.0) * scale
                else:
                    tr = forward(state, views, decode=True)
                    l_rec = recon_loss(views, tr.layers["recon"])
                recon_losses.append(l_rec)
                if loss_cfg.aux_hd_weight > 0 and hasattr(dataset, "view_pose"):
                    azs = np.array([dataset.view_pose(gid, i).azimuth for i in idx])
                    hd_terms.append(hd_aux_loss(tr.aux["hd_pred"], azs))
            l_recon = recon_losses[0]
            for extra in recon_losses[1:]:
                l_recon = l_recon + extra
            l_recon = l_recon * (1.0 / len(recon_losses))
            parts["loss_recon"] = l_recon.item()
            term = l_recon * loss_cfg.recon_weight
            total = term if total is None else total + term

        if hd_terms:
            l_hd = hd_terms[0]
            for extra in hd_terms[1:]:
                l_hd = l_hd + extra
            l_hd = l_hd * (1.0 / len(hd_terms))
            parts["loss_hd"] = l_hd.item()
            total = total + l_hd * loss_cfg.aux_hd_weight

        total.backward()
        lr = schedule.at(step - 1)
        ok = opt.step(lr)

        if step % train_cfg.log_every == 0 or step == train_cfg.steps or not ok:
            row = {"step": step, "loss_total": total.item(), **parts,
                   "lr": lr, "wall_ms": (time.perf_counter() - t0) * 1e3}
            if not ok:
                row["rejected"] = True
            log.append(row)
            if progress:
                msg = ", ".join(f"{k}={v:.4g}" for k, v in row.items() if k != "wall_ms")
                print(f"  {msg}")

        if out_dir and train_cfg.checkpoint_every and step % train_cfg.checkpoint_every == 0:
            save_checkpoint(state, os.path.join(out_dir, f"checkpoint_{step:07d}.bin"))

    if out_dir:
        save_checkpoint(state, os.path.join(out_dir, "checkpoint_final.bin"))
    log.close()
    return log.rows
