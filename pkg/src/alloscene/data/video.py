"""Ingestion of external video+mask corpora and a bundled synthetic
moving-squares generator for exercising the video path.

Expected folder layout (configurable via the layout descriptor):

    <root>/video_0000/frame_000.png ... frame_TTT.png
    <root>/video_0000/mask_000.png  (optional, single-channel labels)
    <root>/video_0001/...

All videos in one corpus must share the frame count; masks, when
present, must exist for every frame. Frames are resized bilinearly to
the requested size, masks with nearest neighbour so the label set is
preserved exactly.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

DEFAULT_LAYOUT = {
    "video_glob": "video_*",
    "frame_glob": "frame_*.png",
    "mask_glob": "mask_*.png",
}


@dataclass
class VideoDatasetIndex:
    """Catalog of one ingested corpus: file lists per video plus split."""

    root: str
    videos: list = field(default_factory=list)  # {"frames": [...], "masks": [...]|None}
    frame_count: int = 0
    fps: float = 10.0
    split: dict = field(default_factory=dict)

    @property
    def has_masks(self) -> bool:
        return all(v["masks"] is not None for v in self.videos)


def ingest_video_dataset(root: str, layout: dict | None = None,
                         train_fraction: float = 0.9) -> VideoDatasetIndex:
    """Scan a frame-folder corpus into an index.

    Raises ValueError listing the offenders when videos have ragged
    frame counts or masks that do not match their frames.
    """
    lay = dict(DEFAULT_LAYOUT)
    if layout:
        lay.update(layout)
    vdirs = sorted(glob.glob(os.path.join(root, lay["video_glob"])))
    vdirs = [d for d in vdirs if os.path.isdir(d)]
    if not vdirs:
        raise ValueError(f"{root}: no video directories match {lay['video_glob']!r}")
    videos = []
    lengths = {}
    for d in vdirs:
        frames = sorted(glob.glob(os.path.join(d, lay["frame_glob"])))
        if not frames:
            raise ValueError(f"{d}: no frames match {lay['frame_glob']!r}")
        masks = sorted(glob.glob(os.path.join(d, lay["mask_glob"])))
        if masks and len(masks) != len(frames):
            raise ValueError(f"{d}: {len(frames)} frames but {len(masks)} masks")
        videos.append({"frames": frames, "masks": masks or None})
        lengths[d] = len(frames)
    counts = set(lengths.values())
    if len(counts) > 1:
        ragged = {d: n for d, n in lengths.items() if n != max(counts, key=list(lengths.values()).count)}
        raise ValueError(f"ragged video lengths: {ragged}")
    n = len(videos)
    n_train = min(max(int(round(train_fraction * n)), 1), n)
    if n_train == n and n > 1:
        n_train -= 1
    split = {"train": list(range(n_train)), "test": list(range(n_train, n))}
    return VideoDatasetIndex(root=root, videos=videos,
                             frame_count=counts.pop(), split=split)


class VideoDataset:
    """Dataset-protocol adapter over a VideoDatasetIndex.

    Training stacks are contiguous frame windows (temporal coherence is
    the whole point of video input).
    """

    def __init__(self, index: VideoDatasetIndex, image_size: tuple[int, int]):
        self.index = index
        self._size = tuple(image_size)
        self._rgb_cache: dict = {}
        self._mask_cache: dict = {}

    @property
    def image_size(self) -> tuple[int, int]:
        return self._size

    def group_ids(self, split: str = "all") -> list[int]:
        if split == "all":
            return list(range(len(self.index.videos)))
        return list(self.index.split[split])

    def n_views(self, gid: int) -> int:
        return self.index.frame_count

    def load_view(self, gid: int, idx: int) -> np.ndarray:
        key = (gid, idx)
        if key not in self._rgb_cache:
            h, w = self._size
            img = Image.open(self.index.videos[gid]["frames"][idx]).convert("RGB")
            if img.size != (w, h):
                img = img.resize((w, h), Image.BILINEAR)
            self._rgb_cache[key] = np.asarray(img, dtype=np.float32) / 255.0
        return self._rgb_cache[key]

    def load_views(self, gid: int, indices) -> np.ndarray:
        return np.stack([self.load_view(gid, i) for i in indices])

    def load_mask(self, gid: int, idx: int) -> np.ndarray | None:
        masks = self.index.videos[gid]["masks"]
        if masks is None:
            return None
        key = (gid, idx)
        if key not in self._mask_cache:
            h, w = self._size
            img = Image.open(masks[idx])
            if img.size != (w, h):
                img = img.resize((w, h), Image.NEAREST)
            self._mask_cache[key] = np.asarray(img, dtype=np.uint8)
        return self._mask_cache[key]

    def load_masks(self, gid: int, indices):
        out = [self.load_mask(gid, i) for i in indices]
        if any(m is None for m in out):
            return None
        return np.stack(out)

    def sample_view_indices(self, gid: int, t: int, rng: np.random.Generator) -> np.ndarray:
        n = self.n_views(gid)
        if t > n:
            raise ValueError(f"video {gid} has {n} frames, cannot take a window of {t}")
        start = int(rng.integers(0, n - t + 1))
        return np.arange(start, start + t)


# ----------------------------------------------------------------------
# synthetic moving squares

def generate_moving_squares(out_dir: str, n_videos: int = 4, frames: int = 16,
                            size: tuple[int, int] = (32, 32), n_squares: int = 2,
                            seed: int = 0) -> str:
    """Write a tiny synthetic corpus: coloured squares drifting over a
    black background, with exact segmentation masks. Used to exercise
    the ingestion, training and segmentation-metric path end to end."""
    h, w = size
    colors = np.array([
        [230, 60, 60], [60, 120, 230], [60, 200, 90], [230, 200, 60],
        [200, 70, 200], [70, 210, 210],
    ], dtype=np.uint8)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5907]))
    for vi in range(n_videos):
        vdir = os.path.join(out_dir, f"video_{vi:04d}")
        os.makedirs(vdir, exist_ok=True)
        side = rng.integers(max(4, h // 5), max(6, h // 3), size=n_squares)
        pos = rng.uniform(0, [h - 1, w - 1], size=(n_squares, 2)) - side[:, None] / 2
        vel = rng.uniform(-1.5, 1.5, size=(n_squares, 2))
        cidx = rng.choice(len(colors), size=n_squares, replace=False)
        for f in range(frames):
            rgb = np.zeros((h, w, 3), dtype=np.uint8)
            lab = np.zeros((h, w), dtype=np.uint8)
            for sq in range(n_squares):
                r0, c0 = pos[sq] + f * vel[sq]
                # bounce off the borders
                span_r, span_c = h - side[sq], w - side[sq]
                r0 = abs(((r0 + span_r) % (2 * span_r)) - span_r)
                c0 = abs(((c0 + span_c) % (2 * span_c)) - span_c)
                r0, c0 = int(round(r0)), int(round(c0))
                rgb[r0:r0 + side[sq], c0:c0 + side[sq]] = colors[cidx[sq]]
                lab[r0:r0 + side[sq], c0:c0 + side[sq]] = sq + 1
            Image.fromarray(rgb, mode="RGB").save(os.path.join(vdir, f"frame_{f:03d}.png"))
            Image.fromarray(lab, mode="L").save(os.path.join(vdir, f"mask_{f:03d}.png"))
    return out_dir
