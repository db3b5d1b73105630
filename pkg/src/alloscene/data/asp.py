"""Loader for generated arena datasets.

Every dataset object (this one and the video one) presents the same
minimal protocol to training and evaluation code:

    image_size              -> (H, W)
    group_ids(split)        -> scene/video ids for "train"/"test"/"all"
    n_views(gid)            -> views available in one group
    load_views(gid, idxs)   -> float32 [T, H, W, 3] in [0, 1]
    load_masks(gid, idxs)   -> uint8 [T, H, W] or None
    sample_view_indices(gid, t, rng) -> index array for one training stack

The arena loader adds pose/screen-position/scene metadata accessors
used by the probing and ratemap analyses. Views load lazily and stay
cached; file shape mismatches raise naming the offending file.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..scenegen.camera import CameraPose
from ..scenegen.dataset import DatasetManifest, read_depth, read_mask, read_rgb, scene_dir, view_paths
from ..scenegen.scene import SceneSpec


class LoadError(RuntimeError):
    pass


class AspDataset:
    def __init__(self, root: str, manifest: DatasetManifest, metas: list[dict]):
        self.root = root
        self.manifest = manifest
        self._metas = metas
        self._scenes = [SceneSpec.from_json(m["scene"]) for m in metas]
        self._poses = [[CameraPose.from_json(v["pose"]) for v in m["views"]] for m in metas]
        self._rgb_cache: dict = {}
        self._mask_cache: dict = {}

    # ------------------------------------------------------------------
    # common protocol

    @property
    def image_size(self) -> tuple[int, int]:
        return tuple(self.manifest.image_size)

    def group_ids(self, split: str = "all") -> list[int]:
        if split == "all":
            return list(range(self.manifest.scenes))
        if split not in ("train", "test"):
            raise ValueError(f"unknown split {split!r}")
        return list(self.manifest.split[split])

    def n_views(self, gid: int) -> int:
        return len(self._metas[gid]["views"])

    def _check_shape(self, arr: np.ndarray, path: str, channels: int | None):
        expect = self.image_size if channels is None else (*self.image_size, channels)
        if arr.shape != expect:
            raise LoadError(f"{path}: shape {arr.shape} does not match manifest {expect}")

    def load_view(self, gid: int, idx: int) -> np.ndarray:
        key = (gid, idx)
        if key not in self._rgb_cache:
            path = view_paths(self.root, gid, idx)["rgb"]
            try:
                arr = read_rgb(path)
            except OSError as e:
                raise LoadError(f"{path}: {e}") from e
            self._check_shape(arr, path, 3)
            self._rgb_cache[key] = arr.astype(np.float32) / 255.0
        return self._rgb_cache[key]

    def load_views(self, gid: int, indices) -> np.ndarray:
        return np.stack([self.load_view(gid, i) for i in indices])

    def load_mask(self, gid: int, idx: int) -> np.ndarray:
        key = (gid, idx)
        if key not in self._mask_cache:
            path = view_paths(self.root, gid, idx)["mask"]
            try:
                arr = read_mask(path)
            except OSError as e:
                raise LoadError(f"{path}: {e}") from e
            self._check_shape(arr, path, None)
            self._mask_cache[key] = arr
        return self._mask_cache[key]

    def load_masks(self, gid: int, indices) -> np.ndarray:
        return np.stack([self.load_mask(gid, i) for i in indices])

    def sample_view_indices(self, gid: int, t: int, rng: np.random.Generator) -> np.ndarray:
        n = self.n_views(gid)
        if t > n:
            raise ValueError(f"scene {gid} has {n} views, cannot sample a stack of {t}")
        return rng.choice(n, size=t, replace=False)

    # ------------------------------------------------------------------
    # arena metadata

    def scene_spec(self, gid: int) -> SceneSpec:
        return self._scenes[gid]

    def view_pose(self, gid: int, idx: int) -> CameraPose:
        return self._poses[gid][idx]

    def view_screen_pos(self, gid: int, idx: int) -> list:
        sp = self._metas[gid]["views"][idx]["screen_pos"]
        return [tuple(p) if p is not None else None for p in sp]

    def load_depth(self, gid: int, idx: int) -> np.ndarray:
        meta = self._metas[gid]["views"][idx]
        path = view_paths(self.root, gid, idx)["depth"]
        try:
            arr = read_depth(path, meta["depth_min"], meta["depth_max"])
        except OSError as e:
            raise LoadError(f"{path}: {e}") from e
        self._check_shape(arr, path, None)
        return arr


def load_asp(root: str) -> AspDataset:
    """Open a generated dataset directory.

    The manifest is required (it is written last during generation, so
    its absence marks an incomplete run).
    """
    mpath = os.path.join(root, "manifest.json")
    if not os.path.exists(mpath):
        raise LoadError(f"{mpath}: missing manifest (incomplete or not a dataset)")
    with open(mpath) as f:
        manifest = DatasetManifest.from_json(json.load(f))
    metas = []
    for idx in range(manifest.scenes):
        mp = os.path.join(scene_dir(root, idx), "meta.json")
        try:
            with open(mp) as f:
                meta = json.load(f)
        except OSError as e:
            raise LoadError(f"{mp}: {e}") from e
        if len(meta["views"]) != manifest.total_views_per_scene:
            raise LoadError(
                f"{mp}: {len(meta['views'])} views, manifest expects "
                f"{manifest.total_views_per_scene}")
        metas.append(meta)
    return AspDataset(root, manifest, metas)
