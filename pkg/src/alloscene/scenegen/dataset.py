"""Dataset generation and the on-disk layout.

Layout (all paths under the chosen root):

    manifest.json                  variant, counts, size, seed, split lists
    scene_00000/meta.json          scene spec + per-view pose and screen_pos
    scene_00000/view_000.rgb.png   8-bit RGB
    scene_00000/view_000.mask.png  8-bit labels (0 bg, 1..n objects, 255 ridge)
    scene_00000/view_000.depth.png 16-bit; meta stores depth_min/depth_max
                                   per view for dequantization

The manifest is written last, so its presence marks a complete dataset;
interrupted runs leave no manifest and are rejected by the loader.
Generation is a pure function of (manifest, seed): re-running produces
byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np
from PIL import Image

from .camera import CameraPose, sample_ring_poses, sample_agent_poses
from .scene import SceneSpec, Variant, plan_object_counts, sample_scene

FORMAT_VERSION = 1

DEFAULT_ELEVATION_BAND_DEG = (15.0, 60.0)
DEFAULT_CAMERA_RADIUS_FACTOR = 1.5
DEFAULT_ARENA_RADIUS = 5.0
DEFAULT_VFOV_DEG = 60.0


@dataclass
class DatasetManifest:
    """Everything needed to (re)generate or load one dataset."""

    variant: str                       # e.g. "mix_landmark"
    scenes: int
    views_per_scene: int
    image_size: tuple[int, int]        # (H, W)
    seed: int
    train_fraction: float = 0.9
    agent_views: int = 0
    arena_radius: float = DEFAULT_ARENA_RADIUS
    camera_radius_factor: float = DEFAULT_CAMERA_RADIUS_FACTOR
    elevation_band_deg: tuple[float, float] = DEFAULT_ELEVATION_BAND_DEG
    vfov_deg: float = DEFAULT_VFOV_DEG
    count_mixture: dict[int, float] | None = None   # None = standard 10/20/30/40
    split: dict | None = None          # filled at generation time

    def __post_init__(self):
        Variant.from_tag(self.variant)  # validate tag
        self.image_size = tuple(self.image_size)
        self.elevation_band_deg = tuple(self.elevation_band_deg)

    @property
    def total_views_per_scene(self) -> int:
        return self.views_per_scene + self.agent_views

    def to_json(self) -> dict:
        d = asdict(self)
        d["format_version"] = FORMAT_VERSION
        d["image_size"] = list(self.image_size)
        d["elevation_band_deg"] = list(self.elevation_band_deg)
        if self.count_mixture is not None:
            d["count_mixture"] = {str(k): v for k, v in self.count_mixture.items()}
        return d

    @classmethod
    def from_json(cls, d: dict) -> "DatasetManifest":
        d = dict(d)
        version = d.pop("format_version", None)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported dataset format version {version!r}")
        if d.get("count_mixture") is not None:
            d["count_mixture"] = {int(k): v for k, v in d["count_mixture"].items()}
        return cls(**d)


# ----------------------------------------------------------------------
# image file helpers

def write_rgb(path: str, rgb: np.ndarray):
    Image.fromarray(rgb, mode="RGB").save(path)


def write_mask(path: str, mask: np.ndarray):
    Image.fromarray(mask, mode="L").save(path)


def write_depth(path: str, depth: np.ndarray) -> tuple[float, float]:
    """Quantize to 16 bits; returns (depth_min, depth_max) for meta.json."""
    dmin = float(depth.min())
    dmax = float(depth.max())
    if dmax > dmin:
        q = np.round((depth - dmin) / (dmax - dmin) * 65535.0).astype(np.uint16)
    else:
        q = np.zeros_like(depth, dtype=np.uint16)
    Image.fromarray(q).save(path)
    return dmin, dmax


def read_rgb(path: str) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)


def read_mask(path: str) -> np.ndarray:
    return np.asarray(Image.open(path), dtype=np.uint8)


def read_depth(path: str, depth_min: float, depth_max: float) -> np.ndarray:
    q = np.asarray(Image.open(path), dtype=np.float64)
    return (q / 65535.0 * (depth_max - depth_min) + depth_min).astype(np.float32)


# ----------------------------------------------------------------------
# generation

def scene_dir(root: str, index: int) -> str:
    return os.path.join(root, f"scene_{index:05d}")


def view_paths(root: str, scene_index: int, view_index: int) -> dict:
    base = os.path.join(scene_dir(root, scene_index), f"view_{view_index:03d}")
    return {"rgb": base + ".rgb.png", "mask": base + ".mask.png", "depth": base + ".depth.png"}


def sample_dataset_scene(manifest: DatasetManifest, index: int,
                         object_count: int) -> SceneSpec:
    """Deterministic scene for one corpus slot."""
    seed = int(np.random.default_rng(
        np.random.SeedSequence([manifest.seed, 1, index])).integers(2 ** 31))
    return sample_scene(
        seed=seed,
        variant=Variant.from_tag(manifest.variant),
        arena_radius=manifest.arena_radius,
        object_count=object_count,
        scene_id=index,
    )


def sample_dataset_poses(manifest: DatasetManifest, index: int) -> list[CameraPose]:
    rng = np.random.default_rng(np.random.SeedSequence([manifest.seed, 2, index]))
    lo, hi = (math.radians(a) for a in manifest.elevation_band_deg)
    poses = sample_ring_poses(
        rng, manifest.views_per_scene,
        radius=manifest.camera_radius_factor * manifest.arena_radius,
        elevation_band=(lo, hi),
    )
    if manifest.agent_views:
        poses += sample_agent_poses(rng, manifest.agent_views, manifest.arena_radius)
    return poses


def make_split(manifest: DatasetManifest) -> dict:
    """Seeded train/test partition of scene ids."""
    ids = np.arange(manifest.scenes)
    rng = np.random.default_rng(np.random.SeedSequence([manifest.seed, 3]))
    rng.shuffle(ids)
    n_train = int(round(manifest.train_fraction * manifest.scenes))
    n_train = min(max(n_train, 1), manifest.scenes)
    if n_train == manifest.scenes and manifest.scenes > 1:
        n_train -= 1
    return {
        "train": sorted(int(i) for i in ids[:n_train]),
        "test": sorted(int(i) for i in ids[n_train:]),
    }


def generate_dataset(manifest: DatasetManifest, out_dir: str,
                     progress: bool = False) -> DatasetManifest:
    """Render the full corpus under out_dir; returns the manifest with
    the split filled in. Fully reproducible from the manifest alone."""
    from .rasterize import build_scene_meshes, render_view

    os.makedirs(out_dir, exist_ok=True)
    stale = os.path.join(out_dir, "manifest.json")
    if os.path.exists(stale):
        os.remove(stale)

    vfov = math.radians(manifest.vfov_deg)
    counts = plan_object_counts(manifest.scenes, manifest.seed, manifest.count_mixture)
    for idx in range(manifest.scenes):
        scene = sample_dataset_scene(manifest, idx, counts[idx])
        poses = sample_dataset_poses(manifest, idx)
        meshes = build_scene_meshes(scene)
        sdir = scene_dir(out_dir, idx)
        os.makedirs(sdir, exist_ok=True)
        views_meta = []
        for v, pose in enumerate(poses):
            rec = render_view(scene, pose, manifest.image_size, vfov=vfov, meshes=meshes)
            paths = view_paths(out_dir, idx, v)
            write_rgb(paths["rgb"], rec.rgb)
            write_mask(paths["mask"], rec.mask)
            dmin, dmax = write_depth(paths["depth"], rec.depth)
            views_meta.append({
                "pose": pose.to_json(),
                "screen_pos": [list(p) if p is not None else None for p in rec.screen_pos],
                "depth_min": dmin,
                "depth_max": dmax,
            })
        with open(os.path.join(sdir, "meta.json"), "w") as f:
            json.dump({"scene": scene.to_json(), "views": views_meta}, f, indent=1)
        if progress and (idx + 1) % 20 == 0:
            print(f"  rendered {idx + 1}/{manifest.scenes} scenes")

    manifest.split = make_split(manifest)
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest.to_json(), f, indent=1)
    return manifest
