"""Allocentric scene specifications and procedural scene sampling.

A scene is a circular arena containing one to four circularly symmetric
objects (cones, cylinders, hemispheres) at sampled ground positions,
plus a variant flag controlling the colour palette and the presence of
the distal mountain-ridge landmark. Object-count proportions over a
corpus follow a fixed mixture (10/20/30/40 percent for 1/2/3/4 objects)
by stratified assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

# Mutually distinguishable object colours for the "mix" palette, chosen
# to contrast with the grey floor and with each other.
MIX_PALETTE = (
    (0.85, 0.12, 0.12),   # red
    (0.95, 0.55, 0.08),   # orange
    (0.92, 0.88, 0.12),   # yellow
    (0.15, 0.75, 0.20),   # green
    (0.10, 0.75, 0.80),   # cyan
    (0.15, 0.25, 0.90),   # blue
    (0.80, 0.15, 0.85),   # magenta
    (0.55, 0.30, 0.10),   # brown
)
GREEN_COLOR = (0.10, 0.65, 0.15)
WHITE_COLOR = (0.95, 0.95, 0.95)

SHAPES = ("cone", "cylinder", "hemisphere")

# corpus-level object-count mixture: fraction of scenes with 1..4 objects
DEFAULT_COUNT_MIXTURE = {1: 0.10, 2: 0.20, 3: 0.30, 4: 0.40}

PALETTES = ("mix", "green", "white")
VARIANT_TAGS = tuple(
    f"{p}_{l}" for p in PALETTES for l in ("landmark", "nolandmark")
)


class PlacementError(RuntimeError):
    """Raised when non-overlapping object placement cannot be found."""


@dataclass
class Variant:
    """Dataset variant: palette x landmark presence (six combinations)."""

    landmark: bool
    palette: str  # mix | green | white

    def __post_init__(self):
        if self.palette not in PALETTES:
            raise ValueError(f"unknown palette {self.palette!r}, expected one of {PALETTES}")

    @property
    def tag(self) -> str:
        return f"{self.palette}_{'landmark' if self.landmark else 'nolandmark'}"

    @classmethod
    def from_tag(cls, tag: str) -> "Variant":
        try:
            palette, lm = tag.rsplit("_", 1)
        except ValueError:
            raise ValueError(f"bad variant tag {tag!r}") from None
        if lm not in ("landmark", "nolandmark") or palette not in PALETTES:
            raise ValueError(f"bad variant tag {tag!r}, expected one of {VARIANT_TAGS}")
        return cls(landmark=(lm == "landmark"), palette=palette)


@dataclass
class SceneObject:
    allocentric_pos: tuple[float, float]
    shape: str
    radius: float
    height: float
    color: tuple[float, float, float]


@dataclass
class SceneSpec:
    """Full allocentric description of one scene."""

    scene_id: int
    object_count: int
    objects: list[SceneObject]
    variant: Variant
    arena_radius: float
    rng_seed: int

    def validate(self):
        if not 1 <= self.object_count <= 4 or len(self.objects) != self.object_count:
            raise ValueError(f"scene {self.scene_id}: bad object count {self.object_count}")
        for i, o in enumerate(self.objects):
            if math.hypot(*o.allocentric_pos) + o.radius >= self.arena_radius:
                raise ValueError(f"scene {self.scene_id}: object {i} leaves the arena")
            for j in range(i):
                p = self.objects[j]
                d = math.dist(o.allocentric_pos, p.allocentric_pos)
                if d <= o.radius + p.radius:
                    raise ValueError(f"scene {self.scene_id}: objects {j} and {i} overlap")
        colors = {o.color for o in self.objects}
        if self.variant.palette == "green" and colors != {GREEN_COLOR}:
            raise ValueError("green palette requires the fixed green colour")
        if self.variant.palette == "white" and colors != {WHITE_COLOR}:
            raise ValueError("white palette requires the fixed white colour")

    def to_json(self) -> dict:
        d = asdict(self)
        d["variant"] = asdict(self.variant)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SceneSpec":
        objs = [SceneObject(
            allocentric_pos=tuple(o["allocentric_pos"]),
            shape=o["shape"], radius=o["radius"], height=o["height"],
            color=tuple(o["color"]),
        ) for o in d["objects"]]
        return cls(
            scene_id=d["scene_id"], object_count=d["object_count"], objects=objs,
            variant=Variant(**d["variant"]), arena_radius=d["arena_radius"],
            rng_seed=d["rng_seed"],
        )


def plan_object_counts(n_scenes: int, seed: int,
                       mixture: dict[int, float] | None = None) -> list[int]:
    """Stratified object-count assignment for a corpus of scenes.

    Exactly round(f_k * N) scenes receive count k (largest-remainder
    correction keeps the total at N), then the assignment is shuffled by
    the seed.
    """
    mixture = mixture or DEFAULT_COUNT_MIXTURE
    counts = sorted(mixture)
    raw = {k: mixture[k] * n_scenes for k in counts}
    alloc = {k: int(round(raw[k])) for k in counts}
    # largest-remainder fixup so allocations sum to n_scenes
    while sum(alloc.values()) > n_scenes:
        k = max(counts, key=lambda k: (alloc[k] - raw[k], k))
        alloc[k] -= 1
    while sum(alloc.values()) < n_scenes:
        k = max(counts, key=lambda k: (raw[k] - alloc[k], k))
        alloc[k] += 1
    plan = [k for k in counts for _ in range(alloc[k])]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0]))
    rng.shuffle(plan)
    return plan


def _palette_colors(variant: Variant, rng: np.random.Generator, n: int):
    if variant.palette == "green":
        return [GREEN_COLOR] * n
    if variant.palette == "white":
        return [WHITE_COLOR] * n
    idx = rng.choice(len(MIX_PALETTE), size=n, replace=False)
    return [MIX_PALETTE[i] for i in idx]


def sample_scene(seed: int, variant: Variant, arena_radius: float = 5.0,
                 object_count: int | None = None, scene_id: int = 0,
                 max_attempts: int = 10_000) -> SceneSpec:
    """Sample one scene with rejection-sampled non-overlapping objects.

    When object_count is None it is drawn from the corpus mixture; corpus
    generation passes the stratified plan explicitly so that histograms
    over a dataset are exact.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5C]))
    if object_count is None:
        ks = sorted(DEFAULT_COUNT_MIXTURE)
        object_count = int(rng.choice(ks, p=[DEFAULT_COUNT_MIXTURE[k] for k in ks]))
    colors = _palette_colors(variant, rng, object_count)

    objects: list[SceneObject] = []
    attempts = 0
    min_gap = 0.15
    while len(objects) < object_count:
        attempts += 1
        if attempts > max_attempts:
            raise PlacementError(
                f"could not place {object_count} objects in arena of radius "
                f"{arena_radius} after {max_attempts} attempts")
        radius = rng.uniform(0.45, 0.85)
        height = rng.uniform(0.9, 1.8)
        shape = SHAPES[rng.integers(len(SHAPES))]
        max_r = arena_radius - radius - min_gap
        rr = max_r * math.sqrt(rng.uniform())
        th = rng.uniform(0.0, 2.0 * math.pi)
        pos = (rr * math.cos(th), rr * math.sin(th))
        ok = all(
            math.dist(pos, o.allocentric_pos) > radius + o.radius + min_gap
            for o in objects
        )
        if not ok:
            continue
        objects.append(SceneObject(
            allocentric_pos=pos, shape=shape, radius=radius, height=height,
            color=colors[len(objects)],
        ))

    spec = SceneSpec(
        scene_id=scene_id, object_count=object_count, objects=objects,
        variant=variant, arena_radius=arena_radius, rng_seed=int(seed),
    )
    spec.validate()
    return spec
