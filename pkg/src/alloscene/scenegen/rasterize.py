"""Software renderer for arena scenes: z-buffered triangle rasterization
for the objects over an analytically ray-cast ground plane, sky and
distal mountain ridge.

Shading is flat per face with a camera headlight (ambient plus diffuse
along the optical axis), which keeps no-landmark renders exactly
invariant under a joint rotation of camera and scene. The floor carries
a rotationally symmetric radial ring pattern so that floor pixels vary
across viewpoints. Depth maps hold euclidean camera-to-surface distance
in meters; sky and ridge pixels receive a deterministic far value.

One pass fills colour, object-index mask and depth from the same
z-buffer, so masks always partition the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraPose, DEFAULT_VFOV, NEAR_PLANE, focal_lengths, project_point
from .scene import SceneSpec

SKY_COLOR = np.array([0.62, 0.78, 0.92])
RIDGE_COLOR = np.array([0.36, 0.31, 0.28])
FLOOR_BASE = np.array([0.46, 0.45, 0.44])
OUTER_GROUND = np.array([0.30, 0.33, 0.27])
AMBIENT = 0.55
DIFFUSE = 0.45

LANDMARK_LABEL = 255

SEGMENTS = 24         # azimuthal tessellation of the circular objects
DOME_BANDS = 6

# the ridge silhouette is part of the world, not of any one scene
RIDGE_SEED = 7341
RIDGE_ANCHORS = 48
RIDGE_PITCH_MIN = 0.04
RIDGE_PITCH_MAX = 0.26


class Ridgeline:
    """Periodic 1-D value-noise silhouette: gaze pitch of the mountain
    tops as a function of world azimuth."""

    def __init__(self, seed: int = RIDGE_SEED, anchors: int = RIDGE_ANCHORS):
        rng = np.random.default_rng(np.random.SeedSequence([seed]))
        self.heights = rng.uniform(RIDGE_PITCH_MIN, RIDGE_PITCH_MAX, size=anchors)
        self.anchors = anchors

    def pitch(self, azimuth: np.ndarray) -> np.ndarray:
        """Ridge pitch at the given world azimuths (radians), cosine
        interpolated between anchors and periodic in 2*pi."""
        x = (np.asarray(azimuth) % (2.0 * math.pi)) / (2.0 * math.pi) * self.anchors
        i0 = np.floor(x).astype(int) % self.anchors
        i1 = (i0 + 1) % self.anchors
        t = x - np.floor(x)
        s = 0.5 * (1.0 - np.cos(np.pi * t))  # cosine ease
        return self.heights[i0] * (1.0 - s) + self.heights[i1] * s


_DEFAULT_RIDGE = Ridgeline()


@dataclass
class ViewRecord:
    """One rendered viewpoint: image, per-pixel labels, depth and pose."""

    rgb: np.ndarray                     # [H, W, 3] uint8
    mask: np.ndarray                    # [H, W] uint8; 0 bg, 1..n objects, 255 ridge
    depth: np.ndarray                   # [H, W] float32, meters
    pose: CameraPose
    screen_pos: list                    # per object: (u, v) or None when off-screen


# ----------------------------------------------------------------------
# meshes

def _circle(n: int):
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return np.cos(th), np.sin(th)


def _cone_mesh(radius: float, height: float):
    cx, cy = _circle(SEGMENTS)
    base = np.stack([radius * cx, radius * cy, np.zeros(SEGMENTS)], axis=1)
    apex = np.array([[0.0, 0.0, height]])
    center = np.array([[0.0, 0.0, 0.0]])
    verts = np.concatenate([base, apex, center])
    faces = []
    a, c = SEGMENTS, SEGMENTS + 1
    for i in range(SEGMENTS):
        j = (i + 1) % SEGMENTS
        faces.append((i, j, a))   # side
        faces.append((j, i, c))   # base disk
    return verts, np.array(faces)


def _cylinder_mesh(radius: float, height: float):
    cx, cy = _circle(SEGMENTS)
    bottom = np.stack([radius * cx, radius * cy, np.zeros(SEGMENTS)], axis=1)
    top = bottom + np.array([0.0, 0.0, height])
    cap_center = np.array([[0.0, 0.0, height]])
    verts = np.concatenate([bottom, top, cap_center])
    faces = []
    cc = 2 * SEGMENTS
    for i in range(SEGMENTS):
        j = (i + 1) % SEGMENTS
        faces.append((i, j, SEGMENTS + i))
        faces.append((j, SEGMENTS + j, SEGMENTS + i))
        faces.append((SEGMENTS + i, SEGMENTS + j, cc))
    return verts, np.array(faces)


def _dome_mesh(radius: float, height: float):
    """Circularly symmetric dome: ground radius ``radius``, apex height
    ``height`` (a squashed hemisphere when height != radius)."""
    cx, cy = _circle(SEGMENTS)
    rings = []
    for b in range(1, DOME_BANDS + 1):
        phi = (b / DOME_BANDS) * (math.pi / 2.0)
        r = radius * math.sin(phi)
        z = height * math.cos(phi)
        rings.append(np.stack([r * cx, r * cy, np.full(SEGMENTS, z)], axis=1))
    apex = np.array([[0.0, 0.0, height]])
    verts = np.concatenate([apex] + rings)
    faces = []
    for i in range(SEGMENTS):  # top fan
        j = (i + 1) % SEGMENTS
        faces.append((0, 1 + i, 1 + j))
    for b in range(DOME_BANDS - 1):
        o0, o1 = 1 + b * SEGMENTS, 1 + (b + 1) * SEGMENTS
        for i in range(SEGMENTS):
            j = (i + 1) % SEGMENTS
            faces.append((o0 + i, o1 + i, o1 + j))
            faces.append((o0 + i, o1 + j, o0 + j))
    return verts, np.array(faces)


_MESH_BUILDERS = {"cone": _cone_mesh, "cylinder": _cylinder_mesh, "hemisphere": _dome_mesh}


def build_scene_meshes(scene: SceneSpec):
    """World-space (vertices, faces, base colour, label) per object."""
    meshes = []
    for idx, obj in enumerate(scene.objects):
        verts, faces = _MESH_BUILDERS[obj.shape](obj.radius, obj.height)
        verts = verts + np.array([obj.allocentric_pos[0], obj.allocentric_pos[1], 0.0])
        meshes.append((verts, faces, np.array(obj.color), idx + 1))
    return meshes


# ----------------------------------------------------------------------
# rendering

def _floor_color(r: np.ndarray, arena_radius: float) -> np.ndarray:
    """Radial ring shading: rotationally symmetric, varies with distance
    from the arena centre so floor pixels change across viewpoints."""
    rings = 0.10 * np.cos(2.0 * math.pi * r / (arena_radius / 3.0))
    shade = (1.0 + rings)[..., None]
    return np.clip(FLOOR_BASE * shade, 0.0, 1.0)


def render_view(scene: SceneSpec, pose: CameraPose, size: tuple[int, int],
                vfov: float = DEFAULT_VFOV, meshes=None,
                ridge: Ridgeline = _DEFAULT_RIDGE) -> ViewRecord:
    """Render one viewpoint of a scene.

    Args:
        scene: the allocentric scene description.
        pose: camera pose (validated at construction; a zero-radius ring
            pose is rejected there).
        size: output (H, W); both must be at least 16.
        vfov: vertical field of view in radians.
        meshes: optional precomputed ``build_scene_meshes`` result, so a
            scene rendered from many poses tessellates only once.
    """
    h, w = size
    if h < 16 or w < 16:
        raise ValueError(f"image size must be at least 16x16, got {size}")
    right, up, forward = pose.basis()
    eye = pose.position
    fx, fy = focal_lengths(size, vfov)
    cx, cy = w / 2.0, h / 2.0

    # per-pixel ray directions through pixel centres
    us = (np.arange(w) + 0.5 - cx) / fx
    vs = (cy - (np.arange(h) + 0.5)) / fy
    xg, yg = np.meshgrid(us, vs)
    dirs = (forward[None, None, :]
            + xg[..., None] * right[None, None, :]
            + yg[..., None] * up[None, None, :])
    norm_factor = np.sqrt(1.0 + xg ** 2 + yg ** 2)   # euclid distance per unit camera-z
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)

    rgb = np.empty((h, w, 3))
    rgb[:] = SKY_COLOR
    mask = np.zeros((h, w), dtype=np.uint8)
    zbuf = np.full((h, w), np.inf)  # camera-z

    # ground plane (z = 0)
    dz = dirs[..., 2]
    below = dz < -1e-9
    t = np.where(below, -eye[2] / np.where(below, dz, -1.0), np.inf)
    hit_x = eye[0] + t * dirs[..., 0]
    hit_y = eye[1] + t * dirs[..., 1]
    hit_r = np.hypot(hit_x, hit_y)
    in_arena = below & (hit_r <= scene.arena_radius)
    outside = below & ~in_arena
    floor_rgb = _floor_color(hit_r, scene.arena_radius)
    rgb[in_arena] = floor_rgb[in_arena]
    rgb[outside] = OUTER_GROUND
    zbuf[below] = t[below] / norm_factor[below]

    # distal ridge band: above the horizon, silhouette anchored to world azimuth
    if scene.variant.landmark:
        ray_az = np.arctan2(dirs[..., 1], dirs[..., 0])
        pitch = np.arcsin(np.clip(dz, -1.0, 1.0))
        ridge_pitch = ridge.pitch(ray_az)
        band = (~below) & (pitch <= ridge_pitch)
        shade = (0.80 + 0.20 * (1.0 - pitch[band] / np.maximum(ridge_pitch[band], 1e-9)))
        rgb[band] = RIDGE_COLOR * shade[:, None]
        mask[band] = LANDMARK_LABEL

    # objects, z-buffered triangle by triangle
    if meshes is None:
        meshes = build_scene_meshes(scene)
    light = -forward
    basis = np.stack([right, up, forward], axis=1)  # world -> camera columns
    for verts, faces, color, label in meshes:
        cam = (verts - eye) @ basis                 # [n, 3] camera space
        vz = cam[:, 2]
        pu = cx + fx * cam[:, 0] / np.maximum(vz, 1e-9)
        pv = cy - fy * cam[:, 1] / np.maximum(vz, 1e-9)
        tri_z = vz[faces]
        visible = (tri_z > NEAR_PLANE).all(axis=1)
        for f_idx in np.nonzero(visible)[0]:
            i0, i1, i2 = faces[f_idx]
            u0, u1, u2 = pu[i0], pu[i1], pu[i2]
            v0, v1, v2 = pv[i0], pv[i1], pv[i2]
            area = (u1 - u0) * (v2 - v0) - (u2 - u0) * (v1 - v0)
            if abs(area) < 1e-12:
                continue
            lo_u = max(int(math.floor(min(u0, u1, u2))), 0)
            hi_u = min(int(math.ceil(max(u0, u1, u2))) + 1, w)
            lo_v = max(int(math.floor(min(v0, v1, v2))), 0)
            hi_v = min(int(math.ceil(max(v0, v1, v2))) + 1, h)
            if lo_u >= hi_u or lo_v >= hi_v:
                continue
            gu = np.arange(lo_u, hi_u) + 0.5
            gv = np.arange(lo_v, hi_v) + 0.5
            guu, gvv = np.meshgrid(gu, gv)
            w0 = (u1 - guu) * (v2 - gvv) - (u2 - guu) * (v1 - gvv)
            w1 = (u2 - guu) * (v0 - gvv) - (u0 - guu) * (v2 - gvv)
            w2 = (u0 - guu) * (v1 - gvv) - (u1 - guu) * (v0 - gvv)
            if area > 0:
                inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
            else:
                inside = (w0 <= 0) & (w1 <= 0) & (w2 <= 0)
            if not inside.any():
                continue
            l0, l1, l2 = w0 / area, w1 / area, w2 / area
            zinv = (l0 / tri_z[f_idx, 0] + l1 / tri_z[f_idx, 1] + l2 / tri_z[f_idx, 2])
            z = 1.0 / np.maximum(zinv, 1e-12)
            sub = zbuf[lo_v:hi_v, lo_u:hi_u]
            closer = inside & (z < sub)
            if not closer.any():
                continue
            e1 = verts[i1] - verts[i0]
            e2 = verts[i2] - verts[i0]
            n = np.cross(e1, e2)
            nn = np.linalg.norm(n)
            if nn < 1e-12:
                continue
            intensity = AMBIENT + DIFFUSE * abs(float(n @ light)) / nn
            shaded = np.clip(color * intensity, 0.0, 1.0)
            sub[closer] = z[closer]
            rgb[lo_v:hi_v, lo_u:hi_u][closer] = shaded
            mask[lo_v:hi_v, lo_u:hi_u][closer] = label

    # euclidean depth; sky and ridge get a deterministic far value
    depth = zbuf * norm_factor
    far = float(np.linalg.norm(eye)) + 8.0 * scene.arena_radius
    depth[~np.isfinite(depth)] = far
    np.minimum(depth, far, out=depth)

    screen_pos = []
    for obj in scene.objects:
        proj = project_point(pose, (obj.allocentric_pos[0], obj.allocentric_pos[1], 0.0),
                             size, vfov)
        if proj is None or not (0.0 <= proj[0] < w and 0.0 <= proj[1] < h):
            screen_pos.append(None)
        else:
            screen_pos.append((proj[0], proj[1]))

    return ViewRecord(
        rgb=np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8),
        mask=mask,
        depth=depth.astype(np.float32),
        pose=pose,
        screen_pos=screen_pos,
    )
