"""Viewpoints, frustum/back-face visibility and distinguishable-voxel counts."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .media import AXIS_VECTORS, ObjectManifest, Representation

TRACE_COLUMNS = ("t", "px", "py", "pz", "fx", "fy", "fz", "ux", "uy", "uz", "horzFOV", "horzPixels")


@dataclass(frozen=True)
class Viewpoint:
    position: tuple[float, float, float]
    forward: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    horz_fov: float = math.pi / 2
    aspect: float = 16 / 9
    near: float = 0.01
    far: float = 100.0
    horz_pixels: int = 1280

    def __post_init__(self):
        f = np.asarray(self.forward, float)
        u = np.asarray(self.up, float)
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        object.__setattr__(self, "forward", tuple(f / np.linalg.norm(f)))
        object.__setattr__(self, "up", tuple(u / np.linalg.norm(u)))
        if not 0 < self.horz_fov < math.pi:
            raise ValueError("horzFOV must lie in (0, pi)")
        if not 0 <= self.near < self.far:
            raise ValueError("need near < far")
        if abs(float(np.dot(self.forward, self.up))) > 1e-6:
            raise ValueError("forward and up must be orthogonal")

    @property
    def vert_fov(self) -> float:
        return self.horz_fov / self.aspect

    @property
    def ppr(self) -> float:
        """Display pixels per radian."""
        return self.horz_pixels / self.horz_fov

    @classmethod
    def look_at(cls, position, target, world_up=(0.0, 1.0, 0.0), **kw) -> "Viewpoint":
        p = np.asarray(position, float)
        f = np.asarray(target, float) - p
        f /= np.linalg.norm(f)
        up = np.asarray(world_up, float)
        up = up - np.dot(up, f) * f
        if np.linalg.norm(up) < 1e-9:
            # looking straight along world_up; any perpendicular will do
            up = np.cross(f, [1.0, 0.0, 0.0])
            if np.linalg.norm(up) < 1e-9:
                up = np.cross(f, [0.0, 0.0, 1.0])
        return cls(tuple(p), tuple(f), tuple(up / np.linalg.norm(up)), **kw)

    def transformed(self, rotation: np.ndarray, translation) -> "Viewpoint":
        r = np.asarray(rotation, float)
        return replace(
            self,
            position=tuple(r @ np.asarray(self.position) + np.asarray(translation, float)),
            forward=tuple(r @ np.asarray(self.forward)),
            up=tuple(r @ np.asarray(self.up)),
        )


def _normal_vectors(normal) -> np.ndarray:
    n = np.asarray(normal)
    if n.ndim == 0 or (n.ndim == 1 and n.dtype.kind in "iu"):
        return AXIS_VECTORS[n.astype(int)]
    return n.astype(float)


def visible_mask(positions, normals, view: Viewpoint) -> np.ndarray:
    """Vectorized visibility of tile centers with their dominant normals.

    A tile counts as visible when its center lies inside the view frustum and
    its normal faces the viewer. Occlusion is ignored.
    """
    pos = np.atleast_2d(np.asarray(positions, float))
    nrm = np.atleast_2d(_normal_vectors(normals))
    eye = np.asarray(view.position)
    f = np.asarray(view.forward)
    up = np.asarray(view.up)
    right = np.cross(f, up)
    d = pos - eye
    z = d @ f
    x = d @ right
    y = d @ up
    inside = (
        (z > view.near)
        & (z < view.far)
        & (np.abs(x) <= z * math.tan(view.horz_fov / 2))
        & (np.abs(y) <= z * math.tan(view.vert_fov / 2))
    )
    facing = np.einsum("ij,ij->i", eye - pos, nrm) > 0
    return inside & facing


def is_visible(tile_pos, normal, view: Viewpoint) -> bool:
    """``normal`` is an axis code 0-5 or a 3-vector."""
    nrm = _normal_vectors(normal).reshape(1, 3)
    return bool(visible_mask(np.reshape(np.asarray(tile_pos, float), (1, 3)), nrm, view)[0])


class LodTerms(NamedTuple):
    rad: float
    vpr: float
    ppr: float
    lod: int


def _ceil_sq(x):
    # guard against 31.999999999 style round-off landing on the wrong integer
    c = np.ceil(np.asarray(x) - 1e-9)
    return np.where(np.asarray(x) > 0, np.maximum(c, 1.0), 0.0) ** 2


def distinguishable_voxels(rep: Representation, manifest: ObjectManifest, tile_pos, view: Viewpoint) -> LodTerms:
    dist = float(np.linalg.norm(np.asarray(tile_pos, float) - np.asarray(view.position)))
    if dist == 0:
        raise ValueError("viewer coincides with tile center")
    tile_m = manifest.tile_width * manifest.cube_to_object_scale
    rad = tile_m / dist
    vpr = rep.width * dist / (manifest.max_width * manifest.cube_to_object_scale)
    ppr = view.ppr
    # rad*vpr is distance free; use the exact form for the product
    product = min(manifest.tile_width * rep.width / manifest.max_width, rad * ppr)
    return LodTerms(rad, vpr, ppr, int(_ceil_sq(product)))


def lod_table(positions, manifest: ObjectManifest, view: Viewpoint) -> np.ndarray:
    """LOD for every tile (rows) and representation (columns).

    Distances shorter than half a tile width are clamped to it, which covers a
    viewer standing inside a tile cell.
    """
    pos = np.atleast_2d(np.asarray(positions, float))
    tile_m = manifest.tile_width * manifest.cube_to_object_scale
    dist = np.linalg.norm(pos - np.asarray(view.position), axis=1)
    dist = np.maximum(dist, tile_m / 2)
    near_term = manifest.tile_width * manifest.widths / manifest.max_width  # (M,)
    far_term = tile_m * view.ppr / dist  # (K,)
    return _ceil_sq(np.minimum(near_term[None, :], far_term[:, None]))


def read_viewpoint_trace(path: Path, aspect: float = 16 / 9, near: float = 0.01, far: float = 100.0):
    """Rows of (t, Viewpoint) from a trace CSV."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            v = Viewpoint(
                (float(row["px"]), float(row["py"]), float(row["pz"])),
                (float(row["fx"]), float(row["fy"]), float(row["fz"])),
                (float(row["ux"]), float(row["uy"]), float(row["uz"])),
                horz_fov=float(row["horzFOV"]),
                aspect=aspect,
                near=near,
                far=far,
                horz_pixels=int(float(row["horzPixels"])),
            )
            out.append((float(row["t"]), v))
    out.sort(key=lambda r: r[0])
    return out


def write_viewpoint_trace(path: Path, samples) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for t, v in samples:
            w.writerow([t, *v.position, *v.forward, *v.up, v.horz_fov, v.horz_pixels])
