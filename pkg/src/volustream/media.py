"""Manifests, segment indexes, Morton coding and synthetic content.

An object is a voxelized point-cloud sequence living inside a bounding cube of
``max_width`` voxels. The cube is cut into ``8**tile_depth`` tiles addressed by
Morton code. Each segment comes with a compact binary index listing, per GOF,
the occupied tiles and their byte counts in every representation.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

MAX_MORTON_DEPTH = 10

INDEX_MAGIC = b"HVRI"
INDEX_VERSION = 1
_HEADER = struct.Struct("<4sHHI")
_GOF_FIXED = struct.Struct("<IIII")
_U32 = struct.Struct("<I")

# (axis, sign) for normal codes 0..5 = +x, -x, +y, -y, +z, -z
AXIS_VECTORS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
    dtype=float,
)


class IndexFormatError(ValueError):
    """Segment index bytes could not be decoded."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class IndexValidationError(ValueError):
    """Segment index decoded but violates a structural invariant."""


# ---------------------------------------------------------------------------
# Morton codes


def _spread3(v: int) -> int:
    out = 0
    for b in range(MAX_MORTON_DEPTH):
        out |= ((v >> b) & 1) << (3 * b)
    return out


def _compact3(code: int) -> int:
    out = 0
    for b in range(MAX_MORTON_DEPTH):
        out |= ((code >> (3 * b)) & 1) << b
    return out


_SPREAD = [_spread3(i) for i in range(1 << MAX_MORTON_DEPTH)]


def morton_encode(x: int, y: int, z: int, depth: int = MAX_MORTON_DEPTH) -> int:
    """Interleave tile coordinates; x takes the least significant lane."""
    if not 0 <= depth <= MAX_MORTON_DEPTH:
        raise ValueError(f"depth must be in [0, {MAX_MORTON_DEPTH}], got {depth}")
    limit = 1 << depth
    for name, c in (("x", x), ("y", y), ("z", z)):
        if not 0 <= c < limit:
            raise ValueError(f"{name}={c} outside [0, {limit}) for depth {depth}")
    return _SPREAD[x] | (_SPREAD[y] << 1) | (_SPREAD[z] << 2)


def morton_decode(code: int) -> tuple[int, int, int]:
    if not 0 <= code < 8**MAX_MORTON_DEPTH:
        raise ValueError(f"Morton code {code} out of range")
    return _compact3(code), _compact3(code >> 1), _compact3(code >> 2)


def morton_decode_array(codes) -> np.ndarray:
    """Vectorized decode; returns an (n, 3) int array of x, y, z."""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.zeros((codes.size, 3), dtype=np.int64)
    for b in range(MAX_MORTON_DEPTH):
        for lane in range(3):
            out[:, lane] |= ((codes >> (3 * b + lane)) & 1) << b
    return out


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class Representation:
    id: str
    bandwidth: float  # bits/s
    width: int  # voxels across the bounding cube
    framerate: float


def _quat_matrix(q: Sequence[float]) -> np.ndarray:
    w, x, y, z = (float(c) for c in q)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0:
        raise ValueError("zero quaternion")
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass(frozen=True)
class ObjectManifest:
    max_width: int
    max_frame_rate: float
    cube_to_object_scale: float  # meters per voxel
    cube_to_object_translation: tuple[float, float, float]
    cube_to_object_rotation: tuple[float, float, float, float]  # (w, x, y, z)
    object_to_world_translation: tuple[float, float, float]
    tile_width: int
    start_time: float
    duration: float
    segment_duration: float
    start_number: int
    timescale: int
    media_template: str
    representations: tuple[Representation, ...]

    def __post_init__(self):
        object.__setattr__(self, "representations", tuple(self.representations))
        for name in (
            "cube_to_object_translation",
            "cube_to_object_rotation",
            "object_to_world_translation",
        ):
            object.__setattr__(self, name, tuple(float(c) for c in getattr(self, name)))
        if self.tile_width <= 0 or self.max_width % self.tile_width:
            raise ValueError("tileWidth must divide maxWidth")
        ratio = self.max_width // self.tile_width
        if ratio & (ratio - 1):
            raise ValueError("maxWidth/tileWidth must be a power of two")
        if self.tile_depth > MAX_MORTON_DEPTH:
            raise ValueError("tile depth exceeds Morton code range")
        if self.segment_duration <= 0 or self.duration <= 0:
            raise ValueError("segmentDuration and duration must be positive")
        if not self.representations:
            raise ValueError("manifest needs at least one representation")
        prev_bw, prev_w = -math.inf, 0
        for rep in self.representations:
            if rep.bandwidth <= prev_bw:
                raise ValueError("representation bandwidths must strictly increase")
            if rep.width < prev_w or rep.width > self.max_width:
                raise ValueError("representation widths must be non-decreasing and <= maxWidth")
            if rep.framerate > self.max_frame_rate:
                raise ValueError("representation framerate exceeds maxFrameRate")
            prev_bw, prev_w = rep.bandwidth, rep.width

    @property
    def tile_depth(self) -> int:
        return (self.max_width // self.tile_width).bit_length() - 1

    @property
    def tile_count(self) -> int:
        return 8**self.tile_depth

    @property
    def segment_count(self) -> int:
        return math.ceil(self.duration / self.segment_duration - 1e-9)

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    @property
    def bandwidths(self) -> np.ndarray:
        return np.array([r.bandwidth for r in self.representations], dtype=float)

    @property
    def widths(self) -> np.ndarray:
        return np.array([r.width for r in self.representations], dtype=float)

    @property
    def object_name(self) -> str:
        return self.media_template.split("_$", 1)[0]

    @property
    def rotation_matrix(self) -> np.ndarray:
        return _quat_matrix(self.cube_to_object_rotation)

    @property
    def cube_size(self) -> float:
        return self.max_width * self.cube_to_object_scale

    @property
    def world_center(self) -> np.ndarray:
        """World position of the bounding cube's center."""
        half = np.full(3, self.max_width / 2.0) * self.cube_to_object_scale
        return (
            self.rotation_matrix @ half
            + np.asarray(self.cube_to_object_translation)
            + np.asarray(self.object_to_world_translation)
        )

    def segment_name(self, rep: Representation, number: int) -> str:
        return (
            self.media_template.replace("$bandwidth$", str(int(rep.bandwidth)))
            .replace("$width$", str(rep.width))
            .replace("$framerate$", f"{rep.framerate:g}")
            .replace("$number$", str(number))
        )

    def index_name(self, number: int) -> str:
        return f"{self.object_name}_{number}.idx"

    def segment_bounds(self, seg: int) -> tuple[float, float]:
        """Media interval [start, end) of segment position ``seg`` (0-based)."""
        a = self.start_time + seg * self.segment_duration
        return a, min(a + self.segment_duration, self.end_time)

    def segment_of(self, media_time: float) -> int:
        return int(math.floor((media_time - self.start_time) / self.segment_duration + 1e-9))

    def with_placement(self, translation) -> "ObjectManifest":
        return replace(self, object_to_world_translation=tuple(translation))

    # JSON file with the camelCase field names of the wire format

    def to_json(self) -> str:
        doc = {
            "maxWidth": self.max_width,
            "maxFrameRate": self.max_frame_rate,
            "cubeToObjectScale": self.cube_to_object_scale,
            "cubeToObjectTranslation": list(self.cube_to_object_translation),
            "cubeToObjectRotation": list(self.cube_to_object_rotation),
            "objectToWorldTranslation": list(self.object_to_world_translation),
            "tileWidth": self.tile_width,
            "startTime": self.start_time,
            "duration": self.duration,
            "segmentDuration": self.segment_duration,
            "startNumber": self.start_number,
            "timescale": self.timescale,
            "mediaTemplate": self.media_template,
            "representations": [
                {"id": r.id, "bandwidth": r.bandwidth, "width": r.width, "framerate": r.framerate}
                for r in self.representations
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ObjectManifest":
        d = json.loads(text)
        try:
            reps = tuple(
                Representation(str(r["id"]), float(r["bandwidth"]), int(r["width"]), float(r["framerate"]))
                for r in d["representations"]
            )
            return cls(
                max_width=int(d["maxWidth"]),
                max_frame_rate=float(d["maxFrameRate"]),
                cube_to_object_scale=float(d["cubeToObjectScale"]),
                cube_to_object_translation=tuple(d["cubeToObjectTranslation"]),
                cube_to_object_rotation=tuple(d["cubeToObjectRotation"]),
                object_to_world_translation=tuple(d["objectToWorldTranslation"]),
                tile_width=int(d["tileWidth"]),
                start_time=float(d["startTime"]),
                duration=float(d["duration"]),
                segment_duration=float(d["segmentDuration"]),
                start_number=int(d["startNumber"]),
                timescale=int(d["timescale"]),
                media_template=str(d["mediaTemplate"]),
                representations=reps,
            )
        except KeyError as e:
            raise ValueError(f"manifest missing field {e}") from None


DEFAULT_LADDER_BPS = (4e6, 8e6, 12e6, 16e6, 20e6)
DEFAULT_WIDTHS = (256, 512, 512, 1024, 1024)


def default_ladder(scale: float = 1.0, framerate: float = 30.0) -> tuple[Representation, ...]:
    return tuple(
        Representation(f"r{i + 1}", bw * scale, w, framerate)
        for i, (bw, w) in enumerate(zip(DEFAULT_LADDER_BPS, DEFAULT_WIDTHS))
    )


def make_manifest(
    name: str = "sphere",
    tile_depth: int = 2,
    duration: float = 60.0,
    max_width: int = 1024,
    scale: float = 0.001,
    world_translation=(0.0, 0.0, 0.0),
    representations: Sequence[Representation] | None = None,
    segment_duration: float = 1.0,
    framerate: float = 30.0,
    timescale: int = 90_000,
) -> ObjectManifest:
    """Manifest for a cube centered on the object origin."""
    half = max_width * scale / 2.0
    return ObjectManifest(
        max_width=max_width,
        max_frame_rate=framerate,
        cube_to_object_scale=scale,
        cube_to_object_translation=(-half, -half, -half),
        cube_to_object_rotation=(1.0, 0.0, 0.0, 0.0),
        object_to_world_translation=tuple(world_translation),
        tile_width=max_width >> tile_depth,
        start_time=0.0,
        duration=duration,
        segment_duration=segment_duration,
        start_number=0,
        timescale=timescale,
        media_template=f"{name}_$bandwidth$_$width$_$framerate$_$number$.hvr",
        representations=tuple(representations or default_ladder(framerate=framerate)),
    )


def tile_centers_cube(manifest: ObjectManifest, codes) -> np.ndarray:
    """Tile cell centers in voxel units of the bounding cube."""
    xyz = morton_decode_array(codes).astype(float)
    return (xyz + 0.5) * manifest.tile_width


def cube_to_world(manifest: ObjectManifest, points_vox: np.ndarray) -> np.ndarray:
    pts = np.asarray(points_vox, dtype=float) * manifest.cube_to_object_scale
    return (
        pts @ manifest.rotation_matrix.T
        + np.asarray(manifest.cube_to_object_translation)
        + np.asarray(manifest.object_to_world_translation)
    )


def tile_world_position(manifest: ObjectManifest, code: int) -> np.ndarray:
    if not 0 <= code < manifest.tile_count:
        raise ValueError(f"Morton code {code} invalid for tile depth {manifest.tile_depth}")
    return cube_to_world(manifest, tile_centers_cube(manifest, [code]))[0]


def tile_world_normals(manifest: ObjectManifest, normal_codes) -> np.ndarray:
    """Normal codes are expressed in cube axes; rotate them into the world."""
    return AXIS_VECTORS[np.asarray(normal_codes, dtype=int)] @ manifest.rotation_matrix.T


# ---------------------------------------------------------------------------
# Segment index


@dataclass(frozen=True)
class TileIndexEntry:
    morton_code: int
    normal_code: int
    byte_count: tuple[int, ...]


@dataclass(frozen=True)
class GofIndexEntry:
    start_time: int  # ticks
    duration: int  # ticks
    frame_count: int
    tiles: tuple[TileIndexEntry, ...]
    per_representation: tuple[tuple[int, int], ...]  # (gofByteOffsetInSegment, gofHeaderByteCount)

    @property
    def tile_count(self) -> int:
        return len(self.tiles)


@dataclass(frozen=True)
class SegmentIndex:
    representation_count: int
    gofs: tuple[GofIndexEntry, ...] = field(default_factory=tuple)

    @property
    def gof_count(self) -> int:
        return len(self.gofs)

    def validate(self) -> None:
        m = self.representation_count
        prev_end = None
        for g, gof in enumerate(self.gofs):
            if len(gof.per_representation) != m:
                raise IndexValidationError(f"GOF {g}: expected {m} representation tables")
            codes = [t.morton_code for t in gof.tiles]
            if any(b <= a for a, b in zip(codes, codes[1:])):
                raise IndexValidationError(f"GOF {g}: tiles not in strictly increasing Morton order")
            for t in gof.tiles:
                if len(t.byte_count) != m:
                    raise IndexValidationError(f"GOF {g}: tile {t.morton_code} byteCount length != {m}")
                if not 0 <= t.normal_code <= 5:
                    raise IndexValidationError(f"GOF {g}: bad normalCode {t.normal_code}")
            if prev_end is not None and gof.start_time < prev_end:
                raise IndexValidationError(f"GOF {g}: overlaps previous GOF")
            prev_end = gof.start_time + gof.duration


def index_size(index: SegmentIndex) -> int:
    m = index.representation_count
    return _HEADER.size + sum(16 + 8 * g.tile_count + m * (8 + 4 * g.tile_count) for g in index.gofs)


def serialize_index(index: SegmentIndex) -> bytes:
    index.validate()
    m = index.representation_count
    out = bytearray(_HEADER.pack(INDEX_MAGIC, INDEX_VERSION, m, index.gof_count))
    for gof in index.gofs:
        k = gof.tile_count
        out += _GOF_FIXED.pack(gof.start_time, gof.duration, gof.frame_count, k)
        for t in gof.tiles:
            out += struct.pack("<II", t.morton_code, t.normal_code)
        for r, (offset, header) in enumerate(gof.per_representation):
            out += struct.pack("<II", offset, header)
            out += struct.pack(f"<{k}I", *(t.byte_count[r] for t in gof.tiles))
    return bytes(out)


def parse_index(data: bytes) -> SegmentIndex:
    view = memoryview(data)
    pos = 0

    def take(n: int, what: str):
        nonlocal pos
        if pos + n > len(view):
            raise IndexFormatError(f"truncated while reading {what}", pos)
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    magic, version, m, gof_count = _HEADER.unpack(take(_HEADER.size, "header"))
    if magic != INDEX_MAGIC:
        raise IndexFormatError(f"bad magic {bytes(magic)!r}", 0)
    if version != INDEX_VERSION:
        raise IndexFormatError(f"unsupported version {version}", 4)
    gofs = []
    for _ in range(gof_count):
        start, dur, frames, k = _GOF_FIXED.unpack(take(_GOF_FIXED.size, "GOF header"))
        pairs = struct.unpack(f"<{2 * k}I", take(8 * k, "tile table"))
        per_rep = []
        counts = []
        for _r in range(m):
            per_rep.append(struct.unpack("<II", take(8, "representation header")))
            counts.append(struct.unpack(f"<{k}I", take(4 * k, "byte counts")))
        tiles = tuple(
            TileIndexEntry(pairs[2 * j], pairs[2 * j + 1], tuple(counts[r][j] for r in range(m)))
            for j in range(k)
        )
        gofs.append(GofIndexEntry(start, dur, frames, tiles, tuple(per_rep)))
    if pos != len(view):
        raise IndexFormatError("trailing bytes after last GOF", pos)
    index = SegmentIndex(m, tuple(gofs))
    index.validate()
    return index


def index_bitrate(tile_count: int, rep_count: int, fps: float, gof_frames: int) -> float:
    """Approximate bitrate of the segment index stream (32-bit fields)."""
    if gof_frames < 1:
        raise ValueError("gof_frames must be >= 1")
    return tile_count * (32 + rep_count * 32) * fps / gof_frames


def tile_bit_count(rep: Representation, frame_count: int, tile_count: int) -> float:
    """Equal share of a GOF's bits for one occupied tile."""
    if tile_count < 1:
        raise ValueError("GOF has no occupied tiles")
    return rep.bandwidth / rep.framerate * frame_count / tile_count


# ---------------------------------------------------------------------------
# Synthetic content


@dataclass(frozen=True)
class SphereShell:
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)  # object coordinates, meters
    radius: float = 0.4
    thickness: float = 0.05


def dominant_axis_code(v: np.ndarray) -> np.ndarray:
    """Quantize directions to one of six axis codes.

    Ties between axes resolve in the order z, x, y; a zero component counts as
    positive, so the zero vector maps to +z.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    mag = np.abs(v)
    order = (2, 0, 1)
    best = np.full(len(v), 2)
    best_mag = mag[:, 2].copy()
    for axis in order[1:]:
        better = mag[:, axis] > best_mag * (1 + 1e-12)
        best = np.where(better, axis, best)
        best_mag = np.where(better, mag[:, axis], best_mag)
    comp = v[np.arange(len(v)), best]
    return 2 * best + (comp < 0)


def occupied_tiles(shape: SphereShell | None, manifest: ObjectManifest) -> tuple[np.ndarray, np.ndarray]:
    """Morton codes (ascending) and normal codes of tiles whose cells meet the shell."""
    if shape is None or shape.radius <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    scale = manifest.cube_to_object_scale
    rot = manifest.rotation_matrix
    center = rot.T @ (np.asarray(shape.center, float) - np.asarray(manifest.cube_to_object_translation)) / scale
    r_out = shape.radius / scale
    r_in = max(shape.radius - shape.thickness, 0.0) / scale
    if np.any(center - r_out < -1e-9) or np.any(center + r_out > manifest.max_width + 1e-9):
        raise ValueError("shell does not fit inside the bounding cube")
    codes = np.arange(manifest.tile_count, dtype=np.int64)
    tw = manifest.tile_width
    lo = morton_decode_array(codes).astype(float) * tw
    hi = lo + tw
    nearest = np.clip(center, lo, hi)
    d_min = np.linalg.norm(nearest - center, axis=1)
    farthest = np.where(np.abs(lo - center) > np.abs(hi - center), lo, hi)
    d_max = np.linalg.norm(farthest - center, axis=1)
    hit = (d_min <= r_out) & (d_max >= r_in)
    codes = codes[hit]
    normals = dominant_axis_code((lo[hit] + hi[hit]) / 2.0 - center)
    return codes, normals


def gof_schedule(manifest: ObjectManifest, seg: int, gof_frames: int = 4) -> list[tuple[int, int, int]]:
    """(start_ticks, duration_ticks, frame_count) for every GOF of a segment."""
    a, b = manifest.segment_bounds(seg)
    fps = manifest.max_frame_rate
    first = round(a * fps)
    last = round(b * fps)
    out = []
    f = first
    while f < last:
        n = min(gof_frames, last - f)
        t0 = round(f * manifest.timescale / fps)
        t1 = round((f + n) * manifest.timescale / fps)
        out.append((t0, t1 - t0, n))
        f += n
    return out


def split_bytes(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if j < extra else 0) for j in range(parts)]


def build_segment_index(
    manifest: ObjectManifest,
    seg: int,
    codes: np.ndarray,
    normals: np.ndarray,
    gof_frames: int = 4,
    header_bytes: int = 0,
) -> SegmentIndex:
    reps = manifest.representations
    k = len(codes)
    offsets = [0] * len(reps)
    gofs = []
    for start, dur, frames in gof_schedule(manifest, seg, gof_frames):
        per_rep = []
        counts = []
        for r, rep in enumerate(reps):
            if k:
                total = round(tile_bit_count(rep, frames, 1) / 8)
                c = split_bytes(total, k)
            else:
                c = []
            counts.append(c)
            per_rep.append((offsets[r], header_bytes))
            offsets[r] += header_bytes + sum(c)
        tiles = tuple(
            TileIndexEntry(int(codes[j]), int(normals[j]), tuple(counts[r][j] for r in range(len(reps))))
            for j in range(k)
        )
        gofs.append(GofIndexEntry(start, dur, frames, tiles, tuple(per_rep)))
    return SegmentIndex(len(reps), tuple(gofs))


def synth_object(shape: SphereShell | None, manifest: ObjectManifest, gof_count: int, gof_frames: int = 4):
    """Per-GOF occupied tile tables for a static shell.

    Returns a list of ``gof_count`` dicts with keys ``morton``, ``normal`` and
    ``byte_count`` (an (M, K) array).
    """
    codes, normals = occupied_tiles(shape, manifest)
    k = len(codes)
    out = []
    for _ in range(gof_count):
        counts = np.zeros((len(manifest.representations), k), dtype=np.int64)
        if k:
            for r, rep in enumerate(manifest.representations):
                counts[r] = split_bytes(round(tile_bit_count(rep, gof_frames, 1) / 8), k)
        out.append({"morton": codes.copy(), "normal": normals.copy(), "byte_count": counts})
    return out


def build_all_indexes(manifest: ObjectManifest, shape: SphereShell | None, gof_frames: int = 4) -> list[SegmentIndex]:
    codes, normals = occupied_tiles(shape, manifest)
    return [
        build_segment_index(manifest, s, codes, normals, gof_frames) for s in range(manifest.segment_count)
    ]


def segment_payload_size(index: SegmentIndex, rep: int) -> int:
    size = 0
    for gof in index.gofs:
        off, header = gof.per_representation[rep]
        size = max(size, off + header + sum(t.byte_count[rep] for t in gof.tiles))
    return size


def write_object(
    out_dir: Path,
    manifest: ObjectManifest,
    indexes: Sequence[SegmentIndex],
    payload: bool = True,
) -> list[Path]:
    """Write manifest, index files and (optionally) opaque segment payloads."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    mpath = out_dir / f"{manifest.object_name}.json"
    mpath.write_text(manifest.to_json())
    written.append(mpath)
    for s, index in enumerate(indexes):
        number = manifest.start_number + s
        p = out_dir / manifest.index_name(number)
        p.write_bytes(serialize_index(index))
        written.append(p)
        if payload:
            for r, rep in enumerate(manifest.representations):
                p = out_dir / manifest.segment_name(rep, number)
                # payload content is irrelevant; a repeating byte keeps files compressible
                p.write_bytes(bytes([r + 1]) * segment_payload_size(index, r))
                written.append(p)
    return written


def load_object(manifest_path: Path) -> tuple[ObjectManifest, list[SegmentIndex]]:
    manifest_path = Path(manifest_path)
    manifest = ObjectManifest.from_json(manifest_path.read_text())
    indexes = []
    for s in range(manifest.segment_count):
        p = manifest_path.parent / manifest.index_name(manifest.start_number + s)
        indexes.append(parse_index(p.read_bytes()))
    return manifest, indexes
