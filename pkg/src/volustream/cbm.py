"""Client buffer manager: the request-wait cycle and simulated playback.

The client owns a window per object over the media timeline. At every request
opportunity it fetches missing segment indexes, scores every buffered or
requestable tile in the window, runs the greedy allocator against the
estimated budget and issues one multipart byte-range request per
(object, segment, representation). Queue-style baselines (throughput based,
buffer based and the stripped window selector) share the same machinery but
request whole GOFs in media order at one representation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import visible_mask
from .media import (
    ObjectManifest,
    SegmentIndex,
    cube_to_world,
    index_size,
    tile_centers_cube,
    tile_world_normals,
)
from .network import PacketLink
from .optimizer import allocate_arrays
from .utility import PredictorConfig, UtilityCoeffs, normalize_coeffs, p_err_array, utility_table
from .window import BufferStore, MissingIndexError, ObjectTimeline, WindowState

ALGORITHMS = ("wba", "stripped-wba", "tba", "bba")


# ---------------------------------------------------------------------------
# throughput


@dataclass
class ThroughputEstimator:
    weight: float = 0.75
    cycle: float = 0.5
    estimate: float | None = None

    def __post_init__(self):
        if not 0 <= self.weight < 1:
            raise ValueError("smoothing weight must lie in [0, 1)")
        if self.cycle <= 0:
            raise ValueError("cycle must be positive")

    def update(self, bits: float, elapsed: float) -> float:
        if elapsed <= 0:
            raise ValueError("elapsed time must be positive")
        sample = bits / elapsed
        if self.estimate is None:
            self.estimate = sample
        else:
            self.estimate = self.weight * self.estimate + (1 - self.weight) * sample
        return self.estimate

    @property
    def budget(self) -> float:
        return (self.estimate or 0.0) * self.cycle


def update_throughput(est: ThroughputEstimator, bits: float, elapsed: float) -> float:
    return est.update(bits, elapsed)


# ---------------------------------------------------------------------------
# representation selectors for the queue baselines


def stripped_wba_select(bandwidths, throughput: float, cycle: float, media_needed: float) -> int:
    """1-based rung: highest bandwidth strictly below C*T / media_needed."""
    bw = list(bandwidths)
    if media_needed <= 0:
        return len(bw)
    bound = throughput * cycle / media_needed
    best = 1
    for m, b in enumerate(bw, start=1):
        if b < bound:
            best = m
    return best


def tba_select(bandwidths, throughput: float, safety: float = 0.9) -> int:
    """1-based rung: highest bandwidth not above ``safety * throughput``."""
    best = 1
    for m, b in enumerate(bandwidths, start=1):
        if b <= safety * throughput:
            best = m
    return best


def bba_select(bandwidths, occupancy: float, reservoir: float = 1.0, cushion: float = 4.0) -> int:
    """1-based rung from buffer occupancy: bottom at the reservoir, top at the cushion."""
    if occupancy < 0:
        raise ValueError("occupancy must be >= 0")
    top = len(list(bandwidths))
    if occupancy <= reservoir:
        return 1
    if occupancy >= cushion:
        return top
    frac = (occupancy - reservoir) / (cushion - reservoir)
    return min(top, 1 + int(math.floor(frac * (top - 1) + 1e-12)))


# ---------------------------------------------------------------------------
# per-object runtime data


@dataclass
class GofStatic:
    seg: int
    gof: int
    media_start: float  # clip seconds
    media_end: float
    morton: np.ndarray
    positions: np.ndarray  # (K, 3) world meters
    normals: np.ndarray  # (K, 3) world unit vectors
    bits: np.ndarray  # (K, M+1), column 0 is zero
    tile_offset: np.ndarray  # (M, K) byte offset of each tile inside the segment
    header: np.ndarray  # (M, 2) gof header (offset, length)


class StreamObject:
    """Manifest, server-side indexes and client-side index knowledge for one object."""

    def __init__(
        self,
        manifest: ObjectManifest,
        indexes: list[SegmentIndex],
        timeline: ObjectTimeline | None = None,
        coeffs: UtilityCoeffs | None = None,
    ):
        if len(indexes) != manifest.segment_count:
            raise ValueError("need one index per segment")
        self.manifest = manifest
        self.indexes = list(indexes)
        tl = timeline or ObjectTimeline(tau0=manifest.start_time)
        if math.isinf(tl.clip_end):
            tl.clip_end = manifest.end_time
        tl.clip_start = manifest.start_time
        if tl.loop and tl.clip_length <= 0:
            raise ValueError("looping needs a positive clip length")
        self.timeline = tl
        self.coeffs = coeffs or normalize_coeffs(manifest.bandwidths)
        self.rep_count = len(manifest.representations)
        self.manifest_bits = 8 * len(manifest.to_json().encode())
        self.index_bits = [8 * index_size(ix) for ix in indexes]
        self.known_indexes: set[int] = set()
        self._cache: dict = {}
        ts = manifest.timescale
        starts, keys, ends = [], [], []
        for s, ix in enumerate(indexes):
            for g, gof in enumerate(ix.gofs):
                starts.append(gof.start_time / ts)
                ends.append((gof.start_time + gof.duration) / ts)
                keys.append((s, g))
        self.gof_starts = np.array(starts)
        self.gof_ends = np.array(ends)
        self.gof_keys = keys

    @property
    def clip_length(self) -> float:
        return self.timeline.clip_length

    def gof(self, seg: int, g: int) -> GofStatic:
        key = (seg, g)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        m = self.manifest
        gof = self.indexes[seg].gofs[g]
        k = gof.tile_count
        morton = np.array([t.morton_code for t in gof.tiles], dtype=np.int64)
        normals = np.array([t.normal_code for t in gof.tiles], dtype=np.int64)
        counts = np.array([t.byte_count for t in gof.tiles], dtype=np.int64).reshape(k, self.rep_count)
        bits = np.zeros((k, self.rep_count + 1))
        bits[:, 1:] = 8.0 * counts
        header = np.array(gof.per_representation, dtype=np.int64).reshape(self.rep_count, 2)
        offs = np.zeros((self.rep_count, k), dtype=np.int64)
        if k:
            offs = header[:, :1] + header[:, 1:] + np.cumsum(counts.T, axis=1) - counts.T
        pos = cube_to_world(m, tile_centers_cube(m, morton)) if k else np.zeros((0, 3))
        nrm = tile_world_normals(m, normals) if k else np.zeros((0, 3))
        st = GofStatic(
            seg, g, gof.start_time / m.timescale, (gof.start_time + gof.duration) / m.timescale,
            morton, pos, nrm, bits, offs, header,
        )
        self._cache[key] = st
        return st

    def gofs_between(self, a: float, b: float):
        """(unwrapped start, seg, gof) for GOFs whose start lies in [a, b)."""
        out = []
        if b <= a:
            return out
        tl = self.timeline
        eps = 1e-9
        if not tl.loop:
            i = int(np.searchsorted(self.gof_starts, a - eps, side="left"))
            j = int(np.searchsorted(self.gof_starts, b - eps, side="left"))
            for q in range(i, j):
                out.append((float(self.gof_starts[q]), *self.gof_keys[q]))
            return out
        k0, _ = tl.wrap(a)
        k1, _ = tl.wrap(b)
        for k in range(k0, k1 + 1):
            base = k * tl.clip_length
            lo = max(a - base, tl.clip_start)
            hi = min(b - base, tl.clip_end)
            if hi <= lo:
                continue
            i = int(np.searchsorted(self.gof_starts, lo - eps, side="left"))
            j = int(np.searchsorted(self.gof_starts, hi - eps, side="left"))
            for q in range(i, j):
                out.append((float(self.gof_starts[q]) + base, *self.gof_keys[q]))
        return out

    def segments_between(self, a: float, b: float) -> list[int]:
        """Segments overlapping the unwrapped media interval [a, b]."""
        segs = set()
        tl = self.timeline
        m = self.manifest
        if not tl.loop:
            a, b = max(a, tl.clip_start), min(b, tl.clip_end - 1e-9)
            if b < a:
                return []
            return list(range(max(m.segment_of(a), 0), min(m.segment_of(b), m.segment_count - 1) + 1))
        k0, _ = tl.wrap(a)
        k1, _ = tl.wrap(b)
        for k in range(k0, k1 + 1):
            base = k * tl.clip_length
            lo = max(a - base, tl.clip_start)
            hi = min(b - base, tl.clip_end - 1e-9)
            if hi < lo:
                continue
            segs.update(range(max(m.segment_of(lo), 0), min(m.segment_of(hi), m.segment_count - 1) + 1))
        return sorted(segs)


def tiles_in_window(t: float, window: WindowState, objects: list[StreamObject]) -> list[tuple]:
    """Every occupied tile of every GOF starting inside each object's window.

    Returns ``(object, segment, gof, morton, media_start)`` rows, with media
    start unwrapped across loop passes. Raises ``MissingIndexError`` when a
    covering segment index has not been fetched.
    """
    out = []
    for oi, o in enumerate(objects):
        trail, lead = window.trail(t, oi), window.lead(t, oi)
        missing = set(o.segments_between(trail, lead)) - o.known_indexes
        if missing:
            raise MissingIndexError(oi, missing)
        for ustart, seg, g in o.gofs_between(trail, lead):
            for code in o.gof(seg, g).morton:
                out.append((oi, seg, g, int(code), ustart))
    return out


# ---------------------------------------------------------------------------
# requests


@dataclass
class RequestedTile:
    obj: int
    seg: int
    gof: int
    tile: int
    m: int  # 1-based representation
    offset: int
    length: int
    media_start: float  # unwrapped


@dataclass
class RequestPlan:
    t: float
    tiles: list = field(default_factory=list)
    ranges: dict = field(default_factory=dict)  # (obj, seg, rep) -> [(offset, length), ...]
    index_bits: float = 0.0
    tile_bits: float = 0.0
    header_bits: float = 0.0
    final_lambda: float = 0.0
    upgrades: int = 0
    requested_utility: float = 0.0  # utility of the newly selected representations at plan time
    budget: float = 0.0
    throughput: float = 0.0
    index_segments: list = field(default_factory=list)  # (obj, seg)

    @property
    def total_bits(self) -> float:
        return self.index_bits + self.tile_bits + self.header_bits

    @property
    def empty(self) -> bool:
        return self.total_bits <= 0


def coalesce(ranges) -> list[tuple[int, int]]:
    """Merge sorted (offset, length) ranges that touch or overlap."""
    out: list[list[int]] = []
    for off, ln in sorted(ranges):
        if ln <= 0:
            continue
        if out and off <= out[-1][0] + out[-1][1]:
            out[-1][1] = max(out[-1][1], off + ln - out[-1][0])
        else:
            out.append([off, ln])
    return [(a, b) for a, b in out]


def delivery_schedule(plan: RequestPlan, objects: list[StreamObject]):
    """Transmission order and the cumulative bit count at which each tile completes.

    Indexes come first, then one group per (segment, object, representation)
    sorted by media time, tiles in byte order within a group.
    """
    groups: dict = {}
    for rt in plan.tiles:
        groups.setdefault((rt.obj, rt.seg, rt.m), []).append(rt)
    order = sorted(groups, key=lambda k: (min(r.media_start for r in groups[k]), k[0], k[2], k[1]))
    cum = plan.index_bits
    seq, marks = [], []
    headers_sent = set()
    for gk in order:
        obj, seg, m = gk
        for rt in sorted(groups[gk], key=lambda r: r.offset):
            hk = (obj, seg, rt.gof, m)
            if hk not in headers_sent:
                headers_sent.add(hk)
                cum += 8 * int(objects[obj].gof(seg, rt.gof).header[m - 1, 1])
            cum += 8 * rt.length
            seq.append(rt)
            marks.append(cum)
    return seq, np.array(marks, dtype=float)


def build_ranges(plan: RequestPlan, objects: list[StreamObject]) -> None:
    raw: dict = {}
    header_bits = 0.0
    seen = set()
    for rt in plan.tiles:
        key = (rt.obj, rt.seg, rt.m - 1)
        raw.setdefault(key, []).append((rt.offset, rt.length))
        hk = (rt.obj, rt.seg, rt.gof, rt.m)
        if hk not in seen:
            seen.add(hk)
            off, ln = objects[rt.obj].gof(rt.seg, rt.gof).header[rt.m - 1]
            if ln:
                raw[key].append((int(off), int(ln)))
                header_bits += 8 * int(ln)
    plan.ranges = {k: coalesce(v) for k, v in sorted(raw.items())}
    plan.header_bits = header_bits


# ---------------------------------------------------------------------------
# playback engine stand-in


@dataclass
class ReleaseRecord:
    t: float
    obj: int
    seg: int
    gof: int
    pass_no: int
    media_start: float
    tiles: int
    visible_tiles: int
    visible_rep_sum: float
    rep_sum: float
    utility: float
    empty: bool


class Playback:
    """Releases GOFs as the trailing edge passes them and accounts for stalls.

    A stall starts when the trailing edge reaches a GOF with nothing received
    and ends when any tile of that GOF arrives. While stalled every object's
    window is frozen by shifting the shared start time.
    """

    def __init__(self, objects, window: WindowState, store: BufferStore, camera, perr_min: float = 0.1):
        self.objects = objects
        self.window = window
        self.store = store
        self.camera = camera
        self.perr_min = perr_min
        self.clock = 0.0
        self.started = False
        self.cursor: list[tuple[int, int]] = []  # (pass, position in clip GOF list)
        self.stalled_since: float | None = None
        self.stall_t0: float = 0.0
        self.stalled_key = None
        self.stall_count = 0
        self.stall_seconds = 0.0
        self.stall_log: list[tuple[float, float]] = []
        self.releases: list[ReleaseRecord] = []
        self.late_arrivals = 0
        self.stall_flag_since_last = False

    def start(self, t0: float) -> None:
        self.window.t0 = t0
        self.clock = t0
        self.started = True
        self.cursor = []
        for o in self.objects:
            tl = o.timeline
            k, clip_tau = tl.wrap(tl.tau0)
            j = int(np.searchsorted(o.gof_starts, clip_tau - 1e-9, side="left"))
            self.cursor.append((k, j))

    @property
    def stalled(self) -> bool:
        return self.stalled_since is not None

    def _next(self):
        """(deadline user time, object) of the next GOF release."""
        best_t, best_o = math.inf, -1
        for oi, o in enumerate(self.objects):
            k, j = self.cursor[oi]
            if j >= len(o.gof_starts):
                if not o.timeline.loop:
                    continue
                k, j = k + 1, 0
                self.cursor[oi] = (k, j)
            start = float(o.gof_starts[j]) + k * (o.clip_length if o.timeline.loop else 0.0)
            t = self.window.t0 + (start - o.timeline.tau0) / o.timeline.speed
            if t < best_t:
                best_t, best_o = t, oi
        return best_t, best_o

    def _sync_window(self, t: float) -> None:
        if self.stalled_since is not None:
            self.window.t0 = self.stall_t0 + (t - self.stalled_since)

    def advance(self, t_target: float, arrivals=()) -> None:
        """Process releases and tile arrivals in time order up to ``t_target``."""
        arrivals = list(arrivals)
        ai = 0
        while True:
            t_arr = arrivals[ai][0] if ai < len(arrivals) else math.inf
            if not self.started:
                if t_arr <= t_target:
                    self._install(arrivals[ai])
                    ai += 1
                    continue
                break
            if self.stalled_since is not None:
                if t_arr <= t_target:
                    rec = arrivals[ai]
                    ai += 1
                    self._install(rec)
                    key = (rec[1], rec[2], rec[3])
                    if key == self.stalled_key:
                        self._resume(rec[0])
                    continue
                self._sync_window(t_target)
                break
            t_rel, oi = self._next()
            if t_rel < t_arr and t_rel <= t_target:
                self._release(t_rel, oi)
                continue
            if t_arr <= t_target:
                self._install(arrivals[ai])
                ai += 1
                continue
            break
        self.clock = max(self.clock, t_target)

    def _install(self, rec) -> None:
        t, obj, seg, g, tile, m = rec
        key = (obj, seg, g)
        if key not in self.store.entries:
            self.late_arrivals += 1
            return
        self.store.receive(key, tile, m, t)

    def _resume(self, t: float) -> None:
        dur = t - self.stalled_since
        self.stall_seconds += dur
        self.stall_log.append((self.stalled_since, t))
        self.window.t0 = self.stall_t0 + dur
        self.stalled_since = None
        self.stalled_key = None

    def _release(self, t: float, oi: int) -> None:
        o = self.objects[oi]
        k, j = self.cursor[oi]
        seg, g = o.gof_keys[j]
        key = (oi, seg, g)
        st = o.gof(seg, g)
        entry = self.store.entries.get(key)
        if st.morton.size and (entry is None or entry.empty):
            self.stall_count += 1
            self.stalled_since = t
            self.stall_t0 = self.window.t0
            self.stalled_key = key
            self.stall_flag_since_last = True
            if entry is None:
                self.store.gof(key, st.media_start, st.morton)
            return
        self.cursor[oi] = (k, j + 1)
        n = entry.n.copy() if entry is not None else np.zeros(0, dtype=np.int64)
        views = self.camera(t)
        util = 0.0
        vis_count = 0
        vis_sum = 0.0
        if n.size:
            perr = np.full(len(n), self.perr_min)
            table = utility_table(st.positions, st.normals, perr, o.manifest, views, o.coeffs)
            util = float(table[np.arange(len(n)), n].sum())
            vis = np.zeros(len(n), dtype=bool)
            for v in views:
                vis |= visible_mask(st.positions, st.normals, v)
            vis_count = int(vis.sum())
            vis_sum = float(n[vis].sum())
        rec = ReleaseRecord(
            t, oi, seg, g, k, st.media_start + k * (o.clip_length if o.timeline.loop else 0.0),
            int(n.size), vis_count, vis_sum, float(n.sum()), util, bool(n.size and not n.any()),
        )
        self.releases.append(rec)
        if entry is not None:
            self.store.release_gof(key, t, k)


# ---------------------------------------------------------------------------
# the client


@dataclass
class ClientConfig:
    algorithm: str = "wba"
    cycle: float = 0.5
    weight: float = 0.75
    startup_seconds: float = 1.0
    strict_budget: bool = False
    tba_safety: float = 0.9
    bba_reservoir: float = 1.0
    bba_cushion: float = 4.0
    queue_chunk_gofs: int = 1
    queue_max_buffer: float = 30.0
    guard_cycles: float = 2.0  # empty GOFs playing within this many cycles get rung 1 first
    predictor: PredictorConfig = field(default_factory=PredictorConfig)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.cycle <= 0 or not 0 <= self.weight < 1:
            raise ValueError("need cycle > 0 and 0 <= weight < 1")
        if self.startup_seconds < 0:
            raise ValueError("startup seconds must be >= 0")
        if self.queue_chunk_gofs < 1 or self.queue_max_buffer <= 0:
            raise ValueError("queue chunk and max buffer must be positive")
        if self.guard_cycles < 0:
            raise ValueError("guard cycles must be >= 0")
        if not 0 <= self.bba_reservoir < self.bba_cushion:
            raise ValueError("need 0 <= reservoir < cushion")


@dataclass
class ObjectState:
    """One object's window tiles at a request opportunity."""

    mean_selected_rep: float = math.nan  # after this request
    frac_buffered: float = math.nan  # n >= 1 before the request
    frac_covered: float = math.nan  # n >= 1 once the request lands
    visible_fraction: float = math.nan  # tiles inside the current view


@dataclass
class StepInfo:
    """What one request opportunity looked at and decided."""

    t: float
    plan: RequestPlan
    window_tiles: int = 0
    # per object: (visible flag, mean selected rep over window tiles, fraction with n >= 1)
    object_state: list = field(default_factory=list)
    visible_utility: float = 0.0
    object_utility: list = field(default_factory=list)


class Client:
    def __init__(
        self,
        objects: list[StreamObject],
        link: PacketLink,
        camera,
        config: ClientConfig | None = None,
        window: WindowState | None = None,
    ):
        self.objects = objects
        self.link = link
        self.camera = camera
        self.cfg = config or ClientConfig()
        self.window = window or WindowState([o.timeline for o in objects])
        self.store = BufferStore(retain_released=any(o.timeline.loop for o in objects))
        self.estimator = ThroughputEstimator(self.cfg.weight, self.cfg.cycle)
        self.playback = Playback(objects, self.window, self.store, camera, self.cfg.predictor.p_err_min)
        self.pointer = [o.timeline.tau0 for o in objects]  # queue modes: end of requested media
        self.log: list[RequestPlan] = []
        self.startup_time = math.nan

    # -- helpers -------------------------------------------------------------

    def _fetch_indexes(self, plan: RequestPlan, spans) -> None:
        for oi, (a, b) in enumerate(spans):
            self._fetch_object_indexes(plan, oi, a, b)

    def _fetch_object_indexes(self, plan: RequestPlan, oi: int, a: float, b: float) -> None:
        o = self.objects[oi]
        for s in o.segments_between(a, b):
            if s not in o.known_indexes:
                o.known_indexes.add(s)
                plan.index_bits += o.index_bits[s]
                plan.index_segments.append((oi, s))

    def _request(self, plan: RequestPlan, oi: int, ustart: float, seg: int, g: int, tiles, m: int) -> None:
        st = self.objects[oi].gof(seg, g)
        for j in tiles:
            plan.tiles.append(
                RequestedTile(
                    oi, seg, g, int(j), int(m), int(st.tile_offset[m - 1, j]),
                    int(st.bits[j, m] // 8), ustart,
                )
            )
            plan.tile_bits += float(st.bits[j, m])

    def _download(self, plan: RequestPlan, t: float):
        """Send the plan; returns (completion time, arrival events)."""
        build_ranges(plan, self.objects)
        if plan.empty:
            return t + self.cfg.cycle, []
        seq, marks = delivery_schedule(plan, self.objects)
        marks = np.append(marks, plan.total_bits)
        times = self.link.progress_times(marks, t)
        done = float(times[-1])
        events = [
            (float(times[i]), rt.obj, rt.seg, rt.gof, rt.tile, rt.m) for i, rt in enumerate(seq)
        ]
        return done, events

    # -- startup ---------------------------------------------------------------

    def startup(self, t: float = 0.0) -> float:
        """Fetch manifests, first indexes and the lowest rung for the first seconds."""
        plan = RequestPlan(t=t)
        nu = self.cfg.startup_seconds
        plan.index_bits = float(sum(o.manifest_bits for o in self.objects))
        spans = [(o.timeline.tau0, o.timeline.tau0 + nu * o.timeline.speed) for o in self.objects]
        self._fetch_indexes(plan, spans)
        for oi, (a, b) in enumerate(spans):
            for ustart, seg, g in self.objects[oi].gofs_between(a, b):
                st = self.objects[oi].gof(seg, g)
                self.store.gof((oi, seg, g), st.media_start, st.morton)
                self._request(plan, oi, ustart, seg, g, range(len(st.morton)), 1)
            self.pointer[oi] = max(self.pointer[oi], b)
        done, events = self._download(plan, t)
        if math.isinf(done):
            raise RuntimeError("startup never completes on this network")
        self.playback.advance(done, events)
        if done > t:
            self.estimator.update(plan.total_bits, done - t)
        plan.throughput = self.estimator.estimate or 0.0
        self.log.append(plan)
        self.startup_time = done
        self.playback.start(done)
        return done

    # -- request opportunities -------------------------------------------------

    def step(self, t: float):
        """One request opportunity at ``t``; returns (StepInfo, next time, arrivals)."""
        if self.cfg.algorithm == "wba":
            info = self.wba_step(t)
        else:
            info = self.queue_step(t)
        plan = info.plan
        done, events = self._download(plan, t)
        if not plan.empty and not math.isinf(done):
            self.estimator.update(plan.total_bits, done - t)
        self.log.append(plan)
        return info, done, events

    def _window_blocks(self, t: float):
        blocks = []
        for oi, o in enumerate(self.objects):
            trail = self.window.trail(t, oi)
            lead = self.window.lead(t, oi)
            for ustart, seg, g in o.gofs_between(trail, lead):
                st = o.gof(seg, g)
                if st.morton.size == 0:
                    continue
                blocks.append((oi, seg, g, ustart, st))
        blocks.sort(key=lambda b: (b[0], b[1], b[2]))
        return blocks

    def _deadline_floor(self, t, blocks, sizes, cur):
        """Rung 1 for every tile of a still-empty GOF that plays before the guard horizon."""
        if self.cfg.guard_cycles <= 0:
            return None
        floor = np.zeros_like(cur)
        horizon = t + self.cfg.guard_cycles * self.cfg.cycle
        pos = 0
        hit = False
        for (oi, seg, g, ustart, st), k in zip(blocks, sizes):
            if ustart < self.window.trail(horizon, oi) and not cur[pos : pos + k].any():
                floor[pos : pos + k] = 1
                hit = True
            pos += k
        return floor if hit else None

    def wba_step(self, t: float) -> StepInfo:
        """Plan the next multipart request for the full window-based client."""
        est = self.estimator
        plan = RequestPlan(t=t, budget=est.budget, throughput=est.estimate or 0.0)
        spans = [(self.window.trail(t, i), self.window.lead(t, i)) for i in range(len(self.objects))]
        self._fetch_indexes(plan, spans)
        views = self.camera(t)
        blocks = self._window_blocks(t)
        info = StepInfo(t, plan)
        if not blocks:
            return info
        width = max(o.rep_count for o in self.objects) + 1
        sizes = [len(b[4].morton) for b in blocks]
        total = sum(sizes)
        util = np.zeros((total, width))
        bits = np.zeros((total, width))
        cur = np.zeros(total, dtype=np.int64)
        obj_of = np.zeros(total, dtype=np.int64)
        vis_any = np.zeros(total, dtype=bool)
        pos = 0
        by_obj: dict = {}
        for bi, (oi, seg, g, ustart, st) in enumerate(blocks):
            k = sizes[bi]
            entry = self.store.gof((oi, seg, g), st.media_start, st.morton)
            cur[pos : pos + k] = entry.n
            obj_of[pos : pos + k] = oi
            bits[pos : pos + k, : st.bits.shape[1]] = st.bits
            by_obj.setdefault(oi, []).append((pos, k, ustart, st))
            pos += k
        for oi, parts in by_obj.items():
            o = self.objects[oi]
            trail = spans[oi][0]
            span = o.timeline.speed * (
                self.cfg.predictor.denominator
                if self.cfg.predictor.denominator is not None
                else self.window.size(t)
            )
            positions = np.concatenate([p[3].positions for p in parts])
            normals = np.concatenate([p[3].normals for p in parts])
            taus = np.concatenate([np.full(p[1], p[2]) for p in parts])
            perr = p_err_array(taus, trail, span, self.cfg.predictor)
            table = utility_table(positions, normals, perr, o.manifest, views, o.coeffs)
            vis = np.zeros(len(positions), dtype=bool)
            for v in views:
                vis |= visible_mask(positions, normals, v)
            rows = np.concatenate([np.arange(p[0], p[0] + p[1]) for p in parts])
            util[rows, : table.shape[1]] = table
            vis_any[rows] = vis
        floor = self._deadline_floor(t, blocks, sizes, cur)
        sel, consumed, lam = allocate_arrays(
            util, bits, cur, est.budget, spent=plan.index_bits, strict=self.cfg.strict_budget, start=floor
        )
        plan.final_lambda = float(lam)
        changed = np.nonzero(sel != cur)[0]
        plan.upgrades = int(np.count_nonzero(cur[changed] > 0))
        plan.requested_utility = float(util[changed, sel[changed]].sum())
        pos = 0
        for bi, (oi, seg, g, ustart, st) in enumerate(blocks):
            k = sizes[bi]
            local = changed[(changed >= pos) & (changed < pos + k)]
            for i in local:
                self._request(plan, oi, ustart, seg, g, [i - pos], int(sel[i]))
            pos += k
        info.window_tiles = total
        here = np.arange(total)
        held = util[here, cur]
        info.visible_utility = float(held[vis_any].sum())
        info.object_utility = [float(held[obj_of == oi].sum()) for oi in range(len(self.objects))]
        info.object_state = []
        for oi in range(len(self.objects)):
            mine = obj_of == oi
            if not mine.any():
                info.object_state.append(ObjectState())
                continue
            info.object_state.append(
                ObjectState(
                    float(sel[mine].mean()),
                    float(np.mean(cur[mine] >= 1)),
                    float(np.mean(sel[mine] >= 1)),
                    float(np.mean(vis_any[mine])),
                )
            )
        return info

    def queue_step(self, t: float) -> StepInfo:
        """Baselines: request whole GOFs in media order at one representation."""
        cfg = self.cfg
        est = self.estimator
        plan = RequestPlan(t=t, budget=est.budget, throughput=est.estimate or 0.0)
        info = StepInfo(t, plan)
        c = est.estimate or 0.0
        for oi, o in enumerate(self.objects):
            tl = o.timeline
            pointer = self.pointer[oi]
            trail = self.window.trail(t, oi)
            occupancy = max(pointer - trail, 0.0) / tl.speed
            if cfg.algorithm == "stripped-wba":
                target = self.window.lead(t + cfg.cycle, oi)
                need = target - pointer
                if need <= 1e-9:
                    continue
                m = stripped_wba_select(o.manifest.bandwidths, c, cfg.cycle, need)
            else:
                if occupancy >= cfg.queue_max_buffer:
                    continue
                target = math.inf
                if cfg.algorithm == "tba":
                    m = tba_select(o.manifest.bandwidths, c, cfg.tba_safety)
                else:
                    m = bba_select(o.manifest.bandwidths, occupancy, cfg.bba_reservoir, cfg.bba_cushion)
            chunked = math.isinf(target)
            if chunked:
                target = pointer + (cfg.queue_chunk_gofs + 1) * o.manifest.segment_duration
            if not tl.loop:
                target = min(target, tl.clip_end)
            gofs = o.gofs_between(pointer, target)
            if chunked:
                gofs = gofs[: cfg.queue_chunk_gofs]
            if not gofs:
                continue
            self._fetch_object_indexes(plan, oi, pointer, gofs[-1][0])
            for ustart, seg, g in gofs:
                st = o.gof(seg, g)
                self.store.gof((oi, seg, g), st.media_start, st.morton)
                self._request(plan, oi, ustart, seg, g, range(len(st.morton)), m)
            last = gofs[-1]
            st = o.gof(last[1], last[2])
            self.pointer[oi] = last[0] + (st.media_end - st.media_start)
        return info


def write_request_log(path, plans: list[RequestPlan]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["i", "t_i", "C_i", "budget_bits", "planned_bits", "index_bits", "num_tiles", "num_upgrades", "final_lambda"]
        )
        for i, p in enumerate(plans):
            w.writerow(
                [i, repr(p.t), repr(p.throughput), repr(p.budget), repr(p.tile_bits + p.header_bits),
                 repr(p.index_bits), len(p.tiles), p.upgrades, repr(p.final_lambda)]
            )
