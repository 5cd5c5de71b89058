"""The buffer as a window over the media timeline.

At user time ``t`` an object's window is ``[trail(t), lead(t))`` in media time:
content leaving the trailing edge is played, content inside the window may be
requested (again) at any time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class MissingIndexError(LookupError):
    """A segment inside the window has no index yet; fetch it first."""

    def __init__(self, obj: int, segments):
        self.obj = obj
        self.segments = sorted(segments)
        super().__init__(f"object {obj}: missing index for segments {self.segments}")


def window_size(elapsed: float, floor: float = 1.0, cap: float = 5.0, ramp_end: float = 4.0) -> float:
    """Window length in user seconds, ramping linearly from ``floor`` to ``cap``."""
    if elapsed < 0:
        raise ValueError("elapsed must be >= 0")
    if ramp_end <= 0 or elapsed >= ramp_end:
        return cap
    return floor + (cap - floor) * elapsed / ramp_end


@dataclass
class ObjectTimeline:
    tau0: float = 0.0
    speed: float = 1.0
    clip_start: float = 0.0
    clip_end: float = math.inf
    loop: bool = False

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("playback speed must be positive")

    @property
    def clip_length(self) -> float:
        return self.clip_end - self.clip_start

    def wrap(self, media: float) -> tuple[int, float]:
        """Map unwrapped media time to (pass, media time within the clip)."""
        if not self.loop:
            return 0, media
        k = math.floor((media - self.clip_start) / self.clip_length + 1e-12)
        return k, media - k * self.clip_length


@dataclass
class WindowState:
    """Per-object (tau0, v) with a shared start time and window function."""

    objects: list[ObjectTimeline]
    t0: float = 0.0
    window_floor: float = 1.0
    window_cap: float = 5.0
    ramp_end: float = 4.0

    def __post_init__(self):
        if self.window_floor > self.window_cap:
            raise ValueError("window floor exceeds cap")

    def size(self, t: float) -> float:
        return window_size(max(t - self.t0, 0.0), self.window_floor, self.window_cap, self.ramp_end)

    def span(self, t: float, obj: int = 0) -> float:
        """Unclamped window length in media seconds."""
        return self.objects[obj].speed * self.size(t)

    def trail(self, t: float, obj: int = 0) -> float:
        o = self.objects[obj]
        return o.tau0 + o.speed * (t - self.t0)

    def lead(self, t: float, obj: int = 0) -> float:
        o = self.objects[obj]
        lead = self.trail(t, obj) + self.span(t, obj)
        if not o.loop:
            lead = min(lead, o.clip_end)
        return lead

    def seek(self, t: float, media: float, obj: int | None = None) -> None:
        """Jump so that the trailing edge sits at ``media`` at user time ``t``.

        The window restarts its ramp from the floor. With ``obj`` set only that
        object's start point moves.
        """
        targets = range(len(self.objects)) if obj is None else [obj]
        for i in targets:
            self.objects[i].tau0 = media
        self.t0 = t

    def set_speed(self, t: float, speed: float, obj: int = 0) -> None:
        """Change playback speed at ``t`` without moving the trailing edge."""
        if speed <= 0:
            raise ValueError("playback speed must be positive")
        o = self.objects[obj]
        o.tau0 = self.trail(t, obj) - speed * (t - self.t0)
        o.speed = speed


def w_trail(t: float, window: WindowState, obj: int = 0) -> float:
    return window.trail(t, obj)


def w_lead(t: float, window: WindowState, obj: int = 0) -> float:
    return window.lead(t, obj)


@dataclass
class GofEntry:
    """Buffered state for every occupied tile of one GOF."""

    media_start: float  # seconds, within the clip
    morton: np.ndarray
    n: np.ndarray  # selected representation per tile, 0 = nothing received
    utility: np.ndarray | None = None  # (K, M+1) as of the last evaluation
    bit_count: np.ndarray | None = None  # (K, M+1)
    received_at: np.ndarray | None = None

    def __post_init__(self):
        if self.received_at is None:
            self.received_at = np.full(len(self.morton), math.nan)

    @property
    def empty(self) -> bool:
        return len(self.n) > 0 and not np.any(self.n > 0)


GofKey = tuple  # (object, segment, gof)


@dataclass
class BufferStore:
    """Mirror of the server's object/segment/GOF/tile structure."""

    entries: dict = field(default_factory=dict)
    played_log: list = field(default_factory=list)
    stall_count: int = 0
    retain_released: bool = False

    def gof(self, key: GofKey, media_start: float, morton) -> GofEntry:
        e = self.entries.get(key)
        if e is None:
            morton = np.asarray(morton, dtype=np.int64)
            e = GofEntry(media_start, morton, np.zeros(len(morton), dtype=np.int64))
            self.entries[key] = e
        return e

    def get(self, obj: int, seg: int, gof: int, morton: int) -> dict | None:
        e = self.entries.get((obj, seg, gof))
        if e is None:
            return None
        j = int(np.searchsorted(e.morton, morton))
        if j >= len(e.morton) or e.morton[j] != morton:
            return None
        return {
            "n": int(e.n[j]),
            "utility": None if e.utility is None else e.utility[j],
            "bit_count": None if e.bit_count is None else e.bit_count[j],
            "received_at": float(e.received_at[j]),
        }

    def receive(self, key: GofKey, tile: int, m: int, t: float) -> bool:
        """Install representation ``m``; never downgrades. Returns True if applied."""
        e = self.entries[key]
        if m <= e.n[tile]:
            return False
        e.n[tile] = m
        e.received_at[tile] = t
        return True

    def release(self, trail_by_object: dict, t_now: float | None = None) -> list:
        """Release every GOF whose start precedes its object's trailing edge.

        ``trail_by_object`` maps object id to the trailing edge in clip media
        time. Fully empty GOFs count as stalls.
        """
        out = []
        for key in sorted(self.entries, key=lambda k: (self.entries[k].media_start, k)):
            e = self.entries[key]
            trail = trail_by_object.get(key[0])
            if trail is None or not e.media_start < trail:
                continue
            out.append(self.release_gof(key, t_now))
        return out

    def release_gof(self, key: GofKey, t_now: float | None = None, pass_no: int = 0) -> tuple:
        e = self.entries[key]
        if e.empty:
            self.stall_count += 1
        rec = (key, pass_no, e.n.copy(), t_now)
        self.played_log.append(rec)
        if not self.retain_released:
            del self.entries[key]
        return rec


def discard_outside(store: BufferStore, spans: dict) -> int:
    """Drop entries whose media start lies outside its object's ``[trail, lead)``.

    ``spans`` maps object id to ``(trail, lead)`` in the same media time as the
    entries. Returns the number of GOFs dropped.
    """
    drop = [
        k
        for k, e in store.entries.items()
        if k[0] in spans and not spans[k[0]][0] <= e.media_start < spans[k[0]][1]
    ]
    for k in drop:
        del store.entries[k]
    return len(drop)


def contiguous_span(gof_starts, gof_ready, trail: float, lead: float) -> float:
    """Media seconds of fully received content ahead of ``trail``.

    ``gof_starts`` are ascending start times of every GOF in ``[trail, lead)``
    and ``gof_ready`` says whether all of its tiles have something buffered.
    Callers report GOFs of segments whose index is unknown as not ready.
    """
    for start, ready in zip(gof_starts, gof_ready):
        if start < trail or start >= lead:
            continue
        if not ready:
            return start - trail
    return max(lead - trail, 0.0)


def occupancy(window: WindowState, t: float, gof_starts, gof_ready, obj: int = 0) -> float:
    """Occupancy in user seconds: contiguous received span divided by speed."""
    trail = window.trail(t, obj)
    lead = window.lead(t, obj)
    span = contiguous_span(gof_starts, gof_ready, trail, lead)
    return min(span / window.objects[obj].speed, window.size(t))
