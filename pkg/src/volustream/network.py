"""Seeded Poisson packet-arrival link with a piecewise-constant mean rate.

One global arrival process is drawn lazily from a single random stream, so a
download's completion time depends only on the seed and on when it starts.
Downloads are serial: the caller starts the next one after the previous ends.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PACKET_BITS = 12_000
STABLE_BPS = 18e6
VARIABLE_LEVELS_BPS = (20e6, 6e6, 14e6, 3e6, 18e6)
VARIABLE_PERIOD_S = 5.0


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkProfile:
    schedule: tuple  # ((start_s, mean_bps), ...) sorted, first start 0
    packet_size: float = PACKET_BITS
    seed: int = 0
    repeat_every: float | None = None  # schedule period, None = last level holds forever
    rtt: float = 0.0

    def __post_init__(self):
        sched = tuple((float(s), float(r)) for s, r in self.schedule)
        object.__setattr__(self, "schedule", sched)
        if not sched or sched[0][0] != 0:
            raise ConfigurationError("schedule must start at t = 0")
        if any(b[0] <= a[0] for a, b in zip(sched, sched[1:])):
            raise ConfigurationError("schedule start times must increase")
        if any(r < 0 for _, r in sched):
            raise ConfigurationError("mean rates must be >= 0")
        if self.packet_size <= 0:
            raise ConfigurationError("packet size must be positive")
        if self.repeat_every is not None and self.repeat_every <= sched[-1][0]:
            raise ConfigurationError("repeat period must exceed the last schedule start")
        if self.rtt < 0:
            raise ConfigurationError("rtt must be >= 0")

    def rate_at(self, t: float) -> float:
        return self.schedule[self._epoch_index(t)[0]][1]

    def _epoch_index(self, t: float):
        """(schedule index, epoch start, epoch end) for the epoch containing ``t``."""
        base = 0.0
        if self.repeat_every is not None:
            k = math.floor(t / self.repeat_every)
            base = k * self.repeat_every
            t = t - base
        starts = [s for s, _ in self.schedule]
        i = bisect.bisect_right(starts, t) - 1
        if i + 1 < len(starts):
            end = starts[i + 1]
        elif self.repeat_every is not None:
            end = self.repeat_every
        else:
            end = math.inf
        return i, base + starts[i], base + end

    def mean_rate(self, t0: float, t1: float) -> float:
        """Time-averaged schedule rate over [t0, t1)."""
        total, t = 0.0, t0
        while t < t1:
            i, _, end = self._epoch_index(t)
            step = min(end, t1) - t
            total += self.schedule[i][1] * step
            t += step
        return total / (t1 - t0)


def preset(name: str, seed: int = 0, packet_size: float = PACKET_BITS) -> NetworkProfile:
    if name == "stable":
        return NetworkProfile(((0.0, STABLE_BPS),), packet_size, seed)
    if name == "variable":
        sched = tuple((i * VARIABLE_PERIOD_S, r) for i, r in enumerate(VARIABLE_LEVELS_BPS))
        return NetworkProfile(sched, packet_size, seed, repeat_every=VARIABLE_PERIOD_S * len(sched))
    raise ConfigurationError(f"unknown network preset {name!r}")


def load_trace(path, seed: int = 0, packet_size: float = PACKET_BITS) -> NetworkProfile:
    """Schedule from a CSV of ``t_start_s, mean_rate_bps`` rows (header optional)."""
    rows = []
    with open(Path(path), newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                if rows:
                    raise ConfigurationError(f"bad trace row {rec!r}") from None
    if not rows:
        raise ConfigurationError(f"empty network trace {path}")
    return NetworkProfile(tuple(rows), packet_size, seed)


def resolve(spec: str, seed: int = 0, packet_size: float = PACKET_BITS) -> NetworkProfile:
    """``stable``, ``variable`` or ``trace:<file>``."""
    if spec.startswith("trace:"):
        return load_trace(spec[len("trace:") :], seed, packet_size)
    return preset(spec, seed, packet_size)


@dataclass
class PacketLink:
    """Lazily generated arrival process for one profile and seed."""

    profile: NetworkProfile
    horizon_chunk: float = 5.0
    _times: list = field(default_factory=list, repr=False)
    _arrays: list = field(default_factory=list, repr=False)
    _generated_to: float = 0.0

    def __post_init__(self):
        self._rng = np.random.Generator(np.random.PCG64(self.profile.seed))
        self._flat = np.empty(0)
        self._epoch_carry = 0.0

    def _extend(self, until: float) -> bool:
        """Generate arrivals up to ``until``. False if the rate is zero forever."""
        alive = True
        while self._generated_to < until:
            i, _, end = self.profile._epoch_index(self._generated_to)
            rate = self.profile.schedule[i][1] / self.profile.packet_size
            if rate == 0:
                if math.isinf(end):
                    alive = False
                    break
                self._generated_to = end
                continue
            stop = min(end, self._generated_to + self.horizon_chunk)
            # conditional on the count, Poisson arrivals are uniform on the interval
            span = stop - self._generated_to
            count = self._rng.poisson(rate * span)
            pts = np.sort(self._rng.uniform(self._generated_to, stop, count))
            self._arrays.append(pts)
            self._generated_to = stop
        if self._arrays:
            self._flat = np.concatenate([self._flat, *self._arrays])
            self._arrays = []
        return alive

    def arrival_after(self, t: float, k: int) -> float:
        """Time of the k-th packet (1-based) arriving strictly after ``t``."""
        if k <= 0:
            return t
        guess = t + 1.0
        while True:
            start = int(np.searchsorted(self._flat, t, side="right"))
            if start + k <= len(self._flat):
                return float(self._flat[start + k - 1])
            if not self._extend(max(guess, self._generated_to + self.horizon_chunk)):
                start = int(np.searchsorted(self._flat, t, side="right"))
                if start + k <= len(self._flat):
                    return float(self._flat[start + k - 1])
                return math.inf
            guess = self._generated_to + self.horizon_chunk

    def packets_for(self, bits: float) -> int:
        return int(math.ceil(bits / self.profile.packet_size - 1e-12)) if bits > 0 else 0

    def download_time(self, bits: float, t_start: float) -> float:
        """Seconds from ``t_start`` until ``bits`` have arrived."""
        if bits < 0:
            raise ValueError("bits must be >= 0")
        if bits == 0:
            return 0.0
        begin = t_start + self.profile.rtt
        done = self.arrival_after(begin, self.packets_for(bits))
        return done - t_start

    def progress_times(self, cumulative_bits, t_start: float) -> np.ndarray:
        """Absolute arrival time of each cumulative-bit checkpoint of one download."""
        cum = np.asarray(cumulative_bits, float)
        if len(cum) == 0:
            return np.empty(0)
        begin = t_start + self.profile.rtt
        total = self.packets_for(float(cum[-1]))
        if total == 0:
            return np.full(len(cum), t_start)
        last = self.arrival_after(begin, total)
        start = int(np.searchsorted(self._flat, begin, side="right"))
        pk = np.ceil(cum / self.profile.packet_size - 1e-12).astype(np.int64)
        out = np.full(len(cum), begin)
        pos = pk > 0
        if math.isinf(last):
            avail = len(self._flat) - start
            ok = pos & (pk <= avail)
            out[ok] = self._flat[start + pk[ok] - 1]
            out[pos & (pk > avail)] = math.inf
            return out
        out[pos] = self._flat[start + pk[pos] - 1]
        return out

    def delivered_bits(self, t0: float, t1: float) -> float:
        """Bits a saturating download would receive in (t0, t1]."""
        self._extend(t1)
        a = np.searchsorted(self._flat, t0, side="right")
        b = np.searchsorted(self._flat, t1, side="right")
        return float(b - a) * self.profile.packet_size


def download_time(bits: float, t_start: float, profile: NetworkProfile) -> float:
    """Stateless convenience form; builds a fresh link from the profile's seed."""
    return PacketLink(profile).download_time(bits, t_start)
