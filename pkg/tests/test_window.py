import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from volustream.window import (
    BufferStore,
    ObjectTimeline,
    WindowState,
    contiguous_span,
    discard_outside,
    occupancy,
    w_lead,
    w_trail,
    window_size,
)


def test_window_size_examples():
    assert window_size(0) == 1
    assert window_size(2) == 3
    assert window_size(4) == 5
    assert window_size(10) == 5
    assert window_size(1, floor=2, cap=2) == 2
    with pytest.raises(ValueError):
        window_size(-0.1)


def test_edges_examples():
    w = WindowState([ObjectTimeline()], t0=0.0)
    assert w_trail(2.5, w) == 2.5
    assert w_lead(2.0, w) == 5.0
    fast = WindowState([ObjectTimeline(tau0=3.0, speed=2.0)], t0=1.0)
    assert fast.trail(2.0) == 5.0
    assert fast.lead(2.0) == 9.0


def test_lead_clamped_at_clip_end_unless_looping():
    w = WindowState([ObjectTimeline(clip_end=4.0), ObjectTimeline(clip_end=4.0, loop=True)], t0=0.0)
    assert w.lead(2.0, 0) == 4.0
    assert w.lead(2.0, 1) == 5.0


@given(st.floats(0, 100), st.floats(0.1, 4), st.floats(-10, 10), st.floats(0, 50))
def test_edges_monotone_and_span_exact(t, speed, tau0, dt):
    w = WindowState([ObjectTimeline(tau0=tau0, speed=speed)], t0=0.0)
    assert w.trail(t + dt) >= w.trail(t)
    assert w.lead(t + dt) >= w.lead(t) - 1e-9
    assert abs((w.lead(t) - w.trail(t)) - speed * window_size(t)) <= 1e-12 * max(1.0, abs(w.lead(t)))


def test_objects_share_start_time_but_not_media_time():
    w = WindowState([ObjectTimeline(tau0=0.0), ObjectTimeline(tau0=7.0)], t0=1.0)
    assert w.trail(3.0, 1) - w.trail(3.0, 0) == 7.0
    assert w.lead(3.0, 0) - w.trail(3.0, 0) == w.lead(3.0, 1) - w.trail(3.0, 1)


def test_seek_moves_trail_and_restarts_ramp():
    w = WindowState([ObjectTimeline(), ObjectTimeline(tau0=2.0)], t0=0.0)
    w.seek(10.0, 30.0, obj=0)
    assert w.trail(10.0, 0) == 30.0
    assert w.size(10.0) == 1.0
    assert w.trail(10.0, 1) == 2.0


def test_set_speed_keeps_trail_continuous():
    w = WindowState([ObjectTimeline()], t0=0.0)
    before = w.trail(6.0)
    w.set_speed(6.0, 2.0)
    assert w.trail(6.0) == pytest.approx(before)
    assert w.trail(7.0) == pytest.approx(before + 2.0)
    with pytest.raises(ValueError):
        w.set_speed(7.0, 0.0)


def test_timeline_validation_and_wrap():
    with pytest.raises(ValueError):
        ObjectTimeline(speed=0)
    with pytest.raises(ValueError):
        WindowState([ObjectTimeline()], window_floor=6.0)
    loop = ObjectTimeline(clip_end=10.0, loop=True)
    assert loop.wrap(13.5) == (1, pytest.approx(3.5))
    assert ObjectTimeline().wrap(13.5) == (0, 13.5)


class TestBufferStore:
    def store(self):
        s = BufferStore()
        s.gof((0, 0, 0), 0.0, [1, 5, 9])
        s.gof((0, 0, 1), 0.2, [1, 5])
        return s

    def test_receive_never_downgrades(self):
        s = self.store()
        assert s.receive((0, 0, 0), 1, 3, 1.0)
        assert not s.receive((0, 0, 0), 1, 2, 2.0)
        rec = s.get(0, 0, 0, 5)
        assert rec["n"] == 3 and rec["received_at"] == 1.0
        assert s.get(0, 0, 0, 6) is None and s.get(1, 0, 0, 5) is None

    @given(st.lists(st.integers(0, 5), max_size=30))
    def test_n_is_monotone(self, offers):
        s = self.store()
        seen = 0
        for i, m in enumerate(offers):
            s.receive((0, 0, 0), 0, m, float(i))
            now = s.get(0, 0, 0, 1)["n"]
            assert now >= seen
            seen = now
        assert seen == max(offers, default=0)

    def test_release_order_and_stall(self):
        s = self.store()
        assert s.release({0: 0.0}) == []  # nothing before the trail at start
        s.receive((0, 0, 0), 0, 1, 0.5)
        out = s.release({0: 0.2 - 1e-9})
        assert [r[0] for r in out] == [(0, 0, 0)]
        assert s.stall_count == 0
        out = s.release({0: 0.4})
        assert [r[0] for r in out] == [(0, 0, 1)]
        assert s.stall_count == 1  # nothing was received for the second GOF
        assert not s.entries

    def test_gof_with_holes_plays(self):
        s = self.store()
        s.receive((0, 0, 0), 2, 1, 0.1)
        s.release({0: 0.1})
        assert s.stall_count == 0

    def test_retained_entries_survive_release(self):
        s = BufferStore(retain_released=True)
        s.gof((0, 0, 0), 0.0, [1])
        s.receive((0, 0, 0), 0, 2, 0.0)
        s.release_gof((0, 0, 0), 1.0, pass_no=0)
        assert s.get(0, 0, 0, 1)["n"] == 2
        assert s.played_log[-1][1] == 0

    def test_discard_outside(self):
        s = self.store()
        s.gof((1, 0, 0), 5.0, [1])
        assert discard_outside(s, {0: (0.1, 1.0)}) == 1
        assert set(s.entries) == {(0, 0, 1), (1, 0, 0)}


class TestOccupancy:
    starts = [i * 0.2 for i in range(30)]

    def test_contiguous_span(self):
        ready = [True] * 5 + [False] + [True] * 24
        assert contiguous_span(self.starts, ready, 0.0, 5.0) == pytest.approx(1.0)
        assert contiguous_span(self.starts, [True] * 30, 0.0, 5.0) == 5.0
        assert contiguous_span(self.starts, [False] * 30, 0.0, 5.0) == 0.0

    def test_startup_fill_and_steady_state(self):
        w = WindowState([ObjectTimeline()], t0=0.0)
        ready = [s < 1.0 for s in self.starts]
        assert occupancy(w, 0.0, self.starts, ready) == pytest.approx(1.0)
        assert occupancy(w, 10.0, [10 + s for s in self.starts], [True] * 30) == 5.0

    @given(st.floats(0, 20), st.lists(st.booleans(), min_size=30, max_size=30), st.floats(0.5, 3))
    def test_bounded_by_window(self, t, ready, speed):
        w = WindowState([ObjectTimeline(speed=speed)], t0=0.0)
        starts = [w.trail(t) + i * 0.2 - 1.0 for i in range(30)]
        occ = occupancy(w, t, starts, ready)
        assert 0.0 <= occ <= w.size(t) + 1e-12
        assert not math.isnan(occ)


def test_store_arrays_align():
    s = BufferStore()
    e = s.gof((0, 0, 0), 0.0, np.array([3, 7]))
    assert e.n.dtype == np.int64 and np.all(np.isnan(e.received_at))
