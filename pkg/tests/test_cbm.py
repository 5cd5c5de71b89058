import math

import numpy as np
import pytest

from volustream.cbm import (
    Client,
    ClientConfig,
    RequestPlan,
    StreamObject,
    ThroughputEstimator,
    bba_select,
    coalesce,
    stripped_wba_select,
    tba_select,
    tiles_in_window,
    update_throughput,
    write_request_log,
)
from volustream.media import DEFAULT_LADDER_BPS, SphereShell, build_all_indexes, make_manifest
from volustream.network import NetworkProfile, PacketLink, preset
from volustream.scenario import StaticCamera
from volustream.window import MissingIndexError, ObjectTimeline, WindowState

LADDER = DEFAULT_LADDER_BPS


def rung_bw(m):
    return LADDER[m - 1]


class TestThroughput:
    def test_filter(self):
        est = ThroughputEstimator(estimate=8e6)
        assert update_throughput(est, 4e6, 1.0) == pytest.approx(7e6)
        assert est.budget == pytest.approx(3.5e6)

    def test_fixed_point_and_first_sample(self):
        est = ThroughputEstimator()
        assert est.update(2e6, 0.25) == 8e6
        assert est.update(4e6, 0.5) == 8e6

    def test_errors(self):
        with pytest.raises(ValueError):
            ThroughputEstimator().update(1e6, 0.0)
        with pytest.raises(ValueError):
            ThroughputEstimator(weight=1.0)
        with pytest.raises(ValueError):
            ThroughputEstimator(cycle=0)


class TestSelectors:
    def test_tba(self):
        assert rung_bw(tba_select(LADDER, 13e6)) == 8e6
        assert rung_bw(tba_select(LADDER, 25e6)) == 20e6
        assert rung_bw(tba_select(LADDER, 1e6)) == 4e6

    def test_bba(self):
        assert rung_bw(bba_select(LADDER, 0.5)) == 4e6
        assert rung_bw(bba_select(LADDER, 2.5)) == 12e6
        assert rung_bw(bba_select(LADDER, 4.0)) == 20e6
        with pytest.raises(ValueError):
            bba_select(LADDER, -1)

    def test_bba_is_monotone(self):
        occ = np.linspace(0, 6, 200)
        rungs = [bba_select(LADDER, o) for o in occ]
        assert all(b >= a for a, b in zip(rungs, rungs[1:]))

    def test_stripped(self):
        # steady state: one cycle of user time uncovers one cycle of media
        assert rung_bw(stripped_wba_select(LADDER, 13e6, 0.5, 0.5)) == 12e6
        # ramping window: twice as much media per cycle
        assert rung_bw(stripped_wba_select(LADDER, 13e6, 0.5, 1.0)) == 4e6
        assert rung_bw(stripped_wba_select(LADDER, 7e6, 0.5, 1.0)) == 4e6
        # strictly below the bound
        assert rung_bw(stripped_wba_select(LADDER, 12e6, 0.5, 0.5)) == 8e6


def test_coalesce():
    assert coalesce([(10, 5), (0, 10), (20, 1), (21, 0)]) == [(0, 15), (20, 1)]
    assert coalesce([]) == []


def test_config_validation():
    with pytest.raises(ValueError):
        ClientConfig(algorithm="mpc")
    with pytest.raises(ValueError):
        ClientConfig(guard_cycles=-1)
    with pytest.raises(ValueError):
        ClientConfig(bba_reservoir=4, bba_cushion=1)


# ---------------------------------------------------------------------------
# a small object and client


def make_object(depth=1, duration=8.0, tau0=0.0, loop=False, placement=(0.0, 0.0, 0.0), shape=SphereShell()):
    m = make_manifest(tile_depth=depth, duration=duration, world_translation=placement)
    return StreamObject(m, build_all_indexes(m, shape), ObjectTimeline(tau0=tau0, loop=loop))


def make_client(objects=None, network=None, **cfg):
    objects = objects or [make_object()]
    link = PacketLink(network or preset("stable", 0))
    return Client(objects, link, StaticCamera(), ClientConfig(**cfg))


class TestTilesInWindow:
    def test_first_second(self):
        obj = make_object()
        w = WindowState([obj.timeline], t0=0.0)
        obj.known_indexes.update({0, 1})  # the lead edge at 1.0 touches segment 1
        rows = tiles_in_window(0.0, w, [obj])
        gofs = sorted({r[2] for r in rows})
        assert gofs == list(range(math.ceil(1 / (4 / 30))))
        assert len(rows) == len(gofs) * len(obj.gof(0, 0).morton)
        assert all(0 <= r[4] < 1 for r in rows)

    def test_missing_index(self):
        obj = make_object()
        w = WindowState([obj.timeline], t0=0.0)
        with pytest.raises(MissingIndexError) as err:
            tiles_in_window(3.0, w, [obj])
        assert err.value.segments == [3, 4, 5, 6, 7]

    def test_empty_object(self):
        obj = make_object(shape=None)
        obj.known_indexes.update(range(8))
        w = WindowState([obj.timeline], t0=0.0)
        assert tiles_in_window(1.0, w, [obj]) == []

    def test_two_objects_union(self):
        a, b = make_object(), make_object(tau0=4.0)
        for o in (a, b):
            o.known_indexes.update(range(8))
        w = WindowState([a.timeline, b.timeline], t0=0.0)
        rows = tiles_in_window(0.0, w, [a, b])
        starts = {oi: sorted({r[4] for r in rows if r[0] == oi}) for oi in (0, 1)}
        assert starts[0][0] == 0.0 and starts[1][0] == pytest.approx(4.0)
        assert len(starts[0]) == len(starts[1])


class TestClient:
    def run_steps(self, client, count):
        t = client.startup(0.0)
        out = []
        for _ in range(count):
            before = {k: e.n.copy() for k, e in client.store.entries.items()}
            info, done, events = client.step(t)
            out.append((info, before))
            client.playback.advance(done, events)
            t = done
        return out, t

    def test_startup_fills_first_second_at_lowest_rung(self):
        c = make_client()
        t0 = c.startup(0.0)
        assert t0 > 0 and c.window.t0 == t0
        filled = [k for k, e in c.store.entries.items() if np.all(e.n == 1)]
        assert len(filled) == 8
        assert c.estimator.estimate > 0

    def test_zero_startup(self):
        c = make_client(startup_seconds=0.0)
        t0 = c.startup(0.0)
        assert not c.store.entries
        assert t0 >= 0

    def test_budget_and_no_downgrades(self):
        c = make_client(guard_cycles=0.0)
        steps, _ = self.run_steps(c, 30)
        for info, before in steps:
            plan = info.plan
            biggest = max(o.gof(s, g).bits.max() for o in c.objects for s, g in o.gof_keys[:20])
            assert plan.index_bits + plan.tile_bits <= plan.budget + biggest + 1e-6
            for rt in plan.tiles:
                prev = before.get((rt.obj, rt.seg, rt.gof))
                assert rt.m > (prev[rt.tile] if prev is not None else 0)

    def test_strict_budget(self):
        c = make_client(guard_cycles=0.0, strict_budget=True)
        steps, _ = self.run_steps(c, 20)
        for info, _ in steps:
            assert info.plan.index_bits + info.plan.tile_bits <= info.plan.budget + 1e-6

    def test_plans_group_by_segment_and_representation(self):
        c = make_client()
        steps, _ = self.run_steps(c, 10)
        for info, _ in steps:
            plan = info.plan
            for rt in plan.tiles:
                ranges = plan.ranges[(rt.obj, rt.seg, rt.m - 1)]
                assert any(off <= rt.offset and rt.offset + rt.length <= off + ln for off, ln in ranges)
            for rs in plan.ranges.values():
                assert all(a[0] + a[1] < b[0] for a, b in zip(rs, rs[1:]))

    def test_request_cycle_timing(self):
        c = make_client()
        t = c.startup(0.0)
        info, done, _ = c.step(t)
        assert done - t == pytest.approx(c.link.download_time(info.plan.total_bits, t))
        # nothing to send: wait one cycle
        assert c._download(RequestPlan(t=3.0), 3.0) == (3.5, [])

    def test_ample_bandwidth_reaches_top_rung_for_visible_tiles(self):
        c = make_client(objects=[make_object(duration=30.0)], network=NetworkProfile(((0.0, 60e6),), seed=2))
        steps, _ = self.run_steps(c, 40)
        last = steps[-1][0]
        assert last.object_state[0].mean_selected_rep > 3

    def test_deadline_guard_floors_empty_gofs(self):
        c = make_client()
        t0 = c.startup(0.0)
        blocks = c._window_blocks(t0 + 0.5)
        sizes = [len(b[4].morton) for b in blocks]
        cur = np.concatenate(
            [c.store.entries[(oi, s, g)].n if (oi, s, g) in c.store.entries else np.zeros(k, np.int64)
             for (oi, s, g, _, _), k in zip(blocks, sizes)]
        )
        assert c._deadline_floor(t0, c._window_blocks(t0), [len(b[4].morton) for b in c._window_blocks(t0)],
                                 np.ones(sum(len(b[4].morton) for b in c._window_blocks(t0)), np.int64)) is None
        floor = c._deadline_floor(t0 + 0.5, blocks, sizes, cur)
        assert floor is not None
        pos = 0
        horizon = c.window.trail(t0 + 1.5)
        for (oi, s, g, ustart, _), k in zip(blocks, sizes):
            expect = 1 if (ustart < horizon and not cur[pos : pos + k].any()) else 0
            assert np.all(floor[pos : pos + k] == expect)
            pos += k
        off = make_client(guard_cycles=0.0)
        off.startup(0.0)
        assert off._deadline_floor(t0 + 0.5, blocks, sizes, cur) is None

    def test_starved_network_stalls(self):
        c = make_client(network=NetworkProfile(((0.0, 20e6), (3.0, 0.0)), seed=1))
        t = c.startup(0.0)
        while True:
            info, done, events = c.step(t)
            if math.isinf(done):
                break
            c.playback.advance(done, events)
            t = done
        # the plan is issued but never completes; playback runs dry and stalls
        assert not info.plan.empty
        c.playback.advance(t + 10.0, [e for e in events if e[0] <= t + 10.0])
        assert c.playback.stall_count == 1 and c.playback.stalled

    def test_request_log(self, tmp_path):
        c = make_client()
        self.run_steps(c, 3)
        path = tmp_path / "req.csv"
        write_request_log(path, c.log)
        lines = path.read_text().splitlines()
        assert lines[0] == "i,t_i,C_i,budget_bits,planned_bits,index_bits,num_tiles,num_upgrades,final_lambda"
        assert len(lines) == 1 + len(c.log)
