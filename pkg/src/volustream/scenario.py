"""Scenario files, camera paths and the end-to-end simulation driver."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cbm import ALGORITHMS, Client, ClientConfig, ObjectState, StreamObject, write_request_log
from .geometry import Viewpoint, read_viewpoint_trace, visible_mask
from .media import (
    DEFAULT_LADDER_BPS,
    DEFAULT_WIDTHS,
    Representation,
    SphereShell,
    build_all_indexes,
    load_object,
    make_manifest,
)
from .network import ConfigurationError, NetworkProfile, PacketLink, preset, load_trace
from .utility import PredictorConfig
from .window import ObjectTimeline, WindowState, contiguous_span


class ScenarioError(ValueError):
    """Invalid scenario document or override."""


# ---------------------------------------------------------------------------
# cameras


@dataclass
class Display:
    horz_fov: float = math.pi / 2
    aspect: float = 16 / 9
    near: float = 0.01
    far: float = 100.0
    horz_pixels: int = 1280

    def kwargs(self) -> dict:
        return dict(horz_fov=self.horz_fov, aspect=self.aspect, near=self.near, far=self.far, horz_pixels=self.horz_pixels)


class Camera:
    """Callable returning the list of current viewpoints at user time ``t``."""

    flip_times: tuple = ()

    def viewpoint(self, t: float) -> Viewpoint:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, t: float) -> list[Viewpoint]:
        return [self.viewpoint(t)]


@dataclass
class StaticCamera(Camera):
    target: tuple = (0.0, 0.0, 0.0)
    distance: float = 2.0
    direction: tuple = (0.0, 0.0, 1.0)
    display: Display = field(default_factory=Display)

    def viewpoint(self, t: float) -> Viewpoint:
        d = np.asarray(self.direction, float)
        pos = np.asarray(self.target, float) + self.distance * d / np.linalg.norm(d)
        return Viewpoint.look_at(pos, self.target, **self.display.kwargs())


@dataclass
class ZoomCamera(Camera):
    """Approaches the target along a fixed direction and backs away again."""

    target: tuple = (0.0, 0.0, 0.0)
    far_distance: float = 5.0
    near_distance: float = 0.5
    period: float = 20.0
    speed: float = 1.0
    direction: tuple = (0.0, 0.0, 1.0)
    display: Display = field(default_factory=Display)

    def distance(self, t: float) -> float:
        phase = (t * self.speed / self.period) % 1.0
        tri = 2 * phase if phase <= 0.5 else 2 * (1 - phase)
        return self.far_distance + (self.near_distance - self.far_distance) * tri

    def viewpoint(self, t: float) -> Viewpoint:
        d = np.asarray(self.direction, float)
        pos = np.asarray(self.target, float) + self.distance(t) * d / np.linalg.norm(d)
        return Viewpoint.look_at(pos, self.target, **self.display.kwargs())


@dataclass
class OrbitCamera(Camera):
    target: tuple = (0.0, 0.0, 0.0)
    radius: float = 2.0
    omega: float = 2 * math.pi / 20
    display: Display = field(default_factory=Display)

    def viewpoint(self, t: float) -> Viewpoint:
        a = self.omega * t
        pos = np.asarray(self.target, float) + self.radius * np.array([math.sin(a), 0.0, math.cos(a)])
        return Viewpoint.look_at(pos, self.target, **self.display.kwargs())


@dataclass
class FlipCamera(Camera):
    """Static view that jumps to the diametrically opposite side at ``flip_time``."""

    target: tuple = (0.0, 0.0, 0.0)
    distance: float = 2.0
    flip_time: float = 10.0
    direction: tuple = (0.0, 0.0, 1.0)
    display: Display = field(default_factory=Display)

    @property
    def flip_times(self) -> tuple:
        return (self.flip_time,)

    def viewpoint(self, t: float) -> Viewpoint:
        d = np.asarray(self.direction, float)
        d = d / np.linalg.norm(d)
        if t >= self.flip_time:
            d = -d
        pos = np.asarray(self.target, float) + self.distance * d
        return Viewpoint.look_at(pos, self.target, **self.display.kwargs())


@dataclass
class PanCamera(Camera):
    """Stands at ``position`` and turns about the vertical axis."""

    position: tuple = (0.0, 0.0, 0.0)
    omega: float = 2 * math.pi / 20
    display: Display = field(default_factory=Display)

    def viewpoint(self, t: float) -> Viewpoint:
        a = self.omega * t
        fwd = (math.sin(a), 0.0, math.cos(a))
        return Viewpoint(tuple(self.position), fwd, (0.0, 1.0, 0.0), **self.display.kwargs())


@dataclass
class TraceCamera(Camera):
    """Sample-and-hold playback of a recorded viewpoint trace."""

    samples: list = field(default_factory=list)

    def viewpoint(self, t: float) -> Viewpoint:
        times = [s[0] for s in self.samples]
        i = max(0, np.searchsorted(times, t, side="right") - 1)
        return self.samples[i][1]


def camera_path1(t: float, **kw) -> Viewpoint:
    return ZoomCamera(**kw).viewpoint(t)


def camera_path2(t: float, **kw) -> Viewpoint:
    return OrbitCamera(**kw).viewpoint(t)


# ---------------------------------------------------------------------------
# scenario document

_TOP_KEYS = {
    "objects", "scene", "camera", "network", "algorithm", "tile_depth", "duration", "seed",
    "output_dir", "client", "window", "predictor", "content", "outputs",
}
_CLIENT_KEYS = {
    "cycle", "weight", "startup_seconds", "strict_budget", "tba_safety", "bba_reservoir",
    "bba_cushion", "queue_chunk_gofs", "queue_max_buffer", "guard_cycles",
}
_WINDOW_KEYS = {"floor", "cap", "ramp_end"}
_PREDICTOR_KEYS = {"p_err_min", "p_err_slope", "denominator"}
_CONTENT_KEYS = {
    "max_width", "scale", "gof_frames", "segment_duration", "framerate", "timescale",
    "ladder_bps", "widths", "clip_duration",
}
_NETWORK_KEYS = {"profile", "packet_bits", "rtt", "stable_bps", "variable_levels_bps", "variable_period_s"}
_CAMERA_KEYS = {
    "path", "target", "distance", "direction", "far_distance", "near_distance", "period", "speed",
    "radius", "omega", "flip_time", "position", "horz_fov", "aspect", "near", "far", "horz_pixels",
}
_OBJECT_KEYS = {"manifest", "synth", "placement", "tau0", "speed", "loop", "ladder_scale", "name"}
_SYNTH_KEYS = {"center", "radius", "thickness"}
_SCENE_KEYS = {"kind", "count", "radius", "ladder_scale", "omega"}
_OUTPUT_KEYS = {"charts", "traces"}


def _check(d, allowed, where):
    if not isinstance(d, dict):
        raise ScenarioError(f"{where} must be an object")
    extra = set(d) - allowed
    if extra:
        raise ScenarioError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


@dataclass
class Scenario:
    objects: list = field(default_factory=lambda: [{"synth": {}}])
    camera: dict = field(default_factory=dict)  # no path: static, or pan for a scene
    network: dict = field(default_factory=lambda: {"profile": "stable"})
    algorithm: str = "wba"
    tile_depth: int = 2
    duration: float = 30.0
    seed: int = 0
    output_dir: str | None = None
    client: dict = field(default_factory=dict)
    window: dict = field(default_factory=dict)
    predictor: dict = field(default_factory=dict)
    content: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    scene: dict | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "Scenario":
        _check(doc, _TOP_KEYS, "scenario")
        sc = cls(**{k: v for k, v in doc.items()})
        if base_dir is not None:
            sc.base_dir = Path(base_dir)
        sc.validate()
        return sc

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_dict(doc, path.parent)

    def validate(self) -> None:
        if self.scene is not None:
            _check(self.scene, _SCENE_KEYS, "scene")
            if int(self.scene.get("count", 5)) < 1:
                raise ScenarioError("scene count must be >= 1")
        if not isinstance(self.objects, list) or (not self.objects and self.scene is None):
            raise ScenarioError("scenario needs at least one object")
        for i, o in enumerate(self.objects):
            _check(o, _OBJECT_KEYS, f"objects[{i}]")
            if ("manifest" in o) == ("synth" in o):
                raise ScenarioError(f"objects[{i}] needs exactly one of manifest or synth")
            if "synth" in o:
                _check(o["synth"], _SYNTH_KEYS, f"objects[{i}].synth")
            if float(o.get("speed", 1.0)) <= 0:
                raise ScenarioError(f"objects[{i}].speed must be positive")
        _check(self.camera, _CAMERA_KEYS, "camera")
        _check(self.network, _NETWORK_KEYS, "network")
        _check(self.client, _CLIENT_KEYS, "client")
        _check(self.window, _WINDOW_KEYS, "window")
        _check(self.predictor, _PREDICTOR_KEYS, "predictor")
        _check(self.content, _CONTENT_KEYS, "content")
        _check(self.outputs, _OUTPUT_KEYS, "outputs")
        if self.algorithm not in ALGORITHMS:
            raise ScenarioError(f"algorithm must be one of {', '.join(ALGORITHMS)}")
        if not 0 <= int(self.tile_depth) <= 3:
            raise ScenarioError("tile_depth must lie in 0..3")
        if not float(self.duration) > 0:
            raise ScenarioError("duration must be positive")
        path = str(self.camera.get("path", "static"))
        if path not in ("static", "path1", "path2", "flip", "pan") and not path.startswith("trace:"):
            raise ScenarioError(f"unknown camera path {path!r}")
        prof = str(self.network.get("profile", "stable"))
        if prof not in ("stable", "variable") and not prof.startswith("trace:"):
            raise ScenarioError(f"unknown network profile {prof!r}")
        try:
            self.client_config()
            self.predictor_config()
            self.window_state([ObjectTimeline()])
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc

    def with_overrides(self, **kw) -> "Scenario":
        """Copy with CLI-style overrides (algorithm, network, camera, depth, seed, duration, out)."""
        doc = self.to_dict()
        for key, value in kw.items():
            if value is None:
                continue
            if key == "network":
                doc["network"] = {**doc["network"], "profile": value}
            elif key == "camera":
                doc["camera"] = {**doc["camera"], "path": value}
            elif key == "depth":
                doc["tile_depth"] = int(value)
            elif key == "out":
                doc["output_dir"] = str(value)
            else:
                doc[key] = value
        return Scenario.from_dict(doc, self.base_dir)

    def to_dict(self) -> dict:
        doc = {
            "objects": self.objects, "camera": self.camera, "network": self.network,
            "algorithm": self.algorithm, "tile_depth": self.tile_depth, "duration": self.duration,
            "seed": self.seed, "output_dir": self.output_dir, "client": self.client,
            "window": self.window, "predictor": self.predictor, "content": self.content,
            "outputs": self.outputs,
        }
        if self.scene is not None:
            doc["scene"] = self.scene
        return json.loads(json.dumps(doc))

    # -- derived configuration -------------------------------------------------

    def client_config(self) -> ClientConfig:
        return ClientConfig(algorithm=self.algorithm, predictor=self.predictor_config(), **self.client)

    def predictor_config(self) -> PredictorConfig:
        return PredictorConfig(**self.predictor)

    def window_state(self, timelines) -> WindowState:
        w = self.window
        return WindowState(
            list(timelines), 0.0, float(w.get("floor", 1.0)), float(w.get("cap", 5.0)), float(w.get("ramp_end", 4.0))
        )

    def network_profile(self) -> NetworkProfile:
        n = self.network
        packet = float(n.get("packet_bits", 12_000))
        prof = str(n.get("profile", "stable"))
        rtt = float(n.get("rtt", 0.0))
        try:
            if prof.startswith("trace:"):
                p = load_trace(self.base_dir / prof[len("trace:") :], self.seed, packet)
            elif prof == "stable" and "stable_bps" in n:
                p = NetworkProfile(((0.0, float(n["stable_bps"])),), packet, self.seed)
            elif prof == "variable" and ("variable_levels_bps" in n or "variable_period_s" in n):
                levels = n.get("variable_levels_bps", [20e6, 6e6, 14e6, 3e6, 18e6])
                per = float(n.get("variable_period_s", 5.0))
                sched = tuple((i * per, float(r)) for i, r in enumerate(levels))
                p = NetworkProfile(sched, packet, self.seed, repeat_every=per * len(levels))
            else:
                p = preset(prof, self.seed, packet)
        except ConfigurationError as exc:
            raise ScenarioError(str(exc)) from exc
        if rtt:
            p = NetworkProfile(p.schedule, p.packet_size, p.seed, p.repeat_every, rtt)
        return p


def build_multi_object_scene(n: int = 5, radius: float = 3.0, ladder_scale: float = 0.4, omega: float = 2 * math.pi / 20) -> dict:
    """Scenario fragment: ``n`` objects evenly spaced on a circle around a panning camera."""
    if n < 1:
        raise ValueError("need at least one object")
    objects = []
    for i in range(n):
        a = 2 * math.pi * i / n
        objects.append(
            {
                "synth": {},
                "placement": [radius * math.sin(a), 0.0, radius * math.cos(a)],
                "ladder_scale": ladder_scale,
                "name": f"obj{i}",
            }
        )
    if n == 1:
        return {"objects": objects, "camera": {"path": "static", "target": objects[0]["placement"]}}
    return {"objects": objects, "camera": {"path": "pan", "position": [0.0, 0.0, 0.0], "omega": omega}}


# ---------------------------------------------------------------------------
# building runtime objects


def _ladder(content: dict, scale: float) -> tuple[Representation, ...]:
    bws = content.get("ladder_bps", list(DEFAULT_LADDER_BPS))
    widths = content.get("widths", list(DEFAULT_WIDTHS)[: len(bws)])
    if len(widths) != len(bws):
        raise ScenarioError("ladder_bps and widths lengths differ")
    fps = float(content.get("framerate", 30.0))
    return tuple(Representation(f"r{i + 1}", float(b) * scale, int(w), fps) for i, (b, w) in enumerate(zip(bws, widths)))


def build_objects(sc: Scenario) -> list[StreamObject]:
    content = sc.content
    clip = content.get("clip_duration")
    default_clip = float(clip) if clip is not None else math.ceil(sc.duration) + 40.0
    objs = list(sc.objects)
    if sc.scene is not None:
        frag = build_multi_object_scene(
            int(sc.scene.get("count", 5)),
            float(sc.scene.get("radius", 3.0)),
            float(sc.scene.get("ladder_scale", 0.4)),
            float(sc.scene.get("omega", 2 * math.pi / 20)),
        )
        objs = frag["objects"]
    out = []
    cache: dict = {}
    gof_frames = int(content.get("gof_frames", 4))
    for i, spec in enumerate(objs):
        tl = ObjectTimeline(
            tau0=float(spec.get("tau0", 0.0)), speed=float(spec.get("speed", 1.0)), loop=bool(spec.get("loop", False))
        )
        if "manifest" in spec:
            try:
                manifest, indexes = load_object(sc.base_dir / spec["manifest"])
            except (OSError, ValueError) as exc:
                raise ScenarioError(f"cannot load object {spec['manifest']}: {exc}") from exc
            if "placement" in spec:
                manifest = manifest.with_placement(spec["placement"])
        else:
            syn = spec["synth"]
            shape = SphereShell(
                tuple(syn.get("center", (0.0, 0.0, 0.0))), float(syn.get("radius", 0.4)), float(syn.get("thickness", 0.05))
            )
            manifest = make_manifest(
                name=spec.get("name", f"obj{i}"),
                tile_depth=int(sc.tile_depth),
                duration=default_clip,
                max_width=int(content.get("max_width", 1024)),
                scale=float(content.get("scale", 0.001)),
                world_translation=tuple(spec.get("placement", (0.0, 0.0, 0.0))),
                representations=_ladder(content, float(spec.get("ladder_scale", 1.0))),
                segment_duration=float(content.get("segment_duration", 1.0)),
                framerate=float(content.get("framerate", 30.0)),
                timescale=int(content.get("timescale", 90_000)),
            )
            ck = (shape, manifest.with_placement((0.0, 0.0, 0.0)), gof_frames)
            if ck not in cache:
                cache[ck] = build_all_indexes(manifest, shape, gof_frames)
            indexes = cache[ck]
        if tl.loop and manifest.duration < float(sc.window.get("cap", 5.0)) * tl.speed:
            raise ScenarioError("a looping clip must be at least as long as the window cap")
        out.append(StreamObject(manifest, indexes, tl))
    return out


def build_camera(sc: Scenario, objects: list[StreamObject]) -> Camera:
    cam = dict(sc.camera)
    if sc.scene is not None and len(objects) > 1 and "path" not in sc.camera:
        cam["path"] = "pan"
    path = str(cam.pop("path", "static"))
    disp = Display(
        float(cam.pop("horz_fov", math.pi / 2)), float(cam.pop("aspect", 16 / 9)),
        float(cam.pop("near", 0.01)), float(cam.pop("far", 100.0)), int(cam.pop("horz_pixels", 1280)),
    )
    centers = np.array([o.manifest.world_center for o in objects])
    target = tuple(cam.pop("target", tuple(centers.mean(axis=0))))
    try:
        if path == "static":
            return StaticCamera(target, float(cam.get("distance", 2.0)), tuple(cam.get("direction", (0, 0, 1))), disp)
        if path == "path1":
            return ZoomCamera(
                target, float(cam.get("far_distance", 5.0)), float(cam.get("near_distance", 0.5)),
                float(cam.get("period", 20.0)), float(cam.get("speed", 1.0)), tuple(cam.get("direction", (0, 0, 1))), disp,
            )
        if path == "path2":
            return OrbitCamera(
                target, float(cam.get("radius", 2.0)), float(cam.get("omega", 2 * math.pi / 20)) * float(cam.get("speed", 1.0)), disp
            )
        if path == "flip":
            return FlipCamera(
                target, float(cam.get("distance", 2.0)), float(cam.get("flip_time", 10.0)),
                tuple(cam.get("direction", (0, 0, 1))), disp,
            )
        if path == "pan":
            return PanCamera(tuple(cam.get("position", (0.0, 0.0, 0.0))), float(cam.get("omega", 2 * math.pi / 20)), disp)
        samples = read_viewpoint_trace(sc.base_dir / path[len("trace:") :], disp.aspect, disp.near, disp.far)
        if not samples:
            raise ScenarioError("empty viewpoint trace")
        return TraceCamera(samples)
    except (OSError, KeyError) as exc:
        raise ScenarioError(f"bad camera configuration: {exc}") from exc


# ---------------------------------------------------------------------------
# running


METRIC_COLUMNS = (
    "t", "est_throughput_bps", "selected_bandwidth_avg_bps", "occupancy_s", "stall_flag",
    "total_utility_visible",
)


@dataclass
class FlipProbe:
    flip_time: float
    targets: dict = field(default_factory=dict)  # (obj, seg, gof, tile) -> n at the flip
    in_next_plan: bool = False
    latency: float = math.nan
    plan_time: float = math.nan


@dataclass
class RunResult:
    scenario: Scenario
    rows: list
    summary: dict
    client: Client
    steps: list
    object_rows: list
    flips: list


def _center_visible(view: Viewpoint, center) -> bool:
    # the object counts as in view when its center lies in the frustum, facing ignored
    return bool(visible_mask(np.reshape(center, (1, 3)), -np.reshape(view.forward, (1, 3)), view)[0])


def _occupancy(client: Client, t: float, oi: int) -> float:
    o = client.objects[oi]
    w = client.window
    trail = w.trail(t, oi)
    if client.cfg.algorithm != "wba":
        return max(client.pointer[oi] - trail, 0.0) / o.timeline.speed
    lead = w.lead(t, oi)
    starts, ready = [], []
    for ustart, seg, g in o.gofs_between(trail, lead):
        e = client.store.entries.get((oi, seg, g))
        starts.append(ustart)
        ready.append(e is not None and (len(e.n) == 0 or bool(np.all(e.n > 0))))
    span = contiguous_span(starts, ready, trail, lead)
    return min(span / o.timeline.speed, w.size(t))


def _probe_targets(client: Client, camera: Camera, tf: float, t: float) -> dict:
    """Tiles near the trailing edge that the flip at ``tf`` made visible."""
    before = camera(tf - 1e-6)
    after = camera(tf)
    out = {}
    for oi, o in enumerate(client.objects):
        trail = client.window.trail(t, oi)
        edge = client.window.window_floor * o.timeline.speed
        for ustart, seg, g in o.gofs_between(trail, trail + edge):
            st = o.gof(seg, g)
            if not st.morton.size:
                continue
            was = np.zeros(len(st.morton), dtype=bool)
            now = np.zeros(len(st.morton), dtype=bool)
            for v in before:
                was |= visible_mask(st.positions, st.normals, v)
            for v in after:
                now |= visible_mask(st.positions, st.normals, v)
            e = client.store.entries.get((oi, seg, g))
            for j in np.nonzero(now & ~was)[0]:
                out[(oi, seg, g, int(j))] = int(e.n[j]) if e is not None else 0
    return out


def run(sc: Scenario) -> RunResult:
    """Simulate one scenario end to end."""
    objects = build_objects(sc)
    camera = build_camera(sc, objects)
    cfg = sc.client_config()
    window = sc.window_state([o.timeline for o in objects])
    link = PacketLink(sc.network_profile())
    client = Client(objects, link, camera, cfg, window)
    t_end = float(sc.duration)
    playback = client.playback

    client.startup(0.0)
    t = client.startup_time
    rows, steps, object_rows = [], [], []
    flips = [FlipProbe(tf) for tf in camera.flip_times]
    pending = [f for f in flips]
    watching: list[FlipProbe] = []
    while t < t_end:
        info, done, events = client.step(t)
        plan = info.plan
        for fp in list(pending):
            if t >= fp.flip_time:
                pending.remove(fp)
                fp.targets = _probe_targets(client, camera, fp.flip_time, t)
                fp.plan_time = t
                fp.in_next_plan = any(
                    (rt.obj, rt.seg, rt.gof, rt.tile) in fp.targets
                    and rt.m > fp.targets[(rt.obj, rt.seg, rt.gof, rt.tile)]
                    for rt in plan.tiles
                )
                watching.append(fp)
        for fp in list(watching):
            for ev in events:
                key = (ev[1], ev[2], ev[3], ev[4])
                if key in fp.targets and ev[5] > fp.targets[key] and ev[0] <= t_end:
                    fp.latency = ev[0] - fp.flip_time
                    watching.remove(fp)
                    break
        views = camera(t)
        occ = [_occupancy(client, t, oi) for oi in range(len(objects))]
        bws = [objects[rt.obj].manifest.representations[rt.m - 1].bandwidth for rt in plan.tiles]
        row = {
            "t": t,
            "est_throughput_bps": plan.throughput,
            "selected_bandwidth_avg_bps": float(np.mean(bws)) if bws else math.nan,
            "occupancy_s": min(occ),
            "stall_flag": int(playback.stalled or playback.stall_flag_since_last),
            "total_utility_visible": info.visible_utility,
        }
        for oi in range(len(objects)):
            row[f"utility_obj{oi}"] = info.object_utility[oi] if info.object_utility else math.nan
        row["response_latency_s"] = math.nan
        playback.stall_flag_since_last = False
        rows.append(row)
        steps.append(info)
        for oi, o in enumerate(objects):
            st = info.object_state[oi] if info.object_state else ObjectState()
            if math.isnan(st.visible_fraction):
                vis = any(_center_visible(v, o.manifest.world_center) for v in views)
            else:
                vis = st.visible_fraction > 0
            object_rows.append(
                {
                    "t": t, "object": oi, "w_trail": window.trail(t, oi), "w_lead": window.lead(t, oi),
                    "occupancy_s": occ[oi], "stall_flag": row["stall_flag"], "visible": int(vis),
                    "mean_selected_rep": st.mean_selected_rep, "frac_buffered": st.frac_buffered,
                    "frac_covered": st.frac_covered,
                }
            )
        if math.isinf(done):
            playback.advance(t_end, [])
            break
        nxt = min(done, t_end)
        playback.advance(nxt, [e for e in events if e[0] <= nxt])
        t = done
    # a flip's latency is known only once its tiles arrive; report it on the row of the plan
    for fp in flips:
        if not math.isnan(fp.latency):
            for r in rows:
                if r["t"] == fp.plan_time:
                    r["response_latency_s"] = fp.latency
    summary = summarize(sc, client, rows, flips)
    return RunResult(sc, rows, summary, client, steps, object_rows, flips)


def summarize(sc: Scenario, client: Client, rows: list, flips: list) -> dict:
    pb = client.playback
    bws = [
        client.objects[rt.obj].manifest.representations[rt.m - 1].bandwidth for p in client.log for rt in p.tiles
    ]
    vis_n = sum(r.visible_rep_sum for r in pb.releases)
    vis_c = sum(r.visible_tiles for r in pb.releases)
    passes: dict = {}
    for r in pb.releases:
        acc = passes.setdefault(r.pass_no, [0.0, 0])
        acc[0] += r.visible_rep_sum
        acc[1] += r.visible_tiles
    lat = [f.latency for f in flips if not math.isnan(f.latency)]
    per_obj = [0.0] * len(client.objects)
    for r in pb.releases:
        per_obj[r.obj] += r.utility
    return {
        "algorithm": sc.algorithm,
        "seed": sc.seed,
        "tileDepth": sc.tile_depth,
        "startupDelay": client.startup_time,
        "requestCount": len(client.log) - 1,
        "avgSelectedBandwidth": float(np.mean(bws)) if bws else None,
        "stallCount": pb.stall_count,
        "stallSeconds": pb.stall_seconds,
        "avgPlayedRepresentationVisible": vis_n / vis_c if vis_c else None,
        "avgPlayedRepresentationVisibleByPass": [
            passes[k][0] / passes[k][1] if passes[k][1] else None for k in sorted(passes)
        ],
        "totalDeliveredUtility": float(sum(r.utility for r in pb.releases)),
        "totalRequestedUtility": (
            float(sum(p.requested_utility for p in client.log)) if sc.algorithm == "wba" else None
        ),
        "deliveredUtilityByObject": per_obj,
        "totalRequestedBits": float(sum(p.total_bits for p in client.log)),
        "lateArrivals": pb.late_arrivals,
        "releasedGofs": len(pb.releases),
        "p95ResponseLatency": float(np.percentile(lat, 95)) if lat else None,
    }


# ---------------------------------------------------------------------------
# outputs


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, rows: list, columns=None) -> None:
    if not rows:
        Path(path).write_text("")
        return
    columns = list(columns or rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def write_outputs(result: RunResult, out_dir, charts: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "metrics.csv"
    write_csv(p, result.rows)
    written.append(p)
    p = out / "summary.json"
    p.write_text(json.dumps(result.summary, indent=2, sort_keys=True) + "\n")
    written.append(p)
    if result.scenario.outputs.get("traces", True):
        p = out / "requests.csv"
        write_request_log(p, result.client.log)
        written.append(p)
        p = out / "buffer_trace.csv"
        write_csv(p, result.object_rows)
        written.append(p)
        p = out / "releases.csv"
        write_csv(
            p,
            [
                {k: getattr(r, k) for k in ("t", "obj", "seg", "gof", "pass_no", "media_start", "tiles",
                                            "visible_tiles", "visible_rep_sum", "rep_sum", "utility")}
                for r in result.client.playback.releases
            ],
        )
        written.append(p)
    if charts and result.scenario.outputs.get("charts", True):
        from .charts import emit_charts

        written += emit_charts(out / "metrics.csv", out / "charts", duration=float(result.scenario.duration))
    return written
