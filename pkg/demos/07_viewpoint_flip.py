"""A viewer jumps to the far side of an object: how fast do the newly visible tiles improve?"""

from volustream.scenario import Scenario, run

sc = Scenario(
    tile_depth=1, duration=14, seed=0,
    camera={"path": "flip", "flip_time": 10.0}, objects=[{"synth": {}, "ladder_scale": 2.0}],
)
result = run(sc)
probe = result.flips[0]
print(f"flip at {probe.flip_time} s; first request after it at {probe.plan_time:.3f} s")
print(f"{len(probe.targets)} trail-edge tiles became visible; upgraded in that request: {probe.in_next_plan}")
print(f"first upgraded tile arrived {probe.latency:.3f} s after the flip")
s = result.summary
print(f"stalls {s['stallCount']}, visible tiles played at rung {s['avgPlayedRepresentationVisible']:.2f} on average")
