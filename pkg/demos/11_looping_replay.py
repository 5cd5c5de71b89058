"""A looping clip keeps its buffered tiles, so every replay looks at least as good as the last."""

from volustream.scenario import Scenario, run

sc = Scenario(
    tile_depth=2, duration=31, seed=0, camera={"path": "path2"},
    content={"clip_duration": 10}, objects=[{"synth": {}, "loop": True, "ladder_scale": 2.0}],
)
s = run(sc).summary
for i, rung in enumerate(s["avgPlayedRepresentationVisibleByPass"], 1):
    print(f"pass {i}: visible tiles played at rung {rung:.2f}")
print("stalls:", s["stallCount"])
