"""Smaller tiles let the client spend bits where the viewer looks."""

from volustream.scenario import Scenario, run

for profile in ("stable", "variable"):
    base = None
    for depth in (0, 1, 2):
        sc = Scenario(tile_depth=depth, duration=40, seed=0, network={"profile": profile}, camera={"path": "path1"})
        s = run(sc).summary
        base = base or s["totalDeliveredUtility"]
        print(f"{profile:8s} depth {depth}: delivered utility {s['totalDeliveredUtility']:12.0f}"
              f" ({s['totalDeliveredUtility'] / base:.2f}x)  visible rung {s['avgPlayedRepresentationVisible']:.2f}")
