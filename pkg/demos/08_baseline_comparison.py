"""Queue-style clients on the same links: the window-aware selector against throughput and buffer rules."""

from volustream.scenario import Scenario, run

for profile in ("stable", "variable"):
    print(f"{profile} link, 120 s:")
    for alg in ("stripped-wba", "tba", "bba"):
        s = run(Scenario(algorithm=alg, tile_depth=0, duration=120, seed=0, network={"profile": profile})).summary
        print(f"  {alg:13s} {s['avgSelectedBandwidth'] / 1e6:6.2f} Mbps  stalls {s['stallCount']}")
