"""How a tile's utility combines bitrate, viewing distance, visibility and prediction error."""

from volustream.geometry import Viewpoint
from volustream.media import DEFAULT_LADDER_BPS, make_manifest, tile_world_position
from volustream.utility import normalize_coeffs, p_err, tile_utility, u
from volustream.window import ObjectTimeline, WindowState

coeffs = normalize_coeffs(DEFAULT_LADDER_BPS)
print("bitrate utility over the ladder:", [round(u(b, coeffs), 4) for b in DEFAULT_LADDER_BPS])

window = WindowState([ObjectTimeline()], t0=0.0)
t = 10.0
trail, lead = window.trail(t), window.lead(t)
print(f"\nprediction error across the window [{trail}, {lead}):")
for frac in (0, 0.25, 0.5, 0.75, 1.0):
    tau = trail + frac * (lead - trail)
    print(f"  media {tau:5.2f}: {p_err(tau, window, t):.3f}")

manifest = make_manifest(tile_depth=2)
pos = tile_world_position(manifest, 63)
near = Viewpoint.look_at((0.0, 0.0, 1.0), (0.0, 0.0, 0.0))
behind = Viewpoint.look_at((0.0, 0.0, -1.0), (0.0, 0.0, 0.0))
print("\nutility of an outward (+z) tile per rung, at the trailing edge:")
for name, view in (("facing it", near), ("from behind", behind)):
    row = [tile_utility(pos, 5, trail, m, manifest, [view], window, t, coeffs) for m in range(6)]
    print(f"  {name:12s}", [round(x, 1) for x in row])
