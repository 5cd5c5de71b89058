"""The buffer as a growing window over the media timeline, and what playback takes out of it."""

from volustream.window import BufferStore, ObjectTimeline, WindowState

w = WindowState([ObjectTimeline(speed=1.0), ObjectTimeline(tau0=30.0, speed=2.0)], t0=0.0)
print(" t   size  object 0 window   object 1 window")
for t in (0, 1, 2, 3, 4, 6):
    print(f"{t:2d}  {w.size(t):4.1f}  [{w.trail(t, 0):4.1f}, {w.lead(t, 0):4.1f})     [{w.trail(t, 1):4.1f}, {w.lead(t, 1):4.1f})")

store = BufferStore()
for g in range(3):
    store.gof((0, 0, g), g * 0.5, [0, 1, 2])
store.receive((0, 0, 0), 0, 2, 0.1)
store.receive((0, 0, 0), 0, 1, 0.2)  # an older, worse representation never replaces a better one
store.receive((0, 0, 1), 2, 3, 0.3)
print("\nGOF 0 tile 0 holds rung", store.get(0, 0, 0, 0)["n"])
released = store.release({0: 1.2})
print("released:", [(key, [int(x) for x in n]) for key, _, n, _ in released], "stalls:", store.stall_count)
