"""A seeded Poisson packet link: repeatable, noisy downloads that follow a rate schedule."""

from volustream.network import PacketLink, preset

stable = PacketLink(preset("stable", seed=7))
print("4 Mbit on the 18 Mbps link, starting at different times:")
print("  ", [round(stable.download_time(4e6, t), 4) for t in (0, 1, 2, 3)])
print("   same start, same seed, same answer:", stable.download_time(4e6, 1) == PacketLink(preset("stable", seed=7)).download_time(4e6, 1))

variable = PacketLink(preset("variable", seed=7))
print("\nthroughput of the variable profile, 5 s epochs:")
for start in range(0, 25, 5):
    rate = variable.delivered_bits(start, start + 5) / 5
    print(f"  {start:2d}-{start + 5:2d} s: {rate / 1e6:5.2f} Mbps (mean {variable.profile.rate_at(start) / 1e6:.0f})")
