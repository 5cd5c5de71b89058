"""Greedy rate-utility allocation: every step it takes is optimal for the bits spent so far."""

from fractions import Fraction as F

from volustream.optimizer import TileChoice, brute_force_allocate, greedy_allocate, upper_convex_hull

tiles = [
    TileChoice("A", [F(0), F(1, 2), F(4, 5)], [0, 10, 20]),
    TileChoice("B", [F(0), F(3, 10), F(2, 5)], [0, 10, 20]),
    TileChoice("C", [F(0), F(1, 10), F(3, 5), F(7, 10)], [0, 5, 15, 40]),
]
plan = greedy_allocate(tiles, budget=100, strict=True, record_trace=True)
print("step  tile  slope    rung  bits  greedy  exhaustive")
for i, (key, lam, m, consumed) in enumerate(plan.trace, 1):
    sub = greedy_allocate(tiles, consumed, strict=True)
    best = brute_force_allocate(tiles, consumed)
    print(f"{i:4d}  {key:>4}  {float(lam):.4f}  {m:4d}  {consumed:4d}  {float(sub.total_utility):6.3f}  {float(best.total_utility):10.3f}")

print("\nrungs of C on its convex hull:", upper_convex_hull(tiles[2].bit_count, tiles[2].utility))
print("with 15 bits and one overshoot allowed:", greedy_allocate(tiles, 15).selections)
