"""Greedy rate-utility allocation over tiles.

Each tile offers points ``(b(m), U(m))`` for representations ``m = 0..M``. The
representation ``n`` already in the buffer costs nothing to keep, so a tile's
effective cost is ``b(m)`` for ``m != n`` and ``0`` for ``m == n``. The greedy
loop repeatedly takes the steepest remaining upgrade across all tiles, which
walks every tile up its upper convex hull.
"""

from __future__ import annotations

import csv
import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Hashable, Sequence

import numpy as np

REL_EPS = 1e-12


@dataclass
class TileChoice:
    key: Hashable
    utility: Sequence  # m = 0..M, utility[0] == 0
    bit_count: Sequence  # m = 0..M, raw bits, bit_count[0] == 0
    n: int = 0

    def __post_init__(self):
        if len(self.utility) != len(self.bit_count):
            raise ValueError("utility and bit_count lengths differ")
        if self.utility[0] != 0 or self.bit_count[0] != 0:
            raise ValueError("representation 0 must have zero utility and zero bits")
        if not 0 <= self.n < len(self.utility):
            raise ValueError("current representation out of range")

    @property
    def top(self) -> int:
        return len(self.utility) - 1

    def cost(self, m: int):
        """Bits to request representation ``m`` given what is buffered."""
        return 0 if m == self.n else self.bit_count[m]


@dataclass
class AllocationPlan:
    selections: dict = field(default_factory=dict)
    requested_bits: float = 0
    final_lambda: float = 0
    total_utility: float = 0
    trace: list = field(default_factory=list)  # (key, lambda*, m*, consumed bits)


def _slope(du, db):
    if isinstance(du, Rational) and isinstance(db, Rational):
        return Fraction(du) / Fraction(db)
    return du / db


def _ties(a, b) -> bool:
    if isinstance(a, Rational) and isinstance(b, Rational):
        return a == b
    return abs(a - b) <= REL_EPS * max(abs(a), abs(b))


def max_lambda(tile: TileChoice, current: int | None = None):
    """Steepest upgrade from ``current`` (defaults to the buffered ``n``).

    Returns ``(lambda*, m*)``; ``(0, current)`` when nothing costlier exists.
    Equal slopes go to the larger representation.
    """
    cur = tile.n if current is None else current
    base_u = tile.utility[cur]
    base_b = tile.cost(cur)
    best, arg = None, cur
    for m in range(cur + 1, tile.top + 1):
        db = tile.cost(m) - base_b
        if db <= 0:
            continue
        s = _slope(tile.utility[m] - base_u, db)
        if best is None or s > best or _ties(s, best):
            best, arg = s, m
    if best is None:
        return 0, cur
    return best, arg


def greedy_allocate(
    tiles: Sequence[TileChoice],
    budget,
    strict: bool = False,
    spent=0,
    record_trace: bool = False,
) -> AllocationPlan:
    """Spend ``budget`` bits on the steepest upgrades first.

    Default mode follows the textbook loop, checking the budget before each
    commit so the final upgrade may overshoot. ``strict`` stops instead of
    committing an upgrade that does not fit. ``spent`` pre-charges bits that
    were already used this cycle (segment indexes).
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    current = [t.n for t in tiles]
    heap = []
    for i, t in enumerate(tiles):
        lam, m = max_lambda(t)
        heap.append((-lam, _order_key(t.key, i), i, m))
    heapq.heapify(heap)
    consumed = spent
    last_lambda = None
    trace = []
    while consumed < budget and heap:
        neg, _, i, m = heap[0]
        lam = -neg
        if lam <= 0:
            break
        t = tiles[i]
        inc = t.cost(m) - t.cost(current[i])
        if strict and consumed + inc > budget:
            break
        heapq.heappop(heap)
        consumed += inc
        current[i] = m
        last_lambda = lam
        if record_trace:
            trace.append((t.key, lam, m, consumed))
        lam2, m2 = max_lambda(t, m)
        heapq.heappush(heap, (-lam2, _order_key(t.key, i), i, m2))
    if last_lambda is None:
        # nothing committed: the threshold above which no tile moves
        last_lambda = max([-h[0] for h in heap] + [0])
    plan = AllocationPlan(final_lambda=last_lambda, trace=trace)
    total = 0
    requested = 0
    for i, t in enumerate(tiles):
        total += t.utility[current[i]]
        if current[i] != t.n:
            plan.selections[t.key] = current[i]
            requested += t.bit_count[current[i]]
    plan.total_utility = total
    plan.requested_bits = requested
    return plan


def _order_key(key, i):
    # ties across tiles go to the smallest key; keys of mixed types fall back to position
    return (key, i) if key is not None else (i, i)


def lagrangian_value(tiles: Sequence[TileChoice], selections, lam) -> float:
    """Sum over tiles of U(m) - lam * cost(m), with the buffered rep free."""
    total = 0
    for t in tiles:
        m = selections.get(t.key, t.n) if isinstance(selections, dict) else selections[tiles.index(t)]
        total += t.utility[m] - lam * t.cost(m)
    return total


def lagrangian_argmax(tile: TileChoice, lam) -> list[int]:
    """All representations (no downgrades) maximizing U(m) - lam * cost(m)."""
    vals = [(tile.utility[m] - lam * tile.cost(m), m) for m in range(tile.n, tile.top + 1)]
    best = max(v for v, _ in vals)
    return [m for v, m in vals if v == best or _ties(v, best)]


def upper_convex_hull(bits: Sequence, utility: Sequence) -> list[int]:
    """Indices of the upper-left hull vertices, ordered by increasing bits.

    Starts from the cheapest point and keeps only points that are strictly
    better than everything cheaper (dominated points are dropped).
    """
    order = sorted(range(len(bits)), key=lambda m: (bits[m], -utility[m], m))
    pts = []
    for m in order:
        if pts and bits[m] == bits[pts[-1]]:
            continue
        if pts and utility[m] <= utility[pts[-1]]:
            continue
        while len(pts) >= 2:
            a, b = pts[-2], pts[-1]
            # drop b if it lies on or below segment a->m
            lhs = (utility[b] - utility[a]) * (bits[m] - bits[a])
            rhs = (utility[m] - utility[a]) * (bits[b] - bits[a])
            if lhs <= rhs:
                pts.pop()
            else:
                break
        pts.append(m)
    return pts


class InstanceTooLarge(ValueError):
    pass


BRUTE_FORCE_LIMIT = 10**7


def brute_force_allocate(tiles: Sequence[TileChoice], budget) -> AllocationPlan:
    """Exhaustive optimum over every no-downgrade assignment.

    Ties on utility go to the lexicographically smallest selection vector.
    Works exactly on integer inputs; float inputs are compared as floats.
    """
    sizes = [t.top - t.n + 1 for t in tiles]
    total_combos = 1
    for s in sizes:
        total_combos *= s
    if total_combos > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"{total_combos} assignments exceed {BRUTE_FORCE_LIMIT}")
    exact = all(
        isinstance(x, (int, np.integer)) for t in tiles for x in itertools.chain(t.utility, t.bit_count)
    )
    dtype = np.int64 if exact else float
    cost = np.zeros(1, dtype=dtype)
    util = np.zeros(1, dtype=dtype)
    for t in tiles:
        opts = range(t.n, t.top + 1)
        c = np.array([t.cost(m) for m in opts], dtype=dtype)
        u = np.array([t.utility[m] for m in opts], dtype=dtype)
        cost = (cost[:, None] + c[None, :]).ravel()
        util = (util[:, None] + u[None, :]).ravel()
    feasible = cost <= budget
    masked = np.where(feasible, util, np.iinfo(np.int64).min if exact else -np.inf)
    best = int(np.argmax(masked))  # first maximum = lexicographically smallest
    choice = []
    rem = best
    for s in reversed(sizes):
        choice.append(rem % s)
        rem //= s
    choice.reverse()
    plan = AllocationPlan()
    total = 0
    requested = 0
    for t, off in zip(tiles, choice):
        m = t.n + off
        total += t.utility[m]
        if m != t.n:
            plan.selections[t.key] = m
            requested += t.bit_count[m]
    plan.total_utility = total
    plan.requested_bits = requested
    return plan


def write_trace_csv(path, plan: AllocationPlan) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "tile_key", "lambda_star", "m_star", "consumed_bits"])
        for step, (key, lam, m, consumed) in enumerate(plan.trace):
            w.writerow([step, key, float(lam), m, float(consumed)])


# ---------------------------------------------------------------------------
# array fast path used by the client; same semantics as greedy_allocate


def initial_lambdas(utility: np.ndarray, bits: np.ndarray, n: np.ndarray):
    """Vectorized ``max_lambda`` for K tiles with float arrays of shape (K, M+1)."""
    k, width = utility.shape
    m_idx = np.arange(width)[None, :]
    upgrade = m_idx > n[:, None]
    base_u = utility[np.arange(k), n]
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = (utility - base_u[:, None]) / bits
    valid = upgrade & (bits > 0)
    slopes = np.where(valid, slopes, -np.inf)
    best = slopes.max(axis=1)
    has = np.isfinite(best)
    tol = REL_EPS * np.abs(np.where(has, best, 0.0))
    near = valid & (slopes >= (best - tol)[:, None])
    # largest m among near-ties
    arg = width - 1 - np.argmax(near[:, ::-1], axis=1)
    lam = np.where(has, best, 0.0)
    arg = np.where(has, arg, n)
    return lam, arg


def allocate_arrays(
    utility: np.ndarray,
    bits: np.ndarray,
    n: np.ndarray,
    budget: float,
    spent: float = 0.0,
    strict: bool = False,
    start: np.ndarray | None = None,
):
    """Greedy allocation over arrays; tile order doubles as the tie-break key.

    ``start`` optionally forces a minimum selection per tile; those requests are
    charged before the loop. Returns ``(selection, consumed, final_lambda)``
    where ``selection`` holds the representation per tile after the request.
    """
    n = np.asarray(n, dtype=np.int64)
    k = len(n)
    current = n.copy()
    consumed = spent
    lam0, arg0 = initial_lambdas(utility, bits, n)
    heap = [(-float(lam0[i]), i, int(arg0[i])) for i in range(k)]
    if start is not None:
        for i in np.nonzero(np.asarray(start) > n)[0]:
            current[i] = int(start[i])
            consumed += float(bits[i, current[i]])
            lam, m = _next_lambda(utility[i], bits[i], n[i], current[i])
            heap[i] = (-lam, int(i), m)
    heapq.heapify(heap)
    last = None
    while consumed < budget and heap:
        neg, i, m = heap[0]
        if -neg <= 0:
            break
        cur = current[i]
        inc = bits[i, m] - (0.0 if cur == n[i] else bits[i, cur])
        if strict and consumed + inc > budget:
            break
        heapq.heappop(heap)
        consumed += inc
        current[i] = m
        last = -neg
        lam2, m2 = _next_lambda(utility[i], bits[i], n[i], m)
        heapq.heappush(heap, (-lam2, i, m2))
    if last is None:
        last = max([-h[0] for h in heap] + [0.0])
    return current, consumed, last


def _next_lambda(u_row, b_row, n0, cur):
    base_u = u_row[cur]
    base_b = 0.0 if cur == n0 else b_row[cur]
    best, arg = None, cur
    for m in range(cur + 1, len(u_row)):
        db = b_row[m] - base_b
        if db <= 0:
            continue
        s = (u_row[m] - base_u) / db
        if best is None or s > best or abs(s - best) <= REL_EPS * max(abs(s), abs(best)):
            best, arg = s, m
    if best is None:
        return 0.0, cur
    return float(best), arg
