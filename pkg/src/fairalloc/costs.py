"""Coalition cost oracles for the routing game.

The characteristic function c(S) prices a coalition of customers as

    fixed_cost_per_tour * [S nonempty]
    + cost_per_distance * (length of a closed tour depot -> S -> depot)
    + cost_per_stop * |S|

with the tour either solved to optimality (Held-Karp dynamic programming),
built heuristically (nearest neighbor + 2-opt), or read off a fixed global
visiting order (the polynomial routing-game convention).

Tables are immutable once built and safe to query concurrently; building is
single-threaded and the per-coalition oracles are pure functions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CapabilityError, ValidationError
from .instances import ProblemInstance, mask_members, popcount_table

#: Largest n for which exact (optimal-tour) coalition costs are supported.
EXACT_MODE_LIMIT = 20
#: Largest n for which full 2^n cost tables are supported in any mode.
TABLE_MODE_LIMIT = 24
_MEMORY_CAP_BYTES = 4 << 30
_EPS = 1e-12

MODES = ("exact", "heuristic", "fixed_order")


@dataclass(eq=False)
class CoalitionCostTable:
    """Costs of all 2^n coalitions of one instance, indexed by mask."""

    digest: str
    costs: np.ndarray
    mode: str

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=float)
        size = self.costs.size
        if size < 2 or size & (size - 1):
            raise ValidationError("table", f"need 2^n entries for n >= 1, got {size}")
        if self.mode not in MODES:
            raise ValidationError("mode", f"unknown mode {self.mode!r}")
        if self.costs[0] != 0.0:
            raise ValidationError("table", "empty coalition must cost 0")
        if not np.all(np.isfinite(self.costs)) or np.any(self.costs < 0):
            raise ValidationError("table", "costs must be finite and >= 0")

    @property
    def n(self) -> int:
        return self.costs.size.bit_length() - 1

    @property
    def grand_mask(self) -> int:
        return self.costs.size - 1

    @property
    def grand_cost(self) -> float:
        return float(self.costs[-1])

    def cost(self, mask: int) -> float:
        if not 0 <= mask < self.costs.size:
            raise ValidationError("mask", f"mask {mask} out of range for n={self.n}")
        return float(self.costs[mask])

    def write_csv(self, path: str | Path, comments: Sequence[str] = ()) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["mask", "cost"])
            for mask, cost in enumerate(self.costs):
                writer.writerow([mask, repr(float(cost))])


def _check_mask(inst: ProblemInstance, mask: int) -> None:
    if not 0 <= mask < (1 << inst.n):
        raise ValidationError("mask", f"mask {mask} out of range for n={inst.n}")


def _tour_table(d_depot: np.ndarray, d_between: np.ndarray) -> np.ndarray:
    """Optimal closed-tour length through the depot for every subset of k points.

    One Held-Karp sweep: dp[mask, last] is the shortest depot-anchored path
    visiting exactly ``mask`` and ending at ``last``; closing each state back
    to the depot prices every coalition.  O(2^k k^2) time, O(2^k k) space.
    """
    k = int(d_depot.size)
    size = 1 << k
    dp = np.full((size, k), np.inf)
    for j in range(k):
        dp[1 << j, j] = d_depot[j]
    between_cols = d_between.T  # between_cols[j] = distances * -> j
    for mask in range(1, size):
        if mask & (mask - 1) == 0:  # singletons are the base case
            continue
        bits = []
        m = mask
        while m:
            low = m & -m
            bits.append(low.bit_length() - 1)
            m ^= low
        prev_rows = dp[[mask ^ (1 << j) for j in bits]]  # (b, k)
        dp[mask, bits] = np.min(prev_rows + between_cols[bits], axis=1)
    tours = np.min(dp + d_depot[None, :], axis=1)
    tours[0] = 0.0
    return tours


def _finalize(inst: ProblemInstance, tour_length: float, stops: int) -> float:
    p = inst.cost_params
    if stops == 0:
        return 0.0
    return p.fixed_cost_per_tour + p.cost_per_distance * tour_length + p.cost_per_stop * stops


def exact_coalition_cost(inst: ProblemInstance, mask: int) -> float:
    """Optimal-tour cost of one coalition (Held-Karp, not a heuristic)."""
    _check_mask(inst, mask)
    if inst.n > EXACT_MODE_LIMIT:
        raise CapabilityError(
            f"exact mode supports n <= {EXACT_MODE_LIMIT}, got n={inst.n}; use heuristic mode"
        )
    members = mask_members(mask)
    if not members:
        return 0.0
    d = inst.distance_matrix()
    idx = np.asarray(members)
    tours = _tour_table(d[0, idx], d[np.ix_(idx, idx)])
    return _finalize(inst, float(tours[-1]), len(members))


def heuristic_coalition_cost(inst: ProblemInstance, mask: int) -> float:
    """Nearest-neighbor tour from the depot refined by 2-opt local search.

    Deterministic (first-improvement scan, ties broken by lowest index) and
    never below the exact cost of the same coalition.
    """
    _check_mask(inst, mask)
    members = mask_members(mask)
    if not members:
        return 0.0
    d = inst.distance_matrix()
    return _finalize(inst, _heuristic_tour_length(d, members), len(members))


def _heuristic_tour_length(d: np.ndarray, members: list[int]) -> float:
    remaining = sorted(members)
    route = [0]
    while remaining:
        cur = route[-1]
        nxt = min(remaining, key=lambda j: (d[cur, j], j))
        route.append(nxt)
        remaining.remove(nxt)
    route.append(0)

    improved = True
    while improved:
        improved = False
        for i in range(1, len(route) - 2):
            for j in range(i + 1, len(route) - 1):
                delta = (
                    d[route[i - 1], route[j]]
                    + d[route[i], route[j + 1]]
                    - d[route[i - 1], route[i]]
                    - d[route[j], route[j + 1]]
                )
                if delta < -_EPS:
                    route[i : j + 1] = reversed(route[i : j + 1])
                    improved = True
                    break
            if improved:
                break
    return float(sum(d[route[p], route[p + 1]] for p in range(len(route) - 1)))


def fixed_order_cost(inst: ProblemInstance, order: Sequence[int], mask: int) -> float:
    """Cost when the coalition is visited in the induced subsequence of a fixed
    global order (closed through the depot)."""
    _check_mask(inst, mask)
    if sorted(order) != list(range(1, inst.n + 1)):
        raise ValidationError("order", f"must be a permutation of 1..{inst.n}, got {list(order)}")
    seq = [j for j in order if mask >> (j - 1) & 1]
    if not seq:
        return 0.0
    d = inst.distance_matrix()
    length = d[0, seq[0]] + d[seq[-1], 0]
    length += sum(d[seq[p], seq[p + 1]] for p in range(len(seq) - 1))
    return _finalize(inst, float(length), len(seq))


def all_coalition_costs(
    inst: ProblemInstance,
    mode: str = "exact",
    order: Sequence[int] | None = None,
) -> CoalitionCostTable:
    """Cost table for every one of the 2^n coalitions.

    Exact mode fills the whole table from a single Held-Karp sweep; the other
    modes price each coalition independently.  ``order`` (default 1..n) only
    applies to ``fixed_order`` mode.
    """
    n = inst.n
    if mode not in MODES:
        raise ValidationError("mode", f"unknown mode {mode!r}; choose from {MODES}")
    limit = EXACT_MODE_LIMIT if mode == "exact" else TABLE_MODE_LIMIT
    if n > limit:
        hint = "; use heuristic mode" if mode == "exact" else ""
        raise CapabilityError(f"{mode} cost table supports n <= {limit}, got n={n}{hint}")
    estimate = (1 << n) * 8 * (n + 2 if mode == "exact" else 2)
    if estimate > _MEMORY_CAP_BYTES:
        raise CapabilityError(f"cost table for n={n} would need ~{estimate >> 20} MiB; refusing")

    size = 1 << n
    d = inst.distance_matrix()
    if mode == "exact":
        tours = _tour_table(d[0, 1:], d[1:, 1:])
    elif mode == "heuristic":
        tours = np.empty(size)
        tours[0] = 0.0
        for mask in range(1, size):
            tours[mask] = _heuristic_tour_length(d, mask_members(mask))
    else:
        order = list(order) if order is not None else list(range(1, n + 1))
        if sorted(order) != list(range(1, n + 1)):
            raise ValidationError("order", f"must be a permutation of 1..{n}, got {order}")
        tours = np.empty(size)
        tours[0] = 0.0
        for mask in range(1, size):
            seq = [j for j in order if mask >> (j - 1) & 1]
            length = d[0, seq[0]] + d[seq[-1], 0]
            length += sum(d[seq[p], seq[p + 1]] for p in range(len(seq) - 1))
            tours[mask] = length

    p = inst.cost_params
    pc = popcount_table(n)
    costs = p.cost_per_distance * tours + p.cost_per_stop * pc + p.fixed_cost_per_tour
    costs[0] = 0.0
    return CoalitionCostTable(digest=inst.digest, costs=costs, mode=mode)
