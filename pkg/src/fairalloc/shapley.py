"""Shapley allocations over coalition cost tables.

Exact values use the subset formula shares_i = sum over S not containing i of
|S|! (n-|S|-1)! / n! * (c(S + i) - c(S)); Monte Carlo estimation averages
marginal costs along uniformly random permutations (each permutation's
marginals sum exactly to c(N), so the estimate is efficient at every sample
count).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ValidationError
from .costs import CoalitionCostTable
from .instances import ProblemInstance, mask_of, popcount_table

#: Customers whose exact share is (absolutely) below this are excluded from
#: percentage-error aggregates.
ZERO_SHARE_TOL = 1e-12


@dataclass(eq=False)
class AllocationVector:
    """Per-customer cost shares; index i holds customer i+1."""

    shares: np.ndarray
    method: str

    def __post_init__(self):
        self.shares = np.asarray(self.shares, dtype=float)
        if self.shares.ndim != 1 or self.shares.size == 0:
            raise ValidationError("shares", "need a nonempty 1-d share vector")

    @property
    def n(self) -> int:
        return self.shares.size

    @property
    def total(self) -> float:
        return float(self.shares.sum())


class TracePoint(NamedTuple):
    samples: int
    mape: float
    max_pct: float


@dataclass(eq=False)
class ConvergenceTrace:
    """Monte Carlo error checkpoints against an exact reference."""

    rows: list[TracePoint] = field(default_factory=list)

    def __post_init__(self):
        counts = [r.samples for r in self.rows]
        if counts != sorted(set(counts)):
            raise ValidationError("trace", "sample counts must be strictly increasing")
        if any(r.mape < 0 or r.max_pct < 0 for r in self.rows):
            raise ValidationError("trace", "errors must be >= 0")


def _shares_of(v) -> np.ndarray:
    return np.asarray(getattr(v, "shares", v), dtype=float)


def convergence_error(estimate, exact) -> tuple[float, float]:
    """(mean, max) absolute percentage error per customer versus exact shares.

    Customers with exact share ~0 are excluded from both aggregates.
    """
    est = _shares_of(estimate)
    ref = _shares_of(exact)
    if est.shape != ref.shape:
        raise ValidationError("estimate", f"dimension mismatch: {est.shape} vs {ref.shape}")
    nonzero = np.abs(ref) > ZERO_SHARE_TOL
    if not np.any(nonzero):
        raise ValidationError("exact", "all exact shares are ~0; percentage errors undefined")
    pct = np.abs(est[nonzero] - ref[nonzero]) / np.abs(ref[nonzero]) * 100.0
    return float(pct.mean()), float(pct.max())


def subset_weights(n: int) -> np.ndarray:
    """w[k] = k! (n-k-1)! / n! for k = 0..n-1, computed from exact integers."""
    fn = factorial(n)
    return np.array([factorial(k) * factorial(n - k - 1) / fn for k in range(n)])


def shapley_from_costs(costs: np.ndarray) -> np.ndarray:
    """Exact Shapley shares from a complete 2^n cost array."""
    costs = np.asarray(costs, dtype=float)
    size = costs.size
    n = size.bit_length() - 1
    if size != 1 << n or n < 1:
        raise ValidationError("table", f"incomplete table: need 2^n entries, got {size}")
    w = subset_weights(n)
    pc = popcount_table(n)
    masks = np.arange(size, dtype=np.int64)
    shares = np.empty(n)
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        shares[i] = np.sum(w[pc[without]] * (costs[without | (1 << i)] - costs[without]))
    return shares


def shapley_exact(table: CoalitionCostTable) -> AllocationVector:
    """Exact Shapley allocation of the table's grand-coalition cost."""
    return AllocationVector(shapley_from_costs(table.costs), "exact")


def marginal_cost_vector(table: CoalitionCostTable) -> AllocationVector:
    """Naive allocation shares_i = c(N) - c(N \\ {i}).

    Not efficient in general: shared savings make the marginals under-estimate.
    """
    n = table.n
    grand = table.grand_mask
    shares = np.array([table.costs[grand] - table.costs[grand ^ (1 << i)] for i in range(n)])
    return AllocationVector(shares, "marginal")


def shapley_monte_carlo(
    oracle: Callable[[int], float],
    n: int,
    samples: int,
    seed: int,
    checkpoints: Sequence[int] | None = None,
    exact: AllocationVector | None = None,
) -> tuple[AllocationVector, ConvergenceTrace | None]:
    """Permutation-sampling estimate of the Shapley allocation.

    ``oracle`` prices a coalition mask.  Draws ``samples`` uniform random
    permutations from one seeded stream and averages marginal costs along
    them.  When ``checkpoints`` is given, an exact reference allocation is
    required and a convergence trace is recorded at those sample counts.
    """
    if samples < 1:
        raise ValidationError("samples", "need at least one sample")
    cps: list[int] = []
    if checkpoints is not None:
        cps = sorted(set(int(c) for c in checkpoints))
        if cps and (cps[0] < 1 or cps[-1] > samples):
            raise ValidationError("checkpoints", f"must lie in [1, {samples}], got {cps}")
        if exact is None:
            raise ValidationError("exact", "a trace needs an exact reference allocation")
        if exact.n != n:
            raise ValidationError("exact", f"dimension mismatch: {exact.n} vs {n}")

    rng = np.random.default_rng(seed)
    sums = np.zeros(n)
    cpset = set(cps)
    rows: list[TracePoint] = []
    for k in range(1, samples + 1):
        prev = 0.0
        mask = 0
        for bit in rng.permutation(n):
            mask |= 1 << bit
            cost = oracle(mask)
            sums[bit] += cost - prev
            prev = cost
        if k in cpset:
            mape, max_pct = convergence_error(sums / k, exact)
            rows.append(TracePoint(k, mape, max_pct))
    estimate = AllocationVector(sums / samples, "monte_carlo")
    return estimate, (ConvergenceTrace(rows) if checkpoints is not None else None)


def group_constrained_shapley(
    inst: ProblemInstance,
    costs: CoalitionCostTable | Callable[[int], float],
    groups: Sequence[frozenset[int]] | None = None,
) -> AllocationVector:
    """Shapley allocation with all-or-none groups as super-players.

    Each group joins coalitions as one player; its share is split among
    members proportional to demand weight (equal split when weights tie at
    zero).  Ungrouped customers play as singletons.  ``costs`` may be a full
    table or any coalition-mask oracle (only the 2^p group-feasible masks are
    priced).
    """
    n = inst.n
    oracle = costs.cost if isinstance(costs, CoalitionCostTable) else costs
    if groups is None:
        groups = inst.groups
    grouped: set[int] = set()
    units: list[list[int]] = []
    for g in groups:
        members = sorted(g)
        for i in members:
            if i in grouped:
                raise ValidationError("groups", f"groups overlap on customer {i}")
            if not 1 <= i <= n:
                raise ValidationError("groups", f"unknown customer id {i}")
            grouped.add(i)
        units.append(members)
    units += [[i] for i in range(1, n + 1) if i not in grouped]

    unit_masks = [mask_of(u, n) for u in units]
    p = len(units)
    super_costs = np.empty(1 << p)
    for sm in range(1 << p):
        mask = 0
        for j in range(p):
            if sm >> j & 1:
                mask |= unit_masks[j]
        super_costs[sm] = oracle(mask)
    unit_shares = shapley_from_costs(super_costs)

    weights = {c.id: c.demand_weight for c in inst.customers}
    shares = np.zeros(n)
    for members, share in zip(units, unit_shares):
        total_w = sum(weights[i] for i in members)
        for i in members:
            frac = weights[i] / total_w if total_w > 0 else 1.0 / len(members)
            shares[i - 1] = share * frac
    return AllocationVector(shares, "group_exact")
