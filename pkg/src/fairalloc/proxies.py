"""Fast stand-ins for the Shapley value and their quality evaluation.

All proxies split the grand-coalition cost along a cheaply computed signal
(depot distance, demand, stops) so they are efficient by construction; none
carries the Shapley value's guarantees, and on adversarial geometries the
ratio to the true value is unbounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .instances import ProblemInstance
from .shapley import AllocationVector, ZERO_SHARE_TOL, _shares_of

DEMAND_DIMENSIONS = ("weight", "volume", "stops")


@dataclass
class ProxyWeights:
    """Convex blend weights over (depot, demand, marginal); normalized to sum 1."""

    w_depot: float
    w_demand: float
    w_marginal: float

    def __post_init__(self):
        vals = (self.w_depot, self.w_demand, self.w_marginal)
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise ValidationError("weights", f"must be finite and >= 0, got {vals}")
        total = sum(vals)
        if total <= 0:
            raise ValidationError("weights", "at least one weight must be positive")
        self.w_depot, self.w_demand, self.w_marginal = (v / total for v in vals)


def depot_distance_proxy(inst: ProblemInstance, grand_cost: float) -> AllocationVector:
    """Split the grand cost proportional to each customer's depot distance."""
    d = inst.depot_distances()
    total = d.sum()
    if total <= 0:
        raise ValidationError("instance", "all customers at the depot; depot-distance proxy undefined")
    return AllocationVector(grand_cost * d / total, "depot_distance")


def demand_share_proxy(inst: ProblemInstance, grand_cost: float, dimension: str) -> AllocationVector:
    """Split the grand cost proportional to demand weight, volume, or stops."""
    if dimension not in DEMAND_DIMENSIONS:
        raise ValidationError("dimension", f"must be one of {DEMAND_DIMENSIONS}, got {dimension!r}")
    if dimension == "weight":
        d = np.array([c.demand_weight for c in inst.customers])
    elif dimension == "volume":
        d = np.array([c.demand_volume for c in inst.customers])
    else:
        d = np.ones(inst.n)
    total = d.sum()
    if total <= 0:
        raise ValidationError("dimension", f"total {dimension} demand is zero")
    return AllocationVector(grand_cost * d / total, f"demand_{dimension}")


def blended_proxy(
    inst: ProblemInstance,
    grand_cost: float,
    weights: ProxyWeights,
    marginal: AllocationVector,
    dimension: str = "weight",
) -> AllocationVector:
    """Convex combination of the depot, demand, and marginal-cost signals.

    The marginal vector is renormalized to sum to the grand cost first (the
    blend stays efficient); when its sum is zero it degrades to a uniform
    split.
    """
    if marginal.n != inst.n:
        raise ValidationError("marginal", f"dimension mismatch: {marginal.n} vs {inst.n}")
    depot = depot_distance_proxy(inst, grand_cost).shares
    demand = demand_share_proxy(inst, grand_cost, dimension).shares
    msum = marginal.total
    if abs(msum) <= ZERO_SHARE_TOL:
        scaled = np.full(inst.n, grand_cost / inst.n)
    else:
        scaled = marginal.shares * (grand_cost / msum)
    blend = weights.w_depot * depot + weights.w_demand * demand + weights.w_marginal * scaled
    return AllocationVector(blend, "blend")


class ProxyEvaluation(NamedTuple):
    ratios: np.ndarray        # proxy_i / exact_i, NaN where exact ~ 0
    zero_share_ids: list[int]  # customers excluded from the ratio aggregates
    min_ratio: float
    mape: float


def evaluate_proxy(proxy, exact) -> ProxyEvaluation:
    """Per-customer proxy/exact ratios with summary statistics."""
    p = _shares_of(proxy)
    e = _shares_of(exact)
    if p.shape != e.shape:
        raise ValidationError("proxy", f"dimension mismatch: {p.shape} vs {e.shape}")
    nonzero = np.abs(e) > ZERO_SHARE_TOL
    ratios = np.full(e.size, np.nan)
    ratios[nonzero] = p[nonzero] / e[nonzero]
    zero_ids = [i + 1 for i in np.flatnonzero(~nonzero)]
    if not np.any(nonzero):
        raise ValidationError("exact", "all exact shares are ~0; ratios undefined")
    pct = np.abs(p[nonzero] - e[nonzero]) / np.abs(e[nonzero]) * 100.0
    return ProxyEvaluation(ratios, zero_ids, float(np.nanmin(ratios)), float(pct.mean()))
