"""Independent oracles and small builders shared by the test modules.

The oracles here deliberately avoid the library's computation paths: tours
come from factorial brute force, Shapley values from averaging marginals over
every permutation.
"""

import itertools
import math

import numpy as np

from fairalloc import parse_instance


def instance_from_points(points, cost=None, groups=None, matrix=None, demands=None):
    """Instance with depot at points[0] and customers at points[1:]."""
    doc = {
        "depot": {"x": float(points[0][0]), "y": float(points[0][1])},
        "customers": [],
        "cost": cost or {"fixed": 0.0, "per_distance": 1.0, "per_stop": 0.0},
    }
    for i, (x, y) in enumerate(points[1:], start=1):
        entry = {"id": i, "x": float(x), "y": float(y)}
        if demands is not None:
            entry["weight"], entry["volume"] = demands[i - 1]
        doc["customers"].append(entry)
    if groups is not None:
        doc["groups"] = groups
    if matrix is not None:
        doc["matrix"] = matrix
    return parse_instance(doc)


def brute_force_tour(inst, members):
    """Minimum closed-tour length over all visit orders (factorial search)."""
    if not members:
        return 0.0
    d = inst.distance_matrix()
    best = math.inf
    for perm in itertools.permutations(members):
        length = d[0, perm[0]] + d[perm[-1], 0]
        length += sum(d[perm[k], perm[k + 1]] for k in range(len(perm) - 1))
        best = min(best, length)
    return best


def brute_force_cost(inst, members):
    p = inst.cost_params
    if not members:
        return 0.0
    return (p.fixed_cost_per_tour
            + p.cost_per_distance * brute_force_tour(inst, members)
            + p.cost_per_stop * len(members))


def enumeration_shapley(costs, n):
    """Average marginal cost over all n! join orders; ``costs`` maps masks."""
    sums = np.zeros(n)
    for perm in itertools.permutations(range(n)):
        mask, prev = 0, 0.0
        for bit in perm:
            mask |= 1 << bit
            c = float(costs[mask])
            sums[bit] += c - prev
            prev = c
    return sums / math.factorial(n)
