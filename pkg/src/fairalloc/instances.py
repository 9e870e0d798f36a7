"""Routing-game problem instances: geometry, validation, and generators.

An instance is a depot (id 0), customers with ids 1..n, a distance metric
(Euclidean from coordinates, or an explicit symmetric matrix), tour cost
parameters, and optional all-or-none customer groups.  Coalitions of
customers are plain integer bitmasks in which bit ``i - 1`` stands for
customer ``i``; the depot is never part of a coalition.

Instance files are JSON documents of the form::

    {
      "depot": {"x": 0.0, "y": 0.0},
      "customers": [{"id": 1, "x": 10.0, "y": 0.0,
                     "weight": 1.0, "volume": 1.0, "chain": "acme"}, ...],
      "matrix": [[0.0, ...], ...],          # optional, overrides coordinates
      "cost": {"fixed": 0.0, "per_distance": 1.0, "per_stop": 0.0},
      "groups": [[1, 2], ...]               # optional all-or-none sets
    }
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Location:
    """A point in the plane; id 0 is the depot."""

    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Customer:
    id: int
    location: Location
    demand_weight: float = 1.0
    demand_volume: float = 1.0
    chain_id: str | None = None

    def __post_init__(self):
        for name, value in (("weight", self.demand_weight), ("volume", self.demand_volume)):
            if not (math.isfinite(value) and value >= 0.0):
                raise ValidationError(name, f"customer {self.id}: must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class CostParams:
    """Tour cost model: fixed charge per (nonempty) tour, variable charges
    per distance unit and per customer stop."""

    fixed_cost_per_tour: float = 0.0
    cost_per_distance: float = 1.0
    cost_per_stop: float = 0.0

    def __post_init__(self):
        for name, value in (
            ("cost.fixed", self.fixed_cost_per_tour),
            ("cost.per_distance", self.cost_per_distance),
            ("cost.per_stop", self.cost_per_stop),
        ):
            if not (math.isfinite(value) and value >= 0.0):
                raise ValidationError(name, f"must be finite and >= 0, got {value}")


#: Pure-distance cost model used by the generators.
PURE_DISTANCE = CostParams(0.0, 1.0, 0.0)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Immutable routing-game instance.  Safe to share across threads."""

    depot: Location
    customers: tuple[Customer, ...]
    cost_params: CostParams = PURE_DISTANCE
    matrix: np.ndarray | None = None
    groups: tuple[frozenset[int], ...] = ()

    def __post_init__(self):
        n = len(self.customers)
        if n == 0:
            raise ValidationError("customers", "instance needs at least one customer")
        if self.depot.id != 0:
            raise ValidationError("depot", f"depot id must be 0, got {self.depot.id}")
        if not (math.isfinite(self.depot.x) and math.isfinite(self.depot.y)):
            raise ValidationError("depot", "coordinates must be finite")
        ids = [c.id for c in self.customers]
        if ids != list(range(1, n + 1)):
            raise ValidationError("customers", f"customer ids must be contiguous 1..{n}, got {ids}")
        for c in self.customers:
            for name, value in (("x", c.location.x), ("y", c.location.y)):
                if not math.isfinite(value):
                    raise ValidationError(name, f"customer {c.id}: coordinate must be finite")
        self._check_matrix(n)
        self._check_groups(n)
        self._check_chains()

    def _check_matrix(self, n: int):
        if self.matrix is None:
            return
        m = self.matrix
        if m.shape != (n + 1, n + 1):
            raise ValidationError("matrix", f"must be {(n + 1, n + 1)} (depot row 0), got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("matrix", "entries must be finite")
        if np.any(m < 0):
            raise ValidationError("matrix", "entries must be nonnegative")
        if np.any(np.diagonal(m) != 0):
            raise ValidationError("matrix", "diagonal must be zero")
        bad = np.argwhere(m != m.T)
        if bad.size:
            i, j = bad[0]
            raise ValidationError("matrix", f"not symmetric: matrix[{i}][{j}] != matrix[{j}][{i}]")

    def _check_groups(self, n: int):
        seen: set[int] = set()
        for g in self.groups:
            if not g:
                raise ValidationError("groups", "empty group")
            for i in g:
                if not 1 <= i <= n:
                    raise ValidationError("groups", f"unknown customer id {i}")
                if i in seen:
                    raise ValidationError("groups", f"groups overlap on customer {i}")
                seen.add(i)

    def _check_chains(self):
        chains: dict[str, set[int]] = {}
        for c in self.customers:
            if c.chain_id is not None:
                chains.setdefault(c.chain_id, set()).add(c.id)
        group_sets = {frozenset(g) for g in self.groups}
        for label, members in chains.items():
            if frozenset(members) not in group_sets:
                raise ValidationError(
                    "chain", f"chain {label!r} (customers {sorted(members)}) does not match a declared group"
                )

    @property
    def n(self) -> int:
        return len(self.customers)

    @cached_property
    def _coords(self) -> np.ndarray:
        pts = [(self.depot.x, self.depot.y)]
        pts += [(c.location.x, c.location.y) for c in self.customers]
        return np.asarray(pts, dtype=float)

    @cached_property
    def _distance_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        d = self._coords[:, None, :] - self._coords[None, :, :]
        return np.sqrt((d * d).sum(axis=2))

    def distance_matrix(self) -> np.ndarray:
        """Full (n+1) x (n+1) distance matrix, row/column 0 = depot.  Do not mutate."""
        return self._distance_matrix

    def distance(self, a: int, b: int) -> float:
        """Distance between location ids ``a`` and ``b`` (0 = depot)."""
        for v in (a, b):
            if not 0 <= v <= self.n:
                raise ValidationError("id", f"location id {v} out of range 0..{self.n}")
        return float(self._distance_matrix[a, b])

    def depot_distances(self) -> np.ndarray:
        """Distances depot -> customer, indexed 0..n-1 for customers 1..n."""
        return self._distance_matrix[0, 1:]

    @cached_property
    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def to_dict(self) -> dict:
        doc: dict = {
            "depot": {"x": self.depot.x, "y": self.depot.y},
            "customers": [],
            "cost": {
                "fixed": self.cost_params.fixed_cost_per_tour,
                "per_distance": self.cost_params.cost_per_distance,
                "per_stop": self.cost_params.cost_per_stop,
            },
        }
        for c in self.customers:
            entry = {
                "id": c.id,
                "x": c.location.x,
                "y": c.location.y,
                "weight": c.demand_weight,
                "volume": c.demand_volume,
            }
            if c.chain_id is not None:
                entry["chain"] = c.chain_id
            doc["customers"].append(entry)
        if self.matrix is not None:
            doc["matrix"] = [[float(v) for v in row] for row in self.matrix]
        if self.groups:
            doc["groups"] = [sorted(g) for g in self.groups]
        return doc


def _require(doc: dict, key: str, kind, field_name: str):
    if key not in doc:
        raise ValidationError(field_name, "missing required field")
    value = doc[key]
    if not isinstance(value, kind):
        raise ValidationError(field_name, f"expected {kind.__name__ if not isinstance(kind, tuple) else 'number'}")
    return value


_NUM = (int, float)


def parse_instance(doc: dict) -> ProblemInstance:
    """Build and validate a :class:`ProblemInstance` from a schema dict."""
    if not isinstance(doc, dict):
        raise ValidationError("document", "top level must be an object")
    depot_doc = _require(doc, "depot", dict, "depot")
    depot = Location(0, float(_require(depot_doc, "x", _NUM, "depot.x")),
                     float(_require(depot_doc, "y", _NUM, "depot.y")))

    raw_customers = _require(doc, "customers", list, "customers")
    customers = []
    for entry in raw_customers:
        if not isinstance(entry, dict):
            raise ValidationError("customers", "each customer must be an object")
        cid = _require(entry, "id", int, "customers.id")
        loc = Location(cid, float(_require(entry, "x", _NUM, "customers.x")),
                       float(_require(entry, "y", _NUM, "customers.y")))
        chain = entry.get("chain")
        if chain is not None and not isinstance(chain, str):
            raise ValidationError("chain", f"customer {cid}: chain label must be a string")
        customers.append(Customer(
            id=cid,
            location=loc,
            demand_weight=float(entry.get("weight", 1.0)),
            demand_volume=float(entry.get("volume", 1.0)),
            chain_id=chain,
        ))
    customers.sort(key=lambda c: c.id)

    cost_doc = _require(doc, "cost", dict, "cost")
    params = CostParams(
        float(_require(cost_doc, "fixed", _NUM, "cost.fixed")),
        float(_require(cost_doc, "per_distance", _NUM, "cost.per_distance")),
        float(_require(cost_doc, "per_stop", _NUM, "cost.per_stop")),
    )

    matrix = None
    if "matrix" in doc:
        raw = doc["matrix"]
        if not isinstance(raw, list) or not all(isinstance(r, list) for r in raw):
            raise ValidationError("matrix", "must be a list of rows")
        try:
            matrix = np.asarray(raw, dtype=float)
        except ValueError as exc:
            raise ValidationError("matrix", f"rows must be numeric and equal length: {exc}") from None
        if matrix.ndim != 2:
            raise ValidationError("matrix", "must be two-dimensional")

    groups = _merge_groups(doc.get("groups"), customers)
    return ProblemInstance(depot=depot, customers=tuple(customers),
                           cost_params=params, matrix=matrix, groups=groups)


def _merge_groups(raw_groups, customers: list[Customer]) -> tuple[frozenset[int], ...]:
    """Combine explicit group declarations with chain labels.

    Customers sharing a chain label form an implicit group.  When explicit
    groups are declared, every chain's member set must exactly match one of
    them; otherwise the chain sets become groups of their own.
    """
    groups: list[frozenset[int]] = []
    if raw_groups is not None:
        if not isinstance(raw_groups, list):
            raise ValidationError("groups", "must be a list of id lists")
        for g in raw_groups:
            if not isinstance(g, list) or not all(isinstance(i, int) for i in g):
                raise ValidationError("groups", "each group must be a list of integer ids")
            groups.append(frozenset(g))

    chains: dict[str, set[int]] = {}
    for c in customers:
        if c.chain_id is not None:
            chains.setdefault(c.chain_id, set()).add(c.id)
    declared = set(groups)
    for label in sorted(chains):
        members = frozenset(chains[label])
        if members in declared:
            continue
        if any(members & g for g in groups):
            raise ValidationError(
                "chain", f"chain {label!r} (customers {sorted(members)}) does not match a declared group"
            )
        groups.append(members)
    return tuple(groups)


def load_instance(path: str | Path) -> ProblemInstance:
    """Load and validate an instance JSON file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError("document", f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("document", f"malformed JSON: {exc}") from None
    return parse_instance(doc)


def save_instance(inst: ProblemInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def generate_random_euclidean(n: int, seed: int, box: float = 100.0) -> ProblemInstance:
    """Uniform random customers in a square box with the depot at its center.

    Deterministic for a fixed seed; unit demands; pure-distance costs.
    """
    if n < 1:
        raise ValidationError("n", "need at least one customer")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, box, size=(n, 2))
    depot = Location(0, box / 2.0, box / 2.0)
    customers = tuple(
        Customer(i + 1, Location(i + 1, float(pts[i, 0]), float(pts[i, 1]))) for i in range(n)
    )
    return ProblemInstance(depot=depot, customers=customers)


def generate_outback_pair(far_distance: float) -> ProblemInstance:
    """Two co-located customers far from the depot.

    Each has a marginal cost of zero in the grand coalition, yet together
    they cause the full out-and-back cost: the stock example of marginal
    costs under-estimating.
    """
    if not far_distance > 0:
        raise ValidationError("far_distance", f"must be > 0, got {far_distance}")
    depot = Location(0, 0.0, 0.0)
    customers = (
        Customer(1, Location(1, far_distance, 0.0)),
        Customer(2, Location(2, far_distance, 0.0)),
    )
    return ProblemInstance(depot=depot, customers=customers)


def generate_depot_proxy_pathology(
    n: int,
    direction: str,
    far_distance: float = 100.0,
    near_distance: float | None = None,
) -> ProblemInstance:
    """Family of instances on which the depot-distance proxy degrades with n.

    Both directions place one isolated customer at ``far_distance`` on one
    side of the depot and n-1 co-located customers at ``near_distance`` on
    the other.  For ``direction="underestimate"`` the cluster sits at a fixed
    offset (default ``far_distance / 5``): the proxy's share of the isolated
    customer shrinks relative to its true share as n grows.  For
    ``"overestimate"`` the cluster sits at ``far_distance / n``: the proxy
    increasingly overcharges each cluster member.  With the defaults the
    worst-case ratio is strictly decreasing in n (and tends to 0).
    """
    if n < 2:
        raise ValidationError("n", f"pathology family needs n >= 2, got {n}")
    if direction not in ("underestimate", "overestimate"):
        raise ValidationError("direction", f"must be 'underestimate' or 'overestimate', got {direction!r}")
    if not far_distance > 0:
        raise ValidationError("far_distance", f"must be > 0, got {far_distance}")
    if near_distance is None:
        near_distance = far_distance / 5.0 if direction == "underestimate" else far_distance / n
    if not 0 < near_distance:
        raise ValidationError("near_distance", f"must be > 0, got {near_distance}")

    depot = Location(0, 0.0, 0.0)
    customers = [Customer(1, Location(1, far_distance, 0.0))]
    for i in range(2, n + 1):
        customers.append(Customer(i, Location(i, -near_distance, 0.0)))
    return ProblemInstance(depot=depot, customers=tuple(customers))


# ---------------------------------------------------------------------------
# Coalition masks
# ---------------------------------------------------------------------------

def mask_of(ids: Iterable[int], n: int | None = None) -> int:
    """Bitmask for a set of customer ids (bit i-1 for customer i)."""
    mask = 0
    for i in ids:
        if i < 1 or (n is not None and i > n):
            raise ValidationError("mask", f"customer id {i} out of range")
        mask |= 1 << (i - 1)
    return mask


def mask_members(mask: int) -> list[int]:
    """Customer ids in a mask, ascending."""
    members = []
    i = 1
    while mask:
        if mask & 1:
            members.append(i)
        mask >>= 1
        i += 1
    return members


def popcount_table(n: int) -> np.ndarray:
    """Population counts for all masks 0..2^n-1."""
    masks = np.arange(1 << n, dtype=np.int64)
    pc = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        pc += (masks >> b) & 1
    return pc


def is_group_feasible(mask: int, groups: Sequence[frozenset[int]]) -> bool:
    """True when the mask contains each group entirely or not at all."""
    for g in groups:
        gmask = mask_of(g)
        if mask & gmask not in (0, gmask):
            return False
    return True


def iter_group_feasible_masks(n: int, groups: Sequence[frozenset[int]]) -> Iterator[int]:
    """All coalition masks that respect every all-or-none group."""
    grouped = set()
    units = []
    for g in groups:
        units.append(mask_of(g, n))
        grouped.update(g)
    units += [1 << (i - 1) for i in range(1, n + 1) if i not in grouped]
    for combo in range(1 << len(units)):
        mask = 0
        for j, unit in enumerate(units):
            if combo >> j & 1:
                mask |= unit
        yield mask
