"""The online "like" mechanism and its axiomatic verification.

Items arrive one per time step; agents hold 0/1 utilities and declare 0/1
likes.  Each arriving item is allocated uniformly at random among the agents
that reported liking it (unallocated when nobody did).  The mechanism is
strategy proof and envy free in expectation under sincere reports, but a
realized draw can leave an agent with considerable envy; this module provides
both the exact ex-ante analysis and the seeded randomized execution needed to
measure that gap, plus a brute-force best-response search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CapabilityError, ValidationError

#: Largest item count for exhaustive best-response enumeration (2^m reports).
BEST_RESPONSE_ITEM_LIMIT = 16
_TIE_TOL = 1e-12


def _check_binary(mat: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(mat, dtype=np.int64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError(name, "need a nonempty agents x items matrix")
    if not np.isin(arr, (0, 1)).all():
        raise ValidationError(name, "entries must be 0 or 1")
    return arr


@dataclass(eq=False)
class LikeProfile:
    """Agents x items 0/1 utilities plus the declared likes (reports).

    Reports default to the utilities (sincere bidding).
    """

    utilities: np.ndarray
    reports: np.ndarray | None = None

    def __post_init__(self):
        self.utilities = _check_binary(self.utilities, "utilities")
        if self.reports is None:
            self.reports = self.utilities.copy()
        else:
            self.reports = _check_binary(self.reports, "reports")
            if self.reports.shape != self.utilities.shape:
                raise ValidationError("reports", "must match the shape of utilities")

    @property
    def agents(self) -> int:
        return self.utilities.shape[0]

    @property
    def items(self) -> int:
        return self.utilities.shape[1]


def load_profile(path: str | Path) -> LikeProfile:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError("profile", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError("profile", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or "utilities" not in doc:
        raise ValidationError("utilities", "profile document needs a 'utilities' matrix")
    return LikeProfile(np.asarray(doc["utilities"]),
                       np.asarray(doc["reports"]) if "reports" in doc else None)


@dataclass(eq=False)
class AllocationRecord:
    """Realized winners of one seeded run; winner[t] is None for unallocated."""

    winners: tuple[int | None, ...]
    seed: int


def like_mechanism_step(likers: Iterable[int], rng: np.random.Generator) -> int | None:
    """Allocate one item uniformly at random among its likers.

    Consumes exactly one draw when there is at least one liker, none
    otherwise, so batch and step-by-step executions share the stream.
    """
    pool = sorted(likers)
    if not pool:
        return None
    return pool[int(rng.integers(len(pool)))]


def run_like_mechanism(profile: LikeProfile, seed: int) -> AllocationRecord:
    """Run the mechanism over all items in arrival order with a seeded RNG.

    Item t is decided from column t of the reports alone; later columns are
    never read (each decision goes through :func:`like_mechanism_step`).
    """
    rng = np.random.default_rng(seed)
    winners = []
    for t in range(profile.items):
        likers = np.flatnonzero(profile.reports[:, t])
        winners.append(like_mechanism_step(likers.tolist(), rng))
    return AllocationRecord(tuple(winners), seed)


def expected_allocation(profile: LikeProfile) -> np.ndarray:
    """Exact win probabilities: 1/#likers for each reported like, else 0."""
    reports = profile.reports
    likers = reports.sum(axis=0)
    probs = np.zeros(reports.shape, dtype=float)
    cols = likers > 0
    probs[:, cols] = reports[:, cols] / likers[cols]
    return probs


def ex_ante_envy(profile: LikeProfile) -> np.ndarray:
    """envy[i][j] = E[u_i(j's bundle)] - E[u_i(own bundle)].

    Under sincere reports every off-diagonal entry is <= 0.
    """
    probs = expected_allocation(profile)
    util = profile.utilities.astype(float)
    value = util @ probs.T  # value[i, j] = i's expected utility for j's bundle
    return value - np.diag(value)[:, None]


def ex_post_envy(record: AllocationRecord, profile: LikeProfile) -> tuple[np.ndarray, float]:
    """Realized envy matrix and its off-diagonal maximum for one run.

    envy[i][j] = max(0, u_i(j's bundle) - u_i(own bundle)): an agent holding
    everything it values envies nobody, so entries are clamped at zero
    (unlike the signed ex-ante matrix, which carries the <= 0 guarantee).
    """
    if len(record.winners) != profile.items:
        raise ValidationError("record", f"expected {profile.items} items, got {len(record.winners)}")
    held = np.zeros((profile.agents, profile.items), dtype=np.int64)
    for t, w in enumerate(record.winners):
        if w is None:
            continue
        if not 0 <= w < profile.agents:
            raise ValidationError("record", f"item {t}: winner {w} is not an agent")
        if profile.reports[w, t] != 1:
            raise ValidationError("record", f"item {t}: winner {w} did not report liking it")
        held[w, t] = 1
    value = profile.utilities @ held.T
    envy = np.maximum(value - np.diag(value)[:, None], 0.0)
    off = envy[~np.eye(profile.agents, dtype=bool)]
    return envy, float(off.max()) if off.size else 0.0


class BestResponse(NamedTuple):
    best_reports: list[tuple[int, ...]]  # every report vector attaining the maximum
    truthful_optimal: bool
    best_utility: float


def best_response_search(profile: LikeProfile, agent: int) -> BestResponse:
    """Enumerate all 2^m reports for one agent, others' reports held fixed.

    Expected utility of report r is sum_t u[agent,t] * r_t / (1 + other
    likers of t), since draws are independent across items.  Returns the full
    argmax set and whether the sincere report (r = utilities row) is in it.
    """
    if not 0 <= agent < profile.agents:
        raise ValidationError("agent", f"agent {agent} out of range")
    m = profile.items
    if m > BEST_RESPONSE_ITEM_LIMIT:
        raise CapabilityError(
            f"best-response enumeration supports m <= {BEST_RESPONSE_ITEM_LIMIT} items, got {m}"
        )
    others = profile.reports.sum(axis=0) - profile.reports[agent]
    gain = profile.utilities[agent] / (others + 1.0)  # utility of liking item t

    codes = np.arange(1 << m)
    reports = (codes[:, None] >> np.arange(m)) & 1
    utilities = reports @ gain
    best = float(utilities.max())
    argmax = np.flatnonzero(utilities >= best - _TIE_TOL)
    best_reports = [tuple(int(b) for b in reports[c]) for c in argmax]
    sincere = tuple(int(v) for v in profile.utilities[agent])
    return BestResponse(best_reports, sincere in set(best_reports), best)


def empirical_win_frequencies(profile: LikeProfile, runs: int, seed: int) -> np.ndarray:
    """Win frequency per (agent, item) over ``runs`` seeded executions.

    Run k uses seed ``seed + k`` so the batch is reproducible and each run
    independent.
    """
    if runs < 1:
        raise ValidationError("runs", "need at least one run")
    wins = np.zeros(profile.utilities.shape, dtype=np.int64)
    for k in range(runs):
        record = run_like_mechanism(profile, seed + k)
        for t, w in enumerate(record.winners):
            if w is not None:
                wins[w, t] += 1
    return wins / runs
