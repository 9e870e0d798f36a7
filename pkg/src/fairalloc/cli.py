"""Command-line front end: reproducible experiments emitting CSV (and,
optionally, rendered figures next to them).

Commands: gen, allocate, convergence, fairdiv, cost-table.  Every command is
a pure function of its arguments; seeds default to a fixed constant and all
outputs embed them in `#` comment lines for replay.  Exit codes: 0 success,
2 validation error, 3 capability/limit error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapabilityError, ValidationError
from .instances import (
    ProblemInstance,
    generate_depot_proxy_pathology,
    generate_outback_pair,
    generate_random_euclidean,
    load_instance,
    save_instance,
)
from .costs import (
    EXACT_MODE_LIMIT,
    all_coalition_costs,
    heuristic_coalition_cost,
)
from .shapley import (
    AllocationVector,
    marginal_cost_vector,
    shapley_exact,
    shapley_monte_carlo,
)
from .proxies import ProxyWeights, blended_proxy, demand_share_proxy, depot_distance_proxy
from .likemech import (
    best_response_search,
    empirical_win_frequencies,
    ex_ante_envy,
    ex_post_envy,
    expected_allocation,
    load_profile,
    run_like_mechanism,
)

DEFAULT_SEED = 0
DEFAULT_CHECKPOINTS = (1, 10, 50, 100, 500, 1000)
ALLOCATE_METHODS = ("shapley-exact", "shapley-mc", "marginal", "depot", "demand", "blend")


def _write_csv(path, header, rows, comments=()):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# fairalloc {__version__}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_allocation(path, alloc: AllocationVector, comments=()):
    rows = [[i + 1, _fmt(s), alloc.method] for i, s in enumerate(alloc.shares)]
    _write_csv(path, ["customer_id", "share", "method"], rows, comments)


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.family == "random":
        inst = generate_random_euclidean(args.n, args.seed, args.box)
    elif args.family == "outback":
        inst = generate_outback_pair(args.distance)
    elif args.family == "pathology-under":
        inst = generate_depot_proxy_pathology(args.n, "underestimate", args.far, args.near)
    elif args.family == "pathology-over":
        inst = generate_depot_proxy_pathology(args.n, "overestimate", args.far, args.near)
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError("family", f"unknown generator {args.family!r}")
    save_instance(inst, args.out)
    xs = [c.location.x for c in inst.customers] + [inst.depot.x]
    ys = [c.location.y for c in inst.customers] + [inst.depot.y]
    print(f"wrote {args.out}: n={inst.n}, "
          f"box=[{min(xs):g},{max(xs):g}]x[{min(ys):g},{max(ys):g}], "
          f"groups={len(inst.groups)}")
    return 0


# ---------------------------------------------------------------------------
# allocate
# ---------------------------------------------------------------------------

def _grand_and_marginal(inst: ProblemInstance):
    """Grand cost plus marginal vector, exact within limits, else heuristic."""
    n = inst.n
    if n <= EXACT_MODE_LIMIT:
        table = all_coalition_costs(inst, "exact")
        return table.grand_cost, marginal_cost_vector(table)
    grand_mask = (1 << n) - 1
    grand = heuristic_coalition_cost(inst, grand_mask)
    shares = np.array([grand - heuristic_coalition_cost(inst, grand_mask ^ (1 << i)) for i in range(n)])
    return grand, AllocationVector(shares, "marginal")


def cmd_allocate(args) -> int:
    inst = load_instance(args.instance)
    comments = []
    trace = None

    if args.method == "shapley-exact":
        table = all_coalition_costs(inst, "exact")
        alloc = shapley_exact(table)
    elif args.method == "marginal":
        table = all_coalition_costs(inst, "exact")
        alloc = marginal_cost_vector(table)
    elif args.method == "shapley-mc":
        comments.append(f"seed={args.seed}")
        comments.append(f"samples={args.samples}")
        if inst.n <= EXACT_MODE_LIMIT:
            table = all_coalition_costs(inst, "exact")
            oracle = table.cost
        else:
            table = None
            oracle = lambda mask: heuristic_coalition_cost(inst, mask)
        checkpoints = exact = None
        if args.exact_reference:
            if table is None:
                raise CapabilityError(
                    f"--exact-reference needs n <= {EXACT_MODE_LIMIT} (exact table), got n={inst.n}"
                )
            exact = shapley_exact(table)
            checkpoints = [c for c in DEFAULT_CHECKPOINTS if c <= args.samples]
        alloc, trace = shapley_monte_carlo(oracle, inst.n, args.samples, args.seed,
                                           checkpoints, exact)
    elif args.method == "depot":
        grand, _ = _grand_and_marginal(inst)
        alloc = depot_distance_proxy(inst, grand)
    elif args.method == "demand":
        grand, _ = _grand_and_marginal(inst)
        alloc = demand_share_proxy(inst, grand, args.dimension)
    else:  # blend
        grand, marginal = _grand_and_marginal(inst)
        try:
            w = [float(v) for v in args.weights.split(",")]
            if len(w) != 3:
                raise ValueError
        except ValueError:
            raise ValidationError("weights", f"expected three comma-separated reals, got {args.weights!r}")
        alloc = blended_proxy(inst, grand, ProxyWeights(*w), marginal, args.dimension)

    _write_allocation(args.out, alloc, comments)
    print(f"wrote {args.out}: method={alloc.method}, total={alloc.total:g}")

    if trace is not None:
        trace_path = args.trace_out or str(Path(args.out).with_suffix("")) + "_trace.csv"
        _write_csv(trace_path, ["samples", "mape", "max_pct"],
                   [[r.samples, _fmt(r.mape), _fmt(r.max_pct)] for r in trace.rows],
                   comments)
        print(f"wrote {trace_path}: {len(trace.rows)} checkpoints")
    if args.plot:
        from .plots import save_allocation_figure
        fig_path = str(Path(args.out).with_suffix(".png"))
        save_allocation_figure({alloc.method: alloc.shares}, fig_path)
        print(f"wrote {fig_path}")
    return 0


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

def cmd_convergence(args) -> int:
    inst = load_instance(args.instance)
    table = all_coalition_costs(inst, "exact")
    exact = shapley_exact(table)
    if args.checkpoints:
        checkpoints = sorted({int(v) for v in args.checkpoints.split(",")})
    else:
        checkpoints = [c for c in DEFAULT_CHECKPOINTS if c <= args.samples]
    _, trace = shapley_monte_carlo(table.cost, inst.n, args.samples, args.seed,
                                   checkpoints, exact)
    comments = [f"seed={args.seed}", f"samples={args.samples}", f"instance={inst.digest}"]
    _write_csv(args.out, ["samples", "mape", "max_pct"],
               [[r.samples, _fmt(r.mape), _fmt(r.max_pct)] for r in trace.rows],
               comments)
    print(f"wrote {args.out}: {len(trace.rows)} checkpoints, "
          f"final mape={trace.rows[-1].mape:.3f}%")
    if args.plot:
        from .plots import save_convergence_figure
        fig_path = str(Path(args.out).with_suffix(".png"))
        save_convergence_figure([r.samples for r in trace.rows],
                                [r.mape for r in trace.rows],
                                [r.max_pct for r in trace.rows], fig_path)
        print(f"wrote {fig_path}")
    return 0


# ---------------------------------------------------------------------------
# fairdiv
# ---------------------------------------------------------------------------

def cmd_fairdiv(args) -> int:
    profile = load_profile(args.profile)
    if args.runs < 1:
        raise ValidationError("runs", "need at least one run")
    prefix = args.out
    seed_comment = [f"seed={args.seed}", f"runs={args.runs}"]

    first = run_like_mechanism(profile, args.seed)
    _write_csv(f"{prefix}_run.csv", ["item", "winner"],
               [[t, -1 if w is None else w] for t, w in enumerate(first.winners)],
               seed_comment)

    probs = expected_allocation(profile)
    freqs = empirical_win_frequencies(profile, args.runs, args.seed)
    freq_rows = [
        [a, t, _fmt(probs[a, t]), _fmt(freqs[a, t])]
        for a in range(profile.agents)
        for t in range(profile.items)
    ]
    _write_csv(f"{prefix}_freq.csv", ["agent", "item", "expected", "empirical"],
               freq_rows, seed_comment)

    exante = ex_ante_envy(profile)
    _write_csv(f"{prefix}_exante.csv", ["i", "j", "envy"],
               [[i, j, _fmt(exante[i, j])]
                for i in range(profile.agents) for j in range(profile.agents)],
               [])

    max_envies = []
    for k in range(args.runs):
        record = run_like_mechanism(profile, args.seed + k)
        _, mx = ex_post_envy(record, profile)
        max_envies.append(mx)
    _write_csv(f"{prefix}_expost.csv", ["run", "max_envy"],
               [[k, _fmt(v)] for k, v in enumerate(max_envies)], seed_comment)

    print(f"wrote {prefix}_run.csv, {prefix}_freq.csv, {prefix}_exante.csv, {prefix}_expost.csv")
    print(f"max ex-post envy over {args.runs} runs: {max(max_envies):g}")

    if args.check_strategyproof:
        ok = all(best_response_search(profile, a).truthful_optimal for a in range(profile.agents))
        print(f"truthful optimal: {str(ok).lower()}")
    if args.plot:
        from .plots import save_fairdiv_figure
        save_fairdiv_figure(probs, freqs, max_envies, f"{prefix}_report.png")
        print(f"wrote {prefix}_report.png")
    return 0


# ---------------------------------------------------------------------------
# cost-table
# ---------------------------------------------------------------------------

def cmd_cost_table(args) -> int:
    inst = load_instance(args.instance)
    mode = args.mode.replace("-", "_")
    order = None
    if args.order:
        order = [int(v) for v in args.order.split(",")]
    table = all_coalition_costs(inst, mode, order)
    table.write_csv(args.out, [f"fairalloc {__version__}", f"mode={mode}", f"instance={inst.digest}"])
    print(f"wrote {args.out}: {table.costs.size} coalitions, grand cost {table.grand_cost:g}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairalloc",
        description="Fair cost allocation for routing games and the online like mechanism.",
    )
    parser.add_argument("--version", action="version", version=f"fairalloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("family", choices=["random", "outback", "pathology-under", "pathology-over"])
    p.add_argument("--n", type=int, default=10, help="number of customers (default 10)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed (default 0)")
    p.add_argument("--box", type=float, default=100.0, help="square side for random (default 100)")
    p.add_argument("--distance", type=float, default=100.0, help="depot distance for outback (default 100)")
    p.add_argument("--far", type=float, default=100.0, help="isolated-customer distance for pathology (default 100)")
    p.add_argument("--near", type=float, default=None, help="cluster distance for pathology (default family-specific)")
    p.add_argument("--out", default="instance.json", help="output path (default instance.json)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("allocate", help="compute a cost allocation")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--method", choices=ALLOCATE_METHODS, required=True)
    p.add_argument("--samples", type=int, default=1000, help="Monte Carlo permutations (default 1000)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed (default 0)")
    p.add_argument("--exact-reference", action="store_true",
                   help="with shapley-mc: also write a convergence trace against the exact value")
    p.add_argument("--trace-out", default=None, help="trace CSV path (default <out>_trace.csv)")
    p.add_argument("--weights", default="1,1,1", help="blend weights depot,demand,marginal (default 1,1,1)")
    p.add_argument("--dimension", choices=["weight", "volume", "stops"], default="weight",
                   help="demand dimension (default weight)")
    p.add_argument("--out", default="allocation.csv", help="output CSV (default allocation.csv)")
    p.add_argument("--plot", action="store_true", help="also render a figure next to the CSV")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("convergence", help="Monte Carlo error trace against the exact value")
    p.add_argument("instance")
    p.add_argument("--samples", type=int, default=1000, help="Monte Carlo permutations (default 1000)")
    p.add_argument("--checkpoints", default=None,
                   help="comma-separated sample counts (default 1,10,50,100,500,1000 clipped to samples)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed (default 0)")
    p.add_argument("--out", default="trace.csv", help="output CSV (default trace.csv)")
    p.add_argument("--plot", action="store_true", help="also render the error curves")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("fairdiv", help="run the online like mechanism on a profile")
    p.add_argument("profile", help="profile JSON file")
    p.add_argument("--runs", type=int, default=1, help="number of seeded runs (default 1)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="base RNG seed (default 0)")
    p.add_argument("--out", default="fairdiv", help="output file prefix (default fairdiv)")
    p.add_argument("--check-strategyproof", action="store_true",
                   help="verify by enumeration that sincere reporting is optimal for every agent")
    p.add_argument("--plot", action="store_true", help="also render a report figure")
    p.set_defaults(func=cmd_fairdiv)

    p = sub.add_parser("cost-table", help="dump all 2^n coalition costs")
    p.add_argument("instance")
    p.add_argument("--mode", choices=["exact", "heuristic", "fixed-order"], default="exact",
                   help="cost oracle (default exact)")
    p.add_argument("--order", default=None, help="fixed visiting order, e.g. 3,1,2 (default 1..n)")
    p.add_argument("--out", default="cost_table.csv", help="output CSV (default cost_table.csv)")
    p.set_defaults(func=cmd_cost_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main_entry() -> None:  # console-script entry point
    sys.exit(main())
