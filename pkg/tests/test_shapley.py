import numpy as np
import pytest

from fairalloc import (
    ValidationError,
    all_coalition_costs,
    convergence_error,
    generate_outback_pair,
    generate_random_euclidean,
    group_constrained_shapley,
    marginal_cost_vector,
    mask_of,
    shapley_exact,
    shapley_from_costs,
    shapley_monte_carlo,
    subset_weights,
)
from helpers import enumeration_shapley, instance_from_points


def test_outback_exact_shapley():
    table = all_coalition_costs(generate_outback_pair(100), "exact")
    alloc = shapley_exact(table)
    assert alloc.shares == pytest.approx([100.0, 100.0])
    assert alloc.total == pytest.approx(table.grand_cost)


def test_single_player_takes_whole_cost():
    table = all_coalition_costs(instance_from_points([(0, 0), (10, 0)]), "exact")
    assert shapley_exact(table).shares == pytest.approx([20.0])


def test_subset_formula_matches_permutation_enumeration():
    inst = generate_random_euclidean(6, seed=11)
    table = all_coalition_costs(inst, "exact")
    exact = shapley_exact(table).shares
    enum = enumeration_shapley(table.costs, 6)
    assert np.abs(exact - enum).max() < 1e-9


def test_subset_weights_sum_to_one_per_player():
    # sum over subset sizes of C(n-1,k) * w(k) = 1
    from math import comb
    for n in (1, 5, 12, 20):
        w = subset_weights(n)
        assert sum(comb(n - 1, k) * w[k] for k in range(n)) == pytest.approx(1.0)


def test_efficiency_on_seeded_instances():
    for seed in range(5):
        inst = generate_random_euclidean(4 + seed, seed=seed)
        table = all_coalition_costs(inst, "exact")
        alloc = shapley_exact(table)
        assert abs(alloc.total - table.grand_cost) <= 1e-9 * max(1.0, table.grand_cost)


def test_symmetric_customers_get_equal_shares():
    # two customers mirrored through the depot plus a third far away
    inst = instance_from_points([(0, 0), (5, 0), (-5, 0), (0, 40)])
    table = all_coalition_costs(inst, "exact")
    shares = shapley_exact(table).shares
    assert shares[0] == pytest.approx(shares[1], rel=1e-9)


def test_dummy_customer_at_depot_pays_nothing():
    inst = instance_from_points([(0, 0), (0, 0), (10, 0), (0, 10)])
    shares = shapley_exact(all_coalition_costs(inst, "exact")).shares
    assert abs(shares[0]) < 1e-9


def test_homogeneity_under_distance_scaling():
    base = generate_random_euclidean(6, seed=20)
    pts = [(base.depot.x, base.depot.y)] + [(c.location.x, c.location.y) for c in base.customers]
    lam = 3.5
    scaled = instance_from_points([(x * lam, y * lam) for x, y in pts])
    s1 = shapley_exact(all_coalition_costs(base, "exact")).shares
    s2 = shapley_exact(all_coalition_costs(scaled, "exact")).shares
    assert s2 == pytest.approx(lam * s1, rel=1e-9)


def test_incomplete_table_rejected():
    with pytest.raises(ValidationError, match="table"):
        shapley_from_costs(np.array([0.0, 1.0, 2.0]))


# -- marginal cost vector -----------------------------------------------------

def test_outback_marginal_underestimates():
    table = all_coalition_costs(generate_outback_pair(100), "exact")
    marginal = marginal_cost_vector(table)
    assert marginal.shares == pytest.approx([0.0, 0.0])
    assert marginal.total < table.grand_cost


def test_marginal_single_customer():
    table = all_coalition_costs(instance_from_points([(0, 0), (10, 0)]), "exact")
    assert marginal_cost_vector(table).shares == pytest.approx([20.0])


def test_marginal_equals_shapley_when_additive():
    # opposite directions, no shared savings: c({1})=20, c({2})=30, c(N)=50
    inst = instance_from_points([(0, 0), (-10, 0), (15, 0)])
    table = all_coalition_costs(inst, "exact")
    assert table.costs.tolist() == pytest.approx([0.0, 20.0, 30.0, 50.0])
    marginal = marginal_cost_vector(table).shares
    exact = shapley_exact(table).shares
    assert marginal == pytest.approx([20.0, 30.0])
    assert marginal == pytest.approx(exact, rel=1e-12)


# -- Monte Carlo --------------------------------------------------------------

def test_mc_single_sample_outback():
    table = all_coalition_costs(generate_outback_pair(100), "exact")
    for seed in range(5):
        est, _ = shapley_monte_carlo(table.cost, 2, 1, seed)
        assert sorted(est.shares.tolist()) == pytest.approx([0.0, 200.0])
        assert est.total == pytest.approx(200.0)


def test_mc_outback_concentration():
    # share of customer 1 is 200 * Binomial(10000, 1/2)/10000: within 5 of 100
    table = all_coalition_costs(generate_outback_pair(100), "exact")
    for seed in (0, 1, 2):
        est, _ = shapley_monte_carlo(table.cost, 2, 10_000, seed)
        assert abs(est.shares[0] - 100.0) < 5.0


def test_mc_deterministic_and_checkpoint_invariant():
    inst = generate_random_euclidean(6, seed=1)
    table = all_coalition_costs(inst, "exact")
    exact = shapley_exact(table)
    a, _ = shapley_monte_carlo(table.cost, 6, 200, seed=5)
    b, _ = shapley_monte_carlo(table.cost, 6, 200, seed=5)
    c, trace = shapley_monte_carlo(table.cost, 6, 200, seed=5, checkpoints=[1, 50, 200], exact=exact)
    assert a.shares.tolist() == b.shares.tolist() == c.shares.tolist()
    assert [r.samples for r in trace.rows] == [1, 50, 200]


def test_mc_efficient_at_every_checkpoint():
    inst = generate_random_euclidean(7, seed=3)
    table = all_coalition_costs(inst, "exact")
    grand = table.grand_cost
    for k in (1, 7, 31):
        est, _ = shapley_monte_carlo(table.cost, 7, k, seed=11)
        assert abs(est.total - grand) <= 1e-9 * grand


def test_mc_unbiased_expectation_small_n():
    # averaging marginals over all n! permutations is exactly the Shapley value,
    # so shapley_exact equals the estimator's expectation
    inst = generate_random_euclidean(5, seed=8)
    table = all_coalition_costs(inst, "exact")
    assert shapley_exact(table).shares == pytest.approx(
        enumeration_shapley(table.costs, 5), abs=1e-9)


def test_mc_error_shrinks_with_samples():
    # seed-pinned stochastic check: MAPE at 1000 samples <= MAPE at 10 samples
    # on at least 90% of 20 instances
    wins = 0
    for seed in range(20):
        inst = generate_random_euclidean(6, seed=100 + seed)
        table = all_coalition_costs(inst, "exact")
        exact = shapley_exact(table)
        _, trace = shapley_monte_carlo(table.cost, 6, 1000, seed, [10, 1000], exact)
        wins += trace.rows[1].mape <= trace.rows[0].mape
    assert wins >= 18


def test_mc_validation_errors():
    table = all_coalition_costs(generate_outback_pair(10), "exact")
    with pytest.raises(ValidationError, match="samples"):
        shapley_monte_carlo(table.cost, 2, 0, seed=0)
    with pytest.raises(ValidationError, match="checkpoints"):
        shapley_monte_carlo(table.cost, 2, 5, seed=0,
                            checkpoints=[10], exact=shapley_exact(table))
    with pytest.raises(ValidationError, match="exact"):
        shapley_monte_carlo(table.cost, 2, 5, seed=0, checkpoints=[5])


# -- groups -------------------------------------------------------------------

def test_no_groups_degenerates_to_exact():
    inst = generate_random_euclidean(5, seed=2)
    table = all_coalition_costs(inst, "exact")
    grouped = group_constrained_shapley(inst, table, groups=())
    assert grouped.shares == pytest.approx(shapley_exact(table).shares, rel=1e-12)


def test_outback_pair_as_one_group():
    inst = generate_outback_pair(100)
    table = all_coalition_costs(inst, "exact")
    alloc = group_constrained_shapley(inst, table, groups=(frozenset({1, 2}),))
    assert alloc.shares == pytest.approx([100.0, 100.0])


def test_group_share_split_by_demand_weight():
    # customers 1,2 grouped with weights 2:1; super-game computed by hand
    inst = instance_from_points(
        [(0, 0), (10, 0), (10, 5), (-8, 0)],
        demands=[(2.0, 1.0), (1.0, 1.0), (1.0, 1.0)],
    )
    table = all_coalition_costs(inst, "exact")
    c = table.costs
    # two-player game over A = {1,2}, B = {3}
    cA = c[mask_of({1, 2})]
    cB = c[mask_of({3})]
    cAB = c[mask_of({1, 2, 3})]
    phi_A = 0.5 * cA + 0.5 * (cAB - cB)
    phi_B = 0.5 * cB + 0.5 * (cAB - cA)
    alloc = group_constrained_shapley(inst, table, groups=(frozenset({1, 2}),))
    assert alloc.shares == pytest.approx([phi_A * 2 / 3, phi_A / 3, phi_B], rel=1e-9)
    assert alloc.total == pytest.approx(table.grand_cost, rel=1e-9)


def test_group_shapley_accepts_oracle():
    from fairalloc import exact_coalition_cost
    inst = generate_random_euclidean(4, seed=6)
    table = all_coalition_costs(inst, "exact")
    groups = (frozenset({1, 3}),)
    via_table = group_constrained_shapley(inst, table, groups)
    via_oracle = group_constrained_shapley(inst, lambda m: exact_coalition_cost(inst, m), groups)
    assert via_oracle.shares == pytest.approx(via_table.shares, rel=1e-12)


def test_overlapping_groups_rejected():
    inst = generate_random_euclidean(3, seed=0)
    table = all_coalition_costs(inst, "exact")
    with pytest.raises(ValidationError, match="groups"):
        group_constrained_shapley(inst, table, groups=(frozenset({1, 2}), frozenset({2, 3})))


# -- convergence error --------------------------------------------------------

def test_convergence_error_identity():
    exact = np.array([100.0, 100.0])
    assert convergence_error(exact, exact) == (0.0, 0.0)


def test_convergence_error_arithmetic():
    assert convergence_error(np.array([110.0, 90.0]), np.array([100.0, 100.0])) == \
        pytest.approx((10.0, 10.0))
    assert convergence_error(np.array([100.0, 150.0]), np.array([100.0, 100.0])) == \
        pytest.approx((25.0, 50.0))


def test_convergence_error_excludes_zero_shares():
    mape, mx = convergence_error(np.array([5.0, 110.0]), np.array([0.0, 100.0]))
    assert (mape, mx) == pytest.approx((10.0, 10.0))


def test_convergence_error_dimension_mismatch():
    with pytest.raises(ValidationError):
        convergence_error(np.array([1.0]), np.array([1.0, 2.0]))
