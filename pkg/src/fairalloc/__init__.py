"""fairalloc: fair cost allocation for routing games and an online
like-mechanism simulator."""

__version__ = "0.1.0"

from .errors import CapabilityError, ValidationError
from .instances import (
    CostParams,
    Customer,
    Location,
    ProblemInstance,
    PURE_DISTANCE,
    generate_depot_proxy_pathology,
    generate_outback_pair,
    generate_random_euclidean,
    is_group_feasible,
    iter_group_feasible_masks,
    load_instance,
    mask_members,
    mask_of,
    parse_instance,
    save_instance,
)
from .costs import (
    CoalitionCostTable,
    EXACT_MODE_LIMIT,
    TABLE_MODE_LIMIT,
    all_coalition_costs,
    exact_coalition_cost,
    fixed_order_cost,
    heuristic_coalition_cost,
)
from .shapley import (
    AllocationVector,
    ConvergenceTrace,
    TracePoint,
    convergence_error,
    group_constrained_shapley,
    marginal_cost_vector,
    shapley_exact,
    shapley_from_costs,
    shapley_monte_carlo,
    subset_weights,
)
from .proxies import (
    ProxyEvaluation,
    ProxyWeights,
    blended_proxy,
    demand_share_proxy,
    depot_distance_proxy,
    evaluate_proxy,
)
from .likemech import (
    AllocationRecord,
    BestResponse,
    LikeProfile,
    best_response_search,
    empirical_win_frequencies,
    ex_ante_envy,
    ex_post_envy,
    expected_allocation,
    like_mechanism_step,
    load_profile,
    run_like_mechanism,
)
