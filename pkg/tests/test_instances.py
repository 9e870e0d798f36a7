import itertools
import json

import numpy as np
import pytest

from fairalloc import (
    ValidationError,
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
from helpers import instance_from_points


def minimal_doc(**extra):
    doc = {
        "depot": {"x": 0.0, "y": 0.0},
        "customers": [{"id": 1, "x": 10.0, "y": 0.0}],
        "cost": {"fixed": 0.0, "per_distance": 1.0, "per_stop": 0.0},
    }
    doc.update(extra)
    return doc


def test_smallest_valid_instance():
    inst = parse_instance(minimal_doc())
    assert inst.n == 1
    assert inst.distance(0, 1) == pytest.approx(10.0)


def test_distance_345_triangle():
    inst = instance_from_points([(0, 0), (3, 4)])
    assert inst.distance(0, 1) == pytest.approx(5.0)


def test_distance_zero_on_diagonal():
    inst = generate_random_euclidean(5, seed=1)
    for a in range(6):
        assert inst.distance(a, a) == 0.0


def test_distance_matrix_lookup_mode():
    m = [[0.0, 7.0], [7.0, 0.0]]
    inst = parse_instance(minimal_doc(matrix=m))
    assert inst.distance(0, 1) == 7.0


def test_distance_id_out_of_range():
    inst = parse_instance(minimal_doc())
    with pytest.raises(ValidationError):
        inst.distance(0, 2)


def test_asymmetric_matrix_rejected():
    m = [[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.5, 0.0]]
    doc = minimal_doc(customers=[{"id": 1, "x": 1, "y": 0}, {"id": 2, "x": 2, "y": 0}],
                      matrix=m)
    with pytest.raises(ValidationError, match="matrix"):
        parse_instance(doc)


def test_overlapping_groups_rejected():
    doc = minimal_doc(
        customers=[{"id": i, "x": i, "y": 0} for i in (1, 2, 3)],
        groups=[[1, 2], [2, 3]],
    )
    with pytest.raises(ValidationError, match="groups"):
        parse_instance(doc)


def test_unknown_chain_rejected():
    # chain label whose members do not form a declared group
    doc = minimal_doc(
        customers=[
            {"id": 1, "x": 1, "y": 0, "chain": "acme"},
            {"id": 2, "x": 2, "y": 0},
        ],
        groups=[[1, 2]],
    )
    with pytest.raises(ValidationError, match="chain"):
        parse_instance(doc)


def test_chain_labels_form_groups():
    doc = minimal_doc(customers=[
        {"id": 1, "x": 1, "y": 0, "chain": "acme"},
        {"id": 2, "x": 2, "y": 0, "chain": "acme"},
        {"id": 3, "x": 3, "y": 0},
    ])
    inst = parse_instance(doc)
    assert inst.groups == (frozenset({1, 2}),)


def test_malformed_document_errors_name_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError, match="document"):
        load_instance(path)
    path.write_text(json.dumps({"depot": {"x": 0}}))
    with pytest.raises(ValidationError, match="depot.y"):
        load_instance(path)


def test_noncontiguous_ids_rejected():
    doc = minimal_doc(customers=[{"id": 2, "x": 1, "y": 0}])
    with pytest.raises(ValidationError, match="customers"):
        parse_instance(doc)


def test_negative_demand_rejected():
    doc = minimal_doc(customers=[{"id": 1, "x": 1, "y": 0, "weight": -1}])
    with pytest.raises(ValidationError, match="weight"):
        parse_instance(doc)


def test_instance_roundtrip(tmp_path):
    inst = generate_random_euclidean(6, seed=9)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    again = load_instance(path)
    assert again.to_dict() == inst.to_dict()
    assert again.digest == inst.digest


# -- generators --------------------------------------------------------------

def test_random_generator_deterministic():
    a = generate_random_euclidean(5, seed=42, box=100)
    b = generate_random_euclidean(5, seed=42, box=100)
    assert a.to_dict() == b.to_dict()


def test_random_generator_seed_sensitivity():
    a = generate_random_euclidean(5, seed=42)
    b = generate_random_euclidean(5, seed=43)
    assert a.to_dict() != b.to_dict()


def test_random_generator_bounds():
    inst = generate_random_euclidean(10, seed=7, box=100)
    for c in inst.customers:
        assert 0 <= c.location.x <= 100
        assert 0 <= c.location.y <= 100
    assert (inst.depot.x, inst.depot.y) == (50.0, 50.0)


def test_random_generator_rejects_zero():
    with pytest.raises(ValidationError):
        generate_random_euclidean(0, seed=1)


def test_outback_pair_geometry():
    inst = generate_outback_pair(100)
    assert inst.n == 2
    assert inst.distance(0, 1) == pytest.approx(100)
    assert inst.distance(1, 2) == pytest.approx(0)
    with pytest.raises(ValidationError):
        generate_outback_pair(0)


def test_pathology_smallest_member():
    for direction in ("underestimate", "overestimate"):
        inst = generate_depot_proxy_pathology(2, direction)
        assert inst.n == 2
        assert inst.distance(0, 1) > 0
        assert inst.distance(0, 2) > 0
    with pytest.raises(ValidationError):
        generate_depot_proxy_pathology(1, "underestimate")
    with pytest.raises(ValidationError):
        generate_depot_proxy_pathology(4, "sideways")


def test_distance_symmetry_exhaustive():
    for seed in (0, 1):
        inst = generate_random_euclidean(8, seed=seed)
        d = inst.distance_matrix()
        assert np.allclose(d, d.T)
        assert np.all(np.diagonal(d) == 0)


def test_triangle_inequality_euclidean():
    inst = generate_random_euclidean(8, seed=5)
    d = inst.distance_matrix()
    for a, b, c in itertools.permutations(range(9), 3):
        assert d[a, c] <= d[a, b] + d[b, c] + 1e-9


# -- coalition masks ---------------------------------------------------------

def test_mask_roundtrip():
    assert mask_of([1, 3]) == 0b101
    assert mask_members(0b101) == [1, 3]
    assert mask_members(0) == []
    with pytest.raises(ValidationError):
        mask_of([0])
    with pytest.raises(ValidationError):
        mask_of([4], n=3)


def test_group_feasible_masks():
    groups = (frozenset({1, 2}),)
    masks = list(iter_group_feasible_masks(3, groups))
    assert len(masks) == 4  # 2 units: {1,2} and {3}
    for m in masks:
        assert is_group_feasible(m, groups)
    assert not is_group_feasible(0b001, groups)
    # every feasible mask contains the group entirely or not at all
    gmask = mask_of({1, 2})
    for m in masks:
        assert m & gmask in (0, gmask)
