import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalbounds.diagram import build_diagram
from causalbounds.errors import (
    InvalidMassError,
    MissingCptError,
    PositivityError,
    ShapeMismatchError,
    ZeroConditionError,
)
from causalbounds.fixtures import drug_example, fixture_path, fourstate_example
from causalbounds.tables import (
    Cpt,
    Interval,
    JointTable,
    adjust_backdoor,
    adjust_frontdoor,
    cpt_from_dict,
    cpt_to_dict,
    generate_cpts,
    joint_from_cpts,
    query_marginal,
    required_sample_size,
    tian_pearl_bounds,
    tian_pearl_from_table,
)

from oracles import do_effect

SPLIT_ADJ = ([("U", 2), ("W", 2), ("X", 2), ("Y", 2)],
          [("U", "X"), ("U", "Y"), ("W", "X"), ("W", "Y"), ("X", "Y")])
FRONT = ([("L", 2), ("X", 2), ("M", 3), ("Y", 2)],
         [("L", "X"), ("L", "Y"), ("X", "M"), ("M", "Y")])


def _oracle_cpts(G, cpts):
    return {c.child: (list(c.parent_names), c.table) for c in cpts}


def test_cpt_rows_must_sum_to_one():
    with pytest.raises(InvalidMassError):
        Cpt("A", (), np.array([0.5, 0.6]))
    with pytest.raises(InvalidMassError):
        Cpt("A", (), np.array([1.2, -0.2]))
    c = Cpt("A", ("B",), np.array([[0.2, 0.8], [1.0, 0.0]]))
    assert c.child_states == 2
    assert np.allclose(c.row(1), [1.0, 0.0])


def test_joint_table_validation():
    with pytest.raises(InvalidMassError):
        JointTable(["A"], [0.5, 0.6])
    with pytest.raises(ShapeMismatchError):
        JointTable(["A", "B"], [0.5, 0.5])
    with pytest.raises(ShapeMismatchError):
        JointTable(["A"], [0.5, 0.5], states=[3])


def test_joint_marginal_and_prob():
    j = JointTable(["A", "B"], [[0.1, 0.2], [0.3, 0.4]])
    assert np.allclose(j.marginal(["B"]).probs, [0.4, 0.6])
    assert np.allclose(j.marginal(["B", "A"]).probs, [[0.1, 0.3], [0.2, 0.4]])
    assert j.prob(A=1) == pytest.approx(0.7)
    assert j.prob(A=1, B=0) == pytest.approx(0.3)
    back = JointTable.from_dict(json.loads(json.dumps(j.to_dict())))
    assert back.scope == j.scope and np.array_equal(back.probs, j.probs)


def test_interval():
    iv = Interval(0.2, 0.6)
    assert iv.width == pytest.approx(0.4)
    assert iv.midpoint == pytest.approx(0.4)
    assert iv.contains(0.6) and not iv.contains(0.61)
    with pytest.raises(ValueError):
        Interval(0.7, 0.2)


def test_generate_cpts_is_deterministic_and_normalized():
    G = build_diagram(*SPLIT_ADJ)
    a = generate_cpts(G, seed=3)
    b = generate_cpts(G, seed=3)
    c = generate_cpts(G, seed=4)
    for ca, cb in zip(a, b):
        assert np.array_equal(ca.table, cb.table)
    assert not all(np.array_equal(ca.table, cc.table) for ca, cc in zip(a, c))
    for cpt in a:
        assert np.allclose(cpt.table.sum(axis=-1), 1.0, atol=1e-12)
        assert cpt.table.shape == tuple(G.states(p) for p in cpt.parent_names) + (G.states(cpt.child),)


@pytest.mark.parametrize("sampler", ["uniform", "exponential", "lognormal"])
def test_samplers(sampler):
    G = build_diagram(*SPLIT_ADJ)
    for cpt in generate_cpts(G, sampler=sampler, seed=0):
        assert np.all(cpt.table > 0)
    with pytest.raises(ValueError):
        generate_cpts(G, sampler="beta")


def test_joint_from_cpts_matches_product():
    G = build_diagram(*SPLIT_ADJ)
    cpts = generate_cpts(G, seed=1)
    j = joint_from_cpts(G, cpts)
    t = {c.child: c.table for c in cpts}
    u, w, x, y = 1, 0, 1, 1
    expect = t["U"][u] * t["W"][w] * t["X"][u, w, x] * t["Y"][u, w, x, y]
    assert j.prob(U=u, W=w, X=x, Y=y) == pytest.approx(expect, abs=1e-15)
    assert j.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_missing_or_bad_cpt():
    G = build_diagram(*SPLIT_ADJ)
    cpts = generate_cpts(G, seed=1)
    with pytest.raises(MissingCptError):
        joint_from_cpts(G, cpts[:-1])
    bad = Cpt("Y", ("X",), np.full((2, 2), 0.5))
    with pytest.raises(ShapeMismatchError):
        joint_from_cpts(G, cpts[:-1] + [bad])


def test_query_marginal_and_zero_condition():
    j = JointTable(["A", "B"], [[0.2, 0.3], [0.0, 0.5]])
    cond = query_marginal(j, ["B"], {"A": 0})
    assert np.allclose(cond.probs, [0.4, 0.6])
    k = JointTable(["A", "B"], [[0.5, 0.5], [0.0, 0.0]])
    with pytest.raises(ZeroConditionError):
        query_marginal(k, ["B"], {"A": 1})


@pytest.mark.parametrize("seed", range(10))
def test_backdoor_adjustment_matches_truncated_product(seed):
    G = build_diagram(*SPLIT_ADJ)
    cpts = generate_cpts(G, seed=seed)
    j = joint_from_cpts(G, cpts)
    states = G.state_counts()
    for x in range(2):
        for y in range(2):
            truth = do_effect(G.nodes, states, _oracle_cpts(G, cpts), "X", x, "Y", y)
            assert adjust_backdoor(j, x, y, ["W", "U"]) == pytest.approx(truth, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_frontdoor_adjustment_matches_truncated_product(seed):
    G = build_diagram(*FRONT)
    cpts = generate_cpts(G, seed=seed)
    j = joint_from_cpts(G, cpts)
    truth = do_effect(G.nodes, G.state_counts(), _oracle_cpts(G, cpts), "X", 0, "Y", 1)
    assert adjust_frontdoor(j.marginal(["X", "Y", "M"]), 0, 1, ["M"]) == pytest.approx(truth, abs=1e-12)


def test_positivity_errors():
    j = JointTable(["X", "Y", "Z"], np.array([[[0.25, 0.0], [0.25, 0.0]], [[0.0, 0.25], [0.0, 0.25]]]))
    with pytest.raises(PositivityError):
        adjust_backdoor(j, 0, 0, ["Z"])
    with pytest.raises(PositivityError):
        adjust_frontdoor(j, 0, 0, ["Z"])


def test_zero_mass_stratum_is_skipped():
    p = np.zeros((2, 2, 3))
    p[:, :, :2] = 1 / 8
    j = JointTable(["X", "Y", "Z"], p)
    assert adjust_backdoor(j, 0, 0, ["Z"]) == pytest.approx(0.5)


def test_tian_pearl_drug_table():
    d = drug_example()
    iv = tian_pearl_from_table(d.observed, 0, 0)
    assert iv.lb == pytest.approx(158 / 700, abs=1e-15)
    assert iv.ub == pytest.approx(1 - 34 / 700, abs=1e-15)
    with pytest.raises(InvalidMassError):
        tian_pearl_bounds(0.7, 0.4)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_tian_pearl_contains_true_effect(seed):
    G = build_diagram(*SPLIT_ADJ)
    j = joint_from_cpts(G, generate_cpts(G, seed=seed))
    truth = adjust_backdoor(j, 0, 0, ["W", "U"])
    assert tian_pearl_from_table(j, 0, 0).contains(truth, tol=1e-12)


def test_required_sample_size():
    assert required_sample_size([(2, 2, 256)]) == 30720
    assert required_sample_size([(2, 2, 16), 16]) == 1920
    assert required_sample_size([(2, 2, 8), 32]) == 960
    with pytest.raises(ValueError):
        required_sample_size([])


def test_cpt_json_round_trip():
    G, cpts = fourstate_example()
    for c in cpts:
        back = cpt_from_dict(json.loads(json.dumps(cpt_to_dict(c))), G)
        assert back.parent_names == c.parent_names
        assert np.array_equal(back.table, c.table)


def test_fixture_tables_agree():
    d = drug_example()
    assert np.allclose(d.full.marginal(["X", "Y", "W"]).probs, d.observed.probs, atol=1e-15)
    raw = json.loads(fixture_path("drug", "observed.json").read_text())
    assert sum(raw["counts"]) == 700
    assert np.allclose(np.array(raw["counts"]) / 700, d.observed.flat)
