import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalbounds.diagram import build_diagram, satisfies_backdoor, satisfies_frontdoor
from causalbounds.errors import CriterionError, ScaleError, ShapeMismatchError, UnknownNodeError
from causalbounds.fixtures import fourstate_example
from causalbounds.reduce import (
    StateMapping,
    equivalent_cpts,
    find_adjustment_set,
    make_equivalent_tuple,
    make_equivalent_tuple_multi,
    project_observables,
    suggest_p,
    verify_equivalence,
)
from causalbounds.tables import JointTable, adjust_backdoor, generate_cpts, joint_from_cpts

from oracles import do_effect

SINGLE_Z = lambda m: ([("Z", m), ("X", 2), ("Y", 2)], [("Z", "X"), ("Z", "Y"), ("X", "Y")])


def _table(cpts, node):
    return next(c for c in cpts if c.child == node).table


def test_fourstate_factored_cpts():
    G, cpts = fourstate_example()
    tup = make_equivalent_tuple(G, cpts, "Z", 2, order="u_major")
    new = equivalent_cpts(tup)
    assert set(tup.g_prime.parents("W")) == {"U"}
    assert set(tup.g_prime.parents("X")) == {"U", "W"}
    assert set(tup.g_prime.parents("Y")) == {"U", "W", "X"}
    assert np.allclose(_table(new, "U"), [0.5, 0.5], atol=1e-12)
    assert np.allclose(_table(new, "W")[:, 0], [0.6, 0.4], atol=1e-12)
    px = _table(new, "X")  # axes (U, W, X) in parent order
    order = list(tup.g_prime.parents("X"))
    px = np.moveaxis(px, [order.index("U"), order.index("W")], [0, 1])
    assert np.allclose(px[..., 0].ravel(), [0.1, 0.4, 0.5, 0.7], atol=1e-12)
    py = _table(new, "Y")
    order = list(tup.g_prime.parents("Y"))
    py = np.moveaxis(py, [order.index(n) for n in ("U", "W", "X")], [0, 1, 2])
    assert np.allclose(py[..., 0].ravel(), [0.2, 0.3, 0.7, 0.1, 0.6, 0.5, 0.5, 0.4], atol=1e-12)


def test_fourstate_effect_is_047_on_both_sides():
    G, cpts = fourstate_example()
    for order in ("w_major", "u_major"):
        tup = make_equivalent_tuple(G, cpts, "Z", 2, order=order)
        rep = verify_equivalence(G, cpts, tup, 0, 0)
        assert rep.passed
        assert rep.effect_original == pytest.approx(0.47, abs=1e-12)
        assert rep.effect_equivalent == pytest.approx(0.47, abs=1e-12)
        assert tup.criterion == "backdoor"


def test_fourstate_prior_is_half():
    G, cpts = fourstate_example()
    j = joint_from_cpts(G, cpts)
    _, pu = project_observables(j, StateMapping.for_states("Z", 4, 2))
    assert np.allclose(pu.probs, [0.5, 0.5], atol=1e-15)


def test_mapping_law_and_round_trip():
    for order in ("w_major", "u_major"):
        mp = StateMapping.for_states("Z", 10, 3, order=order)
        assert mp.q == 4 and mp.padded and mp.virtual_states == 2
        seen = set()
        for z in range(12):
            j, k = mp.wu_index(z)
            assert mp.z_index(j, k) == z
            seen.add((j, k))
        assert len(seen) == 12
        grid = mp.index_grid()
        assert sorted(grid.ravel().tolist()) == list(range(12))
    mp = StateMapping.for_states("Z", 6, 2)
    assert mp.z_index(1, 0) == 3  # j*q + k
    assert mp.w_members(0) == [0, 1, 2]
    assert mp.u_members(2) == [2, 5]
    assert mp.swapped().z_index(1, 0) == 1


def test_mapping_validation_and_json():
    with pytest.raises(ValueError):
        StateMapping.for_states("Z", 4, 5)
    with pytest.raises(ValueError):
        StateMapping.for_states("Z", 4, 0)
    with pytest.raises(ValueError):
        StateMapping("Z", 9, 2, 4)
    with pytest.raises(ValueError):
        StateMapping("Z", 4, 2, 2, order="diagonal")
    mp = StateMapping.for_states("Z", 5, 2, order="u_major")
    back = StateMapping.from_dict(json.loads(mp.to_json()))
    assert back == mp
    assert json.loads(mp.to_json())["padded"] is True


def test_padding_preserves_mass():
    G = build_diagram(*SINGLE_Z(5))
    j = joint_from_cpts(G, generate_cpts(G, seed=0))
    tup = make_equivalent_tuple(G, j, "Z", 2)
    assert tup.mapping.q == 3
    assert tup.joint.probs.sum() == pytest.approx(1.0, abs=1e-14)
    assert tup.pxyw.probs.sum() == pytest.approx(1.0, abs=1e-14)
    # the virtual state (w=1, u=2) carries nothing
    assert tup.joint.marginal(["W", "U"]).probs[1, 2] == 0.0
    assert verify_equivalence(G, j, tup).passed


def test_uniform_joint_gives_uniform_prior():
    arr = np.full((2, 2, 12), 1 / 48)
    j = JointTable(["X", "Y", "Z"], arr)
    for p in (1, 2, 3, 4, 6, 12):
        mp = StateMapping.for_states("Z", 12, p)
        _, pu = project_observables(j, mp)
        assert np.allclose(pu.probs, 1 / mp.q, atol=1e-15)


def test_worked_sum_over_first_block():
    rng = np.random.default_rng(0)
    arr = rng.dirichlet(np.ones(4 * 256)).reshape(2, 2, 256)
    j = JointTable(["X", "Y", "Z"], arr)
    pxyw, pu = project_observables(j, StateMapping.for_states("Z", 256, 16))
    assert pxyw.prob(X=0, Y=0, W=0) == pytest.approx(arr[0, 0, :16].sum(), abs=1e-15)
    assert pu.probs[0] == pytest.approx(arr[:, :, 0::16].sum(), abs=1e-15)
    with pytest.raises(ShapeMismatchError):
        project_observables(JointTable(["X", "Y", "Q"], arr), StateMapping.for_states("Z", 256, 16))
    with pytest.raises(ShapeMismatchError):
        project_observables(j, StateMapping.for_states("Z", 255, 16))


def test_p_equals_one():
    G = build_diagram(*SINGLE_Z(4))
    j = joint_from_cpts(G, generate_cpts(G, seed=1))
    tup = make_equivalent_tuple(G, j, "Z", 1)
    assert tup.g_prime.states("W") == 1 and tup.g_prime.states("U") == 4
    assert np.allclose(tup.pu.probs, j.marginal(["Z"]).probs, atol=1e-15)
    rep = verify_equivalence(G, j, tup)
    assert rep.passed and rep.difference <= 1e-12


def test_random_sixteen_state_instances():
    G = build_diagram(*SINGLE_Z(16))
    for seed in range(100):
        cpts = generate_cpts(G, seed=seed)
        truth = do_effect(G.nodes, G.state_counts(), {c.child: (list(c.parent_names), c.table) for c in cpts},
                          "X", 1, "Y", 0)
        for p in (2, 4, 8):
            tup = make_equivalent_tuple(G, cpts, "Z", p, order="w_major" if seed % 2 else "u_major")
            rep = verify_equivalence(G, cpts, tup, 1, 0)
            assert rep.passed, rep.to_dict()
            assert rep.effect_original == pytest.approx(truth, abs=1e-12)


def test_transformed_cpts_give_same_interventional_effect():
    # independent check through the truncated product on G'
    G = build_diagram(*SINGLE_Z(6))
    cpts = generate_cpts(G, seed=2)
    truth = do_effect(G.nodes, G.state_counts(), {c.child: (list(c.parent_names), c.table) for c in cpts},
                      "X", 0, "Y", 1)
    tup = make_equivalent_tuple(G, cpts, "Z", 4)  # padded: q = 2, two virtual states
    new = equivalent_cpts(tup)
    H = tup.g_prime
    got = do_effect(H.nodes, H.state_counts(), {c.child: (list(c.parent_names), c.table) for c in new},
                    "X", 0, "Y", 1)
    assert got == pytest.approx(truth, abs=1e-12)


def test_rewiring_with_parents_of_z():
    # A -> Z, Z -> X, Z -> Y, X -> Y, A -> Y
    G = build_diagram([("A", 2), ("Z", 6), ("X", 2), ("Y", 2)],
                      [("A", "Z"), ("Z", "X"), ("Z", "Y"), ("X", "Y"), ("A", "Y")])
    cpts = generate_cpts(G, seed=3)
    tup = make_equivalent_tuple(G, cpts, "Z", 3)
    H = tup.g_prime
    assert set(H.parents("U")) == {"A"}
    assert set(H.parents("W")) == {"A", "U"}
    assert {"U", "W"} <= set(H.parents("X"))
    assert "Z" not in H
    assert satisfies_backdoor(H, tup.adjustment_prime, "X", "Y")
    assert verify_equivalence(G, cpts, tup).passed


def test_frontdoor_transform():
    G = build_diagram([("L", 2), ("X", 2), ("Z", 6), ("Y", 2)],
                      [("L", "X"), ("L", "Y"), ("X", "Z"), ("Z", "Y")])
    cpts = generate_cpts(G, seed=4)
    tup = make_equivalent_tuple(G, cpts, "Z", 2)
    assert tup.criterion == "frontdoor"
    assert satisfies_frontdoor(tup.g_prime, tup.adjustment_prime, "X", "Y")
    rep = verify_equivalence(G, cpts, tup, 1, 1)
    assert rep.passed


def test_multi_variable_transform():
    G = build_diagram([("Z1", 4), ("Z2", 6), ("X", 2), ("Y", 2)],
                      [("Z1", "X"), ("Z1", "Y"), ("Z2", "X"), ("Z2", "Y"), ("X", "Y"), ("Z1", "Z2")])
    cpts = generate_cpts(G, seed=5)
    j = joint_from_cpts(G, cpts)
    chain = make_equivalent_tuple_multi(G, cpts, {"Z1": 2, "Z2": 3})
    final = chain[-1]
    assert {"W_Z1", "U_Z1", "W_Z2", "U_Z2"} <= set(final.g_prime.nodes)
    before = adjust_backdoor(j, 0, 0, ["Z1", "Z2"])
    after = adjust_backdoor(final.joint, 0, 0, ["W_Z1", "U_Z1", "W_Z2", "U_Z2"])
    assert after == pytest.approx(before, abs=1e-12)


def test_criterion_errors():
    # X -> Y -> Z: Z is a descendant of both, no qualifying set can contain it
    G = build_diagram([("X", 2), ("Y", 2), ("Z", 4)], [("X", "Y"), ("Y", "Z")])
    with pytest.raises(CriterionError):
        make_equivalent_tuple(G, generate_cpts(G, seed=0), "Z", 2)
    with pytest.raises(UnknownNodeError):
        make_equivalent_tuple(build_diagram(*SINGLE_Z(4)), None, "Q", 2)
    assert find_adjustment_set(build_diagram(*SINGLE_Z(4)), "X", "Y", ["Z"]) == ("backdoor", ("Z",))


def test_scale_error():
    G = build_diagram(*SINGLE_Z(2048))
    j = JointTable(["Z", "X", "Y"], np.full((2048, 2, 2), 1 / 8192))
    tup = make_equivalent_tuple(G, j, "Z", 32)
    with pytest.raises(ScaleError):
        verify_equivalence(G, j, tup)


def test_suggest_p():
    assert suggest_p(256, 1920) == 16
    assert suggest_p(256, 960) == 8
    assert suggest_p(256, 10) == 1


@settings(max_examples=40, deadline=None)
@given(m=st.integers(2, 20), data=st.data())
def test_projection_preserves_mass_and_margins(m, data):
    p = data.draw(st.integers(1, m))
    seed = data.draw(st.integers(0, 2**31))
    arr = np.random.default_rng(seed).dirichlet(np.ones(4 * m)).reshape(2, 2, m)
    j = JointTable(["X", "Y", "Z"], arr)
    mp = StateMapping.for_states("Z", m, p, order=data.draw(st.sampled_from(["w_major", "u_major"])))
    pxyw, pu = project_observables(j, mp)
    assert pxyw.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(pxyw.marginal(["X", "Y"]).probs, arr.sum(axis=2), atol=1e-14)
    for jj in range(p):
        assert pxyw.probs[:, :, jj].sum() == pytest.approx(arr[:, :, mp.w_members(jj)].sum(), abs=1e-14)
    for k in range(mp.q):
        assert pu.probs[k] == pytest.approx(arr[:, :, mp.u_members(k)].sum(), abs=1e-14)
