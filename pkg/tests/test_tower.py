import numpy as np
import pytest

from apxgrp import FinSet, GroupCtx, product, symmetrize
from apxgrp.families import heisenberg_box, interval_box
from apxgrp.tower import CHECKED, TowerInputError, build_tower, seed_search, verified_depth, verify_tower

from . import oracles


def ints(X):
    return sorted(int(r[0]) for r in X.rows)


def test_interval_levels_closed_form():
    # radius 2^8 seed: X_n = [-2^(8-2(n-1)), 2^(8-2(n-1))]
    X1 = interval_box(1, 256)
    levels = build_tower(X1, 5)
    assert [ints(L) for L in levels] == [list(range(-(4**(4 - n)), 4**(4 - n) + 1)) for n in range(5)]
    ref = oracles.fourth_power_tower(range(-256, 257), 5, lambda a, b: a + b)
    assert [set(ints(L)) for L in levels] == ref


def test_interval_tower_report():
    rep = verify_tower(build_tower(interval_box(1, 256), 5))
    assert rep.N == 5 and rep.all_passed
    assert rep.c == 5 and rep.cover_counts == [5, 5, 5, 3]
    # abelian: commutators are trivial, so every (5) check passes
    assert all(ch.passed for ch in rep.checks if ch.prop == "5")


def test_interval_tower_stops_before_identity():
    levels = build_tower(interval_box(1, 256), 9)
    assert len(levels) == 5 and len(levels[-1]) == 3


def test_odd_order_subgroup_tower_is_constant():
    ctx = GroupCtx.modular(35)
    H = FinSet.from_literals(ctx, [f"({5 * i})" for i in range(7)])
    levels = build_tower(H, 6)
    assert len(levels) == 6 and all(L == H for L in levels)
    rep = verify_tower(levels)
    assert rep.all_passed and rep.c == 1 and rep.N == 6


def test_nonabelian_odd_subgroup():
    ctx = GroupCtx.symmetric(3)
    A3 = FinSet.from_literals(ctx, ["()", "(1 2 3)", "(1 3 2)"])
    rep = verify_tower(build_tower(A3, 4))
    assert rep.all_passed and rep.c == 1 and rep.N == 4


def test_identity_seed():
    E = FinSet.singleton_identity(GroupCtx.heisenberg())
    levels = build_tower(E, 4)
    assert levels == [E]
    assert verify_tower(levels).all_passed


def test_non_symmetric_seed_rejected():
    with pytest.raises(TowerInputError):
        build_tower(FinSet.from_ints([0, 1]), 3)
    with pytest.raises(TowerInputError):
        build_tower(FinSet.from_ints(range(-2, 3)), 0)


def test_injected_nesting_violation_truncates():
    X1 = interval_box(1, 16)
    X2 = FinSet.from_ints(range(-4, 5))
    bad = FinSet.from_ints([-20, 0, 20])
    rep = verify_tower([X1, X2, bad])
    assert rep.truncated_at == 2 and rep.N == 2
    assert rep.truncation_witness in ("(-20)", "(20)")


def test_mixed_context_levels_rejected():
    with pytest.raises(TowerInputError):
        verify_tower([interval_box(1, 2), FinSet.singleton_identity(GroupCtx.modular(5))])


def test_verify_is_pure():
    levels = build_tower(interval_box(1, 64), 4)
    a, b = verify_tower(levels).to_dict(), verify_tower(levels).to_dict()
    assert a == b


def test_dropping_deepest_level_keeps_passes():
    X = symmetrize(heisenberg_box(2))
    levels = build_tower(X, 4)
    full = verify_tower(levels)
    short = verify_tower(levels[:-1])
    passed = {(c.prop, c.n, c.m): c.passed for c in full.checks}
    for c in short.checks:
        key = (c.prop, c.n, c.m)
        if c.prop in ("1", "2", "4", "6") and passed.get(key):
            assert c.passed


def test_heisenberg_levels_match_fourth_power_oracle():
    X = symmetrize(heisenberg_box(3))
    pts = {tuple(int(v) for v in r) for r in X.rows}
    ref = oracles.fourth_power_tower(pts, 6, oracles.heis_mul)
    got = build_tower(X, 6)
    assert [{tuple(int(v) for v in r) for r in L.rows} for L in got] == ref


def test_commutator_witness_is_genuine():
    X = symmetrize(heisenberg_box(3))
    rep = verify_tower(build_tower(X, 6))
    for ch in rep.failures("5"):
        a, b = ch.witness.strip("[]").split("),(")
        a = tuple(int(v) for v in a.strip("()").split(","))
        b = tuple(int(v) for v in b.strip("()").split(","))
        c = oracles.heis_mul(oracles.heis_mul(a, b), oracles.heis_mul(oracles.heis_inv(a), oracles.heis_inv(b)))
        Xk = rep.levels[ch.k - 1]
        assert not Xk.contains_rows(np.array([c])).any()


def test_property_seven_on_squares():
    # in Z, x^2 = y^2 forces x = y, so (7) holds
    rep = verify_tower(build_tower(interval_box(1, 64), 4), all_m=True)
    assert rep.passed("7")
    assert set(rep.pass_counts()) == set(CHECKED)


def test_seed_search_interval():
    X = interval_box(1, 256)
    X1, rep = seed_search(X, "derived-square", budget=8)
    assert len(X1) == 2049 and rep.N == 6 and rep.c == 5 and rep.e == 3
    assert rep.all_passed


def test_seed_search_subgroup():
    ctx = GroupCtx.symmetric(3)
    A3 = FinSet.from_literals(ctx, ["()", "(1 2 3)", "(1 3 2)"])
    X1, rep = seed_search(A3, budget=6)
    assert X1 == A3 and rep.N == 6 and rep.c == 1


def test_seed_search_dilates():
    X = symmetrize(heisenberg_box(2))
    X1, rep = seed_search(X, "dilates", budget=4)
    depth, _ = verified_depth(rep.levels)
    assert depth == rep.N >= 1 and rep.all_passed


def test_seed_search_without_verified_candidate_falls_back():
    # Cayley balls are not commutator-closed in H3, so no level-1 tower verifies
    X = symmetrize(heisenberg_box(2))
    X1, rep = seed_search(X, "cayley-balls", budget=4)
    assert X1 == X and rep.N == 1 and not rep.passed("5")


def test_seed_search_user_list_and_empty():
    X = interval_box(1, 16)
    X1, rep = seed_search(X, "user-list", budget=3, user_seeds=[interval_box(1, 4)])
    assert X1 == interval_box(1, 4)
    with pytest.raises(TowerInputError):
        seed_search(X, "user-list", budget=3, user_seeds=[FinSet.from_ints([0, 1])])


def test_in_derived_square_flag():
    X = interval_box(1, 8)
    XX = product(X, X)
    rep = verify_tower(build_tower(interval_box(1, 16), 3), X=X)
    assert rep.in_derived_square is True
    assert len(XX) == 33
