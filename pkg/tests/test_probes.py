import math
from fractions import Fraction

import numpy as np
import pytest

from apxgrp import FinSet, GroupCtx, parse_elem, symmetrize
from apxgrp.families import interval_box
from apxgrp.probes import (
    MissingExponent,
    freiman_exponent_probe,
    group_closure,
    near_subgroup_probe,
    perfectness_stat,
    right_coset_count,
    word_depth,
)

from . import oracles


def perm_set(X):
    return {tuple(int(v) for v in r) for r in X.rows}


@pytest.fixture(scope="module")
def A5():
    ctx = GroupCtx.symmetric(5)
    return FinSet(ctx, np.array(oracles.alternating(5)))


def test_closure_examples():
    E = FinSet.singleton_identity(GroupCtx.symmetric(3))
    assert group_closure(E, 10) == (E, 0)
    Z10 = GroupCtx.modular(10)
    G, steps = group_closure(FinSet.from_literals(Z10, ["(2)"]), 100)
    assert sorted(G.literals()) == ["(0)", "(2)", "(4)", "(6)", "(8)"] and steps == 2
    S3 = GroupCtx.symmetric(3)
    G, steps = group_closure(FinSet.from_literals(S3, ["(1 2)", "(1 2 3)"]), 100)
    assert len(G) == 6 and steps == 1
    assert group_closure(interval_box(1, 2), 50)[0] is None


def test_closure_matches_oracle():
    ctx = GroupCtx.symmetric(5)
    X = FinSet.from_literals(ctx, ["(1 2 3)", "(3 4 5)"])
    G, _ = group_closure(X, 1000)
    assert perm_set(G) == oracles.closure(perm_set(X), oracles.perm_mul, oracles.perm_inv)
    assert len(G) == 60


def test_near_subgroup_on_coset():
    ctx = GroupCtx.modular(35)
    X = FinSet.from_literals(ctx, [f"({(1 + 5 * i) % 35})" for i in range(7)])
    rep = near_subgroup_probe(X)
    assert rep.verdict == "subgroup"
    assert rep.payload["S_size"] == 7 and rep.payload["K"] == 1 and rep.payload["normalized_by_X"]


def test_near_subgroup_not_closed():
    rep = near_subgroup_probe(FinSet.from_ints(range(10)))
    assert rep.verdict == "not-closed"
    assert rep.payload == {"S_size": 37, "defect": 36}
    assert rep.witnesses == ["(1)*(18)"]


def test_coset_count_s3():
    ctx = GroupCtx.symmetric(3)
    A3 = FinSet.from_literals(ctx, ["()", "(1 2 3)", "(1 3 2)"])
    assert right_coset_count(FinSet.whole(ctx), A3) == 2
    assert right_coset_count(A3, A3) == 1


def test_perfectness_a5_matches_oracle(A5):
    est = perfectness_stat(A5, 2, 2)
    assert est.exhaustive and est.p_hat == Fraction(3481, 3600) and est.radius == 0.0
    assert est.p_hat == oracles.perfectness_exhaustive(oracles.alternating(5), 2, 2, oracles.perm_mul, oracles.perm_inv)


def test_perfectness_sampled_is_seeded(A5):
    a = perfectness_stat(A5, 2, 2, samples=500, seed=3, exhaustive=False)
    b = perfectness_stat(A5, 2, 2, samples=500, seed=3, exhaustive=False)
    assert a == b
    assert (a.successes, a.trials) == (483, 500)
    assert abs(a.value - 3481 / 3600) <= 3 * a.radius


def test_perfectness_abelian_control_is_zero():
    X = symmetrize(FinSet.from_ints(range(-5, 6)))
    assert perfectness_stat(X, 2, 2).p_hat == 0
    S3 = FinSet.whole(GroupCtx.symmetric(3))
    assert perfectness_stat(S3, 1, 1).p_hat == 0


def test_perfectness_one_tuple_matches_class_sizes(A5):
    # with l = 1 the event is |a^X| >= 60/m; class sizes in A5 are 1, 12, 12, 15, 20
    assert perfectness_stat(A5, 1, 5).p_hat == Fraction(59, 60)
    assert perfectness_stat(A5, 1, 4).p_hat == Fraction(35, 60)


def test_word_depth_examples():
    ctx = GroupCtx.symmetric(3)
    S3 = FinSet.whole(ctx)
    a = parse_elem(ctx, "(1 2 3)")
    assert word_depth(S3, [a]) == 2
    assert word_depth(S3, [a], exact=True) == 2
    E = FinSet.singleton_identity(ctx)
    assert word_depth(E, [parse_elem(ctx, "()")]) == 1


@pytest.mark.parametrize("extra", ["(1 2)(3 4)", "(1 2)", "(1 2 3 4)"])
def test_word_depth_exact_is_monotone_in_l(extra):
    ctx = GroupCtx.symmetric(4)
    X = FinSet.whole(ctx)
    a = parse_elem(ctx, "(1 2 3)")
    one = word_depth(X, [a], exact=True)
    two = word_depth(X, [a, parse_elem(ctx, extra)], exact=True)
    assert two <= one


def test_word_depth_unreachable():
    X = FinSet.from_ints(range(-3, 4))
    assert math.isinf(word_depth(X, [parse_elem(X.ctx, "(0)")], n_max=3))


def test_freiman_probe():
    ctx = GroupCtx.modular(2, 6)
    X = FinSet.from_literals(ctx, ["(0,0,0,0,0,0)", "(1,0,0,0,0,0)", "(0,1,0,0,0,0)", "(1,1,0,0,0,0)", "(0,0,1,0,0,0)"])
    rep = freiman_exponent_probe(X)
    assert rep.verdict == "subgroup"
    assert rep.payload["S_size"] == 8 and rep.payload["e"] == 2


def test_freiman_needs_exponent():
    with pytest.raises(MissingExponent):
        freiman_exponent_probe(FinSet.from_ints([0, 1, -1]))


def test_freiman_budget():
    ctx = GroupCtx.modular(101, 2)
    X = symmetrize(FinSet.from_literals(ctx, ["(1,0)", "(0,1)"]))
    rep = freiman_exponent_probe(X, e_budget=2)
    assert rep.verdict == "budget-exceeded"
