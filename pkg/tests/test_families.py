from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apxgrp import GroupCtx, doubling, symmetrize
from apxgrp.families import (
    CORPORA,
    FamilyError,
    FamilySpec,
    beatty,
    beatty_alpha,
    cayley_ball,
    corpus,
    generate,
    heisenberg_box,
    spec,
)
from apxgrp.setalg import dumps

ALPHAS = ["4*pi", "10+sqrt(2)", "exp(4)"]


@pytest.mark.parametrize("alpha", ALPHAS)
def test_beatty_alpha_precision(alpha):
    import mpmath

    a = beatty_alpha(alpha, 1000)
    with mpmath.workdps(80):
        exact = mpmath.mpmathify(eval(alpha.replace("pi", "mpmath.pi").replace("sqrt", "mpmath.sqrt").replace("exp", "mpmath.exp")))
        err = abs(mpmath.mpf(a.numerator) / a.denominator - exact)
    assert err < mpmath.mpf(2) ** -40 / 1000


def test_beatty_matches_float_floor_for_small_n():
    import math

    X = beatty(20, "4*pi")
    assert sorted(int(r[0]) for r in X.rows) == sorted(math.floor(m * 4 * math.pi) for m in range(-20, 21))


@pytest.mark.parametrize("bad", ["3", "22/7", "pi", "2*pi+1", "10", "20.5"])
def test_beatty_rejects_small_or_rational_alpha(bad):
    with pytest.raises(FamilyError):
        beatty(10, bad)


@settings(max_examples=40)
@given(st.integers(1, 400), st.sampled_from(ALPHAS))
def test_beatty_doubling_at_most_four(n, alpha):
    X = beatty(n, alpha)
    assert len(X) == 2 * n + 1
    assert doubling(X).ratio <= 4


def test_heisenberg_box_size():
    assert len(heisenberg_box(2)) == 5 * 5 * 9 == 225


@pytest.mark.parametrize("r", [0, 1, 2, 3, 4])
def test_free_group_ball(r):
    F = GroupCtx.cayley(("a", "b"), max_len=8)
    assert len(cayley_ball(F, ["a", "b"], r)) == 1 + 4 * (3**r - 1) // 2


def test_ball_saturates_in_finite_group():
    X = cayley_ball(GroupCtx.symmetric(4), ["(1 2)", "(1 2 3 4)"], 10)
    assert len(X) == 24


@pytest.mark.parametrize("name", CORPORA)
def test_corpus_is_deterministic(name):
    a = [dumps(generate(s)) for s in corpus(name)]
    b = [dumps(generate(s)) for s in corpus(name)]
    assert a == b
    assert len({s.name for s in corpus(name)}) == len(corpus(name))


def test_named_examples_corpus_size():
    assert len(corpus("paper-examples")) >= 12
    assert {s.ctx().kind for s in corpus("sl2-grid")} == {"sl2"}
    assert {s.ctx().p for s in corpus("sl2-grid")} == {5, 7, 11, 13}


def test_spec_round_trip():
    for name in CORPORA:
        for s in corpus(name):
            assert FamilySpec.from_dict(s.to_dict()) == s


def test_spec_errors():
    with pytest.raises(FamilyError):
        FamilySpec("nope")
    with pytest.raises(FamilyError):
        FamilySpec.from_dict({"kind": "beatty", "n": 3, "colour": 1})
    with pytest.raises(FamilyError):
        generate(spec("cayley-ball"))
    with pytest.raises(FamilyError):
        generate(spec("exponent-grid", GroupCtx.lattice(2), k=1))


def test_random_symmetric_is_seeded():
    s1 = spec("random-symmetric", GroupCtx.symmetric(6), size=20, seed=4)
    s2 = spec("random-symmetric", GroupCtx.symmetric(6), size=20, seed=5)
    X = generate(s1)
    assert X == generate(s1) and X != generate(s2)
    assert X.is_symmetric() and X.has_identity()


def test_exponent_grid_and_noise():
    g = generate(spec("exponent-grid", GroupCtx.modular(3, 6), k=2, shifts=2, seed=7))
    assert g.is_symmetric() and len(g) == 45
    h = generate(spec("subgroup-plus-noise", GroupCtx.modular(35), generators=("(5)",), size=3, seed=1))
    assert len(h) > 7 and h == symmetrize(h)


def test_growth_ratio_is_fraction():
    assert isinstance(doubling(beatty(10, "4*pi")).ratio, Fraction)
