import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apxgrp import (
    ContextMismatch,
    CoordinateOverflow,
    GroupCtx,
    GroupError,
    decode,
    encode,
    format_elem,
    identity,
    inv,
    mul,
    parse_elem,
)
from apxgrp.groups import sl2_elements

from . import oracles
from .conftest import BACKENDS, random_rows

BATCH = 64
LAW_EXAMPLES = 160  # 160 * 64 > 10^4 triples per backend


@pytest.mark.parametrize("name", sorted(BACKENDS))
@settings(max_examples=LAW_EXAMPLES)
@given(seed=st.integers(0, 2**32 - 1))
def test_group_laws(name, seed):
    ctx = BACKENDS[name]
    be = ctx.backend
    rng = np.random.default_rng(seed)
    a, b, c = (random_rows(ctx, rng, BATCH) for _ in range(3))
    e = be.identity_row()
    assert np.array_equal(be.mul(be.mul(a, b), c), be.mul(a, be.mul(b, c)))
    assert np.array_equal(be.mul(a, be.inv(a)), np.broadcast_to(e, a.shape))
    assert np.array_equal(be.mul(be.inv(a), a), np.broadcast_to(e, a.shape))
    assert np.array_equal(be.mul(a, e[None, :]), a)
    assert np.array_equal(be.inv(be.inv(a)), a)


def test_s3_table_against_oracle():
    ctx = GroupCtx.symmetric(3)
    for s, t in itertools.product(itertools.permutations(range(3)), repeat=2):
        got = ctx.backend.mul(np.array(s), np.array(t))
        assert tuple(got) == oracles.perm_mul(s, t)


def test_cycle_notation_composes_right_to_left():
    ctx = GroupCtx.symmetric(3)
    prod = mul(ctx, parse_elem(ctx, "(1 2)"), parse_elem(ctx, "(1 2 3)"))
    assert format_elem(ctx, prod) == "(2 3)"
    assert format_elem(ctx, parse_elem(ctx, "(1 2)(2 3)")) == "(1 2 3)"


@settings(max_examples=200)
@given(st.lists(st.integers(-50, 50), min_size=6, max_size=6))
def test_heisenberg_matches_unitriangular_matrices(v):
    ctx = GroupCtx.heisenberg()
    g, h = tuple(v[:3]), tuple(v[3:])
    got = ctx.backend.mul(np.array(g), np.array(h))
    assert tuple(int(x) for x in got) == oracles.heis_mul(g, h)
    assert tuple(int(x) for x in ctx.backend.inv(np.array(g))) == oracles.heis_inv(g)


def test_heisenberg_example():
    ctx = GroupCtx.heisenberg()
    assert format_elem(ctx, mul(ctx, parse_elem(ctx, "(1,0,0)"), parse_elem(ctx, "(0,1,0)"))) == "(1,1,1)"


@pytest.mark.parametrize("p", [5, 7, 11])
def test_sl2_inverse_is_adjugate(p):
    ctx = GroupCtx.sl2(p)
    G = ctx.backend.all_elements()
    got = ctx.backend.inv(G)
    want = np.array([oracles.mat2_inv(tuple(int(x) for x in g), p) for g in G])
    assert np.array_equal(got, want)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_sl2_enumeration_matches_brute_force(p):
    got = [tuple(int(x) for x in r) for r in sl2_elements(p)]
    assert got == sorted(oracles.sl2(p))
    assert len(got) == p * (p - 1) * (p + 1)


def test_gl2_order():
    assert GroupCtx.gl2(5).backend.order() == (25 - 1) * (25 - 5)


def test_encoding_widths_and_byte_order():
    assert encode(GroupCtx.lattice(1), np.array([1])) == (1).to_bytes(8, "little", signed=True)
    assert encode(GroupCtx.lattice(1), np.array([-2])) == (-2).to_bytes(8, "little", signed=True)
    assert len(identity(GroupCtx.modular(35))) == 1
    assert len(identity(GroupCtx.modular(300))) == 2
    assert len(identity(GroupCtx.sl2(101))) == 4
    assert len(identity(GroupCtx.cayley(max_len=10))) == 10


def test_decode_rejects_wrong_length():
    with pytest.raises(GroupError):
        decode(GroupCtx.lattice(2), b"\x00" * 8)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_literal_round_trip(name):
    ctx = BACKENDS[name]
    rng = np.random.default_rng(0)
    for row in random_rows(ctx, rng, 40):
        text = ctx.backend.format(row)
        assert np.array_equal(ctx.backend.parse(text), row)


def test_context_dict_round_trip(any_ctx):
    assert GroupCtx.from_dict(any_ctx.to_dict()) == any_ctx


def test_context_rejects_unknown_keys():
    with pytest.raises(GroupError):
        GroupCtx.from_dict({"kind": "lattice", "d": 1, "colour": "red"})


@pytest.mark.parametrize(
    "bad",
    [
        lambda: GroupCtx.sl2(6),
        lambda: GroupCtx.lattice(0),
        lambda: GroupCtx.cayley(("a", "a")),
        lambda: GroupCtx.cayley(("a",), rules=(("e", "a"),)),
    ],
)
def test_invalid_contexts(bad):
    with pytest.raises(GroupError):
        bad()


def test_mixed_contexts_rejected():
    from apxgrp import FinSet, product

    A = FinSet.from_ints([0, 1])
    B = FinSet.from_literals(GroupCtx.modular(5), ["(1)"])
    with pytest.raises(ContextMismatch):
        product(A, B)


def test_lattice_overflow_is_detected():
    ctx = GroupCtx.lattice(1)
    big = np.array([2**62])
    with pytest.raises(CoordinateOverflow):
        ctx.backend.mul(big, big)
    assert ctx.backend.mul(big, -big)[0] == 0


def test_heisenberg_overflow_is_detected():
    ctx = GroupCtx.heisenberg()
    a = np.array([2**40, 0, 0])
    b = np.array([0, 2**40, 0])
    with pytest.raises(CoordinateOverflow):
        ctx.backend.mul(a, b)


def test_free_reduction_and_rules():
    F = GroupCtx.cayley(("a", "b"))
    w = parse_elem(F, "a*b*b^-1*a^-1")
    assert w == identity(F)
    D = BACKENDS["Dinf"]
    assert format_elem(D, inv(D, parse_elem(D, "a*b"))) == "b*a"
    assert format_elem(D, parse_elem(D, "a^-1*b*a*a*b")) == "a"


def test_cayley_word_too_long():
    F = GroupCtx.cayley(("a",), max_len=3)
    with pytest.raises(CoordinateOverflow):
        parse_elem(F, "a^4")
