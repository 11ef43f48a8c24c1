"""Towers ``X_N <= ... <= X_1`` defined by the x^4 recursion, and their checks.

Properties checked by :func:`verify_tower` (levels indexed from 1):

1. ``1 in X_n = X_n^-1``
2. ``X_{n+1} X_{n+1} <= X_n``
3. ``X_n`` covered by ``c`` right translates of ``X_{n+1}`` (greedy count)
4. ``a X_{n+1} a^-1 <= X_n`` for every ``a in X_1``
5. ``[X_n, X_m] <= X_k`` whenever ``k <= N`` and ``k < n + m``
6. ``X_{n+1} = {x in X_1 : x^4 in X_n}``
7. ``x, y in X_m`` (m >= 2) with ``x^2 = y^2`` implies ``x y^-1 in X_N``
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .covering import commensurability, greedy_cover
from .setalg import FinSet, first_pair_outside, inverse_set, product, symmetrize

log = logging.getLogger(__name__)

PROPERTIES = ("1", "2", "3", "4", "5", "6", "7")
CHECKED = ("1", "2", "4", "5", "6", "7")
FAMILIES = ("derived-square", "dilates", "cayley-balls", "user-list")

# product computations larger than this many pairs are skipped by seed_search
PAIR_LIMIT = 4 * 10**8


class TowerInputError(ValueError):
    pass


@dataclass
class Check:
    prop: str
    n: int
    m: int | None = None
    k: int | None = None
    passed: bool = True
    witness: str | None = None

    def to_dict(self) -> dict:
        out = {"prop": self.prop, "n": self.n, "pass": self.passed}
        if self.m is not None:
            out["m"] = self.m
        if self.k is not None:
            out["k"] = self.k
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class TowerReport:
    levels: list[FinSet]
    N: int
    c: int
    e: int | float | None = None
    cover_counts: list[int] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    truncated_at: int | None = None
    truncation_witness: str | None = None
    in_derived_square: bool | None = None

    def passed(self, prop: str) -> bool:
        return all(ch.passed for ch in self.checks if ch.prop == prop)

    @property
    def all_passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    def failures(self, prop: str | None = None) -> list[Check]:
        return [ch for ch in self.checks if not ch.passed and (prop is None or ch.prop == prop)]

    def pass_counts(self) -> dict[str, tuple[int, int]]:
        out = {}
        for p in CHECKED:
            rel = [ch for ch in self.checks if ch.prop == p]
            out[p] = (sum(ch.passed for ch in rel), len(rel))
        return out

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "c": self.c,
            "e": _jsonable(self.e),
            "level_sizes": [len(x) for x in self.levels],
            "cover_counts": self.cover_counts,
            "truncated_at": self.truncated_at,
            "truncation_witness": self.truncation_witness,
            "in_derived_square": self.in_derived_square,
            "properties": {p: self.passed(p) for p in CHECKED},
            "checks": [ch.to_dict() for ch in self.checks],
        }

    def csv_row(self) -> dict:
        counts = self.pass_counts()
        row = {"N": self.N, "e": _jsonable(self.e), "c": self.c}
        for p in CHECKED:
            row[f"pass_{p}"] = f"{counts[p][0]}/{counts[p][1]}"
        return row


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


# ---------------------------------------------------------------------------
# construction


def _fourth_power_filter(X1: FinSet, target: FinSet) -> FinSet:
    be = X1.ctx.backend
    fourth = be.pow(X1.rows, 4)
    return X1.filter(target.contains_rows(fourth))


def build_tower(X1: FinSet, N: int) -> list[FinSet]:
    """Levels ``X_1 .. X_N`` with ``X_{n+1} = {x in X_1 : x^4 in X_n}``.

    Stops at the last level before the tower collapses to ``{1}`` (a seed
    equal to ``{1}`` gives the single level ``[{1}]``).
    """
    if N < 1:
        raise TowerInputError("N must be >= 1")
    if not X1.has_identity() or inverse_set(X1) != X1:
        raise TowerInputError("seed must be symmetric and contain the identity")
    levels = [X1]
    while len(levels) < N:
        nxt = _fourth_power_filter(X1, levels[-1])
        if len(nxt) == 1:
            break
        if nxt == levels[-1]:
            levels.extend([nxt] * (N - len(levels)))
            break
        levels.append(nxt)
    return levels


# ---------------------------------------------------------------------------
# verification


class _Checker:
    """Memoised containment checks shared across prefixes of one tower."""

    def __init__(self, levels: list[FinSet]):
        self.levels = levels
        self.ctx = levels[0].ctx
        self.memo: dict = {}

    def fmt(self, row) -> str:
        return self.ctx.backend.format(row)

    def pair_inside(self, kind: str, a: int, b: int, k: int, left: FinSet | None = None):
        key = (kind, a, b, k)
        if key not in self.memo:
            A = left if left is not None else self.levels[a - 1]
            hit = first_pair_outside(A, self.levels[b - 1], self.levels[k - 1], kind)
            self.memo[key] = None if hit is None else (self.fmt(hit[0]), self.fmt(hit[1]))
        return self.memo[key]


def verify_tower(
    levels: list[FinSet],
    X: FinSet | None = None,
    all_m: bool = False,
    _checker: _Checker | None = None,
) -> TowerReport:
    """Re-check properties (1)-(7) from the levels alone.

    A nesting violation truncates the tower at the last good level and records
    the escaping element.  With ``X`` given, also reports ``e`` (greedy
    commensurability of ``X^-1 X`` with ``X_1``) and whether ``X_1`` lies in
    ``(X^-1 X)^2``.
    """
    if not levels:
        raise TowerInputError("empty tower")
    ctx = levels[0].ctx
    for lv in levels:
        if lv.ctx != ctx:
            raise TowerInputError("levels live in different groups")
        if len(lv) == 0:
            raise TowerInputError("empty level")
    be = ctx.backend
    truncated_at = witness = None
    for n in range(1, len(levels)):
        out = levels[n].first_outside(levels[n - 1])
        if out is not None:
            truncated_at, witness = n, be.format(out)
            levels = levels[:n]
            break
    N = len(levels)
    chk = _checker if _checker is not None and _checker.levels[:N] == levels else _Checker(levels)
    checks: list[Check] = []

    # (1)
    for n, lv in enumerate(levels, 1):
        inv = inverse_set(lv)
        bad = inv.first_outside(lv)
        if not lv.has_identity():
            checks.append(Check("1", n, passed=False, witness="identity missing"))
        else:
            checks.append(Check("1", n, passed=bad is None, witness=None if bad is None else be.format(bad)))
    symmetric = all(ch.passed for ch in checks)

    # (2)
    for n in range(1, N):
        hit = chk.pair_inside("mul", n + 1, n + 1, n)
        checks.append(Check("2", n, passed=hit is None, witness=None if hit is None else "*".join(hit)))

    # (3)
    counts = []
    for n in range(1, N):
        counts.append(greedy_cover(levels[n - 1], levels[n]).count)
    c = max(counts) if counts else 1

    # (4)
    for n in range(1, N):
        hit = chk.pair_inside("lconj", 1, n + 1, n)
        checks.append(Check("4", n, passed=hit is None, witness=None if hit is None else f"a={hit[0]}, x={hit[1]}"))

    # (5) strongest k = min(N, n+m-1); X_k decreasing makes smaller k implied
    for n in range(1, N + 1):
        for m in range(1, N + 1):
            if symmetric and m < n:
                continue
            k = min(N, n + m - 1)
            hit = chk.pair_inside("comm", n, m, k)
            checks.append(Check("5", n, m, k, hit is None, None if hit is None else f"[{hit[0]},{hit[1]}]"))

    # (6)
    for n in range(1, N):
        expected = _fourth_power_filter(levels[0], levels[n - 1])
        ok = expected == levels[n]
        wit = None
        if not ok:
            diff = (expected - levels[n]).union(levels[n] - expected)
            wit = be.format(diff.rows[0])
        checks.append(Check("6", n, passed=ok, witness=wit))

    # (7)
    for m in range(2, N + 1 if all_m else min(N, 2) + 1):
        checks.append(_square_root_check(levels[m - 1], levels[-1], m))

    e = None
    in_sq = None
    if X is not None:
        XinvX = product(inverse_set(X), X)
        ea, eb = commensurability(XinvX, levels[0])
        e = max(ea, eb)
        if len(XinvX) ** 2 <= PAIR_LIMIT:
            in_sq = levels[0].issubset(product(XinvX, XinvX))
    return TowerReport(list(levels), N, c, e, counts, checks, truncated_at, witness, in_sq)


def _square_root_check(Xm: FinSet, XN: FinSet, m: int) -> Check:
    be = Xm.ctx.backend
    sq = be.mul(Xm.rows, Xm.rows)
    # group rows of Xm by their square
    order = np.lexsort(sq.T[::-1])
    sq_sorted = sq[order]
    brk = np.ones(len(order), dtype=bool)
    brk[1:] = np.any(sq_sorted[1:] != sq_sorted[:-1], axis=1)
    starts = np.flatnonzero(brk)
    ends = np.append(starts[1:], len(order))
    for s, t in zip(starts, ends):
        if t - s < 2:
            continue
        cls = Xm.rows[order[s:t]]
        quot = be.mul(cls[:, None, :], be.inv(cls)[None, :, :]).reshape(-1, cls.shape[1])
        miss = ~XN.contains_rows(quot)
        if miss.any():
            i = int(np.argmax(miss))
            x, y = cls[i // len(cls)], cls[i % len(cls)]
            return Check("7", m, passed=False, witness=f"x={be.format(x)}, y={be.format(y)}")
    return Check("7", m, passed=True)


def verified_depth(levels: list[FinSet], checker: _Checker | None = None) -> tuple[int, TowerReport]:
    """Largest prefix length whose checked properties all pass, with its report."""
    checker = checker or _Checker(levels)
    for depth in range(len(levels), 0, -1):
        rep = verify_tower(levels[:depth], _checker=checker)
        if rep.truncated_at is None and rep.all_passed:
            return depth, rep
    return 0, verify_tower(levels[:1], _checker=checker)


# ---------------------------------------------------------------------------
# seed search


def _dilate_seeds(S: FinSet) -> list[FinSet]:
    """Shrunken copies of S: coordinate boxes for Z^d and Heisenberg, power filters otherwise."""
    ctx = S.ctx
    be = ctx.backend
    seeds = []
    if ctx.kind in ("lattice", "heisenberg"):
        bound = np.abs(S.rows).max(axis=0)
        for j in range(0, 4):
            lim = bound.astype(float) / 2**j
            if ctx.kind == "heisenberg":
                lim[2] = bound[2] / 4**j
            box = S.filter(np.all(np.abs(S.rows) <= lim, axis=1))
            if len(box):
                seeds.append(symmetrize(box))
    else:
        seeds.append(S)
        for j in (1, 2, 3):
            seeds.append(S.filter(S.contains_rows(be.pow(S.rows, 2**j))))
    return seeds


def seed_search(
    X: FinSet,
    family: str = "derived-square",
    budget: int = 8,
    user_seeds: list[FinSet] | None = None,
) -> tuple[FinSet, TowerReport]:
    """Pick the tower seed with the deepest fully verified tower.

    Ties go to smaller c, then smaller e, then to the earlier candidate.
    Candidates whose construction would exceed ``PAIR_LIMIT`` products are
    skipped.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown candidate family {family!r}")
    if not X.has_identity() or inverse_set(X) != X:
        raise TowerInputError("X must be symmetric and contain the identity")
    cands: list[FinSet] = []
    if family == "derived-square":
        XinvX = product(inverse_set(X), X)
        if len(XinvX) ** 2 <= PAIR_LIMIT:
            cands.append(product(XinvX, XinvX))
        cands.append(XinvX)
        cands.append(X)
    elif family == "dilates":
        cands.extend(_dilate_seeds(X))
    elif family == "cayley-balls":
        ball = X
        cands.append(ball)
        for _ in range(2):
            if len(ball) * len(X) > PAIR_LIMIT:
                break
            ball = product(ball, X)
            cands.append(ball)
    else:
        cands.extend(user_seeds or [])
    cands = [s for s in cands if s.has_identity() and inverse_set(s) == s]
    if not cands:
        raise TowerInputError("empty candidate family")

    XinvX = product(inverse_set(X), X)
    best = None
    for i, seed in enumerate(cands):
        levels = build_tower(seed, budget)
        depth, rep = verified_depth(levels)
        if depth == 0:
            continue
        ea, eb = commensurability(XinvX, seed)
        rep.e = max(ea, eb)
        score = (-depth, rep.c, rep.e, i)
        log.debug("seed %d: |X1|=%d depth=%d c=%d e=%s", i, len(seed), depth, rep.c, rep.e)
        if best is None or score < best[0]:
            best = (score, seed, rep)
    if best is None:
        seed = cands[0]
        return seed, verify_tower(build_tower(seed, 1), X)
    return best[1], best[2]
