"""Ruzsa coverings, commensurability and approximate-group constants.

Translates are right translates (``tile * t``) unless ``side="left"``
(``t * tile``).  Every greedy choice breaks ties by canonical element order,
so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .groups import Elem, encode
from .setalg import FinSet, _check_ctx, _nonempty, inverse_set, product

SIDES = ("right", "left")


@dataclass(frozen=True)
class CoverResult:
    """Translates ``t`` with ``target`` inside the union of ``tile*t`` (or ``t*tile``)."""

    translates: tuple[Elem, ...]
    tile: FinSet
    target: FinSet
    side: str = "right"
    certified_bound: Fraction | None = None
    verified: bool = field(default=False)

    @property
    def count(self) -> int:
        return len(self.translates)

    def to_dict(self) -> dict:
        be = self.tile.ctx.backend
        from .groups import decode

        return {
            "side": self.side,
            "count": self.count,
            "translates": [be.format(decode(self.tile.ctx, t)) for t in self.translates],
            "tile_size": len(self.tile),
            "target_size": len(self.target),
            "certified_bound": None if self.certified_bound is None else str(self.certified_bound),
            "verified": self.verified,
        }


def _translate(tile: FinSet, t_rows: np.ndarray, side: str) -> np.ndarray:
    """Rows of tile*t (right) or t*tile (left) for each t; shape (len(t), len(tile), w)."""
    be = tile.ctx.backend
    if side == "right":
        return be.mul(tile.rows[None, :, :], t_rows[:, None, :])
    if side == "left":
        return be.mul(t_rows[:, None, :], tile.rows[None, :, :])
    raise ValueError(f"side must be one of {SIDES}")


def covered_by(target: FinSet, tile: FinSet, translates, side: str = "right") -> bool:
    """Exact check that target lies in the union of the translates of tile."""
    _check_ctx(target, tile)
    if len(target) == 0:
        return True
    if len(translates) == 0:
        return False
    t_rows = _rows(tile.ctx, translates)
    w = tile.ctx.backend.width
    union = FinSet(tile.ctx, _translate(tile, t_rows, side).reshape(-1, w), validate=False)
    return target.issubset(union)


def _rows(ctx, elems) -> np.ndarray:
    from .groups import decode

    if isinstance(elems, np.ndarray):
        return elems.reshape(-1, ctx.backend.width)
    return np.array([decode(ctx, e) for e in elems], dtype=np.int64).reshape(-1, ctx.backend.width)


# ---------------------------------------------------------------------------
# disjoint translates and the Ruzsa cover


def disjoint_translates(Z: FinSet, W: FinSet, side: str = "right") -> list[Elem]:
    """Greedy maximal family ``a_1..a_r`` in W with ``Z a_i`` pairwise disjoint.

    Candidates are scanned in canonical order of W.  Maximality gives
    ``r <= |ZW| / |Z|``.
    """
    _check_ctx(Z, W)
    _nonempty(Z, W)
    span = product(Z, W) if side == "right" else product(W, Z)
    used = np.zeros(len(span), dtype=bool)
    chosen = []
    step = max(1, (1 << 20) // len(Z))
    for start in range(0, len(W), step):
        block = W.rows[start:start + step]
        pos = span.locate_rows(_translate(Z, block, side).reshape(-1, Z.rows.shape[1]))
        pos = pos.reshape(len(block), len(Z))
        for i in range(len(block)):
            p = pos[i]
            if not used[p].any():
                used[p] = True
                chosen.append(block[i])
    return [encode(Z.ctx, r) for r in chosen]


def ruzsa_cover(W: FinSet, Z: FinSet, side: str = "right") -> CoverResult:
    """Cover W by translates of ``Z^-1 Z`` taken at a maximal disjoint family.

    If ``Z a_i`` are maximal pairwise disjoint (a_i in W) then every a in W
    has ``Z a`` meeting some ``Z a_i``, so ``a`` lies in ``Z^-1 Z a_i``.
    """
    _check_ctx(W, Z)
    _nonempty(W, Z)
    translates = disjoint_translates(Z, W, side)
    if side == "right":
        tile = product(inverse_set(Z), Z)
        bound = Fraction(len(product(Z, W)), len(Z))
    else:
        tile = product(Z, inverse_set(Z))
        bound = Fraction(len(product(W, Z)), len(Z))
    ok = covered_by(W, tile, translates, side)
    if not ok or len(translates) > bound:
        raise AssertionError("Ruzsa cover certificate failed")
    return CoverResult(tuple(translates), tile, W, side, bound, ok)


# ---------------------------------------------------------------------------
# greedy set cover by translates


def _candidates(target: FinSet, tile: FinSet, side: str) -> FinSet:
    # t with tile*t meeting target: t in tile^-1 target (right), target tile^-1 (left)
    if side == "right":
        return product(inverse_set(tile), target)
    return product(target, inverse_set(tile))


def greedy_cover(target: FinSet, tile: FinSet, side: str = "right", budget: int | None = None) -> CoverResult | None:
    """Greedy max-coverage cover of target by translates of tile.

    Each round takes the translate covering the most still-uncovered points,
    ties to the canonically smallest translate.  Returns None once more than
    ``budget`` translates would be needed.
    """
    _check_ctx(target, tile)
    _nonempty(target, tile)
    be = tile.ctx.backend
    cands = _candidates(target, tile, side)
    w = tile.rows.shape[1]
    tile_inv = be.inv(tile.rows)

    gains = np.empty(len(cands), dtype=np.int64)
    step = max(1, (1 << 21) // len(tile))
    for start in range(0, len(cands), step):
        pts = _translate(tile, cands.rows[start:start + step], side).reshape(-1, w)
        hit = target.locate_rows(pts).reshape(-1, len(tile)) >= 0
        gains[start:start + step] = hit.sum(axis=1)

    uncovered = np.ones(len(target), dtype=bool)
    remaining = len(target)
    chosen: list[int] = []
    while remaining:
        if budget is not None and len(chosen) >= budget:
            return None
        i = int(np.argmax(gains))  # first maximum = canonically smallest
        pos = target.locate_rows(_translate(tile, cands.rows[i:i + 1], side).reshape(-1, w))
        pos = pos[pos >= 0]
        fresh = pos[uncovered[pos]]
        uncovered[fresh] = False
        remaining -= len(fresh)
        chosen.append(i)
        # every candidate covering a newly covered point x loses one:
        # right: t = z^-1 x, left: t = x z^-1
        x = target.rows[fresh]
        if side == "right":
            ts = be.mul(tile_inv[:, None, :], x[None, :, :])
        else:
            ts = be.mul(x[None, :, :], tile_inv[:, None, :])
        loc = cands.locate_rows(ts.reshape(-1, w))
        gains -= np.bincount(loc[loc >= 0], minlength=len(cands))
    translates = tuple(encode(tile.ctx, cands.rows[i]) for i in chosen)
    return CoverResult(translates, tile, target, side, None, True)


def greedy_cover_count(target: FinSet, tile: FinSet, side: str = "right", budget: int | None = None) -> int | float:
    res = greedy_cover(target, tile, side, budget)
    return math.inf if res is None else res.count


def exact_cover_count(target: FinSet, tile: FinSet, side: str = "right", limit: int = 64) -> int:
    """Minimum number of translates of tile covering target, by exhaustive search.

    Only for ``|tile| <= limit``; branch on the first uncovered point.
    """
    if len(tile) > limit:
        raise ValueError(f"exact cover limited to |tile| <= {limit}")
    cands = _candidates(target, tile, side)
    w = tile.rows.shape[1]
    pos = target.locate_rows(_translate(tile, cands.rows, side).reshape(-1, w)).reshape(len(cands), len(tile))
    masks = []
    for row in pos:
        m = 0
        for q in row[row >= 0]:
            m |= 1 << int(q)
        masks.append(m)
    by_point: list[list[int]] = [[] for _ in range(len(target))]
    for ci, m in enumerate(masks):
        q = 0
        mm = m
        while mm:
            if mm & 1:
                by_point[q].append(masks[ci])
            mm >>= 1
            q += 1
    full = (1 << len(target)) - 1
    best = greedy_cover(target, tile, side).count

    def search(covered: int, depth: int, limit_depth: int) -> bool:
        if covered == full:
            return True
        if depth == limit_depth:
            return False
        free = ~covered & full
        q = (free & -free).bit_length() - 1
        for m in set(by_point[q]):
            if search(covered | m, depth + 1, limit_depth):
                return True
        return False

    lower = max(1, math.ceil(len(target) / len(tile)))
    for k in range(lower, best):
        if search(0, 0, k):
            return k
    return best


# ---------------------------------------------------------------------------
# commensurability and approximate-group constants


def commensurability(A: FinSet, B: FinSet, budget: int = 10_000, side: str = "right") -> tuple[int | float, int | float]:
    """Greedy counts (translates of B covering A, translates of A covering B).

    ``math.inf`` marks a greedy cover that needed more than ``budget`` translates.
    """
    _check_ctx(A, B)
    return (
        greedy_cover_count(A, B, side, budget),
        greedy_cover_count(B, A, side, budget),
    )


class NotApproximateGroupInput(ValueError):
    """approx_constant needs a symmetric set containing the identity."""


def approx_constant(X: FinSet, exact: bool = False) -> tuple[int, Fraction]:
    """``(k_upper, k_lower)`` for the number of right translates of X covering XX.

    ``k_lower = |XX|/|X|``; ``k_upper`` is the greedy count, or the exact
    minimum when ``exact=True`` (``|X| <= 64``).
    """
    _nonempty(X)
    if not X.has_identity() or inverse_set(X) != X:
        raise NotApproximateGroupInput("X must be symmetric and contain the identity; symmetrize first")
    XX = product(X, X)
    k_lower = Fraction(len(XX), len(X))
    if exact:
        k_upper = exact_cover_count(XX, X)
    else:
        k_upper = greedy_cover(XX, X).count
    return k_upper, k_lower
