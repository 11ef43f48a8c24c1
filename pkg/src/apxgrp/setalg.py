"""Exact finite-set algebra over a group backend.

A :class:`FinSet` is an immutable, deduplicated stack of element rows kept in
canonical (encoding byte) order.  Product-type operations partition the left
operand into blocks, evaluate each block against the whole right operand,
deduplicate per block, and merge.  Set semantics make the result independent
of the partition and of the order blocks finish in.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence, TextIO

import json

import numpy as np

from .groups import ContextMismatch, Elem, GroupCtx, GroupError, decode, encode

# pairs evaluated per block
BLOCK_PAIRS = 1 << 21
DENSE_LIMIT = 1 << 23
BITMAP_LIMIT = 1 << 25
DEFAULT_CAP = 10**7


class CapExceeded(RuntimeError):
    """An intermediate set grew past the caller's cap."""


# ---------------------------------------------------------------------------
# row keys


def _sortable_columns(ctx: GroupCtx, rows: np.ndarray) -> list[np.ndarray]:
    """Unsigned columns whose lexicographic order is the encoding byte order."""
    be = ctx.backend
    dt = be.enc_dtype
    if dt.itemsize == 1:
        return [rows[:, j].astype(np.uint8) for j in range(rows.shape[1])]
    udt = np.dtype(f"<u{dt.itemsize}")
    cols = []
    for j in range(rows.shape[1]):
        col = rows[:, j].astype(dt).view(udt)
        cols.append(col.byteswap())
    return cols


def canonical_order(ctx: GroupCtx, rows: np.ndarray) -> np.ndarray:
    if len(rows) <= 1:
        return np.arange(len(rows))
    cols = _sortable_columns(ctx, rows)
    return np.lexsort(cols[::-1])


def _box(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # column-wise reductions are much faster than axis=0 on narrow rows
    cols = range(rows.shape[1])
    return (np.array([rows[:, j].min() for j in cols], dtype=np.int64),
            np.array([rows[:, j].max() for j in cols], dtype=np.int64))


def _strides(lo: np.ndarray, hi: np.ndarray) -> np.ndarray | None:
    ext = [int(h) - int(l) + 1 for l, h in zip(lo, hi)]
    total = 1
    for e in ext:
        total *= e
    if total >= 2**62:
        return None
    strides = np.empty(len(ext), dtype=np.int64)
    acc = 1
    for j in range(len(ext) - 1, -1, -1):
        strides[j] = acc
        acc *= ext[j]
    return strides


def _pack(rows: np.ndarray, lo: np.ndarray, strides: np.ndarray) -> np.ndarray:
    key = (rows[:, 0] - lo[0]) * strides[0]
    for j in range(1, rows.shape[1]):
        key += (rows[:, j] - lo[j]) * strides[j]
    return key


def unique_rows(ctx: GroupCtx, rows: np.ndarray) -> np.ndarray:
    """Deduplicate rows and return them in canonical order."""
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, ctx.backend.width)
    if len(rows) == 0:
        return rows
    lo, hi = _box(rows)
    strides = _strides(lo, hi)
    if strides is not None:
        packed = _pack(rows, lo, strides)
        volume = int(strides[0]) * (int(hi[0]) - int(lo[0]) + 1)
        if volume <= max(BITMAP_LIMIT, 2 * len(rows)):
            # dense box: a presence bitmap replaces the sort
            mark = np.zeros(volume, dtype=bool)
            mark[packed] = True
            keys = np.flatnonzero(mark)
            rows = np.empty((len(keys), len(lo)), dtype=np.int64)
            for j in range(len(lo)):
                rows[:, j] = keys // strides[j] % (int(hi[j]) - int(lo[j]) + 1) + lo[j]
        else:
            _, idx = np.unique(packed, return_index=True)
            rows = rows[idx]
        return rows[canonical_order(ctx, rows)]
    rows = rows[canonical_order(ctx, rows)]
    keep = np.ones(len(rows), dtype=bool)
    keep[1:] = np.any(rows[1:] != rows[:-1], axis=1)
    return rows[keep]


class _Index:
    """Vectorised lookup of rows in a fixed canonical stack of rows."""

    def __init__(self, rows: np.ndarray):
        self.width = rows.shape[1]
        self.n = len(rows)
        if self.n == 0:
            return
        self.lo, self.hi = _box(rows)
        self.strides = _strides(self.lo, self.hi)
        self.table = None
        self.keys = None
        self.void = None
        if self.strides is not None:
            packed = _pack(rows, self.lo, self.strides)
            volume = int(np.prod([int(h) - int(l) + 1 for l, h in zip(self.lo, self.hi)]))
            if volume <= DENSE_LIMIT:
                self.table = np.full(volume, -1, dtype=np.int32 if self.n < 2**31 else np.int64)
                self.table[packed] = np.arange(self.n)
            else:
                self.order = np.argsort(packed, kind="stable")
                self.keys = packed[self.order]
        else:
            dt = np.dtype((np.void, 8 * self.width))
            void = np.ascontiguousarray(rows).view(dt).ravel()
            self.order = np.argsort(void, kind="stable")
            self.void = void[self.order]

    def locate(self, rows: np.ndarray) -> np.ndarray:
        """Position of each row in the indexed stack, -1 when absent."""
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, self.width)
        out = np.full(len(rows), -1, dtype=np.int64)
        if self.n == 0 or len(rows) == 0:
            return out
        if self.void is not None:
            q = np.ascontiguousarray(rows).view(self.void.dtype).ravel()
            pos = np.searchsorted(self.void, q).clip(max=self.n - 1)
            hit = self.void[pos] == q
            out[hit] = self.order[pos[hit]]
            return out
        inbox = (rows[:, 0] >= self.lo[0]) & (rows[:, 0] <= self.hi[0])
        for j in range(1, self.width):
            inbox &= (rows[:, j] >= self.lo[j]) & (rows[:, j] <= self.hi[j])
        if not inbox.any():
            return out
        packed = _pack(rows[inbox], self.lo, self.strides)
        if self.table is not None:
            out[inbox] = self.table[packed]
        else:
            pos = np.searchsorted(self.keys, packed).clip(max=self.n - 1)
            hit = self.keys[pos] == packed
            found = np.full(len(packed), -1, dtype=np.int64)
            found[hit] = self.order[pos[hit]]
            out[inbox] = found
        return out

    def contains(self, rows: np.ndarray) -> np.ndarray:
        return self.locate(rows) >= 0


# ---------------------------------------------------------------------------
# FinSet


class FinSet:
    """A finite set of group elements bound to one :class:`GroupCtx`.

    ``rows`` is an int64 array of shape ``(len, width)`` in canonical order.
    Iterating yields canonical byte encodings.
    """

    __slots__ = ("ctx", "rows", "_index", "_hash")

    def __init__(self, ctx: GroupCtx, rows, *, canonical: bool = False, validate: bool = True):
        be = ctx.backend
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, be.width)
        if validate:
            be.validate(rows)
        if not canonical:
            rows = unique_rows(ctx, rows)
        rows.setflags(write=False)
        self.ctx = ctx
        self.rows = rows
        self._index = None
        self._hash = None

    @classmethod
    def from_elems(cls, ctx: GroupCtx, elems: Iterable[Elem]) -> FinSet:
        rows = [decode(ctx, e) for e in elems]
        return cls(ctx, np.array(rows, dtype=np.int64).reshape(-1, ctx.backend.width))

    @classmethod
    def from_literals(cls, ctx: GroupCtx, texts: Iterable[str]) -> FinSet:
        be = ctx.backend
        rows = [be.parse(t) for t in texts]
        return cls(ctx, np.array(rows, dtype=np.int64).reshape(-1, be.width))

    @classmethod
    def from_ints(cls, values: Iterable[int], ctx: GroupCtx | None = None) -> FinSet:
        """Convenience for subsets of Z or Z/n."""
        ctx = ctx or GroupCtx.lattice(1)
        vals = np.array(list(values), dtype=np.int64).reshape(-1, 1)
        if ctx.kind == "modular":
            vals = vals % ctx.n
        return cls(ctx, vals)

    @classmethod
    def whole(cls, ctx: GroupCtx) -> FinSet:
        return cls(ctx, ctx.backend.all_elements(), validate=False)

    @classmethod
    def singleton_identity(cls, ctx: GroupCtx) -> FinSet:
        return cls(ctx, ctx.backend.identity_row()[None, :], canonical=True, validate=False)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def cardinality(self) -> int:
        return len(self.rows)

    def keys(self) -> np.ndarray:
        return self.ctx.backend.encode_rows(self.rows)

    def __iter__(self) -> Iterator[Elem]:
        for k in self.keys():
            yield bytes(k)

    def elements(self) -> list[Elem]:
        return list(self)

    def literals(self) -> list[str]:
        be = self.ctx.backend
        return [be.format(r) for r in self.rows]

    def __repr__(self) -> str:
        lits = self.literals()
        body = ", ".join(lits[:6]) + (", ..." if len(lits) > 6 else "")
        return f"FinSet[{self.ctx.describe()}, {len(self)}]{{{body}}}"

    @property
    def index(self) -> _Index:
        if self._index is None:
            self._index = _Index(self.rows)
        return self._index

    def contains_rows(self, rows) -> np.ndarray:
        return self.index.contains(rows)

    def locate_rows(self, rows) -> np.ndarray:
        """Positions of rows in ``self.rows`` (-1 when absent)."""
        return self.index.locate(rows)

    def __contains__(self, elem: Elem) -> bool:
        try:
            row = decode(self.ctx, elem)
        except GroupError:
            return False
        return bool(self.contains_rows(row[None, :])[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinSet):
            return NotImplemented
        return (
            self.ctx == other.ctx
            and self.rows.shape == other.rows.shape
            and bool(np.array_equal(self.rows, other.rows))
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ctx, self.rows.tobytes()))
        return self._hash

    def issubset(self, other: FinSet) -> bool:
        _check_ctx(self, other)
        return bool(other.contains_rows(self.rows).all())

    __le__ = issubset

    def first_outside(self, other: FinSet) -> np.ndarray | None:
        """First row (canonical order) of self missing from other, or None."""
        _check_ctx(self, other)
        miss = ~other.contains_rows(self.rows)
        if miss.any():
            return self.rows[int(np.argmax(miss))]
        return None

    def union(self, *others: FinSet) -> FinSet:
        for o in others:
            _check_ctx(self, o)
        return FinSet(self.ctx, np.concatenate([self.rows] + [o.rows for o in others]), validate=False)

    __or__ = union

    def intersection(self, other: FinSet) -> FinSet:
        _check_ctx(self, other)
        return FinSet(self.ctx, self.rows[other.contains_rows(self.rows)], canonical=True, validate=False)

    __and__ = intersection

    def difference(self, other: FinSet) -> FinSet:
        _check_ctx(self, other)
        return FinSet(self.ctx, self.rows[~other.contains_rows(self.rows)], canonical=True, validate=False)

    __sub__ = difference

    def filter(self, mask: np.ndarray) -> FinSet:
        return FinSet(self.ctx, self.rows[np.asarray(mask, dtype=bool)], canonical=True, validate=False)

    def is_symmetric(self) -> bool:
        return inverse_set(self) == self

    def has_identity(self) -> bool:
        return bool(self.contains_rows(self.ctx.backend.identity_row()[None, :])[0])

    def elem(self, i: int) -> Elem:
        return encode(self.ctx, self.rows[i])


def _check_ctx(a: FinSet, b: FinSet) -> None:
    if a.ctx != b.ctx:
        raise ContextMismatch(f"{a.ctx.describe()} vs {b.ctx.describe()}")


def _nonempty(*sets: FinSet) -> None:
    for s in sets:
        if len(s) == 0:
            raise ValueError("operation needs nonempty sets")


# ---------------------------------------------------------------------------
# blockwise pair evaluation


PairOp = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _op(ctx: GroupCtx, kind: str) -> PairOp:
    be = ctx.backend
    if kind == "mul":
        return be.mul
    if kind == "comm":
        return lambda a, b: be.mul(be.mul(a, b), be.inv(be.mul(b, a)))
    if kind == "conj":  # b^-1 a b
        return lambda a, b: be.mul(be.mul(be.inv(b), a), b)
    if kind == "lconj":  # a b a^-1
        return lambda a, b: be.mul(be.mul(a, b), be.inv(a))
    raise ValueError(kind)


def _blocks(n_left: int, n_right: int) -> list[slice]:
    step = max(1, BLOCK_PAIRS // max(1, n_right))
    return [slice(i, min(i + step, n_left)) for i in range(0, n_left, step)]


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("APXGRP_THREADS", "1"))
    return max(1, threads)


def pair_blocks(A: FinSet, B: FinSet, kind: str = "mul") -> Iterator[tuple[slice, np.ndarray]]:
    """Yield ``(left_slice, rows)`` with rows = op(a, b) for a in the slice, all b."""
    _check_ctx(A, B)
    op = _op(A.ctx, kind)
    w = A.ctx.backend.width
    for sl in _blocks(len(A), len(B)):
        a = A.rows[sl]
        out = op(a[:, None, :], B.rows[None, :, :])
        yield sl, out.reshape(-1, w)


def pair_set(A: FinSet, B: FinSet, kind: str = "mul", threads: int | None = None,
             cap: int | None = None) -> FinSet:
    _check_ctx(A, B)
    ctx = A.ctx
    op = _op(ctx, kind)
    w = ctx.backend.width
    slices = _blocks(len(A), len(B))

    def run(sl: slice) -> np.ndarray:
        a = A.rows[sl]
        return unique_rows(ctx, op(a[:, None, :], B.rows[None, :, :]).reshape(-1, w))

    nthreads = _threads(threads)
    parts: list[np.ndarray] = []
    merged = np.empty((0, w), dtype=np.int64)
    pending = 0
    if nthreads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            results = pool.map(run, slices)
            for r in results:
                parts.append(r)
    else:
        for sl in slices:
            parts.append(run(sl))
            pending += len(parts[-1])
            if pending > 4 * BLOCK_PAIRS:
                merged = unique_rows(ctx, np.concatenate([merged] + parts))
                parts, pending = [], 0
                if cap is not None and len(merged) > cap:
                    raise CapExceeded(len(merged))
    merged = unique_rows(ctx, np.concatenate([merged] + parts))
    if cap is not None and len(merged) > cap:
        raise CapExceeded(len(merged))
    return FinSet(ctx, merged, canonical=True, validate=False)


def first_pair_outside(A: FinSet, B: FinSet, target: FinSet, kind: str = "mul"):
    """Stream op(a, b) over A x B; return (a_row, b_row) of the first escape, or None."""
    _check_ctx(A, target)
    for sl, out in pair_blocks(A, B, kind):
        miss = ~target.contains_rows(out)
        if miss.any():
            i = int(np.argmax(miss))
            return A.rows[sl][i // len(B)], B.rows[i % len(B)]
    return None


# ---------------------------------------------------------------------------
# operations


def product(A: FinSet, B: FinSet, threads: int | None = None) -> FinSet:
    """The product set ``{a b : a in A, b in B}``."""
    _nonempty(A, B)
    return pair_set(A, B, "mul", threads)


def inverse_set(A: FinSet) -> FinSet:
    return FinSet(A.ctx, A.ctx.backend.inv(A.rows), validate=False)


def symmetrize(X: FinSet) -> FinSet:
    """``X | X^-1 | {1}``."""
    _nonempty(X)
    be = X.ctx.backend
    rows = np.concatenate([X.rows, be.inv(X.rows), be.identity_row()[None, :]])
    return FinSet(X.ctx, rows, validate=False)


def power(X: FinSet, n: int, threads: int | None = None) -> FinSet:
    """The n-fold product set X X ... X."""
    if n < 1:
        raise ValueError("power needs n >= 1")
    _nonempty(X)
    out = X
    for _ in range(n - 1):
        out = product(out, X, threads)
    return out


@dataclass(frozen=True)
class Growth:
    """A growth statistic ``numerator / size``."""

    ratio: Fraction
    numerator: int
    size: int
    variant: str  # "tripling" (X X^-1 X) or "doubling" (X X)
    symmetric: bool

    @property
    def cube(self) -> int | None:
        """|X^3| when X is symmetric (then X X^-1 X = X^3)."""
        return self.numerator if self.symmetric and self.variant == "tripling" else None


def tripling(X: FinSet, variant: str = "tripling", threads: int | None = None) -> Growth:
    """Exact ``|X X^-1 X| / |X|`` (or ``|XX|/|X|`` with ``variant="doubling"``)."""
    _nonempty(X)
    inv = inverse_set(X)
    sym = inv == X
    if variant == "tripling":
        num = product(product(X, inv, threads), X, threads)
    elif variant == "doubling":
        num = product(X, X, threads)
    else:
        raise ValueError(f"unknown growth variant {variant!r}")
    return Growth(Fraction(len(num), len(X)), len(num), len(X), variant, sym)


def doubling(X: FinSet, threads: int | None = None) -> Growth:
    return tripling(X, "doubling", threads)


def commutator_set(A: FinSet, B: FinSet, threads: int | None = None) -> FinSet:
    """``{a b a^-1 b^-1 : a in A, b in B}``."""
    _nonempty(A, B)
    return pair_set(A, B, "comm", threads)


def conj_set(a: Elem | np.ndarray, X: FinSet) -> FinSet:
    """``a^X = {x^-1 a x : x in X}``."""
    be = X.ctx.backend
    row = decode(X.ctx, a) if isinstance(a, (bytes, bytearray)) else np.asarray(a, np.int64)
    out = be.mul(be.mul(be.inv(X.rows), row[None, :]), X.rows)
    return FinSet(X.ctx, out, validate=False)


def conj_prod_size(a_list: Sequence[Elem], X: FinSet, cap: int = DEFAULT_CAP) -> tuple[int, bool]:
    """``|a_1^X a_2^X ... a_l^X|`` by left-to-right products, stopping past ``cap``.

    Returns ``(size, capped)``; when capped, ``size >= cap``.
    """
    if not a_list:
        raise ValueError("conj_prod_size needs at least one element")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    acc = conj_set(a_list[0], X)
    if len(acc) > cap:
        return len(acc), True
    for a in a_list[1:]:
        try:
            acc = pair_set(acc, conj_set(a, X), "mul", cap=cap)
        except CapExceeded as exc:
            return int(exc.args[0]), True
    return len(acc), False


# ---------------------------------------------------------------------------
# serialisation


HEADER = "# apxgrp-finset "


def dump(X: FinSet, fp: TextIO) -> None:
    """Header line naming the backend, then one element literal per line."""
    fp.write(HEADER + json.dumps(X.ctx.to_dict(), sort_keys=True) + "\n")
    for lit in X.literals():
        fp.write(lit + "\n")


def dumps(X: FinSet) -> str:
    import io

    buf = io.StringIO()
    dump(X, buf)
    return buf.getvalue()


def load(fp: TextIO) -> FinSet:
    header = fp.readline()
    if not header.startswith(HEADER):
        raise GroupError("missing FinSet header line")
    ctx = GroupCtx.from_dict(json.loads(header[len(HEADER):]))
    lines = [ln.strip() for ln in fp if ln.strip()]
    return FinSet.from_literals(ctx, lines)


def loads(text: str) -> FinSet:
    import io

    return load(io.StringIO(text))
