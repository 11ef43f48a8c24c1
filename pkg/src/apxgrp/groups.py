"""Group backends with a uniform, canonical element encoding.

Every backend stores an element as a fixed-width row of integers (an int64
numpy vector). All arithmetic is vectorised over stacks of rows, so the set
engine in :mod:`apxgrp.setalg` never needs to know which group it is in.

The canonical encoding of a row is a fixed-length byte string:

* integer lattice, Heisenberg: 8-byte little-endian signed coordinates;
* modular lattice, SL2/GL2: residues in ``[0, n)`` as little-endian unsigned
  integers of the smallest width in {1, 2, 4, 8} bytes that holds them;
* symmetric group: the image word (0-based) as unsigned integers;
* Cayley (rewriting) backend: the normal-form word, one byte per letter,
  zero padded to ``max_len``.

Equal elements have byte-identical encodings, and canonical set order is the
lexicographic order of these byte strings.

Permutations compose right to left: ``(s*t)(i) = s(t(i))``.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

Elem = bytes

INT64_MAX = 2**63 - 1
INT64_MIN = -(2**63)

KINDS = ("lattice", "modular", "symmetric", "sl2", "gl2", "heisenberg", "cayley")


class GroupError(ValueError):
    """Invalid backend parameters or an element that does not belong to ctx."""


class ContextMismatch(GroupError):
    """Operands belong to structurally different group contexts."""


class CoordinateOverflow(ArithmeticError):
    """A lattice/Heisenberg/word result left the exactly representable window."""


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class GroupCtx:
    """Descriptor of an ambient group.

    Two contexts interoperate only when they compare equal.  Use the
    classmethod constructors rather than filling fields by hand.
    """

    kind: str
    d: int = 1
    n: int = 0
    p: int = 0
    generators: tuple[str, ...] = ()
    rules: tuple[tuple[str, str], ...] = ()
    max_len: int = 32
    exponent: int | None = None

    def __post_init__(self):
        backend_for(self)  # validates

    @classmethod
    def lattice(cls, d: int = 1) -> GroupCtx:
        return cls("lattice", d=d)

    @classmethod
    def modular(cls, n: int, d: int = 1, exponent: int | None = None) -> GroupCtx:
        return cls("modular", d=d, n=n, exponent=n if exponent is None else exponent)

    @classmethod
    def symmetric(cls, n: int, generators: Sequence[str] = ()) -> GroupCtx:
        return cls("symmetric", n=n, generators=tuple(generators))

    @classmethod
    def sl2(cls, p: int, generators: Sequence[str] = ()) -> GroupCtx:
        return cls("sl2", p=p, generators=tuple(generators))

    @classmethod
    def gl2(cls, p: int, generators: Sequence[str] = ()) -> GroupCtx:
        return cls("gl2", p=p, generators=tuple(generators))

    @classmethod
    def heisenberg(cls) -> GroupCtx:
        return cls("heisenberg", d=3)

    @classmethod
    def cayley(
        cls,
        generators: Sequence[str] = ("a", "b"),
        rules: Sequence[tuple[str, str]] = (),
        max_len: int = 32,
    ) -> GroupCtx:
        return cls(
            "cayley",
            generators=tuple(generators),
            rules=tuple((str(l), str(r)) for l, r in rules),
            max_len=max_len,
        )

    @property
    def backend(self) -> Backend:
        return backend_for(self)

    def describe(self) -> str:
        """Short one-line name, used in serialisation headers and CSV rows."""
        k = self.kind
        if k == "lattice":
            return f"Z^{self.d}"
        if k == "modular":
            return f"(Z/{self.n})^{self.d}"
        if k == "symmetric":
            return f"S_{self.n}"
        if k in ("sl2", "gl2"):
            return f"{k.upper()}(F_{self.p})"
        if k == "heisenberg":
            return "H3(Z)"
        return f"Free<{','.join(self.generators)}>" + ("/R" if self.rules else "")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind in ("lattice", "modular"):
            out["d"] = self.d
        if self.kind in ("modular", "symmetric"):
            out["n"] = self.n
        if self.kind in ("sl2", "gl2"):
            out["p"] = self.p
        if self.generators:
            out["generators"] = list(self.generators)
        if self.kind == "cayley":
            out["rules"] = [list(r) for r in self.rules]
            out["max_len"] = self.max_len
        if self.exponent is not None:
            out["exponent"] = self.exponent
        return out

    @classmethod
    def from_dict(cls, data: dict) -> GroupCtx:
        data = dict(data)
        kind = data.pop("kind", None)
        allowed = {"d", "n", "p", "generators", "rules", "max_len", "exponent"}
        unknown = set(data) - allowed
        if unknown:
            raise GroupError(f"unknown backend keys: {sorted(unknown)}")
        if kind == "lattice":
            ctx = cls.lattice(int(data.get("d", 1)))
        elif kind == "modular":
            ctx = cls.modular(int(data["n"]), int(data.get("d", 1)), data.get("exponent"))
        elif kind == "symmetric":
            ctx = cls.symmetric(int(data["n"]), data.get("generators", ()))
        elif kind == "sl2":
            ctx = cls.sl2(int(data["p"]), data.get("generators", ()))
        elif kind == "gl2":
            ctx = cls.gl2(int(data["p"]), data.get("generators", ()))
        elif kind == "heisenberg":
            ctx = cls.heisenberg()
        elif kind == "cayley":
            ctx = cls.cayley(
                data.get("generators", ("a", "b")),
                [tuple(r) for r in data.get("rules", ())],
                int(data.get("max_len", 32)),
            )
        else:
            raise GroupError(f"unknown backend kind {kind!r}")
        if "exponent" in data and kind != "modular":
            ctx = cls(**{**ctx.__dict__, "exponent": int(data["exponent"])})
        return ctx


# ---------------------------------------------------------------------------
# backends


def _uint_dtype(bound: int) -> np.dtype:
    for width in (1, 2, 4, 8):
        if bound <= 2 ** (8 * width):
            return np.dtype(f"<u{width}")
    raise GroupError("residue range too large")


class Backend:
    """Vectorised arithmetic on stacks of rows (shape ``(m, width)``)."""

    width: int
    enc_dtype: np.dtype
    abelian = False

    def __init__(self, ctx: GroupCtx):
        self.ctx = ctx

    # arithmetic --------------------------------------------------------
    def identity_row(self) -> np.ndarray:
        raise NotImplementedError

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inv(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pow(self, a: np.ndarray, k: int) -> np.ndarray:
        """Row-wise ``a**k`` for k >= 0 by repeated squaring."""
        result = np.broadcast_to(self.identity_row(), a.shape).copy()
        base = a
        while k:
            if k & 1:
                result = self.mul(result, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return result

    def validate(self, rows: np.ndarray) -> None:
        pass

    # bounded coordinate domain (None when unbounded)
    def coord_bounds(self) -> tuple[int, int] | None:
        return None

    def order(self) -> int | None:
        return None

    def all_elements(self) -> np.ndarray:
        raise GroupError(f"{self.ctx.describe()} cannot be enumerated")

    # text grammar ------------------------------------------------------
    def parse(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def format(self, row: np.ndarray) -> str:
        raise NotImplementedError

    # encoding ----------------------------------------------------------
    @property
    def enc_len(self) -> int:
        return self.width * self.enc_dtype.itemsize

    def encode_rows(self, rows: np.ndarray) -> np.ndarray:
        """Rows -> 1-d array of void scalars holding the canonical bytes."""
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, self.width)
        raw = np.ascontiguousarray(rows.astype(self.enc_dtype))
        return raw.view(np.dtype((np.void, self.enc_len))).reshape(-1)

    def decode_rows(self, keys: np.ndarray) -> np.ndarray:
        keys = np.ascontiguousarray(keys)
        raw = keys.view(self.enc_dtype).reshape(-1, self.width)
        return raw.astype(np.int64)


class LatticeBackend(Backend):
    enc_dtype = np.dtype("<i8")
    abelian = True

    def __init__(self, ctx):
        super().__init__(ctx)
        if ctx.d < 1:
            raise GroupError("lattice rank must be >= 1")
        self.width = ctx.d

    def identity_row(self):
        return np.zeros(self.width, dtype=np.int64)

    def mul(self, a, b):
        a, b = np.asarray(a, np.int64), np.asarray(b, np.int64)
        if a.size and b.size and _absmax(a) + _absmax(b) > INT64_MAX:
            a, b = np.broadcast_arrays(a, b)
            return _exact_or_raise(a.astype(object) + b.astype(object))
        return a + b

    def inv(self, a):
        a = np.asarray(a, np.int64)
        if a.size and int(a.min()) == INT64_MIN:
            raise CoordinateOverflow("negating the most negative int64")
        return -a

    def parse(self, text):
        return _parse_tuple(text, self.width)

    def format(self, row):
        return "(" + ",".join(str(int(v)) for v in row) + ")"


class ModularBackend(Backend):
    abelian = True

    def __init__(self, ctx):
        super().__init__(ctx)
        if ctx.d < 1 or ctx.n < 1:
            raise GroupError("modular lattice needs d >= 1 and n >= 1")
        self.width = ctx.d
        self.enc_dtype = _uint_dtype(ctx.n)

    def identity_row(self):
        return np.zeros(self.width, dtype=np.int64)

    def mul(self, a, b):
        return (np.asarray(a, np.int64) + np.asarray(b, np.int64)) % self.ctx.n

    def inv(self, a):
        return (-np.asarray(a, np.int64)) % self.ctx.n

    def validate(self, rows):
        if rows.size and (rows.min() < 0 or rows.max() >= self.ctx.n):
            raise GroupError(f"residues must lie in [0, {self.ctx.n})")

    def coord_bounds(self):
        return 0, self.ctx.n - 1

    def order(self):
        return self.ctx.n**self.ctx.d

    def all_elements(self):
        n, d = self.ctx.n, self.ctx.d
        grid = np.indices((n,) * d).reshape(d, -1).T
        return grid.astype(np.int64)

    def parse(self, text):
        return _parse_tuple(text, self.width) % self.ctx.n

    def format(self, row):
        return "(" + ",".join(str(int(v)) for v in row) + ")"


class SymmetricBackend(Backend):
    def __init__(self, ctx):
        super().__init__(ctx)
        if ctx.n < 1:
            raise GroupError("symmetric degree must be >= 1")
        self.width = ctx.n
        self.enc_dtype = _uint_dtype(ctx.n)
        self.abelian = ctx.n <= 2
        for g in ctx.generators:
            self.parse(g)

    def identity_row(self):
        return np.arange(self.width, dtype=np.int64)

    def mul(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, np.int64), np.asarray(b, np.int64))
        # (s*t)(i) = s(t(i))
        return np.take_along_axis(a, b, axis=-1)

    def inv(self, a):
        a = np.asarray(a, np.int64)
        return np.argsort(a, axis=-1, kind="stable").astype(np.int64)

    def validate(self, rows):
        if rows.size == 0:
            return
        ok = np.all(np.sort(rows, axis=-1) == np.arange(self.width), axis=-1)
        if not ok.all():
            raise GroupError("row is not a permutation image word")

    def coord_bounds(self):
        return 0, self.ctx.n - 1

    def order(self):
        out = 1
        for i in range(2, self.ctx.n + 1):
            out *= i
        return out

    def all_elements(self):
        import itertools

        if self.ctx.n > 9:
            raise GroupError("refusing to enumerate S_n for n > 9")
        return np.array(list(itertools.permutations(range(self.ctx.n))), dtype=np.int64)

    def parse(self, text):
        text = text.strip()
        img = list(range(self.width))
        if text in ("", "()", "e", "1"):
            return np.array(img, dtype=np.int64)
        if not re.fullmatch(r"(\(\s*\d+(?:[\s,]+\d+)*\s*\)\s*)+", text):
            raise GroupError(f"bad cycle literal {text!r}")
        perm = np.arange(self.width, dtype=np.int64)
        # cycles written left to right compose right to left, like the product
        for cyc in reversed(re.findall(r"\(([^)]*)\)", text)):
            pts = [int(t) - 1 for t in re.split(r"[\s,]+", cyc.strip())]
            if any(q < 0 or q >= self.width for q in pts) or len(set(pts)) != len(pts):
                raise GroupError(f"bad cycle {cyc!r} for S_{self.width}")
            c = np.arange(self.width, dtype=np.int64)
            for i, q in enumerate(pts):
                c[q] = pts[(i + 1) % len(pts)]
            perm = self.mul(c, perm)
        return perm

    def format(self, row):
        row = [int(v) for v in row]
        seen = [False] * len(row)
        parts = []
        for i in range(len(row)):
            if seen[i] or row[i] == i:
                seen[i] = True
                continue
            cyc, j = [], i
            while not seen[j]:
                seen[j] = True
                cyc.append(j + 1)
                j = row[j]
            parts.append("(" + " ".join(map(str, cyc)) + ")")
        return "".join(parts) or "()"


class Mat2Backend(Backend):
    """2x2 matrices over F_p, row-major ``(a, b, c, d)``."""

    width = 4

    def __init__(self, ctx):
        super().__init__(ctx)
        p = ctx.p
        if not _is_prime(p):
            raise GroupError(f"p={p} is not prime")
        if p >= 2**31:
            raise GroupError("p must be below 2^31 for exact int64 products")
        self.p = p
        self.special = ctx.kind == "sl2"
        self.enc_dtype = _uint_dtype(p)
        for g in ctx.generators:
            self.validate(self.parse(g)[None, :])

    def identity_row(self):
        return np.array([1, 0, 0, 1], dtype=np.int64)

    def mul(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, np.int64), np.asarray(y, np.int64))
        p = self.p
        a, b, c, d = (x[..., i] for i in range(4))
        e, f, g, h = (y[..., i] for i in range(4))
        return np.stack(
            [(a * e % p + b * g) % p, (a * f % p + b * h) % p,
             (c * e % p + d * g) % p, (c * f % p + d * h) % p],
            axis=-1,
        )

    def det(self, x):
        x = np.asarray(x, np.int64)
        return (x[..., 0] * x[..., 3] % self.p - x[..., 1] * x[..., 2] % self.p) % self.p

    def inv(self, x):
        x = np.asarray(x, np.int64)
        p = self.p
        det = self.det(x)
        dinv = np.array([pow(int(v), p - 2, p) for v in det.reshape(-1)], dtype=np.int64)
        dinv = dinv.reshape(det.shape)
        adj = np.stack([x[..., 3], -x[..., 1], -x[..., 2], x[..., 0]], axis=-1) % p
        return adj * dinv[..., None] % p

    def validate(self, rows):
        if rows.size == 0:
            return
        if rows.min() < 0 or rows.max() >= self.p:
            raise GroupError(f"matrix entries must lie in [0, {self.p})")
        det = self.det(rows)
        if self.special and np.any(det != 1):
            raise GroupError("matrix does not have determinant 1")
        if np.any(det == 0):
            raise GroupError("matrix is singular")

    def coord_bounds(self):
        return 0, self.p - 1

    def order(self):
        p = self.p
        gl = (p * p - 1) * (p * p - p)
        return gl // (p - 1) if self.special else gl

    def all_elements(self):
        if self.special:
            return sl2_elements(self.p)
        p = self.p
        grid = np.indices((p,) * 4).reshape(4, -1).T.astype(np.int64)
        return grid[self.det(grid) != 0]

    def parse(self, text):
        nums = re.findall(r"-?\d+", text)
        if len(nums) != 4 or not re.fullmatch(r"\s*\[\s*\[.*\]\s*,\s*\[.*\]\s*\]\s*", text):
            raise GroupError(f"bad matrix literal {text!r}")
        return np.array([int(v) % self.p for v in nums], dtype=np.int64)

    def format(self, row):
        a, b, c, d = (int(v) for v in row)
        return f"[[{a},{b}],[{c},{d}]]"


def sl2_elements(p: int) -> np.ndarray:
    """All of SL2(F_p), already in canonical (lexicographic) order."""
    chunks = []
    inv = np.array([0] + [pow(v, p - 2, p) for v in range(1, p)], dtype=np.int64)
    r = np.arange(p, dtype=np.int64)
    for a in range(p):
        if a:
            # d = (1 + b c) / a, every (b, c) works
            b, c = np.meshgrid(r, r, indexing="ij")
            b, c = b.ravel(), c.ravel()
            d = (1 + b * c) % p * inv[a] % p
            block = np.stack([np.full_like(b, a), b, c, d], axis=1)
        else:
            # a = 0 forces b c = -1, d free
            b = r[1:]
            c = (-inv[b]) % p
            bb = np.repeat(b, p)
            cc = np.repeat(c, p)
            dd = np.tile(r, p - 1)
            block = np.stack([np.zeros_like(bb), bb, cc, dd], axis=1)
        chunks.append(block)
    out = np.concatenate(chunks)
    order = np.lexsort(out.T[::-1])
    return out[order]


class HeisenbergBackend(Backend):
    """Discrete Heisenberg group, ``(x,y,z)(x',y',z') = (x+x', y+y', z+z'+x y')``."""

    width = 3
    enc_dtype = np.dtype("<i8")

    def identity_row(self):
        return np.zeros(3, dtype=np.int64)

    def mul(self, a, b):
        a, b = np.asarray(a, np.int64), np.asarray(b, np.int64)
        if a.size and b.size:
            ma = [_absmax(a[..., j]) for j in range(3)]
            mb = [_absmax(b[..., j]) for j in range(3)]
            if max(ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2] + ma[0] * mb[1]) > INT64_MAX:
                a, b = np.broadcast_arrays(a, b)
                ao, bo = a.astype(object), b.astype(object)
                exact = np.stack(
                    [ao[..., 0] + bo[..., 0], ao[..., 1] + bo[..., 1],
                     ao[..., 2] + bo[..., 2] + ao[..., 0] * bo[..., 1]],
                    axis=-1,
                )
                return _exact_or_raise(exact)
        shape = np.broadcast_shapes(a.shape, b.shape)
        out = np.empty(shape, dtype=np.int64)
        np.add(a[..., 0], b[..., 0], out=out[..., 0])
        np.add(a[..., 1], b[..., 1], out=out[..., 1])
        np.multiply(a[..., 0], b[..., 1], out=out[..., 2])
        out[..., 2] += a[..., 2]
        out[..., 2] += b[..., 2]
        return out

    def inv(self, a):
        a = np.asarray(a, np.int64)
        if a.size == 0 or _absmax(a) < 2**31:
            return np.stack([-a[..., 0], -a[..., 1], -a[..., 2] + a[..., 0] * a[..., 1]], axis=-1)
        ao = a.astype(object)
        exact = np.stack([-ao[..., 0], -ao[..., 1], -ao[..., 2] + ao[..., 0] * ao[..., 1]], axis=-1)
        return _exact_or_raise(exact)

    def parse(self, text):
        return _parse_tuple(text, 3)

    def format(self, row):
        return "(" + ",".join(str(int(v)) for v in row) + ")"


class CayleyBackend(Backend):
    """Words over named generators in normal form for a confluent rewriting system.

    Letters are coded ``1..k`` for the generators and ``k+1..2k`` for their
    inverses; ``0`` pads the fixed-width row.  Free cancellation is always in
    force; extra rules ``lhs -> rhs`` (word literals) must be length-reducing
    or shortlex-reducing and confluent, otherwise the context is rejected.
    """

    enc_dtype = np.dtype("<u1")

    def __init__(self, ctx):
        super().__init__(ctx)
        k = len(ctx.generators)
        if k < 1 or k > 120:
            raise GroupError("cayley backend needs 1..120 generators")
        if len(set(ctx.generators)) != k or any(not re.fullmatch(r"[A-Za-z]\w*", g) for g in ctx.generators):
            raise GroupError("generator names must be distinct identifiers")
        if ctx.max_len < 1:
            raise GroupError("max_len must be >= 1")
        self.k = k
        self.width = ctx.max_len
        self.names = {g: i + 1 for i, g in enumerate(ctx.generators)}
        self.rules = [(self._parse_word(l), self._parse_word(r)) for l, r in ctx.rules]
        for lhs, rhs in self.rules:
            if not lhs or not _shortlex_less(rhs, lhs):
                raise GroupError(f"rule {lhs}->{rhs} is not shortlex-reducing")
        self.abelian = k == 1 and not self.rules
        if self.rules:
            bad = self.critical_pair_failure()
            if bad is not None:
                raise GroupError(f"rewriting system is not confluent: critical pair {bad}")

    def inv_letter(self, x: int) -> int:
        return x + self.k if x <= self.k else x - self.k

    def _parse_word(self, text: str) -> tuple[int, ...]:
        text = text.strip()
        if text in ("", "e", "1"):
            return ()
        out = []
        for tok in re.split(r"[\s*]+", text):
            m = re.fullmatch(r"([A-Za-z]\w*?)(\^(-?\d+))?", tok)
            if not m or m.group(1) not in self.names:
                raise GroupError(f"bad word token {tok!r}")
            e = int(m.group(3)) if m.group(3) else 1
            letter = self.names[m.group(1)]
            out.extend([letter if e > 0 else self.inv_letter(letter)] * abs(e))
        return tuple(out)

    def reduce(self, word: Sequence[int]) -> tuple[int, ...]:
        w = list(word)
        while True:
            stack: list[int] = []
            for x in w:
                if stack and stack[-1] == self.inv_letter(x):
                    stack.pop()
                else:
                    stack.append(x)
            w = stack
            changed = False
            for lhs, rhs in self.rules:
                n = len(lhs)
                for i in range(len(w) - n + 1):
                    if tuple(w[i:i + n]) == lhs:
                        w = w[:i] + list(rhs) + w[i + n:]
                        changed = True
                        break
                if changed:
                    break
            if not changed:
                return tuple(w)

    def critical_pair_failure(self):
        """Return an unjoinable overlap of two rules, or None."""
        all_rules = list(self.rules)
        for x in range(1, 2 * self.k + 1):
            all_rules.append(((x, self.inv_letter(x)), ()))
        for l1, r1 in all_rules:
            for l2, r2 in all_rules:
                for ov in range(1, min(len(l1), len(l2)) + 1):
                    if l1[-ov:] != l2[:ov]:
                        continue
                    if (l1, ov) == (l2, len(l2)) and l1 == l2:
                        continue
                    word = l1 + l2[ov:]
                    a = self.reduce(r1 + l2[ov:])
                    b = self.reduce(l1[:-ov] + r2)
                    if a != b:
                        return (word, a, b)
                # l2 inside l1
                for i in range(len(l1) - len(l2) + 1):
                    if l1[i:i + len(l2)] == l2 and (l1, r1) != (l2, r2):
                        a = self.reduce(r1)
                        b = self.reduce(l1[:i] + r2 + l1[i + len(l2):])
                        if a != b:
                            return (l1, a, b)
        return None

    def _to_row(self, word: tuple[int, ...]) -> np.ndarray:
        if len(word) > self.width:
            raise CoordinateOverflow(f"word length {len(word)} exceeds max_len {self.width}")
        row = np.zeros(self.width, dtype=np.int64)
        row[: len(word)] = word
        return row

    @staticmethod
    def _word(row) -> tuple[int, ...]:
        return tuple(int(v) for v in row if v)

    def identity_row(self):
        return np.zeros(self.width, dtype=np.int64)

    def mul(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, np.int64), np.asarray(b, np.int64))
        flat_a = a.reshape(-1, self.width)
        flat_b = b.reshape(-1, self.width)
        out = np.empty_like(flat_a)
        for i in range(len(flat_a)):
            out[i] = self._to_row(self.reduce(self._word(flat_a[i]) + self._word(flat_b[i])))
        return out.reshape(a.shape)

    def inv(self, a):
        a = np.asarray(a, np.int64)
        flat = a.reshape(-1, self.width)
        out = np.empty_like(flat)
        for i in range(len(flat)):
            w = self._word(flat[i])
            out[i] = self._to_row(self.reduce(tuple(self.inv_letter(x) for x in reversed(w))))
        return out.reshape(a.shape)

    def validate(self, rows):
        for row in rows.reshape(-1, self.width):
            w = list(row)
            while w and w[-1] == 0:
                w.pop()
            if any(x < 1 or x > 2 * self.k for x in w):
                raise GroupError("invalid letter code in word row")
            if tuple(w) != self.reduce(w):
                raise GroupError("word row is not in normal form")

    def coord_bounds(self):
        return 0, 2 * self.k

    def parse(self, text):
        return self._to_row(self.reduce(self._parse_word(text)))

    def format(self, row):
        w = self._word(row)
        if not w:
            return "e"
        gens = self.ctx.generators
        return "*".join(gens[x - 1] if x <= self.k else gens[x - self.k - 1] + "^-1" for x in w)


def _shortlex_less(u: tuple[int, ...], v: tuple[int, ...]) -> bool:
    return (len(u), u) < (len(v), v)


def _absmax(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    return max(abs(int(a.max())), abs(int(a.min())))


def _exact_or_raise(exact: np.ndarray) -> np.ndarray:
    flat = exact.reshape(-1)
    for v in flat:
        if v > INT64_MAX or v < INT64_MIN:
            raise CoordinateOverflow(f"coordinate {v} outside the checked int64 range")
    return exact.astype(np.int64)


def _parse_tuple(text: str, width: int) -> np.ndarray:
    m = re.fullmatch(r"\s*\(\s*(-?\d+(?:\s*,\s*-?\d+)*)\s*\)\s*", text)
    if not m:
        raise GroupError(f"bad tuple literal {text!r}")
    vals = [int(v) for v in m.group(1).split(",")]
    if len(vals) != width:
        raise GroupError(f"expected {width} coordinates, got {len(vals)}")
    for v in vals:
        if v > INT64_MAX or v < INT64_MIN:
            raise CoordinateOverflow(f"literal coordinate {v} outside int64")
    return np.array(vals, dtype=np.int64)


_BACKENDS = {
    "lattice": LatticeBackend,
    "modular": ModularBackend,
    "symmetric": SymmetricBackend,
    "sl2": Mat2Backend,
    "gl2": Mat2Backend,
    "heisenberg": HeisenbergBackend,
    "cayley": CayleyBackend,
}


@functools.lru_cache(maxsize=None)
def backend_for(ctx: GroupCtx) -> Backend:
    if ctx.kind not in _BACKENDS:
        raise GroupError(f"unknown backend kind {ctx.kind!r}")
    if ctx.exponent is not None and ctx.exponent < 1:
        raise GroupError("element-order bound must be positive")
    return _BACKENDS[ctx.kind](ctx)


# ---------------------------------------------------------------------------
# scalar element API


def encode(ctx: GroupCtx, row) -> Elem:
    be = ctx.backend
    row = np.asarray(row, dtype=np.int64).reshape(be.width)
    return bytes(be.encode_rows(row[None, :])[0])


def decode(ctx: GroupCtx, a: Elem) -> np.ndarray:
    be = ctx.backend
    if not isinstance(a, (bytes, bytearray)) or len(a) != be.enc_len:
        raise ContextMismatch(f"encoding of length {len(a)} does not fit {ctx.describe()}")
    key = np.frombuffer(bytes(a), dtype=np.dtype((np.void, be.enc_len)))
    row = be.decode_rows(key)[0]
    be.validate(row[None, :])
    return row


def mul(ctx: GroupCtx, a: Elem, b: Elem) -> Elem:
    be = ctx.backend
    return encode(ctx, be.mul(decode(ctx, a)[None], decode(ctx, b)[None])[0])


def inv(ctx: GroupCtx, a: Elem) -> Elem:
    be = ctx.backend
    return encode(ctx, be.inv(decode(ctx, a)[None])[0])


def identity(ctx: GroupCtx) -> Elem:
    return encode(ctx, ctx.backend.identity_row())


def parse_elem(ctx: GroupCtx, text: str) -> Elem:
    be = ctx.backend
    row = be.parse(text)
    be.validate(row[None, :])
    return encode(ctx, row)


def format_elem(ctx: GroupCtx, a: Elem) -> str:
    return ctx.backend.format(decode(ctx, a))


def generators(ctx: GroupCtx) -> list[Elem]:
    """The ctx generator list as encoded elements (Cayley: the named letters)."""
    return [parse_elem(ctx, g) for g in ctx.generators]
