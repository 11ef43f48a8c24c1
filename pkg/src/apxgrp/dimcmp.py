"""Point counts on subvarieties of SL2(F_p) against the |Gamma|^(dim Z / dim G) law,
and the linear dichotomy classification of small subsets of SL2(F_p).

Counts are exact integers; the exponent ratios ``log|Z cap Gamma| / log|Gamma|``
are taken in double precision afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .groups import GroupCtx, GroupError
from .probes import ProbeReport, group_closure, right_coset_count
from .setalg import FinSet, inverse_set, product

Predicate = Callable[[np.ndarray, int], np.ndarray]

AMBIENT_DIM = {"sl2": 3, "gl2": 4}


@dataclass(frozen=True)
class VarietySpec:
    name: str
    predicate: Predicate = field(compare=False)
    dim: int

    def mask(self, rows: np.ndarray, p: int) -> np.ndarray:
        return self.predicate(rows, p)


def _torus(r, p):
    return (r[:, 1] == 0) & (r[:, 2] == 0)


def _unipotent(r, p):
    return (r[:, 0] == 1) & (r[:, 3] == 1) & (r[:, 2] == 0)


def _borel(r, p):
    return r[:, 2] == 0


def _normalizer(r, p):
    return _torus(r, p) | ((r[:, 0] == 0) & (r[:, 3] == 0))


def _center(r, p):
    return _torus(r, p) & (r[:, 0] == r[:, 3])


def _whole(r, p):
    return np.ones(len(r), dtype=bool)


def trace_level(c: int) -> VarietySpec:
    """``{g : tr g = c}``, a surface in SL2."""
    return VarietySpec(f"trace={c}", lambda r, p: (r[:, 0] + r[:, 3]) % p == c % p, 2)


BUILTIN = {
    "torus": VarietySpec("torus", _torus, 1),
    "unipotent": VarietySpec("unipotent", _unipotent, 1),
    "borel": VarietySpec("borel", _borel, 2),
    "normalizer": VarietySpec("normalizer", _normalizer, 1),
    "trace": trace_level(2),
    "center": VarietySpec("center", _center, 0),
}

WHOLE = VarietySpec("whole", _whole, 3)


def variety(name: str) -> VarietySpec:
    """Look up a built-in variety by name; ``trace=c`` selects a trace level set."""
    if name.startswith("trace="):
        return trace_level(int(name.split("=", 1)[1]))
    if name == "whole":
        return WHOLE
    try:
        return BUILTIN[name]
    except KeyError:
        raise GroupError(f"unknown variety {name!r}; known: {sorted(BUILTIN)}") from None


def _matrix_ctx(Gamma: FinSet) -> GroupCtx:
    if Gamma.ctx.kind not in AMBIENT_DIM:
        raise GroupError(f"{Gamma.ctx.describe()} is not an SL2/GL2 backend")
    return Gamma.ctx


def variety_count(Gamma: FinSet, Z: VarietySpec) -> int:
    """``|{g in Gamma : g in Z}|``."""
    ctx = _matrix_ctx(Gamma)
    return int(Z.mask(Gamma.rows, ctx.p).sum())


@dataclass
class DimRow:
    name: str
    dim: int
    count: int
    ratio: float
    bound: float
    slack: float
    passed: bool
    unbalanced: bool

    def to_dict(self) -> dict:
        return {
            "variety": self.name, "dim": self.dim, "count": self.count,
            "ratio": self.ratio, "bound": self.bound, "slack": self.slack,
            "pass": self.passed, "unbalanced": self.unbalanced,
        }


@dataclass
class DimReport:
    p: int
    size: int
    dim_G: int
    gamma0: float
    epsilon: float
    rows: list[DimRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "p": self.p, "size": self.size, "dim_G": self.dim_G,
            "gamma0": self.gamma0, "epsilon": self.epsilon,
            "pass": self.passed, "rows": [r.to_dict() for r in self.rows],
        }


def lp_report(Gamma: FinSet, varieties: Sequence[VarietySpec] | None = None, epsilon: float = 0.02) -> DimReport:
    """Compare ``log|Z cap Gamma| / log|Gamma|`` with ``dim Z / dim G`` (+ epsilon).

    A variety whose ratio exceeds ``dim Z / dim G`` is flagged unbalanced; it
    fails only when the excess is larger than ``epsilon``.
    """
    ctx = _matrix_ctx(Gamma)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    n = len(Gamma)
    if n <= 1:
        raise ValueError("|Gamma| must exceed 1 for exponent ratios")
    varieties = list(BUILTIN.values()) if varieties is None else list(varieties)
    dim_G = AMBIENT_DIM[ctx.kind]
    log_n = math.log(n)
    rows = []
    for Z in varieties:
        count = variety_count(Gamma, Z)
        ratio = math.log(count) / log_n if count else -math.inf
        bound = Z.dim / dim_G
        rows.append(DimRow(Z.name, Z.dim, count, ratio, bound, bound + epsilon - ratio,
                           ratio <= bound + epsilon, ratio > bound))
    return DimReport(ctx.p, n, dim_G, log_n / dim_G, epsilon, rows)


def full_group(p: int, kind: str = "sl2") -> FinSet:
    ctx = GroupCtx.sl2(p) if kind == "sl2" else GroupCtx.gl2(p)
    return FinSet.whole(ctx)


# ---------------------------------------------------------------------------
# linear dichotomy


DICHOTOMY_P_BOUND = 13


def _line_images(rows: np.ndarray, p: int) -> np.ndarray:
    """Image of each projective line under each matrix; shape (len(rows), p+1).

    Lines are numbered ``t`` for ``[1:t]`` and ``p`` for ``[0:1]``.
    """
    inv = np.array([0] + [pow(v, p - 2, p) for v in range(1, p)], dtype=np.int64)
    x = np.concatenate([np.ones(p, dtype=np.int64), [0]])
    y = np.concatenate([np.arange(p, dtype=np.int64), [1]])
    a, b, c, d = (rows[:, i, None] for i in range(4))
    X = (a * x + b * y) % p
    Y = (c * x + d * y) % p
    return np.where(X != 0, Y * inv[X] % p, p)


def _stabilizer(G: FinSet, lines: Sequence[int]) -> FinSet:
    img = _line_images(G.rows, G.ctx.p)
    keep = np.ones(len(G), dtype=bool)
    for L in lines:
        keep &= img[:, L] == L
    return G.filter(keep)


def _classify_structure(G0: FinSet) -> tuple[str, FinSet] | None:
    """Name the proper algebraic subgroup shape containing G0, with its connected part."""
    p = G0.ctx.p
    ident = G0.ctx.backend.identity_row()
    img = _line_images(G0.rows, p)
    fixed = [L for L in range(p + 1) if np.all(img[:, L] == L)]
    ambient = FinSet.whole(G0.ctx)
    if len(fixed) == p + 1:
        return "center", ambient.filter(_center(ambient.rows, p))
    if len(fixed) >= 2:
        return "torus", _stabilizer(ambient, fixed[:2])
    if len(fixed) == 1:
        return "borel", _stabilizer(ambient, fixed)
    # invariant unordered pair of lines
    for L1 in range(p + 1):
        orbit = np.unique(img[:, L1])
        if len(orbit) == 2:
            L2 = int(orbit[orbit != L1][0])
            if np.all(np.isin(img[:, L2], orbit)):
                return "torus-normalizer", _stabilizer(ambient, [L1, L2])
    # nonsplit tori: abelian, or an abelian centraliser of index 2
    be = G0.ctx.backend
    comm = be.mul(be.mul(G0.rows[:, None, :], G0.rows[None, :, :]),
                  be.inv(be.mul(G0.rows[None, :, :], G0.rows[:, None, :])))
    commuting = np.all(comm == ident, axis=-1)
    if commuting.all():
        return "nonsplit-torus", G0
    central = commuting.all(axis=1)
    for i in np.flatnonzero(~central):
        C = G0.filter(commuting[i])
        if 2 * len(C) == len(G0) and np.all(commuting[np.ix_(commuting[i], commuting[i])]):
            return "nonsplit-torus-normalizer", C
    return None


def linear_dichotomy_probe(X: FinSet, p_bound: int = DICHOTOMY_P_BOUND) -> ProbeReport:
    """Classify X in SL2(F_p): inside a proper algebraic subgroup, saturating, or neither.

    (a) ``G0 = <X>`` preserves a line, a pair of lines, or is a (nonsplit)
    torus or its normaliser: verdict ``proper-algebraic-subgroup`` with the
    shape and the coset count of X over the connected part;
    (b) ``(X X^-1)^2 = G0``: verdict ``saturates``;
    (c) otherwise ``intermediate``.
    """
    ctx = X.ctx
    if ctx.kind != "sl2":
        raise GroupError("dichotomy probe needs an SL2 backend")
    if ctx.p > p_bound:
        raise GroupError(f"p={ctx.p} exceeds the exhaustive bound {p_bound}")
    order = ctx.backend.order()
    G0, steps = group_closure(X, order)
    if G0 is None:
        raise GroupError("closure exceeded the group order")
    XXinv = product(X, inverse_set(X))
    Y = product(XXinv, XXinv)
    comm = product(product(X, X), product(inverse_set(X), inverse_set(X)))
    payload = {
        "p": ctx.p, "size": len(X), "closure_size": len(G0),
        "square_size": len(Y), "square_ratio": f"{len(Y)}/{len(G0)}",
        "word_image_size": len(comm),
    }
    shape = _classify_structure(G0)
    if shape is not None:
        name, H = shape
        payload.update({"shape": name, "K": right_coset_count(X, H), "structure_size": len(H)})
        return ProbeReport("dichotomy", {"p": ctx.p, "size": len(X)}, "proper-algebraic-subgroup", payload)
    if Y == G0:
        return ProbeReport("dichotomy", {"p": ctx.p, "size": len(X)}, "saturates", payload)
    return ProbeReport("dichotomy", {"p": ctx.p, "size": len(X)}, "intermediate", payload)
