"""Finite probes for the stabilizer-side statements.

Each probe returns a :class:`ProbeReport`; verdicts are reproducible from the
inputs (and the seed, for sampled probes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .covering import commensurability, disjoint_translates
from .groups import Elem, GroupError, decode, encode
from .setalg import (
    CapExceeded,
    FinSet,
    _check_ctx,
    conj_set,
    first_pair_outside,
    inverse_set,
    pair_set,
    product,
    symmetrize,
)

EXHAUSTIVE_LIMIT = 10**6


@dataclass
class ProbeReport:
    kind: str
    inputs: dict
    verdict: str
    payload: dict = field(default_factory=dict)
    witnesses: list[str] = field(default_factory=list)
    seed: int | None = None
    sets: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "payload": {k: _plain(v) for k, v in self.payload.items()},
            "witnesses": self.witnesses,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def csv_row(self) -> dict:
        row = {"probe": self.kind, "verdict": self.verdict}
        for k, v in self.payload.items():
            if not isinstance(v, (list, dict)):
                row[k] = _plain(v)
        return row


def _plain(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


# ---------------------------------------------------------------------------
# closure


def group_closure(X: FinSet, max_size: int) -> tuple[FinSet | None, int]:
    """Fixed point of ``Y -> sym(Y) | YY`` from X.

    Returns ``(closure, steps)``, or ``(None, steps)`` once the set passes
    ``max_size``.
    """
    Y = X
    steps = 0
    while True:
        if len(Y) > max_size:
            return None, steps
        try:
            Z = symmetrize(Y).union(pair_set(Y, Y, "mul", cap=max_size))
        except CapExceeded:
            return None, steps + 1
        if Z == Y:
            return Y, steps
        steps += 1
        Y = Z


def right_coset_count(X: FinSet, S: FinSet) -> int:
    """Number of right cosets ``S x`` meeting X (S must be a subgroup)."""
    _check_ctx(X, S)
    be = X.ctx.backend
    # canonical representative of S x: position of the first member of S x in canonical order
    reps = set()
    step = max(1, (1 << 20) // len(S))
    for start in range(0, len(X), step):
        xs = X.rows[start:start + step]
        coset = be.mul(S.rows[None, :, :], xs[:, None, :])
        for block in coset:
            ordered = FinSet(X.ctx, block, validate=False)
            reps.add(ordered.rows[0].tobytes())
    return len(reps)


# ---------------------------------------------------------------------------
# near-subgroup probe


def near_subgroup_probe(X: FinSet) -> ProbeReport:
    """Test whether ``S = (X^-1 X)^2`` is a subgroup; if so count cosets of X over S."""
    be = X.ctx.backend
    XinvX = product(inverse_set(X), X)
    S = product(XinvX, XinvX)
    inputs = {"size": len(X)}
    hit = first_pair_outside(S, S, S, "mul")
    inv_ok = inverse_set(S) == S
    if hit is None and inv_ok:
        K = right_coset_count(X, S)
        normalized = first_pair_outside(X, S, S, "lconj") is None
        return ProbeReport(
            "near-subgroup", inputs, "subgroup",
            {"S_size": len(S), "K": K, "normalized_by_X": normalized},
            sets={"S": S},
        )
    SS = product(S, S)
    defect = len(SS) - len(SS & S)
    wit = [f"{be.format(hit[0])}*{be.format(hit[1])}"] if hit is not None else []
    return ProbeReport(
        "near-subgroup", inputs, "not-closed",
        {"S_size": len(S), "defect": defect},
        wit,
        sets={"S": S},
    )


# ---------------------------------------------------------------------------
# statistical perfectness


@dataclass(frozen=True)
class PerfectnessEstimate:
    p_hat: Fraction
    successes: int
    trials: int
    radius: float
    exhaustive: bool

    @property
    def value(self) -> float:
        return float(self.p_hat)


def _tuple_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def perfectness_stat(
    X: FinSet,
    l: int,
    m: int,
    samples: int = 1000,
    seed: int = 0,
    exhaustive: bool | None = None,
    symmetric_classes: bool = False,
    conj_by: FinSet | None = None,
) -> PerfectnessEstimate:
    """Fraction of l-tuples from X with ``|a_1^X ... a_l^X| >= |X|/m``.

    Exhaustive when ``|X|^l <= 10^6`` (unless overridden); otherwise
    ``samples`` tuples are drawn, tuple ``i`` from a Philox stream keyed by
    ``(seed, i)``.  The radius is the normal-approximation 95% binomial
    half-width (0 when exhaustive).  ``symmetric_classes`` uses
    ``a^X | (a^-1)^X``; ``conj_by`` conjugates by another set (e.g. X_0).
    """
    if l < 1 or m < 1 or samples < 1:
        raise ValueError("l, m and samples must be >= 1")
    n = len(X)
    if n == 0:
        raise ValueError("X must be nonempty")
    if exhaustive is None:
        exhaustive = n**l <= EXHAUSTIVE_LIMIT
    C = conj_by if conj_by is not None else X
    be = X.ctx.backend
    classes: dict[int, FinSet] = {}

    def cls(i: int) -> FinSet:
        if i not in classes:
            row = X.rows[i]
            s = conj_set(row, C)
            if symmetric_classes:
                s = s | conj_set(be.inv(row[None, :])[0], C)
            classes[i] = s
        return classes[i]

    sizes: dict[tuple, int] = {}

    def big(idx: Sequence[int]) -> bool:
        # |prod| >= n/m  <=>  |prod| * m >= n ; the product only depends on the classes
        key = tuple(cls(i).rows.tobytes() for i in idx)
        if key not in sizes:
            acc = cls(idx[0])
            capped = len(acc) > n
            for i in idx[1:]:
                if capped:
                    break
                try:
                    acc = pair_set(acc, cls(i), "mul", cap=n)
                except CapExceeded:
                    capped = True
            sizes[key] = n + 1 if capped else len(acc)
        return sizes[key] * m >= n

    if exhaustive:
        total = n**l
        hits = 0
        for flat in range(total):
            idx = []
            q = flat
            for _ in range(l):
                q, r = divmod(q, n)
                idx.append(r)
            hits += big(idx[::-1])
        return PerfectnessEstimate(Fraction(hits, total), hits, total, 0.0, True)
    hits = 0
    for t in range(samples):
        idx = _tuple_rng(seed, t).integers(0, n, size=l)
        hits += big([int(i) for i in idx])
    p = hits / samples
    radius = 1.96 * math.sqrt(p * (1 - p) / samples)
    return PerfectnessEstimate(Fraction(hits, samples), hits, samples, radius, False)


# ---------------------------------------------------------------------------
# word depth


def _b_candidates(X: FinSet, A_union: FinSet, l: int) -> list[np.ndarray]:
    """First l greedy Ruzsa translates of X over the word set generated by A."""
    seeded = A_union | FinSet.singleton_identity(X.ctx)
    # translates b with seeded*b disjoint from seeded and from each other
    fam = disjoint_translates(seeded, FinSet.singleton_identity(X.ctx) | X)
    fam = [decode(X.ctx, b) for b in fam]
    ident = X.ctx.backend.identity_row()
    fam = [b for b in fam if not np.array_equal(b, ident)]
    return fam[:l]


def _depth_with(X: FinSet, letters: FinSet, n_max: int, cap: int) -> int | float:
    W = FinSet.singleton_identity(X.ctx)
    for n in range(1, n_max + 1):
        nxt = W | pair_set(W, letters, "mul", cap=cap)
        if len(nxt) > cap:
            raise CapExceeded(len(nxt))
        if X.issubset(nxt):
            return n
        if nxt == W:
            return math.inf
        W = nxt
    return math.inf


def word_depth(
    X: FinSet,
    a_list: Sequence[Elem],
    n_max: int = 16,
    cap: int = 10**6,
    exact: bool = False,
) -> int | float:
    """Smallest n <= n_max with X inside the words of length <= n over
    ``A_1 | ... | A_l | {b_1..b_l}``, where ``A_i = a_i^X``.

    The identity (empty word) counts as a word of every length, and n starts
    at 1.  By default the b's are the first l greedy Ruzsa translates of X
    over the set generated by the A's; ``exact=True`` instead minimises over
    all b-tuples from X (small inputs only).
    """
    if not a_list:
        raise ValueError("a_list must be nonempty")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    l = len(a_list)
    A = FinSet(X.ctx, np.concatenate([conj_set(a, X).rows for a in a_list]), validate=False)
    if exact:
        import itertools

        if len(X) ** l > 50_000:
            raise ValueError("exact word_depth limited to |X|^l <= 50000")
        best: int | float = math.inf
        for combo in itertools.combinations_with_replacement(range(len(X)), l):
            letters = A | X.filter(np.isin(np.arange(len(X)), combo))
            best = min(best, _depth_with(X, letters, n_max if math.isinf(best) else min(n_max, best), cap))
            if best == 1:
                break
        return best
    closure_A = FinSet.singleton_identity(X.ctx)
    for _ in range(n_max):
        nxt = closure_A | pair_set(closure_A, A, "mul", cap=cap)
        if nxt == closure_A:
            break
        closure_A = nxt
    bs = _b_candidates(X, closure_A, l)
    letters = A if not bs else A | FinSet(X.ctx, np.array(bs), validate=False)
    return _depth_with(X, letters, n_max, cap)


# ---------------------------------------------------------------------------
# bounded exponent


class MissingExponent(GroupError):
    pass


def freiman_exponent_probe(X: FinSet, e_budget: int = 64) -> ProbeReport:
    """Close ``(X^-1 X)^2`` to a subgroup S and measure commensurability with X."""
    ctx = X.ctx
    if ctx.exponent is None:
        raise MissingExponent(f"{ctx.describe()} declares no element-order bound")
    XinvX = product(inverse_set(X), X)
    seed = product(XinvX, XinvX)
    S, steps = group_closure(seed, e_budget * len(X))
    inputs = {"size": len(X), "exponent": ctx.exponent, "e_budget": e_budget}
    if S is None:
        return ProbeReport("freiman", inputs, "budget-exceeded", {"steps": steps})
    e_xs, e_sx = commensurability(X, S, budget=max(e_budget, 1) * 4)
    e = max(e_xs, e_sx)
    return ProbeReport(
        "freiman", inputs, "subgroup",
        {"S_size": len(S), "e": e, "e_X_by_S": e_xs, "e_S_by_X": e_sx, "steps": steps},
        sets={"S": S},
    )
