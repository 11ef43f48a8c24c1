"""Built-in test families and the named regression corpora."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import mpmath
import numpy as np

from .groups import GroupCtx, GroupError
from .probes import group_closure
from .setalg import FinSet, product, symmetrize

FAMILY_KINDS = (
    "interval-box",
    "beatty",
    "heisenberg-box",
    "cayley-ball",
    "random-symmetric",
    "subgroup-plus-noise",
    "exponent-grid",
)

CORPORA = ("paper-examples", "growth-grid", "tower-grid", "sl2-grid")


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    backend: tuple = ()  # sorted (key, value) pairs of a GroupCtx dict
    d: int = 1
    n: int = 0
    alpha: str | None = None
    r: int = 0
    radius: int = 0
    size: int = 0
    seed: int = 0
    generators: tuple[str, ...] = ()
    k: int = 0
    shifts: int = 0
    label: str = ""

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise FamilyError(f"unknown family kind {self.kind!r}")
        if self.d < 1 or self.n < 0 or self.r < 0 or self.radius < 0 or self.size < 0:
            raise FamilyError("family parameters must be non-negative (d >= 1)")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        k = self.kind
        if k == "beatty":
            return f"beatty(n={self.n},alpha={self.alpha})"
        if k == "interval-box":
            return f"box(d={self.d},n={self.n})"
        if k == "heisenberg-box":
            return f"hbox(r={self.r})"
        if k == "cayley-ball":
            return f"ball({self.ctx().describe()},radius={self.radius})"
        if k == "random-symmetric":
            return f"random({self.ctx().describe()},size={self.size},seed={self.seed})"
        if k == "subgroup-plus-noise":
            return f"subgroup+noise({self.ctx().describe()},noise={self.size},seed={self.seed})"
        return f"grid({self.ctx().describe()},k={self.k},shifts={self.shifts},seed={self.seed})"

    def ctx(self) -> GroupCtx:
        if self.kind in ("beatty",):
            return GroupCtx.lattice(1)
        if self.kind == "interval-box":
            return GroupCtx.lattice(self.d)
        if self.kind == "heisenberg-box":
            return GroupCtx.heisenberg()
        if not self.backend:
            raise FamilyError(f"{self.kind} needs a backend block")
        return GroupCtx.from_dict(_thaw(self.backend))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        defaults = {f.name: f.default for f in fields(self)}
        for key, val in asdict(self).items():
            if key == "kind" or val == defaults[key]:
                continue
            if key == "backend":
                val = _thaw(self.backend)
            elif key == "generators":
                val = list(val)
            out[key] = val
        return out

    @classmethod
    def from_dict(cls, data: dict) -> FamilySpec:
        data = dict(data)
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise FamilyError(f"unknown family keys: {sorted(unknown)}")
        if "backend" in data:
            data["backend"] = _freeze(data["backend"])
        if "generators" in data:
            data["generators"] = tuple(data["generators"])
        if "alpha" in data and data["alpha"] is not None:
            data["alpha"] = str(data["alpha"])
        return cls(**data)


def _freeze(d: dict) -> tuple:
    return tuple(sorted((k, tuple(map(_freeze_val, v)) if isinstance(v, list) else v) for k, v in d.items()))


def _freeze_val(v):
    return tuple(v) if isinstance(v, list) else v


def _thaw(t: tuple) -> dict:
    out = {}
    for k, v in t:
        out[k] = [list(x) if isinstance(x, tuple) else x for x in v] if isinstance(v, tuple) else v
    return out


def spec(kind: str, backend: GroupCtx | dict | None = None, **kw) -> FamilySpec:
    """Build a FamilySpec, accepting a GroupCtx for the backend."""
    if isinstance(backend, GroupCtx):
        backend = backend.to_dict()
    if backend is not None:
        kw["backend"] = _freeze(backend)
    if "generators" in kw:
        kw["generators"] = tuple(kw["generators"])
    return FamilySpec(kind, **kw)


# ---------------------------------------------------------------------------
# Beatty sets


def beatty_alpha(expr: str, n: int) -> Fraction:
    """High-precision rational approximation of alpha with error < 2^-40 / n.

    ``expr`` is an mpmath expression over ``pi``, ``e``, ``sqrt``, ``exp`` and
    ``log``.  Values <= 10 and values that are rational to the working
    precision are rejected.
    """
    digits = 30 + len(str(max(n, 1)))
    with mpmath.workdps(digits + 10):
        env = {"pi": mpmath.pi, "e": mpmath.e, "sqrt": mpmath.sqrt, "exp": mpmath.exp, "log": mpmath.log}
        try:
            val = eval(expr.replace("^", "**"), {"__builtins__": {}}, env)  # noqa: S307 - restricted namespace
        except Exception as exc:
            raise FamilyError(f"cannot evaluate alpha {expr!r}: {exc}") from None
        val = mpmath.mpf(val)
        if val <= 10:
            raise FamilyError("alpha must exceed 10")
        frac = Fraction(mpmath.nstr(val, digits + 5, min_fixed=-1, max_fixed=1000, strip_zeros=False))
    near = frac.limit_denominator(10**6)
    if abs(frac - near) < Fraction(1, 2**40):
        raise FamilyError(f"alpha={expr} is rational at working precision")
    return frac


def beatty(n: int, alpha: str) -> FinSet:
    """``{floor(m alpha) : -n <= m <= n}``."""
    a = beatty_alpha(alpha, n)
    eps = Fraction(1, 2**39)
    vals = []
    for m in range(-n, n + 1):
        x = m * a
        fl = math.floor(x)
        if m and (x - fl < eps or fl + 1 - x < eps):
            raise FamilyError(f"floor({m}*alpha) undecidable at working precision")
        vals.append(fl)
    return FinSet.from_ints(vals)


# ---------------------------------------------------------------------------
# generation


def interval_box(d: int, n: int) -> FinSet:
    axes = [np.arange(-n, n + 1, dtype=np.int64)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return FinSet(GroupCtx.lattice(d), grid, validate=False)


def heisenberg_box(r: int) -> FinSet:
    xs = np.arange(-r, r + 1, dtype=np.int64)
    zs = np.arange(-r * r, r * r + 1, dtype=np.int64)
    grid = np.stack(np.meshgrid(xs, xs, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    return FinSet(GroupCtx.heisenberg(), grid, validate=False)


def cayley_ball(ctx: GroupCtx, generators, radius: int) -> FinSet:
    """All products of at most ``radius`` symmetrised generators."""
    gens = FinSet.from_literals(ctx, generators) if generators and isinstance(generators[0], str) else generators
    S = symmetrize(gens)
    ball = FinSet.singleton_identity(ctx)
    for _ in range(radius):
        nxt = product(ball, S)
        if nxt == ball:
            break
        ball = nxt
    return ball


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x5EED])))


def _sample(ctx: GroupCtx, size: int, rng: np.random.Generator, r: int) -> np.ndarray:
    be = ctx.backend
    if be.order() is not None and ctx.kind != "cayley":
        if ctx.kind == "symmetric":
            return np.array([rng.permutation(ctx.n) for _ in range(size)], dtype=np.int64).reshape(-1, be.width)
        if ctx.kind in ("sl2", "gl2"):
            out = []
            while len(out) < size:
                cand = rng.integers(0, ctx.p, size=4)
                try:
                    be.validate(cand[None, :])
                except GroupError:
                    continue
                out.append(cand)
            return np.array(out, dtype=np.int64).reshape(-1, 4)
        return rng.integers(0, ctx.n, size=(size, be.width))
    if ctx.kind == "lattice":
        return rng.integers(-r, r + 1, size=(size, ctx.d))
    if ctx.kind == "heisenberg":
        xy = rng.integers(-r, r + 1, size=(size, 2))
        z = rng.integers(-r * r, r * r + 1, size=(size, 1))
        return np.concatenate([xy, z], axis=1)
    if ctx.kind == "cayley":
        gens = FinSet.from_literals(ctx, ctx.generators)
        S = symmetrize(gens).rows
        rows = []
        for _ in range(size):
            w = S[rng.integers(0, len(S))]
            for _ in range(int(rng.integers(0, max(r, 1)))):
                w = be.mul(w[None], S[rng.integers(0, len(S))][None])[0]
            rows.append(w)
        return np.array(rows, dtype=np.int64).reshape(-1, be.width)
    raise FamilyError(f"cannot sample from {ctx.describe()}")


def generate(fs: FamilySpec) -> FinSet:
    k = fs.kind
    if k == "beatty":
        if fs.alpha is None:
            raise FamilyError("beatty needs alpha")
        return beatty(fs.n, fs.alpha)
    if k == "interval-box":
        return interval_box(fs.d, fs.n)
    if k == "heisenberg-box":
        return heisenberg_box(fs.r)
    ctx = fs.ctx()
    if k == "cayley-ball":
        gens = fs.generators or ctx.generators
        if not gens:
            raise FamilyError("cayley-ball needs generators")
        return cayley_ball(ctx, list(gens), fs.radius)
    rng = _rng(fs.seed)
    if k == "random-symmetric":
        rows = _sample(ctx, fs.size, rng, fs.r or fs.n or 4)
        return symmetrize(FinSet(ctx, rows))
    if k == "subgroup-plus-noise":
        gens = FinSet.from_literals(ctx, fs.generators or ctx.generators)
        H, _ = group_closure(gens, 10**6)
        if H is None:
            raise FamilyError("subgroup closure too large")
        if fs.size == 0:
            return H
        noise = FinSet(ctx, _sample(ctx, fs.size, rng, fs.r or 4))
        return symmetrize(H | noise)
    if k == "exponent-grid":
        if ctx.kind != "modular":
            raise FamilyError("exponent-grid needs a modular backend")
        if not 0 <= fs.k <= ctx.d:
            raise FamilyError("subspace dimension k out of range")
        n, d = ctx.n, ctx.d
        sub = np.zeros((n**fs.k, d), dtype=np.int64)
        if fs.k:
            sub[:, : fs.k] = np.indices((n,) * fs.k).reshape(fs.k, -1).T
        parts = [sub]
        for _ in range(fs.shifts):
            s = rng.integers(0, n, size=d)
            parts.append((sub + s) % n)
        return symmetrize(FinSet(ctx, np.concatenate(parts)))
    raise FamilyError(k)


# ---------------------------------------------------------------------------
# corpora

STD_SL2 = ("[[1,1],[0,1]]", "[[1,0],[1,1]]")


def _sl2_specs(p: int) -> list[FamilySpec]:
    ctx = GroupCtx.sl2(p)
    g = next(x for x in range(2, p) if pow(x, (p - 1) // 2, p) != 1) if p > 2 else 1  # non-square
    gi = pow(g, p - 2, p)
    # an element with irreducible characteristic polynomial x^2 - t x + 1
    t = next(t for t in range(p) if pow((t * t - 4) % p, (p - 1) // 2, p) == p - 1)
    out = [
        spec("cayley-ball", ctx, generators=STD_SL2, radius=3, label=f"sl2({p}) std ball r=3"),
        spec("cayley-ball", ctx, generators=(f"[[{g},1],[0,{gi}]]",), radius=2, label=f"sl2({p}) borel ball"),
        spec("cayley-ball", ctx, generators=(f"[[{g},0],[0,{gi}]]",), radius=2, label=f"sl2({p}) split torus"),
        spec("cayley-ball", ctx, generators=(f"[[{g},0],[0,{gi}]]", f"[[0,1],[{p - 1},0]]"), radius=2,
             label=f"sl2({p}) torus normalizer"),
        spec("cayley-ball", ctx, generators=(f"[[0,{p - 1}],[1,{t}]]",), radius=2, label=f"sl2({p}) nonsplit torus"),
        spec("cayley-ball", ctx, generators=("[[1,1],[0,1]]",), radius=2, label=f"sl2({p}) unipotent"),
        spec("cayley-ball", ctx, generators=(f"[[{p - 1},0],[0,{p - 1}]]",), radius=1, label=f"sl2({p}) center"),
        spec("random-symmetric", ctx, size=(p * p * p) // 2, seed=p, label=f"sl2({p}) random half"),
    ]
    if p <= 7:
        out.insert(1, spec("cayley-ball", ctx, generators=STD_SL2, radius=2, label=f"sl2({p}) std ball r=2"))
    return out


def corpus(name: str) -> list[FamilySpec]:
    """Deterministic, ordered list of specs for a registered corpus."""
    if name == "paper-examples":
        F2 = GroupCtx.cayley(("a", "b"), max_len=16)
        return [
            spec("beatty", n=100, alpha="4*pi"),
            spec("beatty", n=100, alpha="10+sqrt(2)"),
            spec("beatty", n=100, alpha="exp(4)"),
            spec("interval-box", d=1, n=256),
            spec("interval-box", d=2, n=8),
            spec("heisenberg-box", r=2),
            spec("heisenberg-box", r=4),
            spec("cayley-ball", GroupCtx.heisenberg(), generators=("(1,0,0)", "(0,1,0)"), radius=3),
            spec("cayley-ball", F2, generators=("a", "b"), radius=1),
            spec("cayley-ball", GroupCtx.sl2(5), generators=STD_SL2, radius=1),
            spec("cayley-ball", GroupCtx.sl2(5), generators=STD_SL2, radius=2),
            spec("exponent-grid", GroupCtx.modular(2, 8), k=4),
            spec("exponent-grid", GroupCtx.modular(2, 8), k=4, shifts=1, seed=1),
            spec("exponent-grid", GroupCtx.modular(3, 6), k=2, shifts=2, seed=7),
            spec("subgroup-plus-noise", GroupCtx.modular(35), generators=("(5)",)),
            spec("random-symmetric", GroupCtx.symmetric(5), size=12, seed=1),
        ]
    if name == "growth-grid":
        out = [spec("interval-box", d=1, n=n) for n in (4, 16, 64, 256)]
        out += [spec("interval-box", d=2, n=n) for n in (2, 4, 8)]
        out += [spec("beatty", n=n, alpha="4*pi") for n in (10, 100, 1000)]
        out += [spec("heisenberg-box", r=r) for r in (1, 2, 4)]
        out += [spec("cayley-ball", GroupCtx.heisenberg(), generators=("(1,0,0)", "(0,1,0)"), radius=rad)
                for rad in (1, 2, 4)]
        return out
    if name == "tower-grid":
        out = [spec("interval-box", d=1, n=4**j) for j in (2, 3, 4)]
        out += [spec("interval-box", d=2, n=16)]
        out += [spec("subgroup-plus-noise", GroupCtx.modular(35), generators=("(5)",))]
        out += [spec("subgroup-plus-noise", GroupCtx.symmetric(3), generators=("(1 2 3)",))]
        out += [spec("cayley-ball", GroupCtx.heisenberg(), generators=("(1,0,0)", "(0,1,0)"), radius=4)]
        return out
    if name == "sl2-grid":
        out = []
        for p in (5, 7, 11, 13):
            out.extend(_sl2_specs(p))
        return out
    raise FamilyError(f"unknown corpus {name!r}; known: {CORPORA}")
