"""Command-line harness: run a configured experiment, write CSV/JSON reports, verify reports.

Exit codes: 0 success, 2 configuration error, 3 budget or cap exceeded,
4 invariant violation detected during the run.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

from . import __version__
from .config import COMMANDS, FORMATS, ConfigError, InputSpec, RunConfig, load_config
from .covering import NotApproximateGroupInput, approx_constant, commensurability, greedy_cover, ruzsa_cover
from .dimcmp import full_group, linear_dichotomy_probe, lp_report, variety
from .families import FamilyError, corpus, generate
from .groups import CoordinateOverflow, GroupCtx, GroupError, parse_elem
from .probes import (
    freiman_exponent_probe,
    group_closure,
    near_subgroup_probe,
    perfectness_stat,
    word_depth,
)
from .setalg import CapExceeded, FinSet, doubling, dumps, load, loads, product, symmetrize, tripling
from .tower import TowerInputError, build_tower, seed_search, verify_tower

log = logging.getLogger("apxgrp")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4
CACHE_FORMAT = 1


class BudgetExceeded(RuntimeError):
    pass


class InvariantViolation(RuntimeError):
    pass


class ReportError(ValueError):
    pass


# ---------------------------------------------------------------------------
# report


def _plain(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return v.item()
    return v


def set_digest(X: FinSet) -> str:
    return hashlib.sha256(dumps(X).encode()).hexdigest()


def compute_checksum(config: dict, outputs: list, sets: dict, status: str) -> str:
    body = json.dumps({"config": config, "outputs": outputs, "sets": sets, "status": status},
                      sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(body.encode()).hexdigest()


@dataclass
class RunReport:
    config: dict
    outputs: list = field(default_factory=list)
    sets: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    status: str = "ok"
    wall_time: float = 0.0
    artifacts: dict = field(default_factory=dict)  # extra files, not part of the checksum
    version: str = __version__

    @property
    def checksum(self) -> str:
        return compute_checksum(self.config, self.outputs, self.sets, self.status)

    def to_dict(self) -> dict:
        return {
            "tool": "apxgrp",
            "version": self.version,
            "config": self.config,
            "status": self.status,
            "outputs": self.outputs,
            "sets": self.sets,
            "checksum": self.checksum,
            "wall_time": round(self.wall_time, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        cols: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _plain(row.get(k, "")) for k in cols})
        return buf.getvalue()


# ---------------------------------------------------------------------------
# inputs


def _cache_dir(cfg: RunConfig) -> Path | None:
    if not cfg.cache:
        return None
    return Path(os.environ.get("APXGRP_CACHE_DIR") or Path(cfg.out_dir) / ".cache")


def resolve(spec: InputSpec, cfg: RunConfig) -> tuple[FinSet, str]:
    """The input set and its CSV family label."""
    if spec.file is not None:
        try:
            with open(spec.file) as fp:
                X = load(fp)
        except OSError as exc:
            raise ConfigError(str(exc)) from None
        if cfg.backend is not None and X.ctx != GroupCtx.from_dict(cfg.backend):
            raise ConfigError("file backend differs from the configured backend")
        return X, f"file:{Path(spec.file).name}"
    if spec.literals is not None:
        ctx = GroupCtx.from_dict(cfg.backend)
        return FinSet.from_literals(ctx, spec.literals), "literals"
    if spec.family is None:
        raise ConfigError("input block is empty")
    fam = spec.family
    label = fam.name
    cdir = _cache_dir(cfg)
    key = None
    if cdir is not None:
        key = hashlib.sha256(json.dumps({"v": CACHE_FORMAT, "family": fam.to_dict()}, sort_keys=True).encode()).hexdigest()
        path = cdir / f"{key}.txt"
        if path.exists():
            log.debug("cache hit %s", path)
            return loads(path.read_text()), label
    X = generate(fam)
    if key is not None:
        cdir.mkdir(parents=True, exist_ok=True)
        tmp = cdir / f"{key}.tmp{os.getpid()}"
        tmp.write_text(dumps(X))
        tmp.replace(cdir / f"{key}.txt")
    return X, label


def _lead(X: FinSet, label: str) -> dict:
    return {"backend": X.ctx.describe(), "family": label, "|X|": len(X)}


def _need_second(cfg: RunConfig) -> InputSpec:
    if cfg.second is None:
        raise ConfigError(f"{cfg.command} needs input.second")
    return cfg.second


# ---------------------------------------------------------------------------
# commands


def _growth_row(X: FinSet) -> dict:
    d = doubling(X)
    t = tripling(X)
    return {
        "|XX|": d.numerator, "|XX^-1X|": t.numerator,
        "doubling": str(d.ratio), "tripling": str(t.ratio),
        "doubling_float": round(float(d.ratio), 12), "tripling_float": round(float(t.ratio), 12),
        "symmetric": t.symmetric,
    }


def cmd_tripling(cfg, rep, X, label):
    variant = cfg.options.get("variant", "both")
    if variant not in ("both", "tripling", "doubling"):
        raise ConfigError("variant must be both, tripling or doubling")
    row = _growth_row(X)
    if variant == "tripling":
        row = {k: v for k, v in row.items() if not k.startswith(("doubling", "|XX|"))}
    elif variant == "doubling":
        row = {k: v for k, v in row.items() if not k.startswith(("tripling", "|XX^-1X|"))}
    rep.outputs.append({"op": "growth", **row})
    rep.rows.append({**_lead(X, label), **row})


def cmd_cover(cfg, rep, X, label):
    mode = cfg.options.get("mode", "ruzsa")
    side = cfg.options.get("side", "right")
    other = resolve(cfg.second, cfg)[0] if cfg.second is not None else X
    if mode == "ruzsa":
        try:
            res = ruzsa_cover(X, other, side)
        except AssertionError as exc:
            raise InvariantViolation(str(exc)) from None
    elif mode == "greedy":
        res = greedy_cover(X, other, side, cfg.options.get("budget"))
        if res is None:
            raise BudgetExceeded(f"greedy cover needs more than {cfg.options.get('budget')} translates")
    else:
        raise ConfigError("cover mode must be ruzsa or greedy")
    out = {"op": f"cover-{mode}", **res.to_dict()}
    rep.outputs.append(out)
    rep.sets["tile"] = set_digest(res.tile)
    rep.rows.append({**_lead(X, label), "mode": mode, "side": side, "count": res.count,
                     "bound": out["certified_bound"] or "", "verified": res.verified})


def cmd_commens(cfg, rep, X, label):
    B, blabel = resolve(_need_second(cfg), cfg)
    ab, ba = commensurability(X, B, cfg.options.get("budget", 10_000), cfg.options.get("side", "right"))
    out = {"op": "commensurability", "second": blabel, "|B|": len(B), "A_by_B": _plain(ab), "B_by_A": _plain(ba)}
    rep.outputs.append(out)
    rep.rows.append({**_lead(X, label), **{k: v for k, v in out.items() if k != "op"}})


def cmd_approx_k(cfg, rep, X, label):
    if cfg.options.get("symmetrize", False):
        X = symmetrize(X)
    try:
        hi, lo = approx_constant(X, bool(cfg.options.get("exact", False)))
    except NotApproximateGroupInput as exc:
        raise ConfigError(str(exc)) from None
    out = {"op": "approx-k", "k_upper": hi, "k_lower": str(lo), "exact": bool(cfg.options.get("exact", False))}
    rep.outputs.append(out)
    rep.rows.append({**_lead(X, label), "k_upper": hi, "k_lower": str(lo)})


def _tower_out(rep, X, label, report, levels):
    d = report.to_dict()
    rep.outputs.append({"op": "tower", **d})
    for i, lv in enumerate(levels, 1):
        rep.sets[f"X{i}"] = set_digest(lv)
    rep.rows.append({**_lead(X, label), **report.csv_row()})


def cmd_tower(cfg, rep, X, label):
    if cfg.options.get("symmetrize", False):
        X = symmetrize(X)
    levels = build_tower(X, int(cfg.options.get("N", 5)))
    report = verify_tower(levels, all_m=bool(cfg.options.get("all_m", False)))
    _tower_out(rep, X, label, report, report.levels)


def cmd_seed_search(cfg, rep, X, label):
    X1, report = seed_search(X, cfg.options.get("family", "derived-square"), int(cfg.options.get("budget", 8)))
    rep.sets["seed"] = set_digest(X1)
    _tower_out(rep, X, label, report, report.levels)
    rep.outputs[-1]["seed_size"] = len(X1)


def cmd_closure(cfg, rep, X, label):
    cap = int(cfg.options.get("max_size", 10**6))
    G, steps = group_closure(X, cap)
    if G is None:
        raise BudgetExceeded(f"closure exceeded {cap} elements after {steps} steps")
    rep.sets["closure"] = set_digest(G)
    rep.outputs.append({"op": "closure", "size": len(G), "steps": steps})
    rep.rows.append({**_lead(X, label), "closure_size": len(G), "steps": steps})


def _probe_out(rep, X, label, pr):
    rep.outputs.append({"op": pr.kind, **_plain(pr.to_dict())})
    for name, S in pr.sets.items():
        rep.sets[name] = set_digest(S)
    rep.rows.append({**_lead(X, label), **_plain(pr.csv_row())})


def cmd_near_subgroup(cfg, rep, X, label):
    _probe_out(rep, X, label, near_subgroup_probe(X))


def cmd_perfectness(cfg, rep, X, label):
    o = cfg.options
    est = perfectness_stat(X, int(o.get("l", 2)), int(o.get("m", 2)), int(o.get("samples", 1000)),
                           seed=cfg.seed, exhaustive=o.get("exhaustive"),
                           symmetric_classes=bool(o.get("symmetric_classes", False)))
    out = {"p_hat": str(est.p_hat), "successes": est.successes, "trials": est.trials,
           "radius": round(est.radius, 12), "exhaustive": est.exhaustive, "seed": cfg.seed}
    rep.outputs.append({"op": "perfectness", **out})
    rep.rows.append({**_lead(X, label), **out})


def cmd_word_depth(cfg, rep, X, label):
    a = cfg.options.get("a")
    if not a:
        raise ConfigError("word-depth needs options.a (list of element literals)")
    elems = [parse_elem(X.ctx, s) for s in a]
    d = word_depth(X, elems, int(cfg.options.get("n_max", 16)), exact=bool(cfg.options.get("exact", False)))
    rep.outputs.append({"op": "word-depth", "a": list(a), "depth": _plain(d)})
    rep.rows.append({**_lead(X, label), "l": len(a), "depth": _plain(d)})


def cmd_freiman(cfg, rep, X, label):
    pr = freiman_exponent_probe(X, int(cfg.options.get("e_budget", 64)))
    _probe_out(rep, X, label, pr)
    if pr.verdict == "budget-exceeded":
        rep.status = "budget-exceeded"


def cmd_dimcmp(cfg, rep, X, label):
    if X is None:
        p = cfg.options.get("p")
        if p is None:
            raise ConfigError("dimcmp needs an input set or options.p")
        X = full_group(int(p), cfg.options.get("group", "sl2"))
        label = f"full {X.ctx.describe()}"
    names = cfg.options.get("varieties")
    vs = None if names is None else [variety(n) for n in names]
    dr = lp_report(X, vs, float(cfg.options.get("epsilon", 0.02)))
    rep.outputs.append({"op": "dimcmp", **dr.to_dict()})
    for r in dr.rows:
        rep.rows.append({**_lead(X, label), **{k: (round(v, 12) if isinstance(v, float) else v)
                                                 for k, v in r.to_dict().items()}})
    if not dr.passed:
        rep.status = "bound-violated"


def cmd_dichotomy(cfg, rep, X, label):
    _probe_out(rep, X, label, linear_dichotomy_probe(X, int(cfg.options.get("p_bound", 13))))


def cmd_gen(cfg, rep, X, label):
    rep.sets["X"] = set_digest(X)
    rep.outputs.append({"op": "gen", "family": label, "size": len(X)})
    rep.rows.append(_lead(X, label))
    rep.artifacts["set.txt"] = dumps(X)


def corpus_row(fs, X) -> dict:
    """Summary statistics of one corpus entry (row after the leading columns)."""
    row = _growth_row(X)
    XX = product(X, X)
    try:
        rc = ruzsa_cover(XX, X)
    except AssertionError as exc:
        raise InvariantViolation(f"{fs.name}: {exc}") from None
    row.update({"ruzsa_count": rc.count, "ruzsa_bound": str(rc.certified_bound), "ruzsa_verified": rc.verified})
    return row


def cmd_corpus_run(cfg, rep, X, label):
    name = cfg.input.corpus
    for i, fs in enumerate(corpus(name)):
        Y, lab = resolve(InputSpec(family=fs), cfg)
        row = {**_lead(Y, lab), **corpus_row(fs, Y)}
        rep.rows.append(row)
        rep.outputs.append({"op": "corpus-entry", "index": i, "spec": fs.to_dict(), **row})
        rep.sets[f"{i:03d}"] = set_digest(Y)


DISPATCH = {
    "tripling": cmd_tripling, "cover": cmd_cover, "commens": cmd_commens, "approx-k": cmd_approx_k,
    "tower": cmd_tower, "seed-search": cmd_seed_search, "closure": cmd_closure,
    "near-subgroup": cmd_near_subgroup, "perfectness": cmd_perfectness, "word-depth": cmd_word_depth,
    "freiman": cmd_freiman, "dimcmp": cmd_dimcmp, "dichotomy": cmd_dichotomy, "gen": cmd_gen,
    "corpus-run": cmd_corpus_run,
}
assert set(DISPATCH) == set(COMMANDS)


def run(cfg: RunConfig) -> RunReport:
    """Execute one configured command; pure apart from the optional input cache."""
    t0 = time.perf_counter()
    rep = RunReport(_plain(cfg.to_dict()))
    X = label = None
    if cfg.command not in ("corpus-run",) and not cfg.input.empty:
        X, label = resolve(cfg.input, cfg)
    DISPATCH[cfg.command](cfg, rep, X, label)
    rep.outputs = _plain(rep.outputs)
    rep.wall_time = time.perf_counter() - t0
    return rep


PLOT_STUB = '''"""Ratio-vs-size plot for {csv_name}; edit freely."""
import csv
import sys

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{csv_name}", newline="")))
col = sys.argv[1] if len(sys.argv) > 1 else "{ratio_col}"
xs = [int(r["|X|"]) for r in rows if r.get(col)]
ys = [float(r[col]) for r in rows if r.get(col)]
plt.loglog(xs, ys, "o")
plt.xlabel("|X|")
plt.ylabel(col)
plt.savefig("{stem}.png", dpi=150)
'''


def write_outputs(rep: RunReport, cfg: RunConfig) -> list[Path]:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.command
    written = []
    if "json" in cfg.formats:
        p = out / f"{stem}.json"
        p.write_text(rep.to_json(), encoding="utf-8")
        written.append(p)
    if "csv" in cfg.formats:
        p = out / f"{stem}.csv"
        p.write_bytes(rep.to_csv().encode("utf-8"))
        written.append(p)
        ratio = next((c for c in ("tripling_float", "doubling_float", "ratio") if rep.rows and c in rep.rows[0]), "|X|")
        s = out / f"plot_{stem.replace('-', '_')}.py"
        s.write_text(PLOT_STUB.format(csv_name=p.name, ratio_col=ratio, stem=stem))
        written.append(s)
    for name, text in rep.artifacts.items():
        p = out / name
        p.write_text(text)
        written.append(p)
    return written


# ---------------------------------------------------------------------------
# verification


def verify_report(path: str | Path, rerun: bool = True) -> tuple[bool, str]:
    """Check a JSON report's checksum against its contents and, by default, a fresh run."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        stored = data["checksum"]
        cfg_dict = data["config"]
        body = compute_checksum(cfg_dict, data["outputs"], data["sets"], data["status"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ReportError(f"malformed report {path}: {exc}") from None
    if body != stored:
        return False, "checksum does not match report contents"
    if not rerun:
        return True, "checksum matches report contents"
    cfg = RunConfig.from_dict(cfg_dict)
    fresh = run(cfg).checksum
    if fresh != stored:
        return False, "re-run checksum differs"
    return True, "re-run reproduces checksum"


# ---------------------------------------------------------------------------
# argument parsing


def _kv(items: list[str] | None, where: str) -> dict:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise ConfigError(f"{where}: expected key=value, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip()] = yaml.safe_load(v)
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, help="worker threads for product sets")
    p.add_argument("--format", choices=FORMATS + ("both",), help="output format")
    p.add_argument("--out", help="output directory")
    p.add_argument("--cache", action="store_true", help="enable the input cache")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apxgrp", description="Approximate-group experiments on finite sets.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run the command named in a config file")
    r.add_argument("config")
    _add_common(r)
    v = sub.add_parser("verify-report", help="check a JSON report")
    v.add_argument("path")
    v.add_argument("--no-rerun", action="store_true", help="only check internal consistency")
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run {name}")
        p.add_argument("-c", "--config", help="config file (its command name is overridden)")
        p.add_argument("--family", help="family kind for the input set")
        p.add_argument("-p", "--param", action="append", metavar="K=V", help="family parameter")
        p.add_argument("--corpus", help="corpus name (corpus-run)")
        p.add_argument("--literals", nargs="+", help="explicit element literals")
        p.add_argument("--file", help="FinSet file")
        p.add_argument("-b", "--backend", action="append", metavar="K=V", help="backend parameter")
        p.add_argument("--second-family", help="family kind of the partner set")
        p.add_argument("-q", "--second-param", action="append", metavar="K=V")
        p.add_argument("-o", "--opt", action="append", metavar="K=V", help="command option")
        _add_common(p)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.cmd == "run":
        cfg = load_config(args.config)
    else:
        base = {}
        if args.config:
            base = yaml.safe_load(Path(args.config).read_text()) or {}
        base = dict(base)
        base["command"] = {"name": args.cmd, "options": {**(base.get("command") or {}).get("options", {}),
                                                        **_kv(args.opt, "--opt")}}
        backend = _kv(args.backend, "--backend")
        if backend:
            base["backend"] = backend
        inp = dict(base.get("input") or {})
        chosen = {}
        if args.family:
            chosen = {"family": {"kind": args.family, **_kv(args.param, "--param")}}
        elif args.corpus:
            chosen = {"corpus": args.corpus}
        elif args.literals:
            chosen = {"literals": args.literals}
        elif args.file:
            chosen = {"file": args.file}
        if chosen:
            inp = {k: v for k, v in inp.items() if k == "second"}
            inp.update(chosen)
        if args.second_family:
            inp["second"] = {"family": {"kind": args.second_family, **_kv(args.second_param, "--second-param")}}
        base["input"] = inp
        cfg = RunConfig.from_dict(base)
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.format:
        kw["formats"] = FORMATS if args.format == "both" else (args.format,)
    if args.out:
        kw["out_dir"] = args.out
    if args.cache:
        kw["cache"] = True
    return cfg.replace(**kw) if kw else cfg


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.cmd == "verify-report":
            ok, msg = verify_report(args.path, rerun=not args.no_rerun)
            print(("PASS" if ok else "FAIL") + f": {msg}")
            return EXIT_OK if ok else EXIT_INVARIANT
        cfg = config_from_args(args)
        if args.threads is not None:
            os.environ["APXGRP_THREADS"] = str(args.threads)
        rep = run(cfg)
        for p in write_outputs(rep, cfg):
            print(p)
        if rep.status == "budget-exceeded":
            return EXIT_BUDGET
        return EXIT_OK
    except (CapExceeded, BudgetExceeded, CoordinateOverflow) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvariantViolation, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, FamilyError, GroupError, TowerInputError, ReportError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
