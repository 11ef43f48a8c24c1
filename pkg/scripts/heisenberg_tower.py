#!/usr/bin/env python3
"""Build and verify the x^4 tower seeded by a symmetrized Heisenberg box.

    python scripts/heisenberg_tower.py --r 8 --depth 8 [--json out.json]
"""
import argparse
import json
import time

from apxgrp import symmetrize
from apxgrp.families import heisenberg_box
from apxgrp.tower import build_tower, verify_tower


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", type=int, default=8)
    ap.add_argument("--depth", type=int, default=8)
    ap.add_argument("--all-m", action="store_true", help="check square roots for every m")
    ap.add_argument("--json")
    args = ap.parse_args()

    t0 = time.perf_counter()
    X1 = symmetrize(heisenberg_box(args.r))
    levels = build_tower(X1, args.depth)
    rep = verify_tower(levels, all_m=args.all_m)
    print(f"r={args.r}  |X1|={len(X1)}  levels={[len(L) for L in levels]}  ({time.perf_counter() - t0:.1f}s)")
    print(f"N={rep.N}  c={rep.c}  cover counts={rep.cover_counts}")
    for prop, (ok, total) in rep.pass_counts().items():
        print(f"  property {prop}: {ok}/{total}")
    for ch in rep.failures():
        print(f"  fail {ch.prop} n={ch.n} m={ch.m} k={ch.k} witness={ch.witness}")
    if args.json:
        with open(args.json, "w") as fp:
            json.dump(rep.to_dict(), fp, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
