#!/usr/bin/env python3
"""Doubling and tripling ratios across the growth-grid corpus, as a table.

Polynomial families (boxes, Beatty sets) keep bounded ratios while the
Heisenberg balls show the r^4 volume growth through |X^3|/|X|.
"""
import argparse

from apxgrp import power, product
from apxgrp.families import corpus, generate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", default="growth-grid")
    args = ap.parse_args()
    print(f"{'family':34s} {'|X|':>7s} {'|XX|/|X|':>9s} {'|X^3|/|X|':>10s}")
    for fs in corpus(args.corpus):
        X = generate(fs)
        d = len(product(X, X)) / len(X)
        t = len(power(X, 3)) / len(X)
        print(f"{fs.name:34s} {len(X):7d} {d:9.3f} {t:10.3f}")


if __name__ == "__main__":
    main()
