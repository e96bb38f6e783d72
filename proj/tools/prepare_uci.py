#!/usr/bin/env python3
"""Convert UCI-style CSV files into the layout `mrc` reads.

Input files start with a line `n,d,class0,class1,...`, followed by n rows of
d feature values and an integer class code. Distinct codes, in ascending
order, are matched with the class names of the first line. Missing cells (`nan`, `?`, empty)
are replaced by the column median of the observed values.

Output: one row per sample, d features then the class name, no header.

    python3 tools/prepare_uci.py haberman.csv data/haberman.csv
"""

import argparse
import csv
import math
import statistics
import sys


def parse_cell(text):
    text = text.strip()
    if text in ("", "?", "nan", "NaN"):
        return math.nan
    return float(text)


def convert(src, dst):
    with open(src, newline="") as f:
        rows = list(csv.reader(f))
    head = rows[0]
    n, d = int(head[0]), int(head[1])
    names = head[2:]
    body = [r for r in rows[1:] if r]
    if len(body) != n:
        sys.exit(f"{src}: header announces {n} rows, found {len(body)}")

    features = [[parse_cell(c) for c in r[:d]] for r in body]
    labels = [int(float(r[d])) for r in body]
    imputed = 0
    for j in range(d):
        observed = [x[j] for x in features if not math.isnan(x[j])]
        median = statistics.median(observed)
        for x in features:
            if math.isnan(x[j]):
                x[j] = median
                imputed += 1

    codes = sorted(set(labels))
    if len(names) != len(codes):
        names = [str(c) for c in codes]
    name_of = dict(zip(codes, names))

    with open(dst, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        for x, y in zip(features, labels):
            w.writerow([f"{v:g}" for v in x] + [name_of[y]])
    print(f"{dst}: {n} rows, {d} features, {len(set(labels))} classes, {imputed} cells imputed")


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("src")
    p.add_argument("dst")
    a = p.parse_args()
    convert(a.src, a.dst)


if __name__ == "__main__":
    main()
