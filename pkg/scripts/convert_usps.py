#!/usr/bin/env python3
"""Convert the classic USPS digit files to the CSV layout the benchmark reads.

The source files (``zip.train.gz`` / ``zip.test.gz``, available from the
usual statlog/Elements-of-Statistical-Learning mirrors) hold one image per
line: the digit label followed by 256 grayscale values in [-1, 1], separated
by whitespace. This script concatenates the given files into one CSV with the
label in column 0:

    python3 scripts/convert_usps.py zip.train.gz zip.test.gz -o data/usps.csv

The benchmark configs select digit subsets with ``keep_labels``, so the full
combined file is all you need.
"""

import argparse
import gzip
import sys


def open_maybe_gzip(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rt")
    return open(path, "r")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("inputs", nargs="+", help="zip.train[.gz] and/or zip.test[.gz]")
    ap.add_argument("-o", "--out", required=True, help="output CSV path")
    args = ap.parse_args(argv)

    n = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for path in args.inputs:
            with open_maybe_gzip(path) as fh:
                for line in fh:
                    parts = line.split()
                    if not parts:
                        continue
                    if len(parts) != 257:
                        raise SystemExit(
                            f"{path}: expected 257 fields per line, got {len(parts)}"
                        )
                    label = int(float(parts[0]))
                    out.write(",".join([str(label)] + parts[1:]) + "\n")
                    n += 1
    print(f"wrote {args.out} ({n} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
