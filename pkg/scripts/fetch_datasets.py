#!/usr/bin/env python3
"""Fetch the UCI image segmentation dataset and normalize it for `aeknn`.

The dataset is not redistributable with this package, so this helper pulls it
from the UCI repository and rewrites it as a label-last numeric CSV at
data/image_segmentation.csv (2310 rows, 19 features, 7 classes). With that
file in place the image-segmentation acceptance test runs instead of being
waived.

Usage: python scripts/fetch_datasets.py [--out data/image_segmentation.csv]
"""

import argparse
import csv
import os
import sys
import urllib.request

BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases/image/"
PARTS = ["segmentation.data", "segmentation.test"]
N_HEADER_LINES = 5  # banner lines before the records in each file


def fetch(url: str) -> list[str]:
    with urllib.request.urlopen(url, timeout=60) as response:
        return response.read().decode("utf-8").splitlines()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join("data", "image_segmentation.csv"))
    args = parser.parse_args()

    rows = []
    for part in PARTS:
        url = BASE + part
        print(f"fetching {url}")
        try:
            lines = fetch(url)
        except OSError as exc:
            print(f"error: could not download {url}: {exc}", file=sys.stderr)
            return 1
        for line in lines[N_HEADER_LINES:]:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            label, features = cells[0], cells[1:]
            rows.append(features + [label])

    if len(rows) != 2310:
        print(f"warning: expected 2310 rows, got {len(rows)}", file=sys.stderr)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as handle:
        csv.writer(handle).writerows(rows)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
