#!/usr/bin/env python3
"""Band intervals of the square-lattice magnetic Laplacian over all
reduced fractions p/q up to a denominator cap, as a flat CSV (one row per
band).  Suitable for scatter-plotting flux against band support.

Usage:
    python scripts/butterfly_table.py --q-max 12 --out butterfly.csv
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from magspec.config import parse_config
from magspec.experiments import BUTTERFLY_COLUMNS, run_butterfly, write_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--q-max", type=int, default=12)
    parser.add_argument("--grid", type=int, default=64)
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--out", type=Path, default=Path("butterfly.csv"))
    args = parser.parse_args()

    cfg = parse_config(
        f"label: butterfly\nbutterfly: {{q_max: {args.q_max}, grid_n: {args.grid}}}\n"
    )
    records, timings = run_butterfly(cfg, workers=args.workers)
    write_csv(args.out, BUTTERFLY_COLUMNS, records)
    print(f"wrote {args.out} ({len(records)} bands, {timings['total']:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
