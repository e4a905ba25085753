#!/usr/bin/env python3
"""Jump structure of the disconnected triangle-cell model.

Prints, for a range of window sizes, the window jump D_m, the interior
jump D'_m and the exact per-cell jump at each atom of the limiting
counting function.  On this block model all three agree at every size,
which is the sharpest form of the jump approximation.

Usage:
    python scripts/jump_study.py --max-m 64
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from magspec.exhaustion import folner_box, interior_vertices, window_subgraph
from magspec.floquet import jump_oracle
from magspec.lattice import triangle_cells
from magspec.operators import harper_dml, uniform_weights
from magspec.spectra import (
    assemble_dirichlet,
    interior_restriction,
    rect_kernel_dim,
    spectral_density,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-m", type=int, default=64)
    args = parser.parse_args()

    graph = triangle_cells()
    _, dml = harper_dml(graph, uniform_weights(graph))
    jumps = jump_oracle(graph, dml)
    print("exact jumps:", [(round(lam, 12), str(d)) for lam, d in jumps])
    for m in range(4, args.max_m + 1, 4):
        window = window_subgraph(graph, folner_box(1, m))
        M = assemble_dirichlet(dml, window)
        spec = spectral_density(M, window)
        split = interior_vertices(graph, window, dml.propagation)
        cells = len(window.elements)
        for lam, d_exact in jumps:
            d_m = spec.jump(lam, 1e-8)
            k = rect_kernel_dim(interior_restriction(dml, window, split, lam), 1e-8)
            print(
                f"m={m:3d} lambda={lam:6.3f} D_m={d_m:.6f} "
                f"D'_m={k / cells:.6f} D={float(d_exact):.6f}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
