#!/usr/bin/env python3
"""Window-size study of the counting-function error.

Runs the square-lattice magnetic Laplacian at a rational flux over a
range of window sizes, for both boundary conditions, and prints one line
per (lambda, m) with the distance to the quadrature ground truth.  Writes
the same table as CSV when --out is given.

Usage:
    python scripts/convergence_study.py --flux 1/3 --windows 8 16 32 64
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from magspec.config import parse_flux
from magspec.exhaustion import folner_box, window_subgraph
from magspec.experiments import RESULT_COLUMNS, select_probe_lambdas, write_csv
from magspec.floquet import band_edges, ids_oracle, magnetic_cell
from magspec.lattice import square_lattice
from magspec.operators import harper_dml, hofstadter_weights
from magspec.spectra import assemble_dirichlet, assemble_neumann, spectral_density


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--flux", default="1/3", help="rational flux p/q")
    parser.add_argument("--windows", type=int, nargs="+", default=[8, 16, 32])
    parser.add_argument("--points", type=int, default=9)
    parser.add_argument("--oracle-grid", type=int, default=256)
    parser.add_argument("--out", type=Path, default=None, help="optional CSV path")
    args = parser.parse_args()

    flux = parse_flux(args.flux)
    graph = square_lattice()
    weights = hofstadter_weights(graph, flux)
    _, dml = harper_dml(graph, weights)
    cell = magnetic_cell(graph, dml, flux)
    probes = select_probe_lambdas(band_edges(cell), args.points, 0.1)

    records = []
    print(f"flux {flux}; probes: {[round(x, 4) for x in probes]}")
    for m in args.windows:
        window = window_subgraph(graph, folner_box(2, m))
        spectra = {
            "dirichlet": spectral_density(assemble_dirichlet(dml, window), window),
            "neumann": spectral_density(
                assemble_neumann(graph, weights, window), window
            ),
        }
        for lam in probes:
            truth = ids_oracle(cell, lam, args.oracle_grid).value
            for bc, spec in spectra.items():
                err = abs(spec.ids(lam) - truth)
                records.append(
                    ("convergence-study", bc, m, lam, spec.ids(lam), truth, err,
                     None, None, None)
                )
                print(f"m={m:4d} {bc:9s} lambda={lam:8.4f} err={err:.6f}")
    if args.out is not None:
        write_csv(args.out, RESULT_COLUMNS, records)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
