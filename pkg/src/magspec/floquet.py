"""Bloch-Floquet ground truth for rational-flux periodic operators.

For flux p/q the Landau-gauge phases are exactly periodic under the
sublattice that stretches the first axis by q, so the operator decomposes
over the torus into finite Hermitian fibers of dimension q * #orbits.
Band integrals of the fiber counting function give the limiting spectral
density (normalized so it saturates at #orbits), block and flat-band
models have exact jump lists, and fiber trace moments cross-check the
walk-based trace through an independent computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .exhaustion import window_subgraph
from .lattice import PeriodicGraph, Shift
from .operators import LocalOperator, gamma_trace_power
from .spectra import assemble_dirichlet, gershgorin_bound

PERIODICITY_TOL = 1e-13
BAND_EDGE_MARGIN = 1e-6
FLAT_BAND_TOL = 1e-10


class OracleUnavailableError(RuntimeError):
    """Model outside the oracle's domain (irrational flux, no block/flat structure)."""


class BandEdgeError(RuntimeError):
    """Counting point too close to a band edge for quadrature ground truth."""


@dataclass(eq=False)
class MagneticCell:
    """Enlarged unit cell of a q-periodic stencil plus its hop matrices.

    ``hops[n]`` maps the cell at the origin of the coarse lattice to the
    cell at coarse offset n; the fiber at momentum k is the Fourier sum of
    the hops.  Fiber index order is (column within cell, orbit).
    """

    graph: PeriodicGraph
    op: LocalOperator
    q: int
    dim: int
    hops: dict[Shift, np.ndarray]
    _grid_cache: dict[int, np.ndarray] = field(default_factory=dict)
    _flat_cache: dict[int, np.ndarray] = field(default_factory=dict)
    _band_cache: dict[int, tuple] = field(default_factory=dict)

    def rep_index(self, column: int, orbit: int) -> int:
        return column * self.graph.num_orbits + orbit

    def rep_shift(self, column: int) -> Shift:
        return (column,) + (0,) * (self.graph.dimension - 1)


def _flux_denominator(flux) -> int:
    if flux is None:
        raise OracleUnavailableError("weights carry no flux parameter; no oracle")
    if isinstance(flux, Fraction):
        return flux.denominator
    if isinstance(flux, int):
        return 1
    raise OracleUnavailableError(
        f"irrational flux {flux!r} rejected: the Floquet oracle needs p/q"
    )


def magnetic_cell(graph: PeriodicGraph, op: LocalOperator, flux) -> MagneticCell:
    """Build the enlarged cell for a stencil that is exactly periodic under
    q Z x Z^(d-1), with q the flux denominator.  Periodicity of the
    coefficients is verified numerically and violations are rejected."""
    q = _flux_denominator(flux)
    d = graph.dimension
    norb = graph.num_orbits
    dim = q * norb
    zero_tail = (0,) * (d - 1)

    def rep(c: int) -> Shift:
        return (c,) + zero_tail

    for orbit, ents in op.entries.items():
        for ent in ents:
            for c in range(q):
                base = ent.coeff(rep(c))
                if abs(ent.coeff((c + q,) + zero_tail) - base) > PERIODICITY_TOL:
                    raise OracleUnavailableError(
                        "stencil is not periodic under the enlarged cell"
                    )
                for j in range(1, d):
                    probe = tuple(
                        (c if i == 0 else (1 if i == j else 0)) for i in range(d)
                    )
                    if abs(ent.coeff(probe) - base) > PERIODICITY_TOL:
                        raise OracleUnavailableError(
                            "stencil coefficients depend on a transverse translate"
                        )

    hops: dict[Shift, np.ndarray] = {}
    for orbit in range(norb):
        for ent in op.entries.get(orbit, ()):
            for c in range(q):
                coeff = ent.coeff(rep(c))
                t0 = c + ent.offset[0]
                c2 = t0 % q
                n = ((t0 - c2) // q,) + tuple(ent.offset[1:])
                block = hops.setdefault(n, np.zeros((dim, dim), dtype=complex))
                row = c2 * norb + ent.target_orbit
                col = c * norb + orbit
                block[row, col] += coeff
    for n, block in hops.items():
        rev = hops.get(tuple(-x for x in n))
        if rev is None or np.abs(rev - block.conj().T).max() > 1e-12:
            raise OracleUnavailableError("hop matrices are not Hermitian-paired")
    return MagneticCell(graph, op, q, dim, hops)


def bloch_fiber(cell: MagneticCell, k) -> np.ndarray:
    """Hermitian fiber at torus momentum k: sum of hops weighted by
    e^{i k . n} over coarse offsets n."""
    k = np.asarray(k, dtype=float)
    H = np.zeros((cell.dim, cell.dim), dtype=complex)
    for n, block in cell.hops.items():
        H += np.exp(1j * float(np.dot(k, n))) * block
    return H


def _midpoints(N: int) -> np.ndarray:
    return (np.arange(N) + 0.5) * (2.0 * np.pi / N)


def fiber_grid_eigs(cell: MagneticCell, N: int) -> np.ndarray:
    """Eigenvalues of all fibers on the N^d midpoint grid, shape
    (N^d, dim), each row ascending.  Cached per N; fibers are built and
    diagonalized in bounded chunks so large grids stay within memory."""
    cached = cell._grid_cache.get(N)
    if cached is not None:
        return cached
    d = cell.graph.dimension
    axes = np.meshgrid(*([_midpoints(N)] * d), indexing="ij")
    kpts = np.stack([a.ravel() for a in axes], axis=-1)
    total = kpts.shape[0]
    eigs = np.empty((total, cell.dim), dtype=float)
    chunk = max(1, (1 << 22) // max(1, cell.dim * cell.dim))
    offsets = {n: np.asarray(n, dtype=float) for n in cell.hops}
    for start in range(0, total, chunk):
        part = kpts[start : start + chunk]
        H = np.zeros((part.shape[0], cell.dim, cell.dim), dtype=complex)
        for n, block in cell.hops.items():
            phase = part @ offsets[n]
            H += np.exp(1j * phase)[:, None, None] * block
        eigs[start : start + chunk] = np.linalg.eigvalsh(H)
    cell._grid_cache[N] = eigs
    return eigs


def _sorted_flat_eigs(cell: MagneticCell, N: int) -> np.ndarray:
    cached = cell._flat_cache.get(N)
    if cached is None:
        cached = np.sort(fiber_grid_eigs(cell, N).ravel())
        cell._flat_cache[N] = cached
    return cached


def grid_ids(cell: MagneticCell, lam: float, N: int) -> float:
    """Midpoint-rule value of the normalized counting integral at grid N."""
    flat = _sorted_flat_eigs(cell, N)
    d = cell.graph.dimension
    return float(np.searchsorted(flat, lam, side="right") / (cell.q * N**d))


@dataclass(frozen=True)
class IdsEstimate:
    value: float
    error_bound: float
    coarse: float
    fine: float
    grid: int


def ids_oracle(
    cell: MagneticCell, lam: float, N: int = 128, allow_band_edge: bool = False
) -> IdsEstimate:
    """Quadrature estimate of the limiting spectral density at lam.

    Uses the N and 2N midpoint grids; the reported bound is the
    Richardson-style difference (doubled, plus one grid point's weight) so
    the two grid values always differ by less than it.  Counting points
    within 1e-6 of a band edge are refused unless allow_band_edge is set,
    because the integrand is discontinuous there.
    """
    if N < 8:
        raise ValueError("grid must have N >= 8")
    if not allow_band_edge:
        dist = band_edge_distance(cell, lam)
        if dist < BAND_EDGE_MARGIN:
            raise BandEdgeError(f"band-edge lambda: {lam} is {dist:.2e} from an edge")
    coarse = grid_ids(cell, lam, N)
    fine = grid_ids(cell, lam, 2 * N)
    d = cell.graph.dimension
    bound = 2.0 * abs(fine - coarse) + 1.0 / (cell.q * (2 * N) ** d)
    return IdsEstimate(fine, bound, coarse, fine, N)


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float


def _refine_extremum(
    cell: MagneticCell,
    band: int,
    k0: np.ndarray,
    h0: float,
    minimize: bool,
    rounds: int = 14,
    pts: int = 5,
) -> float:
    """Nested local grid refinement of one band's extremum around k0.
    Derivative-free, so band crossings (where the sorted band function is
    only continuous) are handled too."""
    d = cell.graph.dimension
    k = np.array(k0, dtype=float)
    h = h0
    best = None
    for _ in range(rounds):
        axes = [np.linspace(k[i] - h, k[i] + h, pts) for i in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts_all = np.stack([m.ravel() for m in mesh], axis=-1)
        H = np.zeros((pts_all.shape[0], cell.dim, cell.dim), dtype=complex)
        for n, block in cell.hops.items():
            phase = pts_all @ np.asarray(n, dtype=float)
            H += np.exp(1j * phase)[:, None, None] * block
        vals = np.linalg.eigvalsh(H)[:, band]
        idx = int(np.argmin(vals) if minimize else np.argmax(vals))
        best = float(vals[idx])
        k = pts_all[idx]
        h *= 0.5
    return best


def band_edges(cell: MagneticCell, N: int = 64) -> tuple[Band, ...]:
    """Per-band spectral intervals: grid extrema of each sorted fiber
    eigenvalue branch, refined locally.  Cached per N."""
    if N < 64:
        raise ValueError("band location needs a grid of N >= 64")
    cached = cell._band_cache.get(N)
    if cached is not None:
        return cached
    d = cell.graph.dimension
    eigs = fiber_grid_eigs(cell, N)
    axes = np.meshgrid(*([_midpoints(N)] * d), indexing="ij")
    kpts = np.stack([a.ravel() for a in axes], axis=-1)
    h0 = np.pi / N
    bands = []
    for b in range(cell.dim):
        imin = int(np.argmin(eigs[:, b]))
        imax = int(np.argmax(eigs[:, b]))
        lo = _refine_extremum(cell, b, kpts[imin], h0, minimize=True)
        hi = _refine_extremum(cell, b, kpts[imax], h0, minimize=False)
        bands.append(Band(min(lo, float(eigs[imin, b])), max(hi, float(eigs[imax, b]))))
    out = tuple(sorted(bands, key=lambda band: (band.lo, band.hi)))
    cell._band_cache[N] = out
    return out


def band_edge_distance(cell: MagneticCell, lam: float, N: int = 64) -> float:
    edges = []
    for band in band_edges(cell, N):
        edges.append(band.lo)
        edges.append(band.hi)
    return min(abs(lam - e) for e in edges)


def merged_intervals(bands, join_tol: float = 1e-9) -> list[tuple[float, float]]:
    """Union of band intervals as disjoint intervals (touching bands merge)."""
    out: list[list[float]] = []
    for band in sorted(bands, key=lambda b: (b.lo, b.hi)):
        if out and band.lo <= out[-1][1] + join_tol:
            out[-1][1] = max(out[-1][1], band.hi)
        else:
            out.append([band.lo, band.hi])
    return [(a, b) for a, b in out]


def jump_oracle(
    graph: PeriodicGraph,
    op: LocalOperator,
    cell: Optional[MagneticCell] = None,
    flat_tol: float = FLAT_BAND_TOL,
    grid_n: int = 32,
) -> list[tuple[float, Fraction]]:
    """Exact jump list (lam, D(lam)) for models that admit one.

    Block-diagonal models (all templates have zero offset) get their
    per-cell spectrum; models whose fibers are k-independent within
    flat_tol get flat-band multiplicities divided by q.  Anything else has
    no exact jump oracle and is rejected.
    """
    if graph.offset_reach == 0 and op.offset_reach == 0:
        window = window_subgraph(graph, [(0,) * graph.dimension])
        M = assemble_dirichlet(op, window)
        evals = np.sort(np.linalg.eigvalsh(M)) if M.size else np.zeros(0)
        return _cluster_jumps(evals, Fraction(1), gershgorin_bound(M))
    if cell is not None:
        eigs = fiber_grid_eigs(cell, grid_n)
        spread = (eigs.max(axis=0) - eigs.min(axis=0)).max() if eigs.size else 0.0
        if spread < flat_tol:
            values = eigs.mean(axis=0)
            scale = max(1.0, float(np.abs(values).max()) if values.size else 1.0)
            return _cluster_jumps(np.sort(values), Fraction(1, cell.q), scale)
        raise OracleUnavailableError(
            f"no exact jump oracle: fiber spread {spread:.3e} exceeds {flat_tol}"
        )
    raise OracleUnavailableError("no exact jump oracle for this model")


def _cluster_jumps(
    sorted_values: np.ndarray, unit: Fraction, scale: float
) -> list[tuple[float, Fraction]]:
    tol = 1e-9 * max(scale, 1.0)
    jumps: list[tuple[float, Fraction]] = []
    i = 0
    n = len(sorted_values)
    while i < n:
        j = i
        while j + 1 < n and sorted_values[j + 1] - sorted_values[j] <= tol:
            j += 1
        lam = float(np.mean(sorted_values[i : j + 1]))
        jumps.append((lam, unit * (j + 1 - i)))
        i = j + 1
    return jumps


def exact_ids_from_jumps(jumps, lam: float) -> float:
    """Counting function of a pure-point model: sum of jumps at or below lam."""
    return float(sum(d for x, d in jumps if x <= lam + 1e-12))


def moment_crosscheck(
    op: LocalOperator, cell: MagneticCell, n_max: int, N: int = 128
) -> float:
    """Max over n <= n_max of |walk trace of A^n - fiber quadrature moment|.

    The fiber moment is a trigonometric polynomial of low degree, so the
    midpoint rule is exact once N exceeds it; the walk side never touches
    the fibers, making this a two-channel identity check.
    """
    flat = _sorted_flat_eigs(cell, N)
    d = cell.graph.dimension
    denom = cell.q * N**d
    worst = 0.0
    for n in range(n_max + 1):
        fiber_moment = float(np.sum(flat**n) / denom)
        walk_moment = gamma_trace_power(op, n)
        worst = max(worst, abs(fiber_moment - walk_moment))
    return worst
