"""Named structural checks.

Each check returns a CheckResult with a stable name, so the verify driver
can aggregate them into a machine-readable report and point at the exact
invariant that broke.  The acceptance suite runs the same code paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .exhaustion import (
    folner_box,
    interior_vertices,
    isoperimetric_ratio,
    translated,
    window_boundary_ratio,
    window_subgraph,
)
from .floquet import (
    OracleUnavailableError,
    magnetic_cell,
    moment_crosscheck,
)
from .lattice import (
    PeriodicGraph,
    Vertex,
    periodic_graph,
    simplicial_ball,
    square_lattice,
    triangle_cells,
)
from .operators import (
    LocalOperator,
    WeightFunction,
    apply_local,
    check_conjugation_symmetry,
    gauge_transformed,
    gamma_trace_power,
    harper_dml,
    inner_product,
    local_operator,
    translation_commutator,
    unit_phase,
    validate_weights,
)
from .spectra import (
    assemble_dirichlet,
    assemble_neumann,
    gershgorin_bound,
    inertia_count_leq,
    interior_restriction,
    projection_window_dim,
    rect_kernel_dim,
    spectral_density,
)

COCYCLE_RADIUS = 6


@dataclass
class CheckResult:
    name: str
    passed: bool
    metric: float
    detail: str
    model: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model,
            "passed": bool(self.passed),
            "metric": float(self.metric),
            "detail": self.detail,
        }


@dataclass
class ModelUnderTest:
    """One graph + weight + operator triple the suite runs over."""

    label: str
    graph: PeriodicGraph
    weights: WeightFunction
    operator: LocalOperator
    flux: object = None
    window_sizes: tuple[int, ...] = (4, 6)
    interior_radius: Optional[int] = None


def _guard(name: str, model: str, fn: Callable[[], CheckResult]) -> CheckResult:
    try:
        return fn()
    except Exception as exc:  # surfaces as a named failure, not a crash
        return CheckResult(name, False, float("nan"), f"{type(exc).__name__}: {exc}", model)


def check_sigma_conjugation(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        resid = check_conjugation_symmetry(m.graph, m.weights, 3)
        return CheckResult(
            "sigma-conjugation", resid <= 1e-12, resid,
            f"max |sigma(rev e) - conj sigma(e)| = {resid:.3e}", m.label,
        )
    return _guard("sigma-conjugation", m.label, run)


def check_cocycle_residual(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        validate_weights(m.graph, m.weights, COCYCLE_RADIUS)
        return CheckResult(
            "cocycle-residual", True, 0.0,
            "coboundary equation solved for every generator at 1e-12", m.label,
        )
    return _guard("cocycle-residual", m.label, run)


def check_commutator(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        cocycles = validate_weights(m.graph, m.weights, COCYCLE_RADIUS + m.operator.propagation)
        zero = (0,) * m.graph.dimension
        tests = [{Vertex(orb, zero): 1.0 + 0.0j} for orb in range(m.graph.num_orbits)]
        tests.append(
            {Vertex(orb, zero): 0.5 + 0.25j * (orb + 1) for orb in range(m.graph.num_orbits)}
        )
        scale = max(1.0, m.operator.norm_bound)
        worst = max(
            translation_commutator(m.operator, c, tests) for c in cocycles.values()
        ) / scale
        return CheckResult(
            "commutator-residual", worst <= 1e-12, worst,
            f"max ||A T f - T A f|| / ||A|| = {worst:.3e}", m.label,
        )
    return _guard("commutator-residual", m.label, run)


def check_self_adjoint(m: ModelUnderTest, rng: np.random.Generator) -> CheckResult:
    def run() -> CheckResult:
        ball = simplicial_ball(m.graph, Vertex(0, (0,) * m.graph.dimension), 2)
        support = sorted(ball)
        worst = 0.0
        for _ in range(5):
            f = {v: complex(*rng.normal(size=2)) for v in support}
            g = {v: complex(*rng.normal(size=2)) for v in support}
            lhs = inner_product(apply_local(m.operator, f), g)
            rhs = inner_product(f, apply_local(m.operator, g))
            norm = max(1.0, abs(lhs), abs(rhs))
            worst = max(worst, abs(lhs - rhs) / norm)
        return CheckResult(
            "self-adjointness", worst <= 1e-12, worst,
            f"max relative <Af,g> - <f,Ag> = {worst:.3e}", m.label,
        )
    return _guard("self-adjointness", m.label, run)


def check_propagation_support(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        zero = (0,) * m.graph.dimension
        ok = True
        for orb in range(m.graph.num_orbits):
            v = Vertex(orb, zero)
            ball = simplicial_ball(m.graph, v, m.operator.propagation)
            col = apply_local(m.operator, {v: 1.0 + 0.0j})
            ok = ok and all(u in ball for u, c in col.items() if c != 0)
        return CheckResult(
            "propagation-support", ok, 0.0 if ok else 1.0,
            f"supp(A delta_v) inside the {m.operator.propagation}-ball, exact", m.label,
        )
    return _guard("propagation-support", m.label, run)


def check_gauge_invariance(m: ModelUnderTest, rng: np.random.Generator) -> CheckResult:
    def run() -> CheckResult:
        mside = m.window_sizes[-1]
        win = window_subgraph(m.graph, folner_box(m.graph.dimension, mside))
        phases = {v: unit_phase(rng.random()) for v in win.verts}
        gauged = gauge_transformed(m.weights, lambda v: phases.get(v, 1.0 + 0.0j))
        _, dml = harper_dml(m.graph, m.weights)
        _, dml_g = harper_dml(m.graph, gauged)
        e1 = np.linalg.eigvalsh(assemble_dirichlet(dml, win))
        e2 = np.linalg.eigvalsh(assemble_dirichlet(dml_g, win))
        worst = float(np.abs(e1 - e2).max())
        return CheckResult(
            "gauge-invariance", worst <= 1e-10, worst,
            f"max eigenvalue shift under a random gauge = {worst:.3e}", m.label,
        )
    return _guard("gauge-invariance", m.label, run)


def check_translation_invariance(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        mside = m.window_sizes[-1]
        box = folner_box(m.graph.dimension, mside)
        gamma = (3,) + (2,) * (m.graph.dimension - 1)
        win = window_subgraph(m.graph, box)
        win2 = window_subgraph(m.graph, translated(box, gamma))
        e1 = np.linalg.eigvalsh(assemble_dirichlet(m.operator, win))
        e2 = np.linalg.eigvalsh(assemble_dirichlet(m.operator, win2))
        worst = float(np.abs(e1 - e2).max())
        return CheckResult(
            "translation-invariance", worst <= 1e-10, worst,
            f"max eigenvalue shift between windows over L and gamma+L = {worst:.3e}",
            m.label,
        )
    return _guard("translation-invariance", m.label, run)


def check_dirichlet_neumann(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        worst = 0.0
        for mside in m.window_sizes:
            win = window_subgraph(m.graph, folner_box(m.graph.dimension, mside))
            _, dml = harper_dml(m.graph, m.weights)
            Md = assemble_dirichlet(dml, win)
            Mn = assemble_neumann(m.graph, m.weights, win)
            diff = Md - Mn
            off = float(np.abs(diff - np.diag(np.diag(diff))).max())
            diag = np.real(np.diag(diff))
            if off > 1e-12 or diag.min() < -1e-12:
                return CheckResult(
                    "dirichlet-neumann-order", False, max(off, -diag.min()),
                    "Dirichlet minus Neumann is not a nonnegative diagonal", m.label,
                )
            boundary = set(interior_vertices(m.graph, win, 1).boundary)
            interior_rows = [
                i for i, v in enumerate(win.verts) if v not in boundary
            ]
            if interior_rows and float(np.abs(diag[interior_rows]).max()) > 1e-12:
                return CheckResult(
                    "dirichlet-neumann-order", False, float(np.abs(diag[interior_rows]).max()),
                    "Dirichlet/Neumann difference not supported on the boundary", m.label,
                )
            ed = np.sort(np.linalg.eigvalsh(Md))
            en = np.sort(np.linalg.eigvalsh(Mn))
            # eigenvalue-wise domination gives F_Neu >= F_Dir at every lambda
            worst = max(worst, float((en - ed).max()))
        return CheckResult(
            "dirichlet-neumann-order", worst <= 1e-12, worst,
            f"max_i eig_i(Neumann) - eig_i(Dirichlet) = {worst:.3e} (<= 0 required)",
            m.label,
        )
    return _guard("dirichlet-neumann-order", m.label, run)


def check_kernel_inclusion_and_rank(m: ModelUnderTest) -> list[CheckResult]:
    """Integer-level D' <= D on window restrictions plus exact rank-nullity."""
    def run_pair() -> list[CheckResult]:
        radius = m.interior_radius if m.interior_radius is not None else m.operator.propagation
        incl_ok, rank_ok = True, True
        incl_detail, rank_detail = [], []
        for mside in m.window_sizes:
            win = window_subgraph(m.graph, folner_box(m.graph.dimension, mside))
            split = interior_vertices(m.graph, win, radius)
            M = assemble_dirichlet(m.operator, win)
            evals = np.sort(np.linalg.eigvalsh(M)) if M.size else np.zeros(0)
            scale = max(1.0, gershgorin_bound(M))
            probes = [0.0]
            if evals.size:
                probes.append(float(evals[len(evals) // 2]))
            for lam in probes:
                R = interior_restriction(m.operator, win, split, lam)
                kdim = rect_kernel_dim(R, 1e-8)
                mult = int(np.count_nonzero(np.abs(evals - lam) <= 1e-8 * scale))
                if kdim > mult:
                    incl_ok = False
                    incl_detail.append(f"m={mside} lam={lam}: D'={kdim} > D={mult}")
                rank = int(np.linalg.matrix_rank(R, tol=1e-8 * max(scale, 1.0)))
                if kdim + rank != R.shape[1]:
                    rank_ok = False
                    rank_detail.append(
                        f"m={mside} lam={lam}: kernel {kdim} + rank {rank} != {R.shape[1]}"
                    )
        return [
            CheckResult(
                "kernel-inclusion", incl_ok, 0.0 if incl_ok else 1.0,
                "; ".join(incl_detail) or "dim ker(A' - lam i') <= dim ker(A_m - lam) on all probes",
                m.label,
            ),
            CheckResult(
                "rank-nullity", rank_ok, 0.0 if rank_ok else 1.0,
                "; ".join(rank_detail) or "kernel + rank = #interior columns, exact",
                m.label,
            ),
        ]

    try:
        return run_pair()
    except Exception as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return [
            CheckResult("kernel-inclusion", False, float("nan"), msg, m.label),
            CheckResult("rank-nullity", False, float("nan"), msg, m.label),
        ]


def check_interior_radius(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        radius = m.interior_radius if m.interior_radius is not None else m.operator.propagation
        ok = radius >= m.operator.propagation
        return CheckResult(
            "interior-radius", ok, float(radius),
            f"interior radius {radius} vs propagation bound {m.operator.propagation}",
            m.label,
        )
    return _guard("interior-radius", m.label, run)


def check_moments(m: ModelUnderTest, n_max: int = 8, grid_n: int = 128) -> CheckResult:
    def run() -> CheckResult:
        try:
            cell = magnetic_cell(m.graph, m.operator, m.weights.flux)
        except OracleUnavailableError as exc:
            return CheckResult(
                "moment-crosscheck", True, 0.0, f"skipped: {exc}", m.label
            )
        worst = moment_crosscheck(m.operator, cell, n_max, grid_n)
        return CheckResult(
            "moment-crosscheck", worst < 1e-6, worst,
            f"max |walk trace - fiber moment| over n <= {n_max} at N={grid_n}: {worst:.3e}",
            m.label,
        )
    return _guard("moment-crosscheck", m.label, run)


def check_trace_basics(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        t0 = gamma_trace_power(m.operator, 0)
        t2 = gamma_trace_power(m.operator, 2)
        ok = t0 == float(m.graph.num_orbits) and t2 >= -1e-12
        return CheckResult(
            "trace-normalization", ok, t0,
            f"tr(A^0) = {t0} (expect {m.graph.num_orbits}); tr(A^2) = {t2:.6g} >= 0",
            m.label,
        )
    return _guard("trace-normalization", m.label, run)


# global checks (model-independent)


def random_stencil_window(rng: np.random.Generator, max_dim: int = 400):
    """Random Hermitian stencil restricted to a random box window.

    Used as the test population for the inertia/eigendecomposition
    counting equivalence.  Returns (operator, window, matrix).
    """
    while True:
        dimension = int(rng.integers(1, 3))
        norb = int(rng.integers(1, 4))
        raw = []
        n_entries = int(rng.integers(1, 5))
        for _ in range(n_entries):
            a = int(rng.integers(norb))
            b = int(rng.integers(norb))
            off = tuple(int(x) for x in rng.integers(-1, 2, size=dimension))
            if a == b and all(x == 0 for x in off):
                c = complex(rng.normal(), 0.0)
                raw.append((a, a, off, c))
                continue
            c = complex(rng.normal(), rng.normal())
            raw.append((a, b, off, c))
            raw.append((b, a, tuple(-x for x in off), c.conjugate()))
        # a chain across orbits plus one template per axis keeps every
        # stencil offset at finite graph distance
        templates = [(orb, orb + 1, (0,) * dimension) for orb in range(norb - 1)]
        for axis in range(dimension):
            templates.append((0, 0, tuple(1 if i == axis else 0 for i in range(dimension))))
        graph = periodic_graph(dimension, norb, templates)
        try:
            op = local_operator(graph, raw)
        except Exception:
            continue
        side_max = max(2, int((max_dim / norb) ** (1.0 / dimension)))
        side = int(rng.integers(2, side_max + 1))
        win = window_subgraph(graph, folner_box(dimension, side))
        if len(win.verts) > max_dim:
            continue
        M = assemble_dirichlet(op, win)
        return op, win, M


def check_inertia_oracle(
    rng: np.random.Generator, instances: int = 200, max_dim: int = 400
) -> CheckResult:
    """Inertia-based counting equals full-eigendecomposition counting on
    random Hermitian stencil restrictions, exactly, away from eigenvalues."""
    mismatches = 0
    tested = 0
    for _ in range(instances):
        _, _, M = random_stencil_window(rng, max_dim)
        evals = np.sort(np.linalg.eigvalsh(M))
        norm = max(gershgorin_bound(M), 1e-12)
        lo, hi = float(evals[0]) - 0.1 * norm, float(evals[-1]) + 0.1 * norm
        lams = list(rng.uniform(lo, hi, size=3))
        mid = len(evals) // 2
        lams.append(float(evals[mid]) + 5e-8 * norm)
        for lam in lams:
            if np.abs(evals - lam).min() <= 1e-9 * norm:
                continue  # excluded: counting at an eigenvalue is ambiguous
            tested += 1
            expected = int(np.count_nonzero(evals <= lam))
            got = inertia_count_leq(M, lam)
            if got != expected:
                mismatches += 1
    return CheckResult(
        "inertia-oracle", mismatches == 0, float(mismatches),
        f"{tested} counting points over {instances} random restrictions, "
        f"{mismatches} mismatches",
    )


def check_folner_ratio(max_m: int = 20) -> CheckResult:
    """Two-sided collar ratio of square boxes in Z^2 stays strictly under
    4 d delta / m for m >= 4 delta."""
    worst = -1.0
    detail = []
    for delta in (1, 2):
        for m in range(4 * delta, max_m + 1, 2):
            ratio = isoperimetric_ratio(folner_box(2, m), delta)
            bound = Fraction(4 * 2 * delta, m)
            margin = float(bound - ratio)
            worst = max(worst, float(ratio / bound))
            if ratio >= bound:
                detail.append(f"m={m} delta={delta}: {float(ratio):.4f} >= {float(bound):.4f}")
    ok = not detail
    return CheckResult(
        "folner-ratio", ok, worst,
        "; ".join(detail) or f"max ratio/bound over Z^2 boxes = {worst:.4f} < 1",
    )


def check_boundary_collar() -> CheckResult:
    """Graph-side inner collar of box windows obeys the same 4 d delta / m
    bound, for the canonical lattices in d = 1, 2, 3."""
    graphs = {
        1: periodic_graph(1, 1, [(0, 0, (1,))]),
        2: square_lattice(),
        3: periodic_graph(3, 1, [(0, 0, (1, 0, 0)), (0, 0, (0, 1, 0)), (0, 0, (0, 0, 1))]),
    }
    detail = []
    worst = -1.0
    for d, graph in graphs.items():
        for delta in (1, 2):
            for m in (4 * delta, 4 * delta + 3, 8 * delta):
                win = window_subgraph(graph, folner_box(d, m))
                ratio = window_boundary_ratio(graph, win, delta)
                bound = Fraction(4 * d * delta, m)
                worst = max(worst, float(ratio / bound))
                if ratio >= bound:
                    detail.append(f"d={d} m={m} delta={delta}")
    return CheckResult(
        "boundary-collar", not detail, worst,
        "; ".join(detail) or f"max collar/bound over d <= 3 boxes = {worst:.4f} < 1",
    )


def _random_projection(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    A = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    Q, _ = np.linalg.qr(A)
    return Q @ Q.conj().T


def check_dim_properties(rng: np.random.Generator) -> list[CheckResult]:
    """Additivity, monotonicity and the window-subspace normalization of
    the window-normalized dimension, plus its agreement with the per-cell
    trace on the block model (the invariant-projection case)."""
    graph = square_lattice()
    win = window_subgraph(graph, folner_box(2, 4))
    n = len(win.verts)
    norm = len(win.elements)
    results = []

    A = rng.normal(size=(n, 5)) + 1j * rng.normal(size=(n, 5))
    Q, _ = np.linalg.qr(A)
    W, V = Q[:, :2] @ Q[:, :2].conj().T, Q[:, 2:] @ Q[:, 2:].conj().T
    together = Q @ Q.conj().T
    add_err = abs(
        projection_window_dim(together, win, win)
        - projection_window_dim(W, win, win)
        - projection_window_dim(V, win, win)
    )
    results.append(CheckResult(
        "dim-additivity", add_err <= 1e-10, add_err,
        f"orthogonal-sum additivity residual {add_err:.3e}",
    ))

    small = Q[:, :2] @ Q[:, :2].conj().T
    large = Q[:, :4] @ Q[:, :4].conj().T
    mono = projection_window_dim(large, win, win) - projection_window_dim(small, win, win)
    results.append(CheckResult(
        "dim-monotonicity", mono >= -1e-12, mono,
        f"dim(V) - dim(W) = {mono:.6f} >= 0 for W inside V",
    ))

    k = 3
    P = _random_projection(rng, n, k)
    sub = abs(projection_window_dim(P, win, win) - k / norm)
    full = abs(projection_window_dim(np.eye(n), win, win) - graph.num_orbits)
    results.append(CheckResult(
        "dim-window-subspace", max(sub, full) <= 1e-10, max(sub, full),
        f"rank-k / identity normalization residuals {sub:.3e}, {full:.3e}",
    ))

    # block model: a translation-invariant projection (same per-cell
    # projector in every cell) must give its per-cell trace
    tri = triangle_cells()
    twin = window_subgraph(tri, folner_box(1, 6))
    cellP = _random_projection(rng, 3, 1)
    blocks = [cellP] * len(twin.elements)
    P_inv = np.zeros((len(twin.verts), len(twin.verts)), dtype=complex)
    for b, blk in enumerate(blocks):
        P_inv[3 * b : 3 * b + 3, 3 * b : 3 * b + 3] = blk
    inv_err = abs(projection_window_dim(P_inv, twin, twin) - float(np.trace(cellP).real))
    results.append(CheckResult(
        "dim-invariant-projection", inv_err <= 1e-10, inv_err,
        f"window dimension vs per-cell trace residual {inv_err:.3e}",
    ))
    return results


def check_window_norm_bound(m: ModelUnderTest) -> CheckResult:
    def run() -> CheckResult:
        mside = m.window_sizes[-1]
        win = window_subgraph(m.graph, folner_box(m.graph.dimension, mside))
        spec = spectral_density(assemble_dirichlet(m.operator, win), win)
        bound = m.operator.norm_bound + 1e-9
        ok = bool(
            spec.eigenvalues.size == 0
            or (spec.eigenvalues.min() >= -bound and spec.eigenvalues.max() <= bound)
        )
        mx = float(np.abs(spec.eigenvalues).max()) if spec.eigenvalues.size else 0.0
        return CheckResult(
            "window-norm-bound", ok, mx,
            f"max |eig| = {mx:.6g} within the stencil bound {m.operator.norm_bound:.6g}",
            m.label,
        )
    return _guard("window-norm-bound", m.label, run)


def model_suite(m: ModelUnderTest, rng: np.random.Generator) -> list[CheckResult]:
    results = [
        check_sigma_conjugation(m),
        check_cocycle_residual(m),
        check_commutator(m),
        check_self_adjoint(m, rng),
        check_propagation_support(m),
        check_trace_basics(m),
        check_window_norm_bound(m),
        check_gauge_invariance(m, rng),
        check_translation_invariance(m),
        check_dirichlet_neumann(m),
        check_interior_radius(m),
    ]
    results.extend(check_kernel_inclusion_and_rank(m))
    results.append(check_moments(m))
    return results


def global_suite(rng: np.random.Generator, inertia_instances: int = 200) -> list[CheckResult]:
    results = [
        check_inertia_oracle(rng, inertia_instances),
        check_folner_ratio(),
        check_boundary_collar(),
    ]
    results.extend(check_dim_properties(rng))
    return results
