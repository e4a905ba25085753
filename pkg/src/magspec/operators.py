"""U(1) edge weights, gauge cocycles, magnetic translations, and
self-adjoint finite-propagation operators given by Hermitian stencils.

Weights assign a unit-modulus phase to every oriented edge, with reversal
acting by complex conjugation.  A weight is weakly invariant under the
translation action when each generator changes it only by a vertex
coboundary; that coboundary is recovered here by integrating phase ratios
over a spanning forest of a finite window and checking consistency on the
remaining edges.  Operators are stored as one aggregated stencil per
orbit, with coefficients that may depend on the origin translate (this is
how magnetic phases enter); everything downstream only ever applies the
stencil to finitely supported functions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .lattice import (
    OrientedEdge,
    PeriodicGraph,
    Shift,
    Vertex,
    act,
    add,
    neg,
    reverse,
    simplicial_distance,
    word_ball,
    word_length,
)

HERMITIAN_TOL = 1e-12
COCYCLE_TOL = 1e-12

PhaseRule = Union[complex, Callable[[Shift], complex]]
CoeffRule = Callable[[Shift], complex]


class WeightError(ValueError):
    """Weight function violating the U(1)/conjugation contract."""


class NotWeaklyInvariantError(WeightError):
    """Weight whose generator translates are not coboundary-equivalent to it."""


class StencilError(ValueError):
    """Stencil that is not Hermitian or not of bounded propagation."""


def unit_phase(turns) -> complex:
    """e^{2 pi i turns}, with the argument reduced mod 1 before
    exponentiation so rational turns give exactly periodic phases."""
    if isinstance(turns, Fraction):
        turns = float(turns % 1)
    else:
        turns = float(turns) % 1.0
    return complex(np.exp(2j * np.pi * turns))


class WeightFunction:
    """Per-template phase rules on E+ edges; reversal conjugates.

    ``rules[i]`` is a complex constant or a callable of the origin
    translate of the template edge.  ``flux`` records the magnetic flux
    parameter when meaningful (a Fraction for rational flux); the Floquet
    oracle uses it to size its enlarged cell.  ``conjugation_defect`` is a
    fault-injection knob multiplying reversed-edge phases, used to exercise
    the validator.
    """

    def __init__(
        self,
        graph: PeriodicGraph,
        rules: Sequence[PhaseRule],
        flux=None,
        conjugation_defect: Optional[complex] = None,
    ):
        if len(rules) != len(graph.templates):
            raise WeightError("need one phase rule per edge template")
        self.graph = graph
        self._rules = tuple(rules)
        self.flux = flux
        self._defect = conjugation_defect

    def positive_phase(self, template: int, shift: Shift) -> complex:
        """Phase of the E+ edge of ``template`` anchored at ``shift``."""
        rule = self._rules[template]
        return complex(rule(shift)) if callable(rule) else complex(rule)

    def phase(self, edge: OrientedEdge) -> complex:
        if not edge.reversed:
            return self.positive_phase(edge.template, edge.origin.shift)
        value = self.positive_phase(edge.template, edge.terminus.shift).conjugate()
        if self._defect is not None:
            value *= self._defect
        return value


def uniform_weights(graph: PeriodicGraph) -> WeightFunction:
    """sigma identically 1 (flux-free case)."""
    return WeightFunction(graph, [1.0 + 0.0j] * len(graph.templates), flux=Fraction(0))


def hofstadter_weights(graph: PeriodicGraph, flux) -> WeightFunction:
    """Landau-gauge weights on the square lattice: horizontal E+ edges carry
    phase 1, the vertical E+ edge with origin column x carries
    e^{2 pi i alpha x}.  ``flux`` may be a Fraction (rational alpha) or a
    float."""
    offsets = sorted(t.offset for t in graph.templates)
    if (
        graph.dimension != 2
        or graph.num_orbits != 1
        or offsets != [(0, 1), (1, 0)]
    ):
        raise WeightError("hofstadter weights need the standard square lattice")
    rules: list[PhaseRule] = []
    for t in graph.templates:
        if t.offset == (1, 0):
            rules.append(1.0 + 0.0j)
        else:
            rules.append(lambda s, a=flux: unit_phase(a * s[0]))
    return WeightFunction(graph, rules, flux=flux)


def gauge_transformed(
    weights: WeightFunction, u: Callable[[Vertex], complex]
) -> WeightFunction:
    """sigma'(e) = sigma(e) u(terminus) conj(u(origin)) for a U(1) vertex
    function u; window spectra are invariant under this."""
    g = weights.graph
    rules: list[PhaseRule] = []
    for i in range(len(g.templates)):
        def rule(s: Shift, i=i) -> complex:
            e = g.template_edge(i, s)
            return weights.positive_phase(i, s) * u(e.terminus) * u(e.origin).conjugate()

        rules.append(rule)
    return WeightFunction(g, rules, flux=weights.flux)


def perturbed_weights(
    weights: WeightFunction, template: int, shift: Shift, turns: float
) -> WeightFunction:
    """Multiply the phase of one E+ edge by e^{2 pi i turns}; a nonzero
    perturbation breaks weak invariance."""
    shift = tuple(shift)
    factor = unit_phase(turns)
    rules: list[PhaseRule] = []
    for i in range(len(weights.graph.templates)):
        if i == template:
            rules.append(
                lambda s, i=i: weights.positive_phase(i, s)
                * (factor if s == shift else 1.0)
            )
        else:
            rules.append(lambda s, i=i: weights.positive_phase(i, s))
    return WeightFunction(weights.graph, rules, flux=weights.flux)


def with_conjugation_defect(weights: WeightFunction, turns: float) -> WeightFunction:
    """Fault injection: reversed edges no longer carry the conjugate phase."""
    rules = [lambda s, i=i: weights.positive_phase(i, s) for i in range(len(weights.graph.templates))]
    return WeightFunction(
        weights.graph, rules, flux=weights.flux, conjugation_defect=unit_phase(turns)
    )


@dataclass(eq=False)
class Cocycle:
    """U(1) vertex function s_gamma solving the coboundary equation for one
    generator, stored on the finite window it was solved on."""

    gamma: Shift
    values: dict[Vertex, complex]

    def __call__(self, v: Vertex) -> complex:
        try:
            return self.values[v]
        except KeyError:
            raise WeightError(
                f"cocycle for {self.gamma} not solved at {v}; enlarge the validation radius"
            ) from None


def _box_vertices(graph: PeriodicGraph, radius: int) -> list[Vertex]:
    box = itertools.product(range(-radius, radius + 1), repeat=graph.dimension)
    return [Vertex(orb, s) for s in box for orb in range(graph.num_orbits)]


def _window_edges(graph: PeriodicGraph, verts: Sequence[Vertex]) -> list[OrientedEdge]:
    vset = set(verts)
    out = []
    for v in verts:
        for i, t in enumerate(graph.templates):
            if t.origin_orbit == v.orbit:
                e = graph.template_edge(i, v.shift)
                if e.terminus in vset:
                    out.append(e)
    return out


def check_conjugation_symmetry(
    graph: PeriodicGraph, weights: WeightFunction, radius: int
) -> float:
    """Max residual of |sigma| = 1 and sigma(reversed) = conj(sigma) over a
    box window; raises WeightError above 1e-12."""
    edges = _window_edges(graph, _box_vertices(graph, radius))
    worst = 0.0
    for e in edges:
        p = weights.phase(e)
        if abs(abs(p) - 1.0) > HERMITIAN_TOL:
            raise WeightError(f"invalid weight: |sigma| != 1 on edge {e}")
        q = weights.phase(reverse(e))
        worst = max(worst, abs(q - p.conjugate()))
    if worst > HERMITIAN_TOL:
        raise WeightError(
            f"invalid weight: sigma(reversed) != conj(sigma), residual {worst:.3e}"
        )
    return worst


def validate_weights(
    graph: PeriodicGraph, weights: WeightFunction, radius: int
) -> dict[Shift, Cocycle]:
    """Solve the coboundary equation for every generator on a box window.

    For each generator gamma the ratio sigma(gamma e)/sigma(e) is
    integrated along a BFS spanning forest (base value 1 on the least
    vertex of each connected component) and every non-tree edge is checked
    for consistency.  Returns one cocycle per generator.

    Raises NotWeaklyInvariantError when some cycle carries holonomy
    mismatch above 1e-12, and WeightError when the conjugation contract
    itself is broken.
    """
    verts = _box_vertices(graph, radius)
    edges = _window_edges(graph, verts)
    check_conjugation_symmetry(graph, weights, radius)

    adjacency: dict[Vertex, list[tuple[Vertex, OrientedEdge]]] = {v: [] for v in verts}
    for e in edges:
        adjacency[e.origin].append((e.terminus, e))
        adjacency[e.terminus].append((e.origin, e))

    cocycles: dict[Shift, Cocycle] = {}
    for gamma in graph.generators:
        def ratio(e: OrientedEdge) -> complex:
            shifted = graph.template_edge(e.template, add(gamma, e.origin.shift))
            return weights.phase(shifted) / weights.phase(e)

        values: dict[Vertex, complex] = {}
        for base in sorted(verts):
            if base in values:
                continue
            values[base] = 1.0 + 0.0j
            queue = [base]
            while queue:
                u = queue.pop()
                for w, e in adjacency[u]:
                    if w in values:
                        continue
                    r = ratio(e)
                    # s(terminus) = ratio * s(origin) along the tree edge
                    values[w] = values[u] * r if u == e.origin else values[u] / r
                    queue.append(w)
        worst = 0.0
        for e in edges:
            resid = abs(
                ratio(e) - values[e.terminus] * values[e.origin].conjugate()
            )
            worst = max(worst, resid)
        if worst > COCYCLE_TOL:
            raise NotWeaklyInvariantError(
                f"not weakly invariant: cycle residual {worst:.3e} for generator {gamma}"
            )
        cocycles[gamma] = Cocycle(gamma, values)
    return cocycles


def magnetic_translate(
    cocycle: Cocycle, f: Mapping[Vertex, complex]
) -> dict[Vertex, complex]:
    """(T f)(x) = s(g^{-1} x) f(g^{-1} x), the twisted translation by g."""
    return {act(cocycle.gamma, v): cocycle(v) * c for v, c in f.items()}


def l2_norm(f: Mapping[Vertex, complex]) -> float:
    return math.sqrt(sum(abs(c) ** 2 for c in f.values()))


def function_diff(
    f: Mapping[Vertex, complex], g: Mapping[Vertex, complex]
) -> dict[Vertex, complex]:
    out = dict(f)
    for v, c in g.items():
        out[v] = out.get(v, 0.0) - c
    return out


def inner_product(f: Mapping[Vertex, complex], g: Mapping[Vertex, complex]) -> complex:
    """<f, g> with the physics convention conjugating the second argument."""
    keys = f.keys() & g.keys()
    return sum(f[v] * complex(g[v]).conjugate() for v in sorted(keys))


@dataclass(frozen=True)
class StencilEntry:
    target_orbit: int
    offset: Shift
    coeff: CoeffRule


@dataclass(eq=False)
class LocalOperator:
    """Self-adjoint operator of bounded propagation, one aggregated stencil
    per orbit.  ``propagation`` is the graph-metric bound on how far a
    basis vector's image can spread; ``offset_reach`` is the largest l1
    translate jump of any entry (used for window padding); ``norm_bound``
    is the Gershgorin row-sum bound on the operator norm."""

    graph: PeriodicGraph
    entries: dict[int, tuple[StencilEntry, ...]]
    propagation: int
    offset_reach: int
    norm_bound: float

    def column(self, v: Vertex) -> dict[Vertex, complex]:
        """A applied to the basis vector at v, as a finitely supported map."""
        out: dict[Vertex, complex] = {}
        for ent in self.entries.get(v.orbit, ()):
            u = Vertex(ent.target_orbit, add(v.shift, ent.offset))
            out[u] = out.get(u, 0.0) + ent.coeff(v.shift)
        return out


def _as_rule(c) -> CoeffRule:
    if callable(c):
        return c
    value = complex(c)
    return lambda s, value=value: value


def local_operator(
    graph: PeriodicGraph,
    raw_entries: Iterable[tuple[int, int, Iterable[int], object]],
    sample_radius: int = 2,
) -> LocalOperator:
    """Build and validate a stencil operator.

    ``raw_entries`` is an iterable of (origin_orbit, target_orbit, offset,
    coeff) with coeff a complex constant or a callable of the origin
    translate.  Entries sharing (origin, target, offset) are summed.
    Hermitian symmetry is checked numerically on a sample of translates and
    the propagation bound is computed by BFS in the graph metric;
    unreachable stencil targets are rejected.
    """
    table: dict[tuple[int, int, Shift], list[CoeffRule]] = {}
    for a, b, off, coeff in raw_entries:
        off = tuple(int(x) for x in off)
        if len(off) != graph.dimension:
            raise StencilError(f"offset {off} has wrong dimension")
        if not (0 <= a < graph.num_orbits and 0 <= b < graph.num_orbits):
            raise StencilError(f"orbit index out of range in entry ({a},{b},{off})")
        table.setdefault((a, b, off), []).append(_as_rule(coeff))

    def combined(key) -> CoeffRule:
        rules = table[key]
        if len(rules) == 1:
            return rules[0]
        return lambda s, rules=tuple(rules): sum(r(s) for r in rules)

    merged = {key: combined(key) for key in table}
    samples = word_ball(graph.dimension, sample_radius)
    scale = 1.0
    for rule in merged.values():
        scale = max(scale, max(abs(rule(s)) for s in samples))
    for (a, b, off), rule in merged.items():
        partner = merged.get((b, a, neg(off)))
        if partner is None:
            if max(abs(rule(s)) for s in samples) > HERMITIAN_TOL * scale:
                raise StencilError(
                    f"stencil entry ({a},{b},{off}) has no Hermitian partner"
                )
            continue
        for s in samples:
            if abs(partner(add(s, off)) - rule(s).conjugate()) > HERMITIAN_TOL * scale:
                raise StencilError(
                    f"stencil not Hermitian at entry ({a},{b},{off}), translate {s}"
                )

    propagation = 0
    for (a, b, off) in merged:
        if a == b and all(x == 0 for x in off):
            continue
        cap = max(4, (word_length(off) + 2) * (graph.num_orbits + 2))
        dist = simplicial_distance(
            graph, Vertex(a, (0,) * graph.dimension), Vertex(b, off), cap
        )
        if dist is None:
            raise StencilError(
                f"stencil entry ({a},{b},{off}) connects vertices beyond graph "
                f"distance {cap}; not of bounded propagation"
            )
        propagation = max(propagation, dist)

    entries: dict[int, list[StencilEntry]] = {}
    for (a, b, off) in sorted(merged):
        entries.setdefault(a, []).append(StencilEntry(b, off, merged[(a, b, off)]))
    norm_bound = 0.0
    for a, ents in entries.items():
        row = sum(max(abs(e.coeff(s)) for s in samples) for e in ents)
        norm_bound = max(norm_bound, row)
    offset_reach = max(
        (word_length(off) for (_, _, off) in merged), default=0
    )
    return LocalOperator(
        graph,
        {a: tuple(ents) for a, ents in entries.items()},
        propagation,
        offset_reach,
        norm_bound,
    )


def zero_operator(graph: PeriodicGraph) -> LocalOperator:
    return LocalOperator(graph, {}, 0, 0, 0.0)


def harper_dml(
    graph: PeriodicGraph, weights: WeightFunction
) -> tuple[LocalOperator, LocalOperator]:
    """The magnetic hopping operator and the magnetic Laplacian.

    Hopping sums sigma phases over all oriented edges out of each vertex
    (reversed edges carry the conjugate phase, which is the self-adjoint
    orientation convention); the Laplacian is the valence diagonal minus
    the hopping part.
    """
    hop_raw: list[tuple[int, int, Shift, CoeffRule]] = []
    for i, t in enumerate(graph.templates):
        hop_raw.append(
            (t.origin_orbit, t.terminus_orbit, t.offset,
             lambda s, i=i: weights.positive_phase(i, s))
        )
        hop_raw.append(
            (t.terminus_orbit, t.origin_orbit, neg(t.offset),
             lambda s, i=i, off=t.offset: weights.positive_phase(i, add(s, neg(off))).conjugate())
        )
    harper = local_operator(graph, hop_raw)
    lap_raw: list[tuple[int, int, Shift, object]] = [
        (orb, orb, (0,) * graph.dimension, float(graph.valence(orb)))
        for orb in range(graph.num_orbits)
    ]
    for a, b, off, rule in hop_raw:
        lap_raw.append((a, b, off, lambda s, rule=rule: -rule(s)))
    dml = local_operator(graph, lap_raw)
    return harper, dml


def apply_local(op: LocalOperator, f: Mapping[Vertex, complex]) -> dict[Vertex, complex]:
    """Apply the stencil to a finitely supported function.  The support
    grows by at most the propagation radius; accumulation order is fixed
    for reproducibility."""
    out: dict[Vertex, complex] = {}
    for v in sorted(f):
        c = f[v]
        if c == 0:
            continue
        for ent in op.entries.get(v.orbit, ()):
            u = Vertex(ent.target_orbit, add(v.shift, ent.offset))
            out[u] = out.get(u, 0.0) + ent.coeff(v.shift) * c
    return out


def translation_commutator(
    op: LocalOperator, cocycle: Cocycle, tests: Iterable[Mapping[Vertex, complex]]
) -> float:
    """max over test functions of ||A T f - T A f||_2 for the twisted
    translation built from the cocycle.  Vanishes (to rounding) exactly
    when the cocycle solves the coboundary equation."""
    worst = 0.0
    for f in tests:
        lhs = apply_local(op, magnetic_translate(cocycle, f))
        rhs = magnetic_translate(cocycle, apply_local(op, f))
        worst = max(worst, l2_norm(function_diff(lhs, rhs)))
    return worst


def gamma_trace_power(op: LocalOperator, n: int) -> float:
    """Trace per fundamental domain of the n-th power: the sum over orbit
    representatives of <A^n delta_v, delta_v>, computed by n local
    applications (finite by bounded propagation).  n = 0 returns the
    number of orbits; the result is real for Hermitian stencils."""
    if n < 0:
        raise ValueError("power must be nonnegative")
    zero = (0,) * op.graph.dimension
    total = 0.0 + 0.0j
    for orbit in range(op.graph.num_orbits):
        v0 = Vertex(orbit, zero)
        f: dict[Vertex, complex] = {v0: 1.0 + 0.0j}
        for _ in range(n):
            f = apply_local(op, f)
        total += f.get(v0, 0.0)
    tol = 1e-12 * max(1.0, op.norm_bound**n)
    if abs(total.imag) > tol:
        raise ArithmeticError(f"trace power came out non-real: {total}")
    return float(total.real)
