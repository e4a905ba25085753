"""Folner boxes in Z^d and the window subgraphs they cut out of a graph.

Windows enumerate their vertices in a fixed order (lexicographic by
translate, then orbit) so that every matrix built over the same window is
reproducible.  Interiors are computed against the graph metric: a vertex
belongs to the r-interior when its whole r-ball stays inside the window,
which is decided exactly by a breadth-first search seeded on the complement
inside a padded translate box (the graph itself is never materialized).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .lattice import (
    OrientedEdge,
    PeriodicGraph,
    Shift,
    Vertex,
    add,
    word_ball,
)


def folner_box(dimension: int, m: int) -> list[Shift]:
    """The box {0..m-1}^d, the m-th member of the standard Folner tower."""
    if m < 1:
        raise ValueError("box index must be >= 1")
    return sorted(itertools.product(range(m), repeat=dimension))


def boundary_collar(elements: Iterable[Shift], delta: int) -> set[Shift]:
    """Two-sided collar: group elements within delta of the set and of its
    complement, in the l1 word metric."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    elems = {tuple(g) for g in elements}
    if not elems:
        return set()
    dimension = len(next(iter(elems)))
    ball = word_ball(dimension, delta)
    candidates = {add(g, b) for g in elems for b in ball}
    out = set()
    for g in candidates:
        near = [add(g, b) for b in ball]
        if any(p in elems for p in near) and any(p not in elems for p in near):
            out.add(g)
    return out


def isoperimetric_ratio(elements: Iterable[Shift], delta: int) -> Fraction:
    """#(delta-collar) / #(set), exact rational."""
    elems = [tuple(g) for g in elements]
    return Fraction(len(boundary_collar(elems, delta)), len(set(elems)))


@dataclass(eq=False)
class Window:
    """Finite window of a periodic graph over a Folner set of translates.

    ``verts`` is the full list (orbit, shift) over the set, sorted by
    (shift, orbit); ``index`` inverts it.  Immutable after construction.
    """

    graph: PeriodicGraph
    elements: tuple[Shift, ...]
    verts: tuple[Vertex, ...]
    index: dict[Vertex, int]

    def __len__(self) -> int:
        return len(self.verts)

    def inner_edges(self) -> list[OrientedEdge]:
        """E+ edges with both endpoints inside the window, deterministic order."""
        out = []
        for shift in self.elements:
            for i in range(len(self.graph.templates)):
                e = self.graph.template_edge(i, shift)
                if e.terminus in self.index:
                    out.append(e)
        return out


def window_subgraph(graph: PeriodicGraph, elements: Iterable[Shift]) -> Window:
    """Largest subgraph of the periodic graph over the given translates."""
    elems = tuple(sorted({tuple(int(x) for x in g) for g in elements}))
    if not elems:
        raise ValueError("window needs at least one translate")
    if any(len(g) != graph.dimension for g in elems):
        raise ValueError("translate dimension mismatch")
    verts = tuple(
        Vertex(orb, shift) for shift in elems for orb in range(graph.num_orbits)
    )
    index = {v: i for i, v in enumerate(verts)}
    return Window(graph, elems, verts, index)


@dataclass(eq=False)
class InteriorSplit:
    """Partition of a window into its r-interior and the boundary collar."""

    interior: tuple[Vertex, ...]
    boundary: tuple[Vertex, ...]
    radius: int


def interior_vertices(graph: PeriodicGraph, window: Window, radius: int) -> InteriorSplit:
    """Split window vertices into the r-interior (graph-metric r-ball stays
    inside the window) and the complementary boundary collar.

    The distance to the complement is computed by a multi-source BFS seeded
    on the non-window vertices of a padded translate box; the padding
    radius * offset_reach is enough because one graph edge moves the
    translate by at most offset_reach in l1.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius == 0:
        return InteriorSplit(tuple(window.verts), (), 0)
    pad = radius * graph.offset_reach
    lo = [min(s[i] for s in window.elements) - pad for i in range(graph.dimension)]
    hi = [max(s[i] for s in window.elements) + pad for i in range(graph.dimension)]
    padded = itertools.product(*[range(lo[i], hi[i] + 1) for i in range(graph.dimension)])
    seeds = []
    for shift in padded:
        for orb in range(graph.num_orbits):
            v = Vertex(orb, shift)
            if v not in window.index:
                seeds.append(v)
    dist = {v: 0 for v in seeds}
    frontier = deque(seeds)
    reached: set[Vertex] = set()
    while frontier:
        u = frontier.popleft()
        du = dist[u]
        if du == radius:
            continue
        for e in graph.neighbors(u):
            w = e.terminus
            if w not in dist:
                dist[w] = du + 1
                frontier.append(w)
                if w in window.index:
                    reached.add(w)
    interior = tuple(v for v in window.verts if v not in reached)
    boundary = tuple(v for v in window.verts if v in reached)
    return InteriorSplit(interior, boundary, radius)


def window_boundary_ratio(graph: PeriodicGraph, window: Window, delta: int) -> Fraction:
    """Fraction of window vertices within graph distance delta of the
    complement (the inner delta-collar of the window subgraph)."""
    split = interior_vertices(graph, window, delta)
    return Fraction(len(split.boundary), len(window.verts))


def translated(elements: Sequence[Shift], gamma: Shift) -> list[Shift]:
    """The translate gamma + set, used for translation-invariance checks."""
    return [add(gamma, g) for g in elements]
