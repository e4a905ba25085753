"""Shared hypothesis strategies: random small periodic graphs and shifts."""

import hypothesis.strategies as st

from magspec.lattice import periodic_graph


@st.composite
def shifts(draw, dimension, lo=-4, hi=4):
    return tuple(
        draw(st.integers(min_value=lo, max_value=hi)) for _ in range(dimension)
    )


@st.composite
def graph_specs(draw):
    """Valid periodic-graph descriptions with 1-2 dimensions, up to 3
    orbits and up to 4 templates (no self-loops, offsets within l1 <= 2)."""
    dimension = draw(st.integers(min_value=1, max_value=2))
    orbits = draw(st.integers(min_value=1, max_value=3))
    n_templates = draw(st.integers(min_value=1, max_value=4))
    templates = []
    for _ in range(n_templates):
        a = draw(st.integers(min_value=0, max_value=orbits - 1))
        b = draw(st.integers(min_value=0, max_value=orbits - 1))
        off = tuple(
            draw(st.integers(min_value=-2, max_value=2)) for _ in range(dimension)
        )
        if sum(abs(x) for x in off) > 2:
            off = tuple(max(-1, min(1, x)) for x in off)
        if a == b and all(x == 0 for x in off):
            off = (1,) + off[1:]
        templates.append((a, b, off))
    return dimension, orbits, templates


@st.composite
def graphs(draw):
    dimension, orbits, templates = draw(graph_specs())
    return periodic_graph(dimension, orbits, templates)
