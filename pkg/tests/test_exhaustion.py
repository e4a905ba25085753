"""Folner boxes, collar ratios, window subgraphs and interiors."""

from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import given

from magspec.exhaustion import (
    folner_box,
    interior_vertices,
    isoperimetric_ratio,
    translated,
    window_boundary_ratio,
    window_subgraph,
)
from magspec.lattice import Vertex, line_graph, square_lattice, triangle_cells


class TestFolnerBox:
    def test_line_box(self):
        assert folner_box(1, 3) == [(0,), (1,), (2,)]

    def test_plane_boxes(self):
        assert len(folner_box(2, 2)) == 4
        assert len(folner_box(2, 10)) == 100

    @given(st.integers(1, 3), st.integers(1, 6))
    def test_nested_and_sized(self, d, m):
        small, big = set(folner_box(d, m)), set(folner_box(d, m + 1))
        assert small < big
        assert len(small) == m**d

    def test_bad_index(self):
        with pytest.raises(ValueError):
            folner_box(1, 0)


class TestIsoperimetricRatio:
    def test_line_ten(self):
        # 2 inner + 2 outer collar points over 10
        assert isoperimetric_ratio(folner_box(1, 10), 1) == Fraction(4, 10)

    def test_plane_ten_by_ten(self):
        # 36 inner + 40 outer over 100
        assert isoperimetric_ratio(folner_box(2, 10), 1) == Fraction(76, 100)

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("delta", [1, 2])
    def test_monotone_decay(self, d, delta):
        for m in (2, 3, 4):
            r1 = isoperimetric_ratio(folner_box(d, m), delta)
            r2 = isoperimetric_ratio(folner_box(d, 2 * m), delta)
            assert r2 < r1

    def test_delta_guard(self):
        with pytest.raises(ValueError):
            isoperimetric_ratio(folner_box(1, 4), 0)


class TestWindowSubgraph:
    def test_line_path(self):
        g = line_graph()
        w = window_subgraph(g, folner_box(1, 3))
        assert len(w.verts) == 3
        assert len(w.inner_edges()) == 2

    def test_square_four_cycle(self):
        g = square_lattice()
        w = window_subgraph(g, folner_box(2, 2))
        assert len(w.verts) == 4
        assert len(w.inner_edges()) == 4

    def test_triangle_windows(self):
        g = triangle_cells()
        for m in (1, 3, 5):
            w = window_subgraph(g, folner_box(1, m))
            assert len(w.verts) == 3 * m
            assert len(w.inner_edges()) == 3 * m

    def test_vertex_count_identity(self):
        g = triangle_cells()
        for m in (2, 4, 7):
            w = window_subgraph(g, folner_box(1, m))
            assert len(w.verts) == len(w.elements) * g.num_orbits

    def test_vertex_order_lexicographic(self):
        g = triangle_cells()
        w = window_subgraph(g, [(1,), (0,)])
        assert w.verts == tuple(
            Vertex(orb, (s,)) for s in (0, 1) for orb in range(3)
        )

    def test_eplus_transversal_inside_window(self):
        g = square_lattice()
        w = window_subgraph(g, folner_box(2, 4))
        seen = set()
        for e in w.inner_edges():
            key = (e.origin, e.terminus, e.template)
            rev = (e.terminus, e.origin, e.template)
            assert key not in seen and rev not in seen
            seen.add(key)
        # 2 m (m-1) undirected edges inside an m x m window
        assert len(seen) == 2 * 4 * 3


class TestInteriorVertices:
    def test_path_of_five(self):
        g = line_graph()
        w = window_subgraph(g, folner_box(1, 5))
        split = interior_vertices(g, w, 1)
        assert {v.shift[0] for v in split.interior} == {1, 2, 3}
        assert {v.shift[0] for v in split.boundary} == {0, 4}

    def test_radius_zero(self):
        g = square_lattice()
        w = window_subgraph(g, folner_box(2, 3))
        split = interior_vertices(g, w, 0)
        assert split.interior == w.verts and split.boundary == ()

    @pytest.mark.parametrize("m", [3, 5, 8])
    def test_square_interior_count(self, m):
        g = square_lattice()
        w = window_subgraph(g, folner_box(2, m))
        split = interior_vertices(g, w, 1)
        assert len(split.interior) == (m - 2) ** 2

    def test_nesting_and_partition(self):
        g = square_lattice()
        w = window_subgraph(g, folner_box(2, 6))
        s1 = interior_vertices(g, w, 1)
        s2 = interior_vertices(g, w, 2)
        assert set(s2.interior) <= set(s1.interior)
        for s in (s1, s2):
            assert set(s.interior) | set(s.boundary) == set(w.verts)
            assert not (set(s.interior) & set(s.boundary))

    def test_disconnected_cells_are_their_own_interior(self):
        # intra-cell graphs have radius-r balls that never leave the cell
        g = triangle_cells()
        w = window_subgraph(g, folner_box(1, 4))
        split = interior_vertices(g, w, 3)
        assert split.interior == w.verts

    def test_translated_window_same_interior_size(self):
        g = square_lattice()
        box = folner_box(2, 5)
        w1 = window_subgraph(g, box)
        w2 = window_subgraph(g, translated(box, (7, -3)))
        assert len(interior_vertices(g, w1, 1).interior) == len(
            interior_vertices(g, w2, 1).interior
        )


class TestBoundaryRatios:
    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("delta", [1, 2])
    def test_graph_collar_bound(self, d, delta):
        from magspec.lattice import periodic_graph

        templates = [
            (0, 0, tuple(1 if j == i else 0 for j in range(d))) for i in range(d)
        ]
        g = periodic_graph(d, 1, templates)
        for m in (4 * delta, 4 * delta + 2, 8 * delta):
            w = window_subgraph(g, folner_box(d, m))
            assert window_boundary_ratio(g, w, delta) < Fraction(4 * d * delta, m)

    def test_interior_density_brackets_orbit_count(self):
        # #Y_m(r)/#Lambda_m increases toward the fundamental domain size
        g = square_lattice()
        ratios = []
        for m in (6, 12, 24):
            w = window_subgraph(g, folner_box(2, m))
            split = interior_vertices(g, w, 1)
            ratios.append(Fraction(len(split.interior), len(w.elements)))
        assert ratios[0] < ratios[1] < ratios[2] <= g.num_orbits

    def test_graph_collar_ratio_decreasing_in_m(self):
        g = square_lattice()
        for delta in (1, 2):
            ratios = [
                window_boundary_ratio(g, window_subgraph(g, folner_box(2, m)), delta)
                for m in (4 * delta, 8 * delta, 16 * delta)
            ]
            assert ratios[0] > ratios[1] > ratios[2]
