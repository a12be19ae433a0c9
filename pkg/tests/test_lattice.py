import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigidlab.lattice import (Box, CubeLattice, CubicSet, connected_components,
                              cubes_meeting, cubic_set_from_indices, enlarge)


class TestCubeLattice:
    def test_index_roundtrip_single(self):
        lat = CubeLattice(0.25, 2)
        idx = lat.index_of(np.array([0.3, -0.6]))
        assert np.allclose(lat.center(np.asarray(idx)),
                           0.25 * np.asarray(idx))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-50.0, 50.0), st.floats(-50.0, 50.0),
           st.floats(0.01, 3.0))
    def test_point_in_its_cube(self, x, y, spacing):
        lat = CubeLattice(spacing, 2)
        idx = np.asarray(lat.index_of(np.array([x, y])))
        c = lat.center(idx)
        # half-open cube spacing*[-1/2, 1/2)
        assert np.all(np.array([x, y]) >= c - spacing / 2 - 1e-9)
        assert np.all(np.array([x, y]) < c + spacing / 2 + 1e-9)

    def test_batch_index(self):
        lat = CubeLattice(1.0, 2)
        pts = np.array([[0.1, 0.1], [1.6, -0.7]])
        idx = lat.index_of(pts)
        assert idx.shape == (2, 2)
        assert tuple(idx[1]) == (2, -1)

    def test_enlarge_triples_cube(self):
        lat = CubeLattice(1.0, 2)
        lo, hi = enlarge(lat, (0, 0), 3)
        assert np.allclose(lo, [-1.5, -1.5])
        assert np.allclose(hi, [1.5, 1.5])

    def test_enlarge_identity(self):
        lat = CubeLattice(1.0, 2)
        lo, hi = enlarge(lat, (2, -1), 1)
        assert np.allclose(lo, [1.5, -1.5])
        assert np.allclose(hi, [2.5, -0.5])


class TestCubesMeeting:
    def test_single_point(self):
        lat = CubeLattice(1.0, 2)

        def region(p):
            return np.all(np.abs(p) < 1e-6, axis=1)

        s = cubes_meeting(region, Box([-1, -1], [1, 1]), lat)
        assert len(s) == 1

    def test_small_disk_bfs_oracle(self):
        # independent oracle: count lattice cubes whose closed box meets the disk
        lat = CubeLattice(0.3, 2)
        r = 0.4

        def region(p):
            return np.sum(p**2, axis=1) <= r**2

        s = cubes_meeting(region, Box([-1, -1], [1, 1]), lat,
                          min_resolution_frac=64)
        expect = set()
        for i in range(-4, 5):
            for j in range(-4, 5):
                c = np.array([i, j]) * 0.3
                near = np.clip(np.zeros(2), c - 0.15, c + 0.15)
                if np.sum(near**2) <= r**2 + 1e-12:
                    expect.add((i, j))
        assert set(map(tuple, s.sorted_indices())) == expect


class TestConnectedComponents:
    def test_face_neighbors_one_component(self):
        lat = CubeLattice(1.0, 2)
        s = cubic_set_from_indices(lat, [(0, 0), (1, 0)])
        assert len(connected_components(s)) == 1

    def test_corner_contact_two_components(self):
        lat = CubeLattice(1.0, 2)
        s = cubic_set_from_indices(lat, [(0, 0), (1, 1)])
        assert len(connected_components(s)) == 2

    def test_block_minus_column(self):
        lat = CubeLattice(1.0, 2)
        idx = [(i, j) for i in range(10) for j in range(10) if i != 4]
        s = cubic_set_from_indices(lat, idx)
        comps = connected_components(s)
        assert len(comps) == 2
        assert sorted(len(c) for c in comps) == [40, 50]


class TestBox:
    def test_contains_half_open_margin(self):
        b = Box([0, 0], [1, 1])
        pts = np.array([[0.5, 0.5], [1.2, 0.5]])
        assert list(b.contains(pts)) == [True, False]

    def test_list_inputs_coerced(self):
        b = Box([0, 0], [2, 3])
        assert np.allclose(b.hi - b.lo, [2.0, 3.0])
