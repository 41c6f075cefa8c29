import warnings

import numpy as np
import pytest

from surfsplit.graph import parity, syndrome_of
from surfsplit.lattice import GeometryError, build_decoding_graph, build_lattice, code_distance


def test_double_defect_counts():
    lat = build_lattice(2, s=8, b=8, n_defects=2)
    assert (lat.width, lat.height) == (25, 16)
    assert lat.n_edges == 833
    assert lat.n_sites == 440
    assert lat.n_plaquettes == 392


def test_single_defect_counts():
    lat = build_lattice(2)
    assert lat.n_sites == 288
    assert lat.n_edges == 540


def test_geometry_errors():
    with pytest.raises(GeometryError):
        build_lattice(2, b=1)
    with pytest.raises(GeometryError):
        build_lattice(2, s=1, n_defects=2)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        build_lattice(1)
    assert any("r < 2" in str(w.message) for w in caught)


def test_defect_perimeter_is_a_closed_loop():
    lat = build_lattice(3)
    g = build_decoding_graph(lat, "phase")
    loop = g.chain(lat.defect_perimeter(0))
    assert loop.sum() == 12
    assert len(syndrome_of(g, loop)) == 0
    assert parity(g, loop) == 1


def test_bit_logical_is_the_perimeter():
    lat = build_lattice(2, n_defects=2)
    g = build_decoding_graph(lat, "bit")
    assert g.logical.sum() == 8
    path = g.chain(lat.dual_logical_path())
    assert len(syndrome_of(g, path)) == 0
    assert parity(g, path) == 1


@pytest.mark.parametrize("r", [1, 2])
@pytest.mark.parametrize("kind,n_def", [("phase", 1), ("phase", 2), ("bit", 2)])
def test_code_distance_is_4r(r, kind, n_def):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lat = build_lattice(r, n_defects=n_def)
    assert code_distance(build_decoding_graph(lat, kind)) == 4 * r


def test_closed_outer_boundary_has_no_hanging_outer_edges():
    lat = build_lattice(2, n_defects=2)
    g_open = build_decoding_graph(lat, "bit", outer="open")
    g_closed = build_decoding_graph(lat, "bit", outer="closed")
    assert g_closed.boundary.sum() == 16  # the two defect perimeters only
    assert g_open.boundary.sum() > g_closed.boundary.sum()
    assert g_open.n_edges == g_closed.n_edges == lat.n_edges


def test_stabilizer_supports():
    lat = build_lattice(2)
    # a site on the side of a defect is truncated to three edges
    ax, ay = lat.defects[0]
    v = lat.site_index[(ax + 1, ay)]
    assert sum(e >= 0 for e in lat.site_edges_nwes(v)) == 3
    # plaquettes are never truncated by smooth defects
    assert all(min(lat.plaquette_edges_nwes(q)) >= 0 for q in range(lat.n_plaquettes))
