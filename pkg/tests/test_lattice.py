import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from percforks.lattice import (BitmapParseError, BondConfig, Box, SiteConfig, clusters_csv,
                               export_bitmap, import_bitmap, label_bond_clusters, label_clusters,
                               translate)

grids = arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9)),
               elements=st.integers(0, 1))
anchors = st.tuples(st.integers(-50, 50), st.integers(-50, 50))


def reference_components(values):
    """Plain BFS partition, keyed by frozensets of (x, y)."""
    h, w = values.shape
    seen = np.zeros_like(values, dtype=bool)
    comps = []
    for y in range(h):
        for x in range(w):
            if seen[y, x]:
                continue
            stack, comp = [(x, y)], set()
            seen[y, x] = True
            while stack:
                cx, cy = stack.pop()
                comp.add((cx, cy))
                for nx, ny in ((cx - 1, cy), (cx + 1, cy), (cx, cy - 1), (cx, cy + 1)):
                    if 0 <= nx < w and 0 <= ny < h and not seen[ny, nx] \
                            and values[ny, nx] == values[cy, cx]:
                        seen[ny, nx] = True
                        stack.append((nx, ny))
            comps.append(frozenset(comp))
    return set(comps)


def test_all_open_is_one_cluster():
    lab = label_clusters(SiteConfig.from_array(np.ones((3, 3))))
    assert lab.count == 1
    assert lab.sizes.tolist() == [9]
    assert lab.touches_boundary.all()


def test_checkerboard_has_singletons():
    lab = label_clusters(SiteConfig.from_array([[1, 0], [0, 1]]))
    assert sorted(lab.sizes.tolist()) == [1, 1, 1, 1]


def test_row_101():
    lab = label_clusters(SiteConfig.from_array([[1, 0, 1]]))
    assert lab.sizes.tolist() == [1, 1, 1]
    assert lab.phases.tolist() == [1, 0, 1]


def test_interior_cluster_does_not_touch_boundary():
    v = np.ones((5, 5), dtype=np.uint8)
    v[2, 2] = 0
    lab = label_clusters(SiteConfig.from_array(v))
    hole = lab.label_of((2, 2))
    assert not lab.touches_boundary[hole]
    assert lab.touches_boundary[lab.label_of((0, 0))]


@given(grids)
def test_labels_match_bfs(values):
    lab = label_clusters(SiteConfig.from_array(values))
    assert set(lab.components()) == reference_components(values)
    assert lab.sizes.sum() == values.size


@given(grids)
def test_adjacency_invariants(values):
    lab = label_clusters(SiteConfig.from_array(values)).labels
    same_h = values[:, 1:] == values[:, :-1]
    same_v = values[1:, :] == values[:-1, :]
    assert np.array_equal(lab[:, 1:] == lab[:, :-1], same_h)
    assert np.array_equal(lab[1:, :] == lab[:-1, :], same_v)


@given(grids, anchors)
def test_labeling_is_translation_invariant(values, v):
    c = SiteConfig.from_array(values)
    a = label_clusters(c).components()
    b = label_clusters(translate(c, v)).components()
    assert [frozenset((x + v[0], y + v[1]) for x, y in comp) for comp in a] == b


@given(grids)
def test_flipping_swaps_phases(values):
    c = SiteConfig.from_array(values)
    a, b = label_clusters(c), label_clusters(c.flipped())
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.phases, 1 - b.phases)


@given(grids, st.data())
def test_labels_ignore_visiting_order(values, data):
    # relabel after a random transpose/reflection and map back
    lab = label_clusters(SiteConfig.from_array(values))
    flipped = label_clusters(SiteConfig.from_array(values[::-1, ::-1].copy()))
    assert set(lab.components()) == {
        frozenset((values.shape[1] - 1 - x, values.shape[0] - 1 - y) for x, y in comp)
        for comp in flipped.components()}


def test_bond_clusters_examples():
    assert label_bond_clusters(BondConfig.filled(2, 2, True)).sizes.tolist() == [4]
    assert label_bond_clusters(BondConfig.filled(2, 2, False)).count == 4
    bonds = BondConfig((0, 0), 2, 2, [[True], [False]], [[False, False]])
    comps = set(label_bond_clusters(bonds).components())
    assert comps == {frozenset({(0, 0), (1, 0)}), frozenset({(0, 1)}), frozenset({(1, 1)})}


def test_bond_counts_checked():
    with pytest.raises(ValueError):
        BondConfig((0, 0), 3, 2, np.zeros((2, 3)), np.zeros((1, 3)))
    b = BondConfig.filled(4, 3)
    assert b.bond_count == 3 * 3 + 4 * 2


def test_site_values_validated():
    with pytest.raises(ValueError):
        SiteConfig.from_array([[0, 2]])
    with pytest.raises(ValueError):
        SiteConfig.from_array(np.zeros((0, 3)))


def test_translate_examples():
    c = SiteConfig.from_array([[1, 0]])
    assert translate(c, (0, 0)) == c
    assert translate(translate(c, (1, 2)), (-1, -2)) == c
    assert translate(c, (3, 5)).anchor == (3, 5)


def test_values_are_read_only():
    c = SiteConfig.from_array([[1, 0]])
    with pytest.raises(ValueError):
        c.values[0, 0] = 0


def test_local_outside_window():
    c = SiteConfig.from_array([[1, 0]], anchor=(4, 4))
    assert c[(5, 4)] == 0
    with pytest.raises(IndexError):
        c.local((0, 0))


def test_bitmap_examples():
    one = export_bitmap(SiteConfig.from_array([[1]]))
    lines = [ln for ln in one.splitlines() if not ln.startswith("#")]
    assert lines == ["P1", "1 1", "1"]
    two = export_bitmap(SiteConfig.from_array([[1, 0]]))
    assert two.splitlines()[-1] == "1 0"


def test_bitmap_rows_top_to_bottom():
    c = SiteConfig.from_array([[1, 1], [0, 0]])  # bottom row open
    assert export_bitmap(c).splitlines()[-2:] == ["0 0", "1 1"]


@given(grids, anchors)
def test_bitmap_round_trip(values, anchor):
    c = SiteConfig.from_array(values, anchor)
    assert import_bitmap(export_bitmap(c)) == c


def test_bitmap_without_separators():
    assert import_bitmap("P1\n2 2\n10\n01\n") == SiteConfig.from_array([[0, 1], [1, 0]])


@pytest.mark.parametrize("text", ["", "P2\n1 1\n1\n", "P1\n2 2\n1 0 1\n", "P1\nx y\n1",
                                  "P1\n1 1\n2\n", "P1\n0 1\n"])
def test_bitmap_parse_errors(text):
    with pytest.raises(BitmapParseError):
        import_bitmap(text)


def test_clusters_csv():
    text = clusters_csv(label_clusters(SiteConfig.from_array([[1, 0, 1]])))
    assert text.splitlines() == ["component_id,phase,size,touches_boundary",
                                 "0,open,1,1", "1,closed,1,1", "2,open,1,1"]


def test_spanning():
    v = np.zeros((3, 4), dtype=np.uint8)
    v[1, :] = 1
    lab = label_clusters(SiteConfig.from_array(v))
    assert lab.spans(1) and lab.spans(0)
    v[1, 2] = 0
    assert not label_clusters(SiteConfig.from_array(v)).spans(1)


def test_box_helpers():
    b = Box(0, 0, 3, 2)
    assert b.x1 == 2 and b.y1 == 1
    assert b.contains((2, 1)) and not b.contains((3, 1))
    assert b.intersection(Box(2, 1, 5, 5)) == Box(2, 1, 1, 1)
    assert b.intersection(Box(5, 5, 1, 1)) is None
    assert len(b.sites()) == 6
