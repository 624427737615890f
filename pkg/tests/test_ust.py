from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from percforks.lattice import SiteConfig, label_clusters
from percforks.ust import (SHIFTS, TreeEdges, compute_b, cut_sizes, dual_tree, flip_probabilities,
                           perturb_finite_energy, random_shift, sample_picture, scale2_picture,
                           wilson_ust)

boxes = st.tuples(st.integers(1, 7), st.integers(1, 7))
seeds = st.integers(0, 2**32 - 1)


def brute_force_b(values, x, y):
    """Remove (x, y); sum sizes of same-phase pieces that miss the boundary."""
    h, w = values.shape
    phase = values[y, x]
    seen = {(x, y)}
    total = 0
    for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
        if not (0 <= nx < w and 0 <= ny < h) or values[ny, nx] != phase or (nx, ny) in seen:
            continue
        stack, comp, edge = [(nx, ny)], 0, False
        seen.add((nx, ny))
        while stack:
            cx, cy = stack.pop()
            comp += 1
            edge |= cx in (0, w - 1) or cy in (0, h - 1)
            for ax, ay in ((cx - 1, cy), (cx + 1, cy), (cx, cy - 1), (cx, cy + 1)):
                if 0 <= ax < w and 0 <= ay < h and values[ay, ax] == phase \
                        and (ax, ay) not in seen:
                    seen.add((ax, ay))
                    stack.append((ax, ay))
        if not edge:
            total += comp
    return total


def test_trivial_trees():
    assert wilson_ust(1, 2, seed=0).edge_count == 1
    t = wilson_ust(3, 1, seed=0)
    assert t.horizontal.all() and t.edge_count == 2


def test_two_by_two_is_uniform():
    from scipy.stats import chisquare
    counts = Counter(wilson_ust(2, 2, seed=s).edges() for s in range(4000))
    assert len(counts) == 4
    assert chisquare(list(counts.values())).pvalue > 1e-3


@given(boxes, seeds)
def test_wilson_gives_spanning_trees(box, seed):
    t = wilson_ust(*box, seed=seed)
    assert t.is_spanning_tree()
    assert dual_tree(t).is_spanning_tree()


def test_wilson_is_deterministic():
    assert wilson_ust(5, 4, seed=9) == wilson_ust(5, 4, seed=9)


def test_dual_counts():
    assert dual_tree(wilson_ust(1, 2, seed=1)).edges() == []
    two = dual_tree(wilson_ust(2, 2, seed=1))
    assert len(two.edges()) == 1
    three = dual_tree(wilson_ust(3, 3, seed=1))
    assert three.inner_vertex_count == 4
    assert len(three.edges()) == 12 - 8


def test_cycle_is_not_a_tree():
    t = TreeEdges(2, 2, [[True], [True]], [[True, True]])
    assert not t.is_spanning_tree()


def test_picture_of_single_edge():
    pic = scale2_picture(wilson_ust(1, 2, seed=0))
    assert pic.values.ravel().tolist() == [1, 1, 1]


@given(boxes, seeds)
def test_picture_structure(box, seed):
    n, m = box
    pic = scale2_picture(wilson_ust(n, m, seed=seed))
    v = pic.values
    assert v.shape == (2 * m - 1, 2 * n - 1)
    assert v[0::2, 0::2].all()
    assert not v[1::2, 1::2].any()
    assert v[0::2, 1::2].sum() + v[1::2, 0::2].sum() == n * m - 1
    lab = label_clusters(pic)
    assert (lab.phases == 1).sum() == 1
    assert lab.touches_boundary[lab.phases == 0].all()


def test_shift_frequencies():
    pic = SiteConfig.from_array([[1]])
    seeds = np.random.SeedSequence(10).spawn(4000)
    counts = Counter(random_shift(pic, seed=s).anchor for s in seeds)
    assert set(counts) == set(SHIFTS)
    sigma = np.sqrt(4000 * 0.25 * 0.75)
    assert all(abs(c - 1000) < 3 * sigma for c in counts.values())


def test_shift_chi_square_large_sample():
    from scipy.stats import chisquare
    pic = SiteConfig.from_array([[1]])
    counts = Counter(random_shift(pic, seed=s).anchor
                     for s in np.random.SeedSequence(11).spawn(40000))
    assert chisquare([counts[o] for o in SHIFTS]).pvalue > 1e-3


def test_shift_keeps_values():
    pic = SiteConfig.from_array([[1, 0], [0, 0]])
    assert np.array_equal(random_shift(pic, seed=3).values, pic.values)


def test_b_of_a_path():
    # open path from the left edge; x in the middle, two interior sites behind it
    v = np.zeros((3, 7), dtype=np.uint8)
    v[1, 0:5] = 1
    cfg = SiteConfig.from_array(v)
    assert compute_b(cfg, (2, 1)) == 2
    assert compute_b(cfg, (4, 1)) == 0   # tip
    assert compute_b(cfg, (0, 1)) == 4   # the whole interior stretch hangs off x


def test_b_is_zero_when_neighbours_stay_connected():
    cfg = SiteConfig.from_array(np.ones((4, 4), dtype=np.uint8))
    assert (cut_sizes(cfg) == 0).all()


def test_b_outside_window():
    with pytest.raises(IndexError):
        compute_b(SiteConfig.from_array([[1]]), (5, 5))


@given(st.tuples(st.integers(1, 7), st.integers(1, 7)), seeds)
def test_b_matches_brute_force(shape, seed):
    v = (np.random.default_rng(seed).random(shape) < 0.5).astype(np.uint8)
    b = cut_sizes(SiteConfig.from_array(v))
    for y in range(shape[0]):
        for x in range(shape[1]):
            assert b[y, x] == brute_force_b(v, x, y)


def test_flip_probability_cap():
    v = np.zeros((3, 70), dtype=np.uint8)
    v[1, 0:69] = 1
    probs = flip_probabilities(SiteConfig.from_array(v))
    assert probs[1, 0] == 0.0      # b = 67 > cap
    assert probs[1, 68] == 0.5


def test_flip_frequencies_b0_and_b3():
    v = np.zeros((3, 6), dtype=np.uint8)
    v[1, 0:5] = 1        # b at (1,1) is 3
    cfg = SiteConfig.from_array(v)
    assert compute_b(cfg, (1, 1)) == 3 and compute_b(cfg, (4, 1)) == 0
    n = 20000
    flips = np.array([perturb_finite_energy(cfg, seed=s).values[1, [1, 4]] == 0
                      for s in range(n)])
    for col, p in ((0, 1 / 16), (1, 1 / 2)):
        freq = flips[:, col].mean()
        assert abs(freq - p) < 3 * np.sqrt(p * (1 - p) / n)


def test_perturbation_is_deterministic():
    pic = sample_picture(6, seed=4)
    assert perturb_finite_energy(pic, seed=1) == perturb_finite_energy(pic, seed=1)
    assert sample_picture(6, seed=4, perturb=True) == sample_picture(6, seed=4, perturb=True)
