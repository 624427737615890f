import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from percforks import gridforks, roads
from percforks.errors import ParameterError
from percforks.lattice import label_clusters
from percforks.roads import (HORIZONTAL, VERTICAL, RectSpec, RoadPlan, elt, elt_plan, erb,
                             erb_first, erb_plan, fkg_product_bound, road_sums,
                             validate_well_joined, well_joined)


def chains(l0, d0, factors, seeds=range(6)):
    for s in seeds:
        h = gridforks.sample_hierarchy(l0, d0, factors, seed=s)
        for w in gridforks.windows_of_level(h, 0, h.top_shade()):
            chain = gridforks.window_chain(h, w)
            if len(chain) == h.K:
                yield h, chain
                break


CASES = [(2, 2, (2, 4)), (1, 2, (2, 2, 3)), (2, 3, (2, 3, 2))]


def test_rect_validation():
    with pytest.raises(ParameterError):
        RectSpec((0, 0), 0, 3, VERTICAL)
    with pytest.raises(ParameterError):
        RectSpec((0, 0), 1, 3, "D")


def test_well_joined_examples():
    v = RectSpec((2, 0), 2, 6, VERTICAL)
    h = RectSpec((0, 1), 8, 2, HORIZONTAL)
    assert well_joined(v, h)
    assert well_joined(h, RectSpec((3, 0), 1, 5, VERTICAL))
    assert not well_joined(v, RectSpec((3, 0), 1, 5, VERTICAL))   # same type
    assert validate_well_joined(RoadPlan([v])) == (True, None)
    apart = RoadPlan([v, RectSpec((20, 20), 4, 1, HORIZONTAL)])
    assert validate_well_joined(apart) == (False, (1, 2))
    assert validate_well_joined(RoadPlan([v, h, RectSpec((50, 0), 1, 1, VERTICAL)])) == \
        (False, (2, 3))


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 4), st.integers(0, 4))
def test_well_joined_is_containment(w, hgt, dx, dy):
    v = RectSpec((dx, 0), w, hgt + 4, VERTICAL)
    h = RectSpec((0, dy), w + 4, hgt, HORIZONTAL)
    expect = dx + w <= w + 4 and dy + hgt <= hgt + 4
    assert well_joined(v, h) == expect


@pytest.mark.parametrize("case", CASES)
def test_erb_sizes_and_phase(case):
    found = False
    for h, chain in chains(*case):
        found = True
        rf = gridforks.rf_config(h)
        region = h.top_shade()
        plan = erb_plan(chain, h)
        assert validate_well_joined(plan) == (True, None)
        for k in range(2, len(chain) + 1):
            cur = chain[k - 1]
            cut, ext = erb(chain, k, h)
            nxt = h.params[cur.level + 1].l
            assert (cut.width, cut.height) == (cur.w, cur.s - cur.w)
            assert (ext.width, ext.height) == (cur.s - cur.w + nxt, cur.w)
            p = h.params
            assert (cut.width, cut.height) == (p[cur.level].l, p[cur.level + 1].d - p[cur.level].l)
            for site in cut.sites() | ext.sites():
                if region.contains(site):
                    assert rf[site] == 1
    assert found


@pytest.mark.parametrize("case", CASES)
def test_elt_sizes_and_phase(case):
    for h, chain in chains(*case):
        rf = gridforks.rf_config(h)
        region = h.top_shade()
        assert validate_well_joined(elt_plan(chain)) == (True, None)
        for k in range(2, len(chain) + 1):
            prev, cur = chain[k - 2], chain[k - 1]
            ext, top = elt(chain, k)
            assert (ext.width, ext.height) == (prev.w, cur.s - cur.w)
            assert (top.width, top.height) == (cur.s, cur.w)
            assert prev.vertical_frame(0).sites() <= ext.sites()
            for site in ext.sites() | top.sites():
                if region.contains(site):
                    assert rf[site] == 0


def test_erb_first():
    h, chain = next(chains(2, 2, (2, 4)))
    w1 = chain[0]
    first = erb_first(chain, h)
    assert gridforks.fork(w1) <= first
    assert not first & w1.vertical_frame(0).sites()
    b = roads.bottom(w1)
    assert (b.x1 + chain[1].w, b.y0) in first


def test_erb_needs_k_at_least_two():
    h, chain = next(chains(2, 2, (2, 4)))
    with pytest.raises(ParameterError):
        erb(chain, 1, h)


def test_erb_top_level_needs_width():
    h, chain = next(chains(2, 2, (2, 4)))
    with pytest.raises(ParameterError):
        erb(chain, len(chain))


def test_top_frame_holds_the_closed_crossing():
    # the top window's left frame and top frame join in RF*; it connects up to the shade edge
    h = gridforks.sample_hierarchy(2, 2, (2, 4), seed=1)
    lab = label_clusters(gridforks.rf_config(h))
    assert lab.spans(0)


def test_plan_csv():
    plan = RoadPlan([RectSpec((0, 0), 2, 3, VERTICAL, "a")])
    assert plan.to_csv().splitlines() == [
        "index,anchor_x,anchor_y,width,height,type,provenance", "0,0,0,2,3,V,a"]


def doubling_inputs(n=9):
    factors = [2 ** i for i in range(1, n + 3)]
    ls = [p.l for p in gridforks.param_recursion(2, 2, factors)]
    return factors, ls


def test_road_sum_terms_match_closed_forms():
    factors, ls = doubling_inputs()
    rs = road_sums(factors, ls, 1, 8)
    for i, t in enumerate(rs.erb.terms, start=2):
        j = i - 2   # term at index j + 2
        assert t == Fraction(2 ** (2 * j + 5), ls[j + 2])
    for i, t in enumerate(rs.elt.terms, start=1):
        assert t == Fraction(2 ** (3 * i + 3), ls[i])
    assert rs.convergent


def test_road_sums_reject_bad_gamma_and_length():
    factors, ls = doubling_inputs()
    with pytest.raises(ParameterError):
        road_sums(factors, ls, 0, 4)
    with pytest.raises(ParameterError):
        road_sums(factors[:3], ls, 1, 4)


def test_constant_factors_converge():
    # l_i grows like L^i, so L^2 / l_i^gamma is geometric for gamma = 1
    factors = [3] * 14
    ls = [p.l for p in gridforks.param_recursion(1, 2, factors)]
    assert road_sums(factors, ls, 1, 10).convergent


def test_doubly_exponential_factors_diverge():
    # L_i = 2^(2^i) outruns l_i, so the terms grow
    factors = [2 ** (2 ** i) for i in range(1, 9)]
    ls = [p.l for p in gridforks.param_recursion(1, 2, factors)]
    rs = road_sums(factors, ls, 1, 5)
    assert not rs.erb.convergent
    assert all(r > 1 for r in rs.erb.ratios)


def test_fkg_bound():
    factors, ls = doubling_inputs()
    b = fkg_product_bound(0.5, 1, factors, ls, 6)
    assert 0 < b.value < 1
    for i, e in enumerate(b.exponents, start=2):
        assert e == pytest.approx(8 * factors[i] * factors[i - 1] / ls[i])
    values = [fkg_product_bound(0.5, 1, factors, ls, m).value for m in range(2, 9)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert fkg_product_bound(1 - 1e-12, 1, factors, ls, 6).value == pytest.approx(1)
    assert not fkg_product_bound(0.5, 1, factors, ls, 8).positive   # tail still 3e-5
    assert fkg_product_bound(0.5, 1, factors, ls, 10).positive


@pytest.mark.parametrize("c", [0, 1, -0.5, 1.5])
def test_fkg_rejects_c(c):
    factors, ls = doubling_inputs()
    with pytest.raises(ParameterError):
        fkg_product_bound(c, 1, factors, ls, 4)


def test_fkg_tail_infinite_when_terms_grow():
    factors = [2 ** (2 ** i) for i in range(1, 9)]
    ls = [p.l for p in gridforks.param_recursion(1, 2, factors)]
    b = fkg_product_bound(0.5, 1, factors, ls, 5)
    assert math.isinf(b.tail_exponent) and not b.positive
