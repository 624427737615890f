"""Escape routes through window chains and the road-sum arithmetic.

A chain ``W_1 < W_2 < ...`` (list index 0 holds ``W_1``) yields two roads:

* ERB, open: the cut of the vertical frame of ``W_k`` just right of
  ``W_{k-1}``, then the bottom of ``F(W_k)`` stretched right by
  ``w(W_{k+1})``;
* ELT, closed: the leftmost frame of ``W_{k-1}`` stretched vertically as far
  as the shade of ``W_k`` allows without touching either fork, then the top
  frame of ``W_k``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

from percforks.errors import ParameterError
from percforks.gridforks import GridHierarchy, WindowSpec, fork
from percforks.lattice import Box

VERTICAL = "V"
HORIZONTAL = "H"


@dataclass(frozen=True)
class RectSpec:
    """An a x b block of sites to be crossed in direction ``kind``."""

    anchor: tuple[int, int]
    width: int
    height: int
    kind: str
    provenance: str = ""

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError(f"rectangle must be at least 1x1, got {self.width}x{self.height}")
        if self.kind not in (VERTICAL, HORIZONTAL):
            raise ParameterError(f"kind must be 'V' or 'H', got {self.kind!r}")

    @property
    def box(self) -> Box:
        return Box(self.anchor[0], self.anchor[1], self.width, self.height)

    @property
    def xs(self) -> range:
        return range(self.anchor[0], self.anchor[0] + self.width)

    @property
    def ys(self) -> range:
        return range(self.anchor[1], self.anchor[1] + self.height)

    def sites(self) -> set:
        return self.box.sites()


def _rect(box: Box, kind, provenance) -> RectSpec:
    return RectSpec((box.x0, box.y0), box.width, box.height, kind, provenance)


def _within(inner: range, outer: range) -> bool:
    return outer.start <= inner.start and inner.stop <= outer.stop


def well_joined(a: RectSpec, b: RectSpec) -> bool:
    """Whether ``a`` then ``b`` is a well-joined pair of alternating type."""
    if a.kind == VERTICAL and b.kind == HORIZONTAL:
        return _within(a.xs, b.xs) and _within(b.ys, a.ys)
    if a.kind == HORIZONTAL and b.kind == VERTICAL:
        return _within(b.xs, a.xs) and _within(a.ys, b.ys)
    return False


@dataclass
class RoadPlan:
    rects: list[RectSpec] = field(default_factory=list)

    def __len__(self):
        return len(self.rects)

    def __iter__(self):
        return iter(self.rects)

    def sites(self) -> set:
        out = set()
        for r in self.rects:
            out |= r.sites()
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "anchor_x", "anchor_y", "width", "height", "type", "provenance"])
        for i, r in enumerate(self.rects):
            writer.writerow([i, r.anchor[0], r.anchor[1], r.width, r.height, r.kind, r.provenance])
        return buf.getvalue()


def validate_well_joined(plan) -> tuple[bool, tuple[int, int] | None]:
    """(True, None), or (False, (i, i+1)) for the first bad pair (1-based)."""
    rects = list(plan)
    for i in range(len(rects) - 1):
        if not well_joined(rects[i], rects[i + 1]):
            return False, (i + 1, i + 2)
    return True, None


# --------------------------------------------------------------------------
# geometry of a chain


def _check_chain(windows, k):
    if k < 2:
        raise ParameterError("k must be >= 2; use erb_first for k = 1")
    if len(windows) < k:
        raise ParameterError(f"chain has {len(windows)} windows, need W_1..W_{k}")


def attached_right_frame(inner: WindowSpec, outer: WindowSpec) -> Box:
    """The unique vertical frame V of ``outer`` with (inner + (1,0)) ∩ V nonempty."""
    moved = {(x + 1, y) for x, y in inner.sites()}
    hits = [f for f in outer.vertical_frames if any(f.contains(s) for s in moved)]
    if len(hits) != 1:
        raise AssertionError(f"expected one attached frame, found {len(hits)}")
    return hits[0]


def cut_frame(frame: Box, w: WindowSpec) -> Box:
    """The part of a vertical frame below the top horizontal frame."""
    return Box(frame.x0, frame.y0, frame.width, frame.height - w.w)


def bottom(w: WindowSpec) -> Box:
    """H_0 minus V_0."""
    return Box(w.anchor[0] + w.w, w.anchor[1], w.s - w.w, w.w)


def extended_bottom(w: WindowSpec, next_w: int) -> Box:
    b = bottom(w)
    return Box(b.x0, b.y0, b.width + next_w, b.height)


def _next_width(h: GridHierarchy | None, windows, k) -> int:
    if len(windows) > k:
        return windows[k].w
    if h is None:
        raise ParameterError(f"w(W_{k + 1}) unknown: pass the hierarchy or a longer chain")
    return h.params[windows[k - 1].level + 1].l


def erb(windows, k: int, h: GridHierarchy | None = None) -> tuple[RectSpec, RectSpec]:
    """(cut(V_k^+), E_k) for the chain ``windows``."""
    _check_chain(windows, k)
    prev, cur = windows[k - 2], windows[k - 1]
    vplus = attached_right_frame(prev, cur)
    cut = _rect(cut_frame(vplus, cur), VERTICAL, f"ERB k={k} cut level={cur.level}")
    ext = _rect(extended_bottom(cur, _next_width(h, windows, k)), HORIZONTAL,
                f"ERB k={k} bottom level={cur.level}")
    return cut, ext


def erb_first(windows, h: GridHierarchy | None = None) -> frozenset:
    """F(W_1) ∪ E_1."""
    w1 = windows[0]
    return frozenset(fork(w1) | extended_bottom(w1, _next_width(h, windows, 1)).sites())


def _avoids(xs, y, blocked) -> bool:
    return all((x, y) not in blocked for x in xs)


def ext_leftmost(prev: WindowSpec, cur: WindowSpec) -> Box:
    """Maximal vertical stretch of V_0 of ``prev`` inside the shade of ``cur``."""
    blocked = fork(cur) | fork(prev)
    v0 = prev.vertical_frame(0)
    xs = range(v0.x0, v0.x1 + 1)
    shade = cur.shade
    lo, hi = v0.y0, v0.y1
    while lo - 1 >= shade.y0 and _avoids(xs, lo - 1, blocked):
        lo -= 1
    while hi + 1 <= shade.y1 and _avoids(xs, hi + 1, blocked):
        hi += 1
    return Box(v0.x0, lo, v0.width, hi - lo + 1)


def elt(windows, k: int) -> tuple[RectSpec, RectSpec]:
    """(ext(V_{k-1}^l), H_k^t) for the chain ``windows``."""
    _check_chain(windows, k)
    prev, cur = windows[k - 2], windows[k - 1]
    ext = _rect(ext_leftmost(prev, cur), VERTICAL, f"ELT k={k} ext level={prev.level}")
    top = _rect(cur.horizontal_frame(cur.q - 1), HORIZONTAL, f"ELT k={k} top level={cur.level}")
    return ext, top


def erb_plan(windows, h: GridHierarchy | None = None) -> RoadPlan:
    plan = RoadPlan()
    for k in range(2, len(windows) + 1):
        plan.rects.extend(erb(windows, k, h))
    return plan


def elt_plan(windows) -> RoadPlan:
    plan = RoadPlan()
    for k in range(2, len(windows) + 1):
        plan.rects.extend(elt(windows, k))
    return plan


# --------------------------------------------------------------------------
# arithmetic


def _L(factors, i):
    """L_i with 1-based index."""
    return factors[i - 1]


def _term(num, l, gamma):  # noqa: E741
    if isinstance(gamma, int) or (isinstance(gamma, Fraction) and gamma.denominator == 1):
        return Fraction(num, int(l) ** int(gamma))
    return math.exp(math.log(num) - float(gamma) * math.log(l))


def _check_gamma(gamma):
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")


@dataclass(frozen=True)
class SeriesReport:
    start: int
    terms: tuple
    partial_sums: tuple
    ratios: tuple
    decreasing_from: int | None

    @property
    def convergent(self) -> bool:
        """Ratio test proxy: successive ratios stay below 1 through the end."""
        return self.decreasing_from is not None

    def as_floats(self) -> dict:
        return {"start": self.start,
                "terms": [float(t) for t in self.terms],
                "partial_sums": [float(s) for s in self.partial_sums],
                "ratios": [float(r) for r in self.ratios],
                "decreasing_from": self.decreasing_from}


def _series(start, terms) -> SeriesReport:
    sums, acc = [], 0
    for t in terms:
        acc = acc + t
        sums.append(acc)
    ratios = [terms[j + 1] / terms[j] for j in range(len(terms) - 1)]
    first = None
    for j in range(len(ratios) - 1, -1, -1):
        if ratios[j] < 1:
            first = start + j
        else:
            break
    # need at least the final ratio below one
    if not ratios or ratios[-1] >= 1:
        first = None
    return SeriesReport(start, tuple(terms), tuple(sums), tuple(ratios), first)


@dataclass(frozen=True)
class RoadSums:
    erb: SeriesReport
    elt: SeriesReport

    @property
    def convergent(self) -> bool:
        return self.erb.convergent and self.elt.convergent


def road_sums(factors, l_seq, gamma, i_max: int) -> RoadSums:
    """Terms and partial sums of sum_{i>=2} L_{i+1}L_i/l_i^g and sum_{i>=1} L_{i+2}L_{i+1}L_i/l_i^g.

    ``factors[i-1]`` is L_i and ``l_seq[i]`` is l_i. Integer ``gamma`` gives
    exact rationals.
    """
    _check_gamma(gamma)
    need = i_max + 2
    if len(factors) < need or len(l_seq) <= i_max:
        raise ParameterError(f"i_max={i_max} needs L_1..L_{need} and l_0..l_{i_max}")
    erb_terms = [_term(_L(factors, i + 1) * _L(factors, i), l_seq[i], gamma)
                 for i in range(2, i_max + 1)]
    elt_terms = [_term(_L(factors, i + 2) * _L(factors, i + 1) * _L(factors, i), l_seq[i], gamma)
                 for i in range(1, i_max + 1)]
    return RoadSums(_series(2, erb_terms), _series(1, elt_terms))


@dataclass(frozen=True)
class FkgBound:
    value: float
    log_value: float
    exponents: tuple
    tail_exponent: float
    positive: bool


def fkg_product_bound(c: float, gamma, factors, l_seq, i_max: int,
                      tail_eps: float = 1e-6) -> FkgBound:
    """prod_{i=2}^{i_max} c^(8 L_{i+1} L_i / l_i^gamma) with a tail estimate.

    The tail exponent bounds the remaining sum geometrically from the last
    term ratio (infinite if that ratio is not below one). The bound counts as
    positive when the tail exponent is below ``tail_eps``.
    """
    if not 0 < c < 1:
        raise ParameterError(f"c must lie in (0, 1), got {c}")
    _check_gamma(gamma)
    if len(factors) < i_max + 1 or len(l_seq) <= i_max:
        raise ParameterError(f"i_max={i_max} needs L_1..L_{i_max + 1} and l_0..l_{i_max}")
    exps = [8 * float(_term(_L(factors, i + 1) * _L(factors, i), l_seq[i], gamma))
            for i in range(2, i_max + 1)]
    log_value = math.log(c) * sum(exps)
    tail = 0.0
    if len(exps) >= 2 and exps[-2] > 0:
        r = exps[-1] / exps[-2]
        tail = exps[-1] * r / (1 - r) if r < 1 else math.inf
    return FkgBound(math.exp(log_value), log_value, tuple(exps), tail, tail < tail_eps)
