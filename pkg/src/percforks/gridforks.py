"""Random Forks: nested random grids, their windows and forks.

Each axis carries a block progression per level. Level 0 has a uniformly
random offset; the level-(k+1) progression takes one of the level-k gaps as its
block and repeats it with period ``L_{k+1} (l_k + d_k)``. A site has colour
``k`` when the largest level whose grid contains it is ``k`` (``-1`` if none).

A level-k window lives in the square formed by one level-(k+1) gap on each
axis: its frames are the level-k strips inside that square. The open sites of
RF are the forks of all windows whose sites carry colour exactly ``k``.

The hierarchy is truncated at level ``K``: sites of colour ``K`` belong to no
window and are closed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from percforks.errors import DegenerateWindowError, ParameterError
from percforks.lattice import Box, SiteConfig

AXES = ("x", "y")


@dataclass(frozen=True)
class GridParams:
    l: int  # noqa: E741 - block length
    d: int

    @property
    def period(self) -> int:
        return self.l + self.d


def _check_params(l0, d0, factors):
    if l0 < 1:
        raise ParameterError(f"block length l0 must be >= 1, got {l0}")
    if d0 < 1:
        raise ParameterError(f"block distance d0 must be >= 1, got {d0}")
    for i, f in enumerate(factors, start=1):
        if f < 2:
            raise ParameterError(f"factor L_{i} must be >= 2, got {f}")


def param_recursion(l0: int, d0: int, factors) -> tuple[GridParams, ...]:
    """(l_k, d_k) for k = 0..len(factors)."""
    factors = [int(f) for f in factors]
    _check_params(l0, d0, factors)
    out = [GridParams(l0, d0)]
    for L in factors:
        prev = out[-1]
        out.append(GridParams(prev.d, L * prev.l + (L - 1) * prev.d))
    return tuple(out)


def membership_prob(l: int, d: int) -> Fraction:  # noqa: E741
    """Chance that a fixed site lies in a uniformly placed grid of parameter (l, d)."""
    return Fraction(l * d + l * (l + d), (l + d) ** 2)


def admissible_start(l0, d0) -> bool:
    """Whether (l0, d0) meets d0 >= l0 and d0 > 1; n0 itself is unknown."""
    return d0 > 1 and d0 >= l0


@dataclass(frozen=True)
class GridHierarchy:
    params: tuple[GridParams, ...]
    factors: tuple[int, ...]
    offsets_x: tuple[int, ...]
    offsets_y: tuple[int, ...]

    @property
    def K(self) -> int:  # noqa: N802
        return len(self.params) - 1

    def offset(self, axis: str, k: int) -> int:
        return (self.offsets_x if axis == "x" else self.offsets_y)[k]

    # -- per-axis geometry -------------------------------------------------

    def in_blocks(self, axis, k, t):
        p = self.params[k]
        return ((np.asarray(t) - self.offset(axis, k)) % p.period) < p.l

    def block_index(self, axis, k, t):
        """Index of the level-k block holding ``t`` inside its level-(k+1) gap.

        ``-1`` where ``t`` is not in a level-k block, is inside a level-(k+1)
        block, or ``k`` is the top level.
        """
        t = np.asarray(t)
        p = self.params[k]
        inblk = ((t - self.offset(axis, k)) % p.period) < p.l
        if k >= self.K:
            return np.full(t.shape, -1, dtype=np.int64)
        up = self.params[k + 1]
        u = (t - self.offset(axis, k + 1)) % up.period
        idx = (u - up.l) // p.period
        return np.where(inblk & (u >= up.l), idx, -1).astype(np.int64)

    def gap_start(self, axis, k, t) -> int | None:
        """First coordinate of the level-k gap containing ``t``."""
        p = self.params[k]
        u = (t - self.offset(axis, k)) % p.period
        if u < p.l:
            return None
        return int(t - (u - p.l))

    def gap_starts(self, axis, k, lo, hi) -> list[int]:
        """Starts of level-k gaps meeting the coordinate range [lo, hi]."""
        p = self.params[k]
        first = self.offset(axis, k) + p.l
        m = (lo - first) // p.period - 1
        out = []
        while True:
            g = first + m * p.period
            if g > hi:
                break
            if g + p.d - 1 >= lo:
                out.append(int(g))
            m += 1
        return out

    # -- sites ---------------------------------------------------------------

    def member(self, k, site) -> bool:
        return bool(self.in_blocks("x", k, site[0]) or self.in_blocks("y", k, site[1]))

    def top_shade(self) -> Box:
        """The square of level-K gaps nearest the origin (towards +x, +y)."""
        if self.K < 1:
            raise ParameterError("need at least one factor to form windows")
        top = self.params[self.K]
        x0 = (self.offset("x", self.K) + top.l) % top.period
        y0 = (self.offset("y", self.K) + top.l) % top.period
        return Box(x0, y0, top.d, top.d)

    def manifest(self) -> dict:
        levels = []
        for k, p in enumerate(self.params):
            levels.append({
                "level": k, "l": p.l, "d": p.d,
                "L": self.factors[k - 1] if k else None,
                "offset_x": self.offsets_x[k], "offset_y": self.offsets_y[k],
            })
        return {"K": self.K, "levels": levels}

    @classmethod
    def from_manifest(cls, data: dict) -> GridHierarchy:
        levels = sorted(data["levels"], key=lambda e: e["level"])
        return cls(
            params=tuple(GridParams(e["l"], e["d"]) for e in levels),
            factors=tuple(e["L"] for e in levels[1:]),
            offsets_x=tuple(e["offset_x"] for e in levels),
            offsets_y=tuple(e["offset_y"] for e in levels),
        )


def sample_hierarchy(l0: int, d0: int, factors, K: int | None = None, seed=None) -> GridHierarchy:
    """Uniform level-0 grid, then a uniformly chosen grid over it per level."""
    factors = tuple(int(f) for f in factors)
    K = len(factors) if K is None else K
    if not 0 <= K <= len(factors):
        raise ParameterError(f"K must lie in 0..{len(factors)}, got {K}")
    factors = factors[:K]
    params = param_recursion(l0, d0, factors)
    rng = np.random.default_rng(seed)
    offsets = {}
    for axis in AXES:
        offs = [int(rng.integers(params[0].period))]
        for k, L in enumerate(factors):
            # the new block is one of the L gap classes of level k (mod new period)
            gap = int(rng.integers(L))
            p = params[k]
            offs.append((offs[k] + p.l + gap * p.period) % params[k + 1].period)
        offsets[axis] = tuple(offs)
    return GridHierarchy(params, factors, offsets["x"], offsets["y"])


def color(x, h: GridHierarchy) -> int:
    for k in range(h.K, -1, -1):
        if h.member(k, x):
            return k
    return -1


def color_map(h: GridHierarchy, region: Box) -> np.ndarray:
    xs = np.arange(region.x0, region.x0 + region.width)
    ys = np.arange(region.y0, region.y0 + region.height)
    out = np.full((region.height, region.width), -1, dtype=np.int64)
    for k in range(h.K + 1):
        mem = h.in_blocks("x", k, xs)[None, :] | h.in_blocks("y", k, ys)[:, None]
        out[mem] = k
    return out


# --------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class WindowSpec:
    anchor: tuple[int, int]
    q: int
    w: int
    gap: int
    level: int

    @property
    def s(self) -> int:
        return self.q * self.w + (self.q - 1) * self.gap

    @property
    def pitch(self) -> int:
        return self.w + self.gap

    @property
    def shade(self) -> Box:
        return Box(self.anchor[0], self.anchor[1], self.s, self.s)

    def vertical_frame(self, i) -> Box:
        return Box(self.anchor[0] + i * self.pitch, self.anchor[1], self.w, self.s)

    def horizontal_frame(self, j) -> Box:
        return Box(self.anchor[0], self.anchor[1] + j * self.pitch, self.s, self.w)

    @property
    def vertical_frames(self) -> list[Box]:
        return [self.vertical_frame(i) for i in range(self.q)]

    @property
    def horizontal_frames(self) -> list[Box]:
        return [self.horizontal_frame(j) for j in range(self.q)]

    def panes(self) -> list[Box]:
        x0, y0 = self.anchor
        return [Box(x0 + i * self.pitch + self.w, y0 + j * self.pitch + self.w, self.gap, self.gap)
                for j in range(self.q - 1) for i in range(self.q - 1)]

    def contains(self, site) -> bool:
        if not self.shade.contains(site):
            return False
        rx = (site[0] - self.anchor[0]) % self.pitch
        ry = (site[1] - self.anchor[1]) % self.pitch
        return rx < self.w or ry < self.w

    def sites(self) -> set:
        out = set()
        for frame in self.vertical_frames + self.horizontal_frames:
            out |= frame.sites()
        return out

    def as_row(self) -> dict:
        return {"level": self.level, "anchor_x": self.anchor[0], "anchor_y": self.anchor[1],
                "q": self.q, "w": self.w, "s": self.s, "gap": self.gap}


def fork(w: WindowSpec) -> frozenset:
    """Frames V_1..V_{q-1} and H_0, minus V_0 and H_{q-1}."""
    if w.q < 2:
        raise DegenerateWindowError(f"fork needs q >= 2, got q={w.q}")
    keep = w.horizontal_frame(0).sites()
    for i in range(1, w.q):
        keep |= w.vertical_frame(i).sites()
    drop = w.vertical_frame(0).sites() | w.horizontal_frame(w.q - 1).sites()
    return frozenset(keep - drop)


def _window_at(h: GridHierarchy, k: int, gx: int, gy: int) -> WindowSpec:
    p = h.params[k]
    return WindowSpec((gx, gy), q=h.factors[k], w=p.l, gap=p.d, level=k)


def windows_of_level(h: GridHierarchy, k: int, region: Box) -> list[WindowSpec]:
    """Level-k windows (sites of colour exactly k) meeting ``region``."""
    if not 0 <= k < h.K:
        raise ParameterError(f"window level must lie in 0..{h.K - 1}, got {k}")
    xs = h.gap_starts("x", k + 1, region.x0, region.x1)
    ys = h.gap_starts("y", k + 1, region.y0, region.y1)
    out = []
    for gy in ys:
        for gx in xs:
            if color((gx, gy), h) == k:
                out.append(_window_at(h, k, gx, gy))
    return out


def window_containing(h: GridHierarchy, site) -> WindowSpec | None:
    """The window of the colour class of ``site`` holding it, if any."""
    k = color(site, h)
    if k < 0 or k >= h.K:
        return None
    gx = h.gap_start("x", k + 1, site[0])
    gy = h.gap_start("y", k + 1, site[1])
    return _window_at(h, k, gx, gy)


def parent_window(h: GridHierarchy, w: WindowSpec) -> WindowSpec | None:
    """The level-(k+1) window having the shade of ``w`` as a pane."""
    k = w.level + 1
    if k >= h.K:
        return None
    gx = h.gap_start("x", k + 1, w.anchor[0])
    gy = h.gap_start("y", k + 1, w.anchor[1])
    if gx is None or gy is None:
        return None
    up = _window_at(h, k, gx, gy)
    return up if precedes(w, up) and color(up.anchor, h) == k else None


def precedes(w: WindowSpec, up: WindowSpec) -> bool:
    """W < W+: the shade of ``w`` is a pane of ``up``."""
    return w.shade in up.panes()


def window_chain(h: GridHierarchy, w: WindowSpec) -> list[WindowSpec]:
    """W_1 = w, W_2, ... following parents up to the top level."""
    chain = [w]
    while (up := parent_window(h, chain[-1])) is not None:
        chain.append(up)
    return chain


# --------------------------------------------------------------------------
# the configuration


def rf_mask(h: GridHierarchy, region: Box) -> np.ndarray:
    xs = np.arange(region.x0, region.x0 + region.width)
    ys = np.arange(region.y0, region.y0 + region.height)
    colors = color_map(h, region)
    out = np.zeros(colors.shape, dtype=bool)
    for k in range(h.K):
        ix = h.block_index("x", k, xs)[None, :]
        iy = h.block_index("y", k, ys)[:, None]
        q = h.factors[k]
        in_fork = ((ix >= 1) | (iy == 0)) & (ix != 0) & (iy != q - 1)
        out |= (colors == k) & in_fork
    return out


def rf_config(h: GridHierarchy, region: Box | None = None) -> SiteConfig:
    """RF restricted to ``region`` (default: the top shade); 1 = in some fork."""
    region = h.top_shade() if region is None else region
    return SiteConfig((region.x0, region.y0), rf_mask(h, region).astype(np.uint8))


def forks_union(h: GridHierarchy, region: Box) -> set:
    """RF sites in ``region`` built window by window from :func:`fork`."""
    out = set()
    for k in range(h.K):
        for w in windows_of_level(h, k, region):
            out |= fork(w)
    return {s for s in out if region.contains(s)}


def borel_cantelli_partial_sums(factors) -> list[Fraction]:
    """Partial sums of 1/L_i."""
    sums, acc = [], Fraction(0)
    for L in factors:
        acc += Fraction(1, L)
        sums.append(acc)
    return sums


def period_identity_holds(params, factors) -> bool:
    base = params[0].period
    return all(p.period == prod(factors[:k]) * base for k, p in enumerate(params))
