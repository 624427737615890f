"""Uniform spanning tree picture with random shift and cut-size perturbation.

Box vertices are ``(x, y)`` with ``0 <= x < n`` and ``0 <= y < m``. Tree edges
are stored as ``horizontal[y, x]`` for (x, y)-(x+1, y) and ``vertical[y, x]``
for (x, y)-(x, y+1). Inner dual vertices sit at ``(x + 1/2, y + 1/2)`` for
``0 <= x < n-1``, ``0 <= y < m-1``; the outer face is one extra dual vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from percforks import kernels
from percforks.lattice import SiteConfig
from percforks.seeding import seed_sequence

SHIFTS = ((0, 0), (0, 1), (1, 0), (1, 1))
B_CAP = 60


@dataclass(frozen=True, eq=False)
class TreeEdges:
    n: int
    m: int
    horizontal: np.ndarray
    vertical: np.ndarray

    def __post_init__(self):
        hb = np.array(self.horizontal, dtype=bool)
        vb = np.array(self.vertical, dtype=bool)
        if hb.shape != (self.m, self.n - 1) or vb.shape != (self.m - 1, self.n):
            raise ValueError("edge arrays do not match the box dimensions")
        hb.flags.writeable = False
        vb.flags.writeable = False
        object.__setattr__(self, "horizontal", hb)
        object.__setattr__(self, "vertical", vb)

    @property
    def edge_count(self) -> int:
        return int(self.horizontal.sum() + self.vertical.sum())

    def edges(self) -> frozenset:
        """Edges as frozensets of their two endpoint vertices."""
        out = set()
        for y, x in zip(*np.nonzero(self.horizontal)):
            out.add(frozenset({(int(x), int(y)), (int(x) + 1, int(y))}))
        for y, x in zip(*np.nonzero(self.vertical)):
            out.add(frozenset({(int(x), int(y)), (int(x), int(y) + 1)}))
        return frozenset(out)

    def is_spanning_tree(self) -> bool:
        if self.edge_count != self.n * self.m - 1:
            return False
        labels, count = kernels.label_bonds(self.horizontal, self.vertical, self.m, self.n)
        return count == 1

    def __eq__(self, other):
        if not isinstance(other, TreeEdges):
            return NotImplemented
        return (self.n, self.m) == (other.n, other.m) and np.array_equal(
            self.horizontal, other.horizontal) and np.array_equal(self.vertical, other.vertical)


@dataclass(frozen=True, eq=False)
class DualTreeEdges:
    """Dual edges indexed by the primal edge they cross.

    ``across_horizontal[y, x]`` is the dual edge crossing primal edge
    (x, y)-(x+1, y); it joins faces (x, y-1) and (x, y), either of which may
    be the outer face. Likewise ``across_vertical[y, x]`` joins faces
    (x-1, y) and (x, y).
    """

    n: int
    m: int
    across_horizontal: np.ndarray
    across_vertical: np.ndarray

    OUTER = "outer"

    def _face(self, fx, fy):
        if 0 <= fx < self.n - 1 and 0 <= fy < self.m - 1:
            return (int(fx), int(fy))
        return self.OUTER

    def edges(self) -> list[tuple]:
        out = []
        for y, x in zip(*np.nonzero(self.across_horizontal)):
            out.append((self._face(x, y - 1), self._face(x, y)))
        for y, x in zip(*np.nonzero(self.across_vertical)):
            out.append((self._face(x - 1, y), self._face(x, y)))
        return out

    def inner_edges(self) -> list[tuple]:
        return [e for e in self.edges() if self.OUTER not in e]

    @property
    def inner_vertex_count(self) -> int:
        return max(self.n - 1, 0) * max(self.m - 1, 0)

    def is_spanning_tree(self) -> bool:
        """True iff present dual edges form a spanning tree of inner faces + outer."""
        edges = self.edges()
        nodes = self.inner_vertex_count + 1
        if len(edges) != nodes - 1:
            return False
        parent = {}

        def find(a):
            parent.setdefault(a, a)
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in edges:
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
        return True


def wilson_ust(n: int, m: int, seed=None) -> TreeEdges:
    """Uniform spanning tree of the n x m box via loop-erased random walks."""
    if n < 1 or m < 1:
        raise ValueError("box dimensions must be positive")
    rng = np.random.default_rng(seed)
    nxt = kernels.wilson_parents(n, m, rng)
    hb = np.zeros((m, n - 1), dtype=bool)
    vb = np.zeros((m - 1, n), dtype=bool)
    for u in range(1, n * m):
        v = int(nxt[u])
        a, b = min(u, v), max(u, v)
        if b == a + n:
            vb[a // n, a % n] = True
        else:
            hb[a // n, a % n] = True
    return TreeEdges(n, m, hb, vb)


def dual_tree(tree: TreeEdges) -> DualTreeEdges:
    return DualTreeEdges(tree.n, tree.m, ~tree.horizontal, ~tree.vertical)


def scale2_picture(tree: TreeEdges) -> SiteConfig:
    """Factor-2 picture: tree sites open, dual sites closed, edges by presence."""
    n, m = tree.n, tree.m
    vals = np.zeros((2 * m - 1, 2 * n - 1), dtype=np.uint8)
    vals[0::2, 0::2] = 1
    # x odd, y even: horizontal primal edge ((x-1)/2, y/2)-((x+1)/2, y/2)
    vals[0::2, 1::2] = tree.horizontal
    # x even, y odd: vertical primal edge (x/2, (y-1)/2)-(x/2, (y+1)/2)
    vals[1::2, 0::2] = tree.vertical
    return SiteConfig((0, 0), vals)


def random_shift(config: SiteConfig, seed=None) -> SiteConfig:
    rng = np.random.default_rng(seed)
    dx, dy = SHIFTS[int(rng.integers(4))]
    return SiteConfig((config.anchor[0] + dx, config.anchor[1] + dy), config.values)


def cut_sizes(config: SiteConfig) -> np.ndarray:
    """b(x) for every site, laid out like ``config.values``."""
    return kernels.cut_sizes(config.values)


def compute_b(config: SiteConfig, x) -> int:
    """Same-phase sites cut off from the window boundary by removing ``x``."""
    row, col = config.local(x)
    return int(cut_sizes(config)[row, col])


def flip_probabilities(config: SiteConfig) -> np.ndarray:
    b = cut_sizes(config)
    probs = np.ldexp(1.0, -(np.minimum(b, B_CAP) + 1))
    probs[b > B_CAP] = 0.0
    return probs


def perturb_finite_energy(config: SiteConfig, seed=None) -> SiteConfig:
    """Flip each site independently with probability 2**-(b(x)+1)."""
    rng = np.random.default_rng(seed)
    probs = flip_probabilities(config)
    flips = rng.random(probs.shape) < probs
    return SiteConfig(config.anchor, np.where(flips, 1 - config.values, config.values))


def sample_picture(n: int, m: int | None = None, seed=None, perturb=False) -> SiteConfig:
    """Tree, picture, random shift and optional perturbation from one seed."""
    m = n if m is None else m
    ss = seed_sequence(seed)
    tree_seed, shift_seed, flip_seed = ss.spawn(3)
    pic = random_shift(scale2_picture(wilson_ust(n, m, tree_seed)), shift_seed)
    if perturb:
        pic = perturb_finite_energy(pic, flip_seed)
    return pic
