"""Finite windows of Z^2: site and bond configurations, cluster labels, I/O.

A window is anchored at its lower-left site. ``values[y, x]`` holds the site
``(anchor[0] + x, anchor[1] + y)``, so row 0 is the bottom row. Connectivity is
nearest-neighbour (4-neighbour) for both phases.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from percforks import kernels


class BitmapParseError(ValueError):
    """Raised when a P1 bitmap cannot be decoded."""


class Box(NamedTuple):
    """Axis-aligned block of sites: x0..x0+width-1 by y0..y0+height-1."""

    x0: int
    y0: int
    width: int
    height: int

    @property
    def x1(self) -> int:
        return self.x0 + self.width - 1

    @property
    def y1(self) -> int:
        return self.y0 + self.height - 1

    def contains(self, site) -> bool:
        return self.x0 <= site[0] <= self.x1 and self.y0 <= site[1] <= self.y1

    def contains_box(self, other) -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def intersection(self, other):
        x0, y0 = max(self.x0, other.x0), max(self.y0, other.y0)
        x1, y1 = min(self.x1, other.x1), min(self.y1, other.y1)
        if x1 < x0 or y1 < y0:
            return None
        return Box(x0, y0, x1 - x0 + 1, y1 - y0 + 1)

    def shifted(self, dx, dy):
        return Box(self.x0 + dx, self.y0 + dy, self.width, self.height)

    def sites(self) -> set:
        return {(x, y) for x in range(self.x0, self.x1 + 1) for y in range(self.y0, self.y1 + 1)}


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SiteConfig:
    """0/1 values on a width x height window anchored at ``anchor``."""

    anchor: tuple[int, int]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise ValueError(f"values must be a non-empty 2D array, got shape {vals.shape}")
        if not np.isin(vals, (0, 1)).all():
            raise ValueError("site values must be 0 or 1")
        object.__setattr__(self, "anchor", (int(self.anchor[0]), int(self.anchor[1])))
        object.__setattr__(self, "values", _frozen(vals, np.uint8))

    @classmethod
    def from_array(cls, values, anchor=(0, 0)):
        return cls(anchor=tuple(anchor), values=np.asarray(values))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def contains(self, site) -> bool:
        x, y = site
        return (
            self.anchor[0] <= x < self.anchor[0] + self.width
            and self.anchor[1] <= y < self.anchor[1] + self.height
        )

    def local(self, site) -> tuple[int, int]:
        """Array index ``(row, col)`` of an absolute site."""
        if not self.contains(site):
            raise IndexError(f"site {tuple(site)} outside window at {self.anchor} "
                             f"of size {self.width}x{self.height}")
        return site[1] - self.anchor[1], site[0] - self.anchor[0]

    def __getitem__(self, site) -> int:
        return int(self.values[self.local(site)])

    def crop(self, x0, y0, width, height) -> SiteConfig:
        """Sub-window in absolute coordinates; must lie inside this window."""
        if not (self.contains((x0, y0)) and self.contains((x0 + width - 1, y0 + height - 1))):
            raise IndexError("crop window leaves the configuration")
        r, c = self.local((x0, y0))
        return SiteConfig((x0, y0), self.values[r:r + height, c:c + width])

    @property
    def box(self) -> Box:
        return Box(self.anchor[0], self.anchor[1], self.width, self.height)

    def flipped(self) -> SiteConfig:
        return SiteConfig(self.anchor, 1 - self.values)

    def __eq__(self, other):
        if not isinstance(other, SiteConfig):
            return NotImplemented
        return self.anchor == other.anchor and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"SiteConfig(anchor={self.anchor}, size={self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class BondConfig:
    """Open/closed nearest-neighbour bonds of a width x height window.

    ``horizontal[y, x]`` joins (x, y) and (x+1, y); ``vertical[y, x]`` joins
    (x, y) and (x, y+1), both in window-local coordinates.
    """

    anchor: tuple[int, int]
    width: int
    height: int
    horizontal: np.ndarray
    vertical: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("bond window must be at least 1x1")
        hb = np.asarray(self.horizontal, dtype=bool)
        vb = np.asarray(self.vertical, dtype=bool)
        if hb.shape != (self.height, self.width - 1):
            raise ValueError(f"horizontal bonds must have shape {(self.height, self.width - 1)}")
        if vb.shape != (self.height - 1, self.width):
            raise ValueError(f"vertical bonds must have shape {(self.height - 1, self.width)}")
        object.__setattr__(self, "anchor", (int(self.anchor[0]), int(self.anchor[1])))
        object.__setattr__(self, "horizontal", _frozen(hb, bool))
        object.__setattr__(self, "vertical", _frozen(vb, bool))

    @classmethod
    def filled(cls, width, height, is_open=True, anchor=(0, 0)):
        return cls(anchor, width, height,
                   np.full((height, width - 1), is_open, dtype=bool),
                   np.full((height - 1, width), is_open, dtype=bool))

    @property
    def bond_count(self) -> int:
        return self.horizontal.size + self.vertical.size

    @property
    def open_count(self) -> int:
        return int(self.horizontal.sum() + self.vertical.sum())

    def __eq__(self, other):
        if not isinstance(other, BondConfig):
            return NotImplemented
        return (self.anchor == other.anchor and self.width == other.width
                and self.height == other.height
                and np.array_equal(self.horizontal, other.horizontal)
                and np.array_equal(self.vertical, other.vertical))


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """Component id per site, with per-component size, phase and boundary flag.

    For bond labelings ``phase`` is all ones (every site is a vertex).
    """

    anchor: tuple[int, int]
    labels: np.ndarray
    sizes: np.ndarray
    phases: np.ndarray
    touches_boundary: np.ndarray

    @property
    def count(self) -> int:
        return len(self.sizes)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def label_of(self, site) -> int:
        x, y = site
        return int(self.labels[y - self.anchor[1], x - self.anchor[0]])

    def components(self) -> list[frozenset]:
        """Component site sets in absolute coordinates, indexed by id."""
        groups = [[] for _ in range(self.count)]
        ys, xs = np.indices(self.labels.shape)
        for lab, x, y in zip(self.labels.ravel(), xs.ravel(), ys.ravel()):
            groups[lab].append((int(x) + self.anchor[0], int(y) + self.anchor[1]))
        return [frozenset(g) for g in groups]

    def count_phase(self, phase) -> int:
        return int((self.phases == phase).sum())

    def spanning(self) -> np.ndarray:
        """Ids of components joining left to right or bottom to top."""
        lab = self.labels
        lr = np.intersect1d(lab[:, 0], lab[:, -1])
        bt = np.intersect1d(lab[0, :], lab[-1, :])
        return np.union1d(lr, bt)

    def spans(self, phase) -> bool:
        ids = self.spanning()
        return bool((self.phases[ids] == phase).any()) if len(ids) else False


def _summarise(labels, count, phase_of_site):
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count)
    phases = np.zeros(count, dtype=np.uint8)
    phases[flat] = phase_of_site.ravel()
    border = np.zeros(labels.shape, dtype=bool)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    touches = np.zeros(count, dtype=bool)
    touches[labels[border]] = True
    return sizes, phases, touches


def label_clusters(config: SiteConfig) -> ClusterLabeling:
    """Label the open and closed clusters of ``config``."""
    labels, count = kernels.label_sites(config.values)
    sizes, phases, touches = _summarise(labels, count, config.values)
    return ClusterLabeling(config.anchor, _frozen(labels, np.int64), _frozen(sizes, np.int64),
                           _frozen(phases, np.uint8), _frozen(touches, bool))


def label_bond_clusters(bonds: BondConfig) -> ClusterLabeling:
    """Connected components of the open-bond subgraph."""
    labels, count = kernels.label_bonds(bonds.horizontal, bonds.vertical,
                                        bonds.height, bonds.width)
    ones = np.ones(labels.shape, dtype=np.uint8)
    sizes, phases, touches = _summarise(labels, count, ones)
    return ClusterLabeling(bonds.anchor, _frozen(labels, np.int64), _frozen(sizes, np.int64),
                           _frozen(phases, np.uint8), _frozen(touches, bool))


def translate(config: SiteConfig, v) -> SiteConfig:
    return SiteConfig((config.anchor[0] + v[0], config.anchor[1] + v[1]), config.values)


# --------------------------------------------------------------------------
# plain PBM ("P1"): 1 = open; rows written top to bottom. The anchor rides in a
# comment line so that import(export(c)) == c.


def export_bitmap(config: SiteConfig) -> str:
    lines = ["P1", f"# anchor {config.anchor[0]} {config.anchor[1]}",
             f"{config.width} {config.height}"]
    for row in config.values[::-1]:
        lines.append(" ".join("1" if v else "0" for v in row))
    return "\n".join(lines) + "\n"


def import_bitmap(text: str) -> SiteConfig:
    anchor = (0, 0)
    tokens = []
    for raw in text.splitlines():
        line, _, comment = raw.partition("#")
        parts = comment.split()
        if len(parts) == 3 and parts[0] == "anchor":
            try:
                anchor = (int(parts[1]), int(parts[2]))
            except ValueError as exc:
                raise BitmapParseError(f"bad anchor comment: {raw!r}") from exc
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P1":
        raise BitmapParseError("missing P1 magic number")
    try:
        width, height = int(tokens[1]), int(tokens[2])
    except (IndexError, ValueError) as exc:
        raise BitmapParseError("missing or malformed dimensions") from exc
    if width < 1 or height < 1:
        raise BitmapParseError(f"invalid dimensions {width}x{height}")
    # plain PBM allows bits without separating whitespace
    bits = "".join(tokens[3:])
    if set(bits) - {"0", "1"}:
        raise BitmapParseError("bitmap body may only contain 0 and 1")
    if len(bits) != width * height:
        raise BitmapParseError(f"expected {width * height} bits, found {len(bits)}")
    grid = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    return SiteConfig(anchor, grid.reshape(height, width)[::-1])


def clusters_csv(labeling: ClusterLabeling) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["component_id", "phase", "size", "touches_boundary"])
    for cid in range(labeling.count):
        writer.writerow([cid, "open" if labeling.phases[cid] else "closed",
                         int(labeling.sizes[cid]), int(labeling.touches_boundary[cid])])
    return buf.getvalue()
