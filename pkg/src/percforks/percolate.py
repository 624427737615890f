"""i.i.d. thinning, rectangle crossings and their Monte Carlo estimates."""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from percforks import kernels
from percforks.errors import EnumerationBoundError, InsufficientResolutionError, ParameterError
from percforks.lattice import BondConfig, SiteConfig
from percforks.roads import HORIZONTAL, VERTICAL, RectSpec, RoadPlan
from percforks.seeding import seed_sequence

Z99 = 2.5758293035489004
ENUMERATION_BOUND = 24
CHUNK_BONDS = 1 << 20


def _check_prob(p, name="p"):
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {p}")


def bond_count(width: int, height: int) -> int:
    return (width - 1) * height + width * (height - 1)


def bond_thin(width: int, height: int, p: float, seed=None, anchor=(0, 0)) -> BondConfig:
    """Each bond of the window open independently with probability ``p``."""
    _check_prob(p)
    rng = np.random.default_rng(seed)
    hb = rng.random((height, width - 1)) < p
    vb = rng.random((height - 1, width)) < p
    return BondConfig(anchor, width, height, hb, vb)


def site_thin(config: SiteConfig, eps: float, seed=None) -> SiteConfig:
    """Flip each site independently with probability ``eps``."""
    if not 0.0 <= eps <= 0.5:
        raise ParameterError(f"eps must lie in [0, 1/2], got {eps}")
    rng = np.random.default_rng(seed)
    flips = rng.random(config.values.shape) < eps
    return SiteConfig(config.anchor, config.values ^ flips)


# --------------------------------------------------------------------------
# single configurations


def _sub_bonds(bonds: BondConfig, rect):
    x0 = rect.anchor[0] - bonds.anchor[0]
    y0 = rect.anchor[1] - bonds.anchor[1]
    if x0 < 0 or y0 < 0 or x0 + rect.width > bonds.width or y0 + rect.height > bonds.height:
        raise IndexError(f"rectangle {rect} leaves the bond window")
    hb = bonds.horizontal[y0:y0 + rect.height, x0:x0 + rect.width - 1]
    vb = bonds.vertical[y0:y0 + rect.height - 1, x0:x0 + rect.width]
    return hb[None], vb[None]


def has_horizontal_crossing(bonds: BondConfig, rect=None) -> bool:
    """Open path inside ``rect`` joining its left and right sides."""
    rect = rect or RectSpec(bonds.anchor, bonds.width, bonds.height, HORIZONTAL)
    return bool(kernels.horizontal_crossings(*_sub_bonds(bonds, rect))[0])


def has_vertical_crossing(bonds: BondConfig, rect=None) -> bool:
    """Open path inside ``rect`` joining its bottom and top sides."""
    rect = rect or RectSpec(bonds.anchor, bonds.width, bonds.height, VERTICAL)
    return bool(kernels.vertical_crossings(*_sub_bonds(bonds, rect))[0])


def has_crossing(bonds: BondConfig, rect: RectSpec) -> bool:
    """Crossing in the direction named by ``rect.kind``."""
    if rect.kind == VERTICAL:
        return has_vertical_crossing(bonds, rect)
    return has_horizontal_crossing(bonds, rect)


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class CrossingEstimate:
    width: int
    height: int
    p: float
    trials: int
    successes: int
    direction: str = HORIZONTAL

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def sigma(self) -> float:
        e = self.estimate
        return math.sqrt(e * (1 - e) / self.trials)

    @property
    def ci99(self) -> float:
        """Normal-approximation 99% half-width."""
        return Z99 * self.sigma

    CSV_HEADER = ("width", "height", "direction", "p", "trials", "successes", "estimate", "ci99")

    def csv_row(self) -> list:
        return [self.width, self.height, self.direction, self.p, self.trials,
                self.successes, f"{self.estimate:.6f}", f"{self.ci99:.6f}"]

    def to_csv(self, header=True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(self.CSV_HEADER)
        writer.writerow(self.csv_row())
        return buf.getvalue()


def chunk_layout(width, height, trials) -> list[int]:
    """Trials per chunk; fixed by geometry so results ignore the worker count."""
    per = max(1, CHUNK_BONDS // max(1, bond_count(width, height)))
    sizes = [per] * (trials // per)
    if trials % per:
        sizes.append(trials % per)
    return sizes


def _chunk_successes(width, height, p, size, seed, direction) -> int:
    rng = np.random.default_rng(seed)
    hb = rng.random((size, height, width - 1)) < p
    vb = rng.random((size, height - 1, width)) < p
    if direction == VERTICAL:
        return int(kernels.vertical_crossings(hb, vb).sum())
    return int(kernels.horizontal_crossings(hb, vb).sum())


def estimate_crossing(width: int, height: int, p: float, trials: int, seed=None,
                      direction: str = HORIZONTAL, workers: int = 1) -> CrossingEstimate:
    """Crossing frequency over ``trials`` independent bond configurations."""
    _check_prob(p)
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if width < 1 or height < 1:
        raise ParameterError("rectangle must be at least 1x1")
    sizes = chunk_layout(width, height, trials)
    seeds = seed_sequence(seed).spawn(len(sizes))
    jobs = [(width, height, p, n, s, direction) for n, s in zip(sizes, seeds)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            counts = list(pool.map(lambda a: _chunk_successes(*a), jobs))
    else:
        counts = [_chunk_successes(*a) for a in jobs]
    return CrossingEstimate(width, height, p, trials, sum(counts), direction)


# --------------------------------------------------------------------------
# exhaustive oracle: bit-parallel reachability over every bond configuration


@lru_cache(maxsize=64)
def crossing_counts(width: int, height: int) -> tuple[int, ...]:
    """Number of horizontally crossing configurations with j open bonds, j = 0..B."""
    nb = bond_count(width, height)
    if nb > ENUMERATION_BOUND:
        raise EnumerationBoundError(f"{width}x{height} has {nb} bonds; bound is {ENUMERATION_BOUND}")
    if width == 1:
        return tuple(math.comb(nb, j) for j in range(nb + 1))
    bonds = []  # (site a, site b), site index = y * width + x
    for y in range(height):
        for x in range(width - 1):
            bonds.append((y * width + x, y * width + x + 1))
    for y in range(height - 1):
        for x in range(width):
            bonds.append((y * width + x, (y + 1) * width + x))
    counts = np.zeros(nb + 1, dtype=np.int64)
    total = 1 << nb
    step = 1 << min(nb, 18)
    for lo in range(0, total, step):
        idx = np.arange(lo, lo + step, dtype=np.int64)
        state = [((idx >> b) & 1).astype(bool) for b in range(nb)]
        reach = [np.zeros(step, dtype=bool) for _ in range(width * height)]
        for y in range(height):
            reach[y * width] = np.ones(step, dtype=bool)
        changed = True
        while changed:
            changed = False
            for b, (u, v) in enumerate(bonds):
                gain_v = state[b] & reach[u] & ~reach[v]
                gain_u = state[b] & reach[v] & ~reach[u]
                if gain_v.any() or gain_u.any():
                    reach[v] = reach[v] | gain_v
                    reach[u] = reach[u] | gain_u
                    changed = True
        crossed = np.zeros(step, dtype=bool)
        for y in range(height):
            crossed |= reach[y * width + width - 1]
        opened = np.sum(state, axis=0)
        counts += np.bincount(opened[crossed], minlength=nb + 1)
    return tuple(int(c) for c in counts)


def exact_crossing(width: int, height: int, p: float, direction: str = HORIZONTAL) -> float:
    """P_p of a crossing, summed over all 2^B bond configurations."""
    _check_prob(p)
    if direction == VERTICAL:
        width, height = height, width
    if width == 1:
        return 1.0
    counts = crossing_counts(width, height)
    nb = len(counts) - 1
    return math.fsum(c * p ** j * (1 - p) ** (nb - j) for j, c in enumerate(counts))


# --------------------------------------------------------------------------
# the 1 - n^-gamma fit


@dataclass(frozen=True)
class GammaFit:
    gamma: float
    n_used: tuple
    failure: tuple
    residuals: tuple
    estimates: tuple = ()
    monotone: bool = True


def fit_gamma_from_estimates(n_list, failure_probs, estimates=()) -> GammaFit:
    """Least-squares gamma in log(failure) = -gamma log n, skipping zero failures.

    The model has no intercept: the bound is P(H) > 1 - n^-gamma itself.
    """
    pairs = [(n, f) for n, f in zip(n_list, failure_probs) if f > 0]
    if not pairs:
        raise InsufficientResolutionError("no rectangle size produced a crossing failure")
    logn = np.log([float(n) for n, _ in pairs])
    logf = np.log([float(f) for _, f in pairs])
    gamma = float(-(logn @ logf) / (logn @ logn))
    resid = logf + gamma * logn
    fs = [f for _, f in pairs]
    monotone = all(b < a for a, b in zip(fs, fs[1:]))
    if not monotone:
        warnings.warn("failure probabilities are not decreasing in n", RuntimeWarning,
                      stacklevel=2)
    return GammaFit(gamma, tuple(int(n) for n, _ in pairs), tuple(float(f) for f in fs),
                    tuple(float(r) for r in resid), tuple(estimates), monotone)


def fit_gamma(p: float, n_list, trials: int, seed=None, aspect: int = 3,
              workers: int = 1) -> GammaFit:
    """Fit P(no horizontal crossing of aspect*n x n) ~ C n^-gamma."""
    if not 0.5 < p < 1:
        raise ParameterError(f"p must lie in (1/2, 1), got {p}")
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise ParameterError("n_list must be ascending")
    seeds = seed_sequence(seed).spawn(len(n_list))
    ests = [estimate_crossing(aspect * n, n, p, trials, s, workers=workers)
            for n, s in zip(n_list, seeds)]
    return fit_gamma_from_estimates(n_list, [1 - e.estimate for e in ests], ests)


# --------------------------------------------------------------------------
# covering an Ln x n rectangle by 3n x n pieces and n x n squares


def covering_plan(L: int, n: int, anchor=(0, 0)) -> RoadPlan:
    """Alternating horizontal 3n x n pieces and vertical n x n squares.

    Consecutive horizontal pieces overlap in an n x n square (2n for the
    final, flush piece when L is even); the squares sit at the overlaps.
    """
    if L < 3 or n < 1:
        raise ParameterError(f"need L >= 3 and n >= 1, got L={L}, n={n}")
    x0, y0 = anchor
    starts = list(range(0, L * n - 3 * n + 1, 2 * n))
    if starts[-1] + 3 * n < L * n:
        starts.append(L * n - 3 * n)
    plan = RoadPlan()
    for j, s in enumerate(starts):
        if j:
            plan.rects.append(RectSpec((x0 + s, y0), n, n, VERTICAL, f"square {j}"))
        plan.rects.append(RectSpec((x0 + s, y0), 3 * n, n, HORIZONTAL, f"piece {j}"))
    return plan
