"""Desk-scale experiments with reproducible, per-trial-seeded reports.

Every verdict in a report is tagged with its kind:

* ``exact``: a deterministic property that must hold in every trial;
* ``direction``: a qualitative consequence of the theory (monotonicity,
  positive correlation), tested with 3 sigma slack;
* ``calibrated``: compared against a recorded baseline, never a paper claim.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from percforks import gridforks, roads, ust
from percforks.errors import ParameterError
from percforks.lattice import Box, SiteConfig, label_clusters
from percforks.percolate import Z99, bond_thin, has_crossing, site_thin
from percforks.seeding import trial_seeds

EXACT = "exact"
DIRECTION = "direction"
CALIBRATED = "calibrated"


@dataclass
class Verdict:
    kind: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    name: str
    params: dict
    seed: int
    trials: int
    trial_seeds: list
    outcomes: list
    summary: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.outcomes) != self.trials or len(self.trial_seeds) != self.trials:
            raise ValueError("one outcome and one seed per trial are required")

    @property
    def passed(self) -> bool:
        """Exact and direction checks only; calibrated checks are report-only."""
        return all(v.passed for v in self.verdicts.values() if v.kind != CALIBRATED)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "params": self.params, "seed": self.seed,
            "trials": self.trials, "summary": self.summary,
            "thresholds": self.thresholds,
            "verdicts": {k: asdict(v) for k, v in self.verdicts.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    def outcomes_csv(self) -> str:
        buf = io.StringIO()
        if not self.outcomes:
            return ""
        keys = ["trial", "seed"] + list(self.outcomes[0])
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(keys)
        for i, (s, row) in enumerate(zip(self.trial_seeds, self.outcomes)):
            writer.writerow([i, s] + [_csv_cell(row[k]) for k in keys[2:]])
        return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    return v


def frequency(successes: int, trials: int) -> dict:
    f = successes / trials
    sigma = math.sqrt(f * (1 - f) / trials)
    return {"successes": int(successes), "trials": int(trials), "frequency": f,
            "sigma": sigma, "ci99": Z99 * sigma}


def laplace_sigma(successes: int, trials: int) -> float:
    """Binomial sigma with the rule-of-succession estimate, nonzero at 0 or n."""
    q = (successes + 1) / (trials + 2)
    return math.sqrt(q * (1 - q) / trials)


# --------------------------------------------------------------------------
# coexistence


def analysis_window(h: gridforks.GridHierarchy) -> Box:
    """Top shade minus the columns of the top window's leftmost frame.

    On the full shade the open phase is walled off from the left side by V_0
    and from the top side by the top frame, so it can never span; removing
    V_0 exposes the fork bottom to the left side.
    """
    shade = h.top_shade()
    w = h.params[h.K - 1].l
    return Box(shade.x0 + w, shade.y0, shade.width - w, shade.height)


def _spans(config: SiteConfig):
    lab = label_clusters(config)
    return lab.spans(1), lab.spans(0)


def _elt_closed(h, rf: SiteConfig) -> bool:
    """Every ELT road of every chain in the shade lies in the closed phase."""
    shade = rf.box
    for w in gridforks.windows_of_level(h, 0, shade):
        chain = gridforks.window_chain(h, w)
        for rect in roads.elt_plan(chain):
            for s in rect.sites():
                if rf[s] != 0:
                    return False
    return True


def _forks_trial(params, eps, seed):
    hseed, tseed = np.random.SeedSequence(seed).spawn(2)
    h = gridforks.sample_hierarchy(params["l0"], params["d0"], params["factors"], seed=hseed)
    rf = gridforks.rf_config(h)
    cfg = site_thin(rf, eps, tseed) if eps > 0 else rf
    win = analysis_window(h)
    open_sp, closed_sp = _spans(cfg.crop(*win))
    full_open, full_closed = _spans(cfg)
    row = {"open_spans": open_sp, "closed_spans": closed_sp, "both": open_sp and closed_sp,
           "full_open_spans": full_open, "full_closed_spans": full_closed}
    if eps == 0 and params.get("check_roads", True):
        row["elt_closed"] = _elt_closed(h, rf)
    return row


def _ust_trial(params, eps, seed):
    pseed, tseed = np.random.SeedSequence(seed).spawn(2)
    pic = ust.sample_picture(params["n"], seed=pseed, perturb=params.get("perturb", False))
    cfg = site_thin(pic, eps, tseed) if eps > 0 else pic
    open_sp, closed_sp = _spans(cfg)
    return {"open_spans": open_sp, "closed_spans": closed_sp, "both": open_sp and closed_sp}


def coexistence_experiment(source: str, params: dict, eps: float, trials: int, seed: int,
                           baseline: dict | None = None) -> ExperimentReport:
    """Frequency that an open and a closed cluster each span the analysis window."""
    if not 0 <= eps < 0.5:
        raise ParameterError(f"eps must lie in [0, 1/2), got {eps}")
    if source == "forks":
        trial = _forks_trial
        params = {"l0": params["l0"], "d0": params["d0"],
                  "factors": list(params["factors"]), **{k: v for k, v in params.items()
                                                        if k not in ("l0", "d0", "factors")}}
    elif source == "ust":
        trial = _ust_trial
    else:
        raise ParameterError(f"unknown source {source!r}; expected 'ust' or 'forks'")
    seeds = trial_seeds(seed, trials)
    outcomes = [trial(params, eps, s) for s in seeds]
    summary = {}
    for key in outcomes[0]:
        summary[key] = frequency(sum(bool(o[key]) for o in outcomes), trials)
    report = ExperimentReport("coexistence", {"source": source, "eps": eps, **params},
                              seed, trials, seeds, outcomes, summary)
    if eps == 0:
        if source == "forks":
            report.verdicts["both_phases_span"] = Verdict(
                EXACT, summary["both"]["successes"] == trials,
                "open and closed clusters span the analysis window in every trial")
            if "elt_closed" in summary:
                report.verdicts["elt_roads_closed"] = Verdict(
                    EXACT, summary["elt_closed"]["successes"] == trials,
                    "every ELT rectangle is closed site by site")
        else:
            report.verdicts["open_spans"] = Verdict(
                EXACT, summary["open_spans"]["successes"] == trials,
                "the tree cluster spans in every trial")
    if baseline is not None:
        _apply_baseline(report, baseline, "both")
    return report


def _apply_baseline(report: ExperimentReport, baseline: dict, key: str):
    f0 = baseline["frequency"]
    sigma = laplace_sigma(baseline["successes"], baseline["trials"])
    f = report.summary[key]["frequency"]
    report.thresholds["baseline"] = {"frequency": f0, "sigma": sigma, "band": 3 * sigma,
                                     "seed": baseline.get("seed"),
                                     "trials": baseline["trials"]}
    report.verdicts["baseline_band"] = Verdict(
        CALIBRATED, abs(f - f0) <= 3 * sigma,
        f"observed {f:.4f} vs recorded {f0:.4f} +/- {3 * sigma:.4f}")


def load_baseline(name: str = "coexistence_baseline.json") -> dict:
    text = resources.files("percforks").joinpath("data").joinpath(name).read_text()
    return json.loads(text)


# --------------------------------------------------------------------------
# finite-energy audit


def _neighbourhood(r):
    return [(dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1)
            if 0 < abs(dx) + abs(dy) <= r]


def _audit_source(source, params, x, r):
    """Callable seed -> SiteConfig covering the L1 ball of radius r around x."""
    box = Box(x[0] - r, x[1] - r, 2 * r + 1, 2 * r + 1)
    eps = params.get("eps", 0.0)

    def thin(cfg, s):
        return site_thin(cfg, eps, s) if eps > 0 else cfg

    if callable(source):
        return source
    if source == "forks":
        def draw(seed):
            hs, ts = np.random.SeedSequence(seed).spawn(2)
            h = gridforks.sample_hierarchy(params["l0"], params["d0"], params["factors"], seed=hs)
            return thin(gridforks.rf_config(h, box), ts)
        return draw
    if source == "ust":
        def draw(seed):
            ps, ts = np.random.SeedSequence(seed).spawn(2)
            pic = ust.sample_picture(params["n"], seed=ps, perturb=params.get("perturb", False))
            return thin(pic, ts)
        return draw
    if source == "bernoulli":
        def draw(seed):
            bs, ts = np.random.SeedSequence(seed).spawn(2)
            vals = np.random.default_rng(bs).random((box.height, box.width)) < params.get("density", 0.5)
            return thin(SiteConfig((box.x0, box.y0), vals.astype(np.uint8)), ts)
        return draw
    raise ParameterError(f"unknown audit source {source!r}")


def finite_energy_audit(source, params: dict, x, r: int, samples: int, seed: int,
                        min_count: int = 50) -> ExperimentReport:
    """Empirical P(X(x)=1 | radius-r neighbourhood pattern) over ``samples`` draws.

    ``source`` is ``"forks"``, ``"ust"``, ``"bernoulli"`` or a callable
    ``seed -> SiteConfig``; ``params["eps"]`` adds site thinning.
    """
    if r < 1:
        raise ParameterError("radius must be >= 1")
    x = (int(x[0]), int(x[1]))
    draw = _audit_source(source, params, x, r)
    offsets = _neighbourhood(r)
    seeds = trial_seeds(seed, samples)
    outcomes = []
    table: dict[str, list[int]] = {}
    for s in seeds:
        cfg = draw(s)
        pattern = "".join(str(cfg[(x[0] + dx, x[1] + dy)]) for dx, dy in offsets)
        centre = cfg[x]
        outcomes.append({"pattern": pattern, "value": centre})
        cell = table.setdefault(pattern, [0, 0])
        cell[0] += 1
        cell[1] += centre
    patterns = []
    for pattern, (count, ones) in sorted(table.items()):
        f = ones / count
        patterns.append({"pattern": pattern, "count": count, "frequency": f,
                         "sigma": math.sqrt(f * (1 - f) / count)})
    audited = [p for p in patterns if p["count"] >= min_count]
    summary = {"patterns_seen": len(patterns), "patterns_audited": len(audited),
               "patterns_insufficient": len(patterns) - len(audited),
               "patterns": patterns}
    if audited:
        summary["min_frequency"] = min(p["frequency"] for p in audited)
        summary["max_frequency"] = max(p["frequency"] for p in audited)
    name = source if isinstance(source, str) else getattr(source, "__name__", "custom")
    report = ExperimentReport("finite_energy_audit",
                              {"source": name, **params, "x": list(x), "r": r,
                               "min_count": min_count},
                              seed, samples, seeds, outcomes, summary)
    eps = params.get("eps", 0.0)
    if eps > 0 and audited:
        ok = True
        worst = ""
        for p in audited:
            band = 3 * math.sqrt(eps * (1 - eps) / p["count"])
            if not eps - band <= p["frequency"] <= 1 - eps + band:
                ok = False
                worst = f"pattern {p['pattern']}: {p['frequency']:.4f} (n={p['count']})"
        report.thresholds["band"] = [eps, 1 - eps, "3 sigma per pattern"]
        report.verdicts["uniform_finite_energy"] = Verdict(
            DIRECTION, ok, worst or "all audited patterns inside [eps-3s, 1-eps+3s]")
    return report


# --------------------------------------------------------------------------
# road survival


def _chain_for_survival(h):
    shade = h.top_shade()
    for w in gridforks.windows_of_level(h, 0, shade):
        chain = gridforks.window_chain(h, w)
        if len(chain) == h.K:
            return chain
    raise RuntimeError("no full-length window chain in the top shade")


def road_survival_experiment(l0: int, d0: int, factors, p: float, trials: int, seed: int,
                             c: float | None = None, gamma: float | None = None) -> ExperimentReport:
    """Frequency that every ERB crossing (k = 2..K) holds under bond thinning at ``p``."""
    if not 0.5 < p <= 1:
        raise ParameterError(f"p must lie in (1/2, 1], got {p}")
    factors = list(factors)
    if len(factors) < 2:
        raise ParameterError("need at least two levels for an ERB road")
    seeds = trial_seeds(seed, trials)
    outcomes = []
    for s in seeds:
        hs, bs = np.random.SeedSequence(s).spawn(2)
        h = gridforks.sample_hierarchy(l0, d0, factors, seed=hs)
        plan = roads.erb_plan(_chain_for_survival(h), h)
        x0 = min(r.anchor[0] for r in plan)
        y0 = min(r.anchor[1] for r in plan)
        x1 = max(r.anchor[0] + r.width for r in plan)
        y1 = max(r.anchor[1] + r.height for r in plan)
        bonds = bond_thin(x1 - x0, y1 - y0, p, bs, anchor=(x0, y0))
        hits = [has_crossing(bonds, r) for r in plan]
        row = {f"rect{i}_{r.kind}": hit for i, (r, hit) in enumerate(zip(plan, hits))}
        row["all"] = all(hits)
        outcomes.append(row)
    summary = {k: frequency(sum(bool(o[k]) for o in outcomes), trials) for k in outcomes[0]}
    marg = [v["frequency"] for k, v in summary.items() if k != "all"]
    product = float(np.prod(marg))
    summary["product_of_marginals"] = product
    params = {"l0": l0, "d0": d0, "factors": factors, "p": p}
    report = ExperimentReport("road_survival", params, seed, trials, seeds, outcomes, summary)
    joint = summary["all"]
    report.verdicts["fkg_direction"] = Verdict(
        DIRECTION, joint["frequency"] >= product - 3 * max(joint["sigma"], laplace_sigma(
            joint["successes"], trials)),
        f"joint {joint['frequency']:.4f} vs product {product:.4f}")
    if c is not None and gamma is not None:
        ls = [q.l for q in gridforks.param_recursion(l0, d0, factors)]
        i_max = len(factors) - 1
        if i_max >= 2:
            bound = roads.fkg_product_bound(c, gamma, factors, ls, i_max)
            summary["fkg_product_bound"] = bound.value
    return report


# --------------------------------------------------------------------------
# membership calibration


def membership_calibration(l0: int, d0: int, factors, K: int | None, samples: int, seed: int,
                           site=(0, 0)) -> ExperimentReport:
    """Frequency of ``site`` in each G_k versus the exact membership probability."""
    factors = list(factors)
    K = len(factors) if K is None else K
    params_seq = gridforks.param_recursion(l0, d0, factors[:K])
    seeds = trial_seeds(seed, samples)
    outcomes = []
    for s in seeds:
        h = gridforks.sample_hierarchy(l0, d0, factors, K=K, seed=s)
        row = {f"in_G{k}": h.member(k, site) for k in range(K + 1)}
        row["color"] = gridforks.color(site, h)
        outcomes.append(row)
    summary = {"levels": []}
    report = ExperimentReport("membership_calibration",
                              {"l0": l0, "d0": d0, "factors": factors, "K": K,
                               "site": list(site)},
                              seed, samples, seeds, outcomes, summary)
    for k, gp in enumerate(params_seq):
        expected = gridforks.membership_prob(gp.l, gp.d)
        hits = sum(o[f"in_G{k}"] for o in outcomes)
        sigma = math.sqrt(float(expected) * (1 - float(expected)) / samples)
        f = hits / samples
        colour_ge = sum(o["color"] >= k for o in outcomes) / samples
        summary["levels"].append({"level": k, "l": gp.l, "d": gp.d, "frequency": f,
                                  "expected": str(expected), "expected_float": float(expected),
                                  "sigma": sigma, "color_at_least": colour_ge})
        report.verdicts[f"level{k}_membership"] = Verdict(
            DIRECTION, abs(f - float(expected)) <= 3 * sigma,
            f"{f:.4f} vs {float(expected):.4f} +/- {3 * sigma:.4f}")
    summary["color_minus_one"] = sum(o["color"] == -1 for o in outcomes) / samples
    summary["borel_cantelli_partial_sums"] = [
        float(x) for x in gridforks.borel_cantelli_partial_sums(factors)]
    return report


# --------------------------------------------------------------------------
# positive correlation spot check


def fkg_spot_check(p: float, trials: int, seed: int, width: int = 6, height: int = 4,
                   overlap: int = 2) -> ExperimentReport:
    """Two horizontally crossed rectangles sharing ``overlap`` columns."""
    total = 2 * width - overlap
    a = roads.RectSpec((0, 0), width, height, roads.HORIZONTAL)
    b = roads.RectSpec((width - overlap, 0), width, height, roads.HORIZONTAL)
    seeds = trial_seeds(seed, trials)
    outcomes = []
    for s in seeds:
        bonds = bond_thin(total, height, p, s)
        ha, hb = has_crossing(bonds, a), has_crossing(bonds, b)
        outcomes.append({"A": ha, "B": hb, "both": ha and hb})
    summary = {k: frequency(sum(o[k] for o in outcomes), trials) for k in ("A", "B", "both")}
    product = summary["A"]["frequency"] * summary["B"]["frequency"]
    summary["product"] = product
    report = ExperimentReport("fkg_spot_check", {"p": p, "width": width, "height": height,
                                                 "overlap": overlap},
                              seed, trials, seeds, outcomes, summary)
    report.verdicts["positive_correlation"] = Verdict(
        DIRECTION, summary["both"]["frequency"] >= product - 3 * summary["both"]["sigma"],
        f"joint {summary['both']['frequency']:.4f} vs product {product:.4f}")
    return report


EXPERIMENTS = {
    "coexistence": coexistence_experiment,
    "finite_energy_audit": finite_energy_audit,
    "road_survival": road_survival_experiment,
    "membership_calibration": membership_calibration,
    "fkg_spot_check": fkg_spot_check,
}


def baseline_record(report: ExperimentReport, key: str = "both") -> dict:
    """What a calibration run stores for later regression checks."""
    s = report.summary[key]
    return {"experiment": report.name, "params": report.params, "seed": report.seed,
            "key": key, "trials": s["trials"], "successes": s["successes"],
            "frequency": s["frequency"], "ci99": s["ci99"],
            "laplace_sigma": laplace_sigma(s["successes"], s["trials"]),
            "summary": {k: v["frequency"] for k, v in report.summary.items()
                        if isinstance(v, dict) and "frequency" in v}}
