"""Command-line front end.

Every subcommand writes its outputs plus ``manifest.json`` into ``--out``
(default: ``$PERCFORKS_OUTDIR`` or the working directory). ``replay`` re-runs a
manifest and checks that the primary outputs hash identically.

Exit status: 0 ok, 1 failed check, 2 usage or parameter error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

from percforks import __version__, gridforks, harness, lattice, ust
from percforks.errors import ParameterError
from percforks.percolate import ENUMERATION_BOUND, bond_count, estimate_crossing, exact_crossing
from percforks.seeding import fresh_seed

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_MAX_SITES = 25_000_000


class CheckFailed(Exception):
    pass


def _outdir(args) -> Path:
    return Path(args.out or os.environ.get("PERCFORKS_OUTDIR") or ".")


def _write(outdir: Path, name: str, text: str, outputs: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    path.write_text(text)
    outputs[name] = {"path": str(path), "sha256": hashlib.sha256(text.encode()).hexdigest()}


def _manifest(args, params: dict, outputs: dict, started: float, extra=None) -> dict:
    man = {"tool": "percforks", "version": __version__, "subcommand": args.command,
           "params": params, "seed": args.seed, "outputs": outputs,
           "inputs": {}, "duration_seconds": round(time.perf_counter() - started, 4)}
    if extra:
        man.update(extra)
    return man


def _finish(args, params, outputs, started, extra=None):
    man = _manifest(args, params, outputs, started, extra)
    outdir = _outdir(args)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return man


# --------------------------------------------------------------------------
# subcommands


def cmd_ust(args) -> int:
    if args.size < 2:
        raise ParameterError("--size must be >= 2")
    started = time.perf_counter()
    m = args.height or args.size
    pic = ust.sample_picture(args.size, m, seed=args.seed, perturb=args.perturb)
    outputs: dict = {}
    outdir = _outdir(args)
    _write(outdir, "picture.pbm", lattice.export_bitmap(pic), outputs)
    _write(outdir, "clusters.csv", lattice.clusters_csv(lattice.label_clusters(pic)), outputs)
    extra = {"dimensions": [pic.width, pic.height], "anchor": list(pic.anchor)}
    if args.perturb:
        raw = ust.sample_picture(args.size, m, seed=args.seed, perturb=False)
        flips = int((raw.values != pic.values).sum())
        extra["perturbation"] = {"flipped_sites": flips, "sites": pic.width * pic.height}
    _finish(args, {"size": args.size, "height": m, "perturb": args.perturb}, outputs, started, extra)
    print(f"wrote {pic.width}x{pic.height} picture to {outdir}")
    return EXIT_OK


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ParameterError(f"expected comma-separated integers, got {text!r}") from exc


def _windows_csv(h, region) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["level", "anchor_x", "anchor_y", "q", "w", "s", "gap", "fork_sites_in_region"])
    for k in range(h.K):
        for w in gridforks.windows_of_level(h, k, region):
            f = sum(1 for s in gridforks.fork(w) if region.contains(s))
            r = w.as_row()
            writer.writerow([r["level"], r["anchor_x"], r["anchor_y"], r["q"], r["w"], r["s"],
                             r["gap"], f])
    return buf.getvalue()


def cmd_forks(args) -> int:
    factors = _parse_ints(args.factors)
    levels = args.levels if args.levels is not None else len(factors)
    if levels < 1:
        raise ParameterError("--levels must be >= 1")
    params = gridforks.param_recursion(args.l0, args.d0, factors[:levels])
    side = params[-1].d
    if args.region:
        x0, y0, w, hgt = _parse_ints(args.region)
        region = lattice.Box(x0, y0, w, hgt)
    else:
        region = None
    sites = (region.width * region.height) if region else side * side
    if sites > args.max_sites:
        raise ParameterError(f"region of {sites} sites exceeds --max-sites={args.max_sites}")
    started = time.perf_counter()
    h = gridforks.sample_hierarchy(args.l0, args.d0, factors, K=levels, seed=args.seed)
    region = region or h.top_shade()
    rf = gridforks.rf_config(h, region)
    outputs: dict = {}
    outdir = _outdir(args)
    _write(outdir, "rf.pbm", lattice.export_bitmap(rf), outputs)
    _write(outdir, "windows.csv", _windows_csv(h, region), outputs)
    extra = {"hierarchy": h.manifest(), "region": list(region),
             "dimensions": [rf.width, rf.height],
             "open_fraction": float(rf.values.mean()),
             "admissible_start": gridforks.admissible_start(args.l0, args.d0)}
    run_params = {"l0": args.l0, "d0": args.d0, "factors": factors, "levels": levels,
                  "region": list(region) if args.region else None, "max_sites": args.max_sites}
    _finish(args, run_params, outputs, started, extra)
    print(f"wrote {rf.width}x{rf.height} RF window (open fraction {rf.values.mean():.4f}) to {outdir}")
    return EXIT_OK


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise ParameterError(f"--dims must look like WxH, got {text!r}") from exc


def cmd_crossing(args) -> int:
    width, height = _parse_dims(args.dims)
    started = time.perf_counter()
    if args.exact:
        swap = args.direction == "V"
        nb = bond_count(height, width) if swap else bond_count(width, height)
        if nb > ENUMERATION_BOUND:
            raise ParameterError(f"--exact supports at most {ENUMERATION_BOUND} bonds, got {nb}")
        value = exact_crossing(width, height, args.p, direction=args.direction)
        text = "width,height,direction,p,exact\n" + f"{width},{height},{args.direction},{args.p},{value:.12g}\n"
    else:
        est = estimate_crossing(width, height, args.p, args.trials, args.seed,
                                direction=args.direction, workers=args.workers)
        text = est.to_csv()
    sys.stdout.write(text)
    outputs: dict = {}
    _write(_outdir(args), "crossing.csv", text, outputs)
    _finish(args, {"dims": [width, height], "p": args.p, "trials": args.trials,
                   "exact": args.exact, "direction": args.direction}, outputs, started,
            {"workers": args.workers})
    return EXIT_OK


def cmd_verify(args) -> int:
    from percforks import acceptance

    if args.suite not in acceptance.SUITES:
        raise ParameterError(f"unknown suite {args.suite!r}; choose from {sorted(acceptance.SUITES)}")
    started = time.perf_counter()
    results = acceptance.run_suite(args.suite, echo=print, seed=args.seed)
    report = [{"criterion": r.number, "title": r.title, "passed": r.ok, "detail": r.detail,
               "seconds": round(r.seconds, 3), "budget": r.budget, "calibrated": r.calibrated}
              for r in results]
    outputs: dict = {}
    _write(_outdir(args), f"verify_{args.suite}.json", json.dumps(report, indent=2) + "\n", outputs)
    _finish(args, {"suite": args.suite}, outputs, started)
    if any(not r.ok for r in results if r.calibrated):
        print("note: calibrated checks are report-only")
    failed = [r for r in results if not r.ok and not r.calibrated]
    if failed:
        raise CheckFailed(f"{len(failed)} check(s) failed")
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise ParameterError(f"--params is not valid JSON: {exc}") from exc
    started = time.perf_counter()
    name = args.name
    if name == "coexistence":
        source = params.pop("source", "forks")
        eps = params.pop("eps", 0.0)
        rep = harness.coexistence_experiment(source, params, eps, args.trials, args.seed)
    elif name == "finite_energy_audit":
        source = params.pop("source", "forks")
        x = tuple(params.pop("x", (0, 0)))
        r = params.pop("r", 1)
        min_count = params.pop("min_count", 50)
        rep = harness.finite_energy_audit(source, params, x, r, args.trials, args.seed,
                                          min_count=min_count)
    elif name == "road_survival":
        rep = harness.road_survival_experiment(params["l0"], params["d0"], params["factors"],
                                               params["p"], args.trials, args.seed,
                                               params.get("c"), params.get("gamma"))
    elif name == "membership_calibration":
        rep = harness.membership_calibration(params["l0"], params["d0"], params["factors"],
                                             params.get("K"), args.trials, args.seed,
                                             tuple(params.get("site", (0, 0))))
    elif name == "fkg_spot_check":
        rep = harness.fkg_spot_check(params.get("p", 0.5), args.trials, args.seed)
    else:
        raise ParameterError(f"unknown experiment {name!r}")
    outputs: dict = {}
    outdir = _outdir(args)
    _write(outdir, f"{name}.json", rep.to_json() + "\n", outputs)
    _write(outdir, f"{name}_trials.csv", rep.outcomes_csv(), outputs)
    _finish(args, {"name": name, "params": json.loads(args.params or "{}"),
                   "trials": args.trials}, outputs, started)
    for key, v in rep.verdicts.items():
        print(f"{key}: {'pass' if v.passed else 'FAIL'} ({v.kind}) {v.detail}")
    if not rep.passed:
        raise CheckFailed("experiment checks failed")
    return EXIT_OK


def _argv_from_manifest(man: dict, out: str) -> list[str]:
    p = man["params"]
    cmd = man["subcommand"]
    seed = ["--seed", str(man["seed"])] if man.get("seed") is not None else []
    if cmd == "ust":
        argv = ["ust", "--size", str(p["size"]), "--height", str(p["height"])]
        argv += ["--perturb"] if p["perturb"] else []
    elif cmd == "forks":
        argv = ["forks", "--l0", str(p["l0"]), "--d0", str(p["d0"]),
                "--factors", ",".join(map(str, p["factors"])), "--levels", str(p["levels"]),
                "--max-sites", str(p["max_sites"])]
        if p.get("region"):
            argv += ["--region", ",".join(map(str, p["region"]))]
    elif cmd == "crossing":
        argv = ["crossing", "--dims", "x".join(map(str, p["dims"])), "--p", repr(p["p"]),
                "--trials", str(p["trials"]), "--direction", p["direction"]]
        argv += ["--exact"] if p["exact"] else []
    elif cmd == "experiment":
        argv = ["experiment", p["name"], "--params", json.dumps(p["params"]),
                "--trials", str(p["trials"])]
    else:
        raise ParameterError(f"cannot replay subcommand {cmd!r}")
    return argv + seed + ["--out", out]


def cmd_replay(args) -> int:
    try:
        man = json.loads(Path(args.manifest).read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{args.manifest} is not a manifest: {exc}") from exc
    out = str(_outdir(args))
    code = main(_argv_from_manifest(man, out))
    if code != EXIT_OK:
        return code
    fresh = json.loads((Path(out) / "manifest.json").read_text())
    mismatched = [name for name, meta in man["outputs"].items()
                  if fresh["outputs"].get(name, {}).get("sha256") != meta["sha256"]]
    if mismatched:
        raise CheckFailed(f"replay differs in {', '.join(mismatched)}")
    print(f"replay reproduced {len(man['outputs'])} output(s) byte-identically")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="percforks", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"percforks {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="master seed (a fresh one is drawn and recorded if omitted)")
        p.add_argument("--out", default=None, help="output directory (default $PERCFORKS_OUTDIR or .)")

    p = sub.add_parser("ust", help="sample a spanning-tree picture")
    p.add_argument("--size", type=int, required=True, help="box width n")
    p.add_argument("--height", type=int, default=None, help="box height m (default n)")
    p.add_argument("--perturb", action="store_true", help="apply the 2^-(b+1) flips")
    common(p)
    p.set_defaults(func=cmd_ust)

    p = sub.add_parser("forks", help="sample a Random Forks configuration")
    p.add_argument("--l0", type=int, required=True)
    p.add_argument("--d0", type=int, required=True)
    p.add_argument("--factors", required=True, help="comma-separated L_1,L_2,...")
    p.add_argument("--levels", type=int, default=None, help="top level K (default: all factors)")
    p.add_argument("--region", default=None, help="x0,y0,width,height (default: the top shade)")
    p.add_argument("--max-sites", type=int, default=DEFAULT_MAX_SITES)
    common(p)
    p.set_defaults(func=cmd_forks)

    p = sub.add_parser("crossing", help="estimate a rectangle crossing probability")
    p.add_argument("--dims", required=True, help="WxH")
    p.add_argument("--p", type=float, required=True, help="bond retention probability")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--direction", choices=("H", "V"), default="H")
    p.add_argument("--exact", action="store_true", help="exhaustive enumeration instead")
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_crossing)

    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("--suite", required=True)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="run a harness experiment")
    p.add_argument("name", choices=sorted(harness.EXPERIMENTS))
    p.add_argument("--params", default="{}", help="JSON object of experiment parameters")
    p.add_argument("--trials", type=int, default=10_000)
    common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    common(p, seed=False)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "seed", "absent") is None and args.command not in ("verify", "replay"):
        args.seed = fresh_seed()
    try:
        return args.func(args)
    except CheckFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
