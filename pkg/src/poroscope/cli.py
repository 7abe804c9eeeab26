"""poroscope command line: gen | porosity | dimension | bounds | lemmas | density | report.

Options come from defaults, then an optional JSON ``--config`` file, then
flags.  Data goes to ``--out`` or stdout; diagnostics go to stderr at the
level named by the PORO_LOG environment variable (error, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path


from . import __version__
from .dimension import (
    bound_directed,
    bound_full,
    box_counts,
    minkowski_dim,
    moran_dimension,
    salli_dimension,
)
from .errors import InputError, PoroscopeError, VerificationError
from .geometry import Subspace
from .lemmas import (
    containment_parameters,
    verify_escape_lemma,
    verify_hole_halfspace_lemma,
    verify_porous_cone_containment,
)
from .porosity import porosity_ladder, set_porosity
from .density import density_ladder, density_sweep
from .report import envelope, porosity_dimension_table, to_csv, to_json
from .sets import (
    cantor_power_raster,
    cantor_raster,
    full_raster,
    natural_measure,
    salli_cylinder,
    salli_raster,
    segment_raster,
)
from .setio import load_set, save_set

log = logging.getLogger("poroscope")

FAMILIES = ("cantor", "cantor_power", "salli", "salli_cylinder", "full", "segment")

# per-command option schema: name -> (type, default)
COMMON = {"seed": (int, 0), "threads": (int, 1), "out": (str, None), "format": (str, None)}
SET_OPTS = {
    "set": (str, None),
    "family": (str, None),
    "lam": (float, None),
    "power": (int, 2),
    "extra_dims": (int, 0),
    "n": (int, 2),
    "m": (int, None),
    "l": (int, None),
    "depth": (int, None),
}
SCHEMA = {
    "gen": {**SET_OPTS},
    "porosity": {
        **SET_OPTS,
        "k": (int, 1),
        "samples": (int, 32),
        "ladder": (list, None),
        "ladder_count": (int, 6),
        "frame_budget": (int, 64),
        "refine_steps": (int, 32),
        "axes": (list, None),
    },
    "dimension": {**SET_OPTS, "depths": (list, None), "ratios": (list, None)},
    "bounds": {"n": (int, 2), "m": (int, None), "rho": (list, None), "salli_l": (list, None)},
    "lemmas": {"trials": (int, 100_000), "sabotage": (bool, False), "calibration_trials": (int, 10_000)},
    "density": {
        **SET_OPTS,
        "s": (float, None),
        "alpha": (list, None),
        "eta": (list, None),
        "points": (int, 16),
        "ladder_count": (int, 6),
        "direction_budget": (int, 32),
        "plane_budget": (int, 64),
    },
    "report": {
        "lams": (list, None),
        "depth": (int, 11),
        "extra_dims": (int, 0),
        "k": (int, 2),
        "samples": (int, 16),
        "ladder_count": (int, 4),
    },
}


def _list_of(conv):
    def parse(text):
        return [conv(v) for v in str(text).split(",") if v.strip()]

    return parse


FLAG_TYPES = {
    "ladder": _list_of(float),
    "axes": _list_of(int),
    "depths": _list_of(int),
    "ratios": _list_of(float),
    "rho": _list_of(float),
    "salli_l": _list_of(int),
    "alpha": _list_of(float),
    "eta": _list_of(float),
    "lams": _list_of(float),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poroscope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"poroscope {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file of options (flags override it)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMA.items():
        p = sub.add_parser(name, parents=[common])
        for key, (typ, _) in schema.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, action="store_const", const=True, dest=key)
            elif typ is list:
                p.add_argument(flag, type=FLAG_TYPES[key], dest=key)
            else:
                p.add_argument(flag, type=typ, dest=key)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < config file < flags; unknown or mistyped file keys are rejected."""
    schema = {**COMMON, **SCHEMA[args.command]}
    cfg = {k: d for k, (_, d) in schema.items()}
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise InputError("config file must hold a JSON object")
        unknown = sorted(set(doc) - set(schema) - {"command"})
        if unknown:
            raise InputError(f"unknown config fields for {args.command}: {unknown}")
        for k, v in doc.items():
            if k == "command":
                continue
            typ = schema[k][0]
            if v is not None and not _type_ok(v, typ):
                raise InputError(f"config field {k!r} should be {typ.__name__}")
            cfg[k] = v
    for k in schema:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _type_ok(v, typ):
    if typ is float:
        return isinstance(v, (int, float)) and not isinstance(v, bool)
    if typ is int:
        return isinstance(v, int) and not isinstance(v, bool)
    return isinstance(v, typ)


# --- set construction ----------------------------------------------------------


def _need(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise InputError(f"missing required option(s): {', '.join(missing)}")


def make_set(cfg):
    if cfg.get("set"):
        return load_set(cfg["set"]), cfg["set"]
    _need(cfg, "family", "depth")
    fam, depth = cfg["family"], cfg["depth"]
    if fam == "cantor":
        _need(cfg, "lam")
        return cantor_raster(cfg["lam"], depth), f"cantor({cfg['lam']})"
    if fam == "cantor_power":
        _need(cfg, "lam")
        S = cantor_power_raster(cfg["lam"], cfg["power"], depth, cfg["extra_dims"])
        return S, f"cantor({cfg['lam']})^{cfg['power']}" + (f"xI^{cfg['extra_dims']}" if cfg["extra_dims"] else "")
    if fam == "salli":
        _need(cfg, "l")
        return salli_raster(cfg["n"], cfg["l"], depth), f"salli({cfg['n']},{cfg['l']})"
    if fam == "salli_cylinder":
        _need(cfg, "l", "m")
        return salli_cylinder(cfg["n"], cfg["m"], cfg["l"], depth), f"salli_cyl({cfg['n']},{cfg['m']},{cfg['l']})"
    if fam == "full":
        return full_raster(cfg["n"], depth), f"full({cfg['n']})"
    if fam == "segment":
        return segment_raster(depth, cfg["n"]), f"segment({cfg['n']})"
    raise InputError(f"unknown family {fam!r}; choose from {', '.join(FAMILIES)}")


# --- commands --------------------------------------------------------------------


def cmd_gen(cfg):
    S, label = make_set(cfg)
    if cfg["out"]:
        save_set(S, cfg["out"])
        log.info("wrote %s with %d cells", cfg["out"], len(S))
        return None
    from .setio import dumps_set

    return dumps_set(S)


def cmd_porosity(cfg):
    S, label = make_set(cfg)
    ladder = cfg["ladder"] or porosity_ladder(S.depth, cfg["ladder_count"])
    V = Subspace.axes(S.n, cfg["axes"]) if cfg["axes"] else None
    value, rep = set_porosity(
        S, cfg["k"], cfg["samples"], ladder, cfg["frame_budget"], cfg["refine_steps"], cfg["seed"], cfg["threads"], V=V
    )
    header = [f"x{i + 1}" for i in range(S.n)] + ["r", "k", "value", "slack", "seed"]
    rows = []
    for p in rep.profiles:
        for r, v, sl in zip(p.scales, p.values, p.slack):
            rows.append(list(p.x) + [r, p.k, v, sl, cfg["seed"]])
    result = {"label": label, "value": value, **rep.to_dict()}
    return header, rows, result


def cmd_dimension(cfg):
    if cfg["ratios"]:
        s = moran_dimension(cfg["ratios"])
        return ["ratios", "similarity_dim"], [[" ".join(map(str, cfg["ratios"])), s]], {"similarity_dim": s}
    S, label = make_set(cfg)
    depths = cfg["depths"]
    if depths and len(depths) == 2 and depths[1] - depths[0] > 1:
        depths = list(range(depths[0], depths[1] + 1))
    est = minkowski_dim(S, depths)
    series = box_counts(S, est.depths)
    rows = [[label, j, N, est.value, est.stderr, est.max_residual] for j, N in zip(series.depths, series.counts)]
    header = ["label", "depth", "count", "dim", "stderr", "max_residual"]
    result = {
        "label": label,
        "dim": est.value,
        "stderr": est.stderr,
        "depths": list(est.depths),
        "counts": list(series.counts),
        "max_residual": est.max_residual,
        "convention": est.convention,
    }
    return header, rows, result


def cmd_bounds(cfg):
    n, m = cfg["n"], cfg["m"]
    rhos = cfg["rho"] or [0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49]
    header = ["n", "m", "rho", "bound_full", "bound_directed"]
    rows = []
    for rho in rhos:
        bd = bound_directed(n, m, rho) if m else ""
        rows.append([n, m if m else "", rho, bound_full(n, rho), bd])
    result = {"bounds": [dict(zip(header, r)) for r in rows]}
    if cfg["salli_l"]:
        result["salli_dimension"] = {str(l): salli_dimension(n, l) for l in cfg["salli_l"]}
    return header, rows, result


LEMMA_SUITE = {
    "escape": [0.25, 0.5, 1.0],
    "hole_halfspace": [0.45, 0.49],
    "containment": [(2, 1), (2, 2), (3, 1), (3, 2), (3, 3)],
}
CONTAINMENT_RHO = 0.47


def run_lemma_suite(trials, seed, threads=1, sabotage=False, calibration_trials=10_000):
    """Default suite (hypotheses hold) or the sabotaged power checks."""
    reports = []
    for eta in LEMMA_SUITE["escape"]:
        if sabotage and eta == 1.0:
            continue  # H(y, theta, 1) is empty, so no sabotage can produce a counterexample
        reports.append(verify_escape_lemma(eta, trials, seed, distance_factor=0.5 if sabotage else 1.0, threads=threads))
    for rho in LEMMA_SUITE["hole_halfspace"]:
        reports.append(verify_hole_halfspace_lemma(rho, trials, seed, delta_factor=0.5 if sabotage else 1.0, threads=threads))
    for n, k in LEMMA_SUITE["containment"]:
        a, e = containment_parameters(n, k, seed, calibration_trials)
        if sabotage:
            a, e = min(2 * a, 1.0), min(2 * e, 1.0)
        rho = 0.495 if sabotage else CONTAINMENT_RHO
        reports.append(verify_porous_cone_containment(n, k, rho, a, e, trials, seed, threads=threads))
    return reports


def cmd_lemmas(cfg):
    reps = run_lemma_suite(cfg["trials"], cfg["seed"], cfg["threads"], cfg["sabotage"], cfg["calibration_trials"])
    header = ["lemma", "params", "trials", "failures", "worst_margin", "seed"]
    rows = [[r.lemma, json.dumps(r.params, sort_keys=True), r.trials, r.failures, r.worst_margin, r.seed] for r in reps]
    result = {"reports": [r.to_dict() for r in reps]}
    failed = [r for r in reps if r.failures]
    return header, rows, result, failed


def cmd_density(cfg):
    S, label = make_set(cfg)
    _need(cfg, "s")
    m = cfg["m"] if cfg["m"] is not None else 0
    alphas = cfg["alpha"] or [1.0]
    etas = cfg["eta"] or [0.5]
    grid = [(a, e) for a in alphas for e in etas]
    ladder = density_ladder(S.depth, cfg["ladder_count"])
    fam = [(label, natural_measure(S), cfg["s"], m)]
    header, rows = density_sweep(
        fam, grid, cfg["points"], ladder, cfg["seed"], cfg["direction_budget"], cfg["plane_budget"]
    )
    return header, rows, {"rows": [dict(zip(header, r)) for r in rows]}


def cmd_report(cfg):
    lams = cfg["lams"] or [0.4, 0.3, 0.2, 0.1]
    fam = []
    for lam in lams:
        S = cantor_power_raster(lam, 2, cfg["depth"], cfg["extra_dims"])
        tag = f"C{lam}^2" + (f"xI^{cfg['extra_dims']}" if cfg["extra_dims"] else "")
        fam.append((tag, S, cfg["k"]))
    header, rows = porosity_dimension_table(fam, cfg["samples"], cfg["ladder_count"], seed=cfg["seed"], threads=cfg["threads"])
    return header, rows, {"rows": rows}


COMMANDS = {
    "porosity": cmd_porosity,
    "dimension": cmd_dimension,
    "bounds": cmd_bounds,
    "density": cmd_density,
    "report": cmd_report,
}


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _default_format(out):
    return "json" if out and str(out).endswith(".json") else "csv"


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = os.environ.get("PORO_LOG", "error").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if cfg["threads"] < 1:
            raise InputError("--threads must be at least 1")
        log.info("command %s config %s", args.command, json.dumps(cfg, sort_keys=True))
        fmt = cfg["format"] or _default_format(cfg["out"])
        if args.command == "gen":
            text = cmd_gen(cfg)
            if text is not None:
                sys.stdout.write(text)
            return 0
        failed = []
        if args.command == "lemmas":
            header, rows, result, failed = cmd_lemmas(cfg)
        else:
            header, rows, result = COMMANDS[args.command](cfg)
        # thread count changes scheduling only, so it stays out of the echo
        echo = {k: v for k, v in cfg.items() if k != "threads"}
        if fmt == "json":
            _emit(to_json(envelope(args.command, echo, cfg["seed"], result)), cfg["out"])
        else:
            _emit(to_csv(header, rows), cfg["out"])
            if cfg["out"]:
                meta = envelope(args.command, echo, cfg["seed"], None)
                Path(str(cfg["out"]) + ".meta.json").write_text(to_json(meta))
        if failed:
            for r in failed:
                print(f"counterexamples for {r.lemma} {json.dumps(r.params, sort_keys=True)}: {r.failures}", file=sys.stderr)
                for ex in r.counterexamples:
                    print("  " + json.dumps(ex), file=sys.stderr)
            raise VerificationError(f"{len(failed)} lemma check(s) found counterexamples")
        return 0
    except PoroscopeError as exc:
        print(f"poroscope: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except MemoryError:
        print("poroscope: error: out of memory", file=sys.stderr)
        return 4


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
