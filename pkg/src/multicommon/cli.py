"""Command-line front end.

    multicommon <analyze|counterexample|verify|min-coloring> --config PATH
                [--out DIR] [--seed U64] [--threads K]

Writes report.json (deterministic for a given config and seed), sweep.csv
where a command produces a table of grid points, and timing.json.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .bounds_lab import (
    CUBE_GROUPS,
    SuiteReport,
    c_fraction_census,
    case6_sweep,
    check_cube,
    check_gauss_bounds,
    check_muting_subconfig_bounds,
    check_phase_bounds,
    check_reparametrization,
    check_splitting,
    directional_sweep,
)
from .counterexamples import (
    DEFAULT_BETAS,
    DEFAULT_NS,
    assemble,
    load_recipe,
    proportional_counterexample,
    round_to_set,
    save_recipe,
    tune_parameters,
)
from .errors import ConfigError, InequalityViolation, MulticommonError, NoConstruction
from . import group_core
from .group_core import DensityTable, GroupSpec, is_prime, make_group, primes_between, set_enumeration_cap
from .linear_forms import FormSystem, detect_four_ap, detect_proportional_pair, induce_system
from .multiplicity import min_coloring, multiplicity_pair, threshold

SCHEMA_VERSION = 1
COMMANDS = ("analyze", "counterexample", "verify", "min-coloring")
SUITES = ("directional-sweep", "case6-sweep", "gauss", "phase-vanish", "muting-bounds", "cube", "splitting", "reparam", "census")
SWEEP_COLUMNS = ("p", "n", "alpha", "beta", "value", "threshold", "margin")

_prime_range = {
    "oneOf": [
        {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        {
            "type": "object",
            "properties": {"lo": {"type": "integer"}, "hi": {"type": "integer"}},
            "required": ["lo", "hi"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "group": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["vector"],
                    "properties": {
                        "vector": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["p", "n"],
                            "properties": {"p": {"type": "integer", "minimum": 2}, "n": {"type": "integer", "minimum": 1}},
                        }
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["cyclic"],
                    "properties": {
                        "cyclic": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["p"],
                            "properties": {"p": {"type": "integer", "minimum": 2}},
                        }
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["moduli"],
                    "properties": {"moduli": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1}},
                },
            ]
        },
        "matrix": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "minItems": 1, "items": {"type": "integer"}},
        },
        "function": {
            "oneOf": [
                {"type": "array", "items": {"type": "number"}},
                {"type": "string", "pattern": "^uniform:"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["recipe"],
                    "properties": {"recipe": {"type": "string"}},
                },
            ]
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "subset_cap": {"type": "integer", "minimum": 0},
                "mode": {"enum": ["vector", "cyclic"]},
                "n": {"oneOf": [{"type": "integer", "minimum": 1, "maximum": 100}, {"const": "auto"}]},
                "betas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}, "minItems": 1},
                "alpha_points": {"type": "integer", "minimum": 1},
                "primes": _prime_range,
                "round": {"type": "boolean"},
                "max_table": {"type": "integer", "minimum": 1},
                "suite": {"enum": list(SUITES)},
                "trials": {"type": "integer", "minimum": 0},
                "C": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
                "ns": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "groups": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1}},
                "exclude_trivial": {"type": "boolean"},
                "cap": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            },
        },
    },
}


# -- config helpers ----------------------------------------------------------------


def load_config(path) -> dict:
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    return config


def parse_group(spec: dict) -> GroupSpec:
    for kind in ("vector", "cyclic"):
        if kind in spec and not is_prime(spec[kind]["p"]):
            raise ConfigError(f"{kind} groups need a prime p, got {spec[kind]['p']}")
    if "vector" in spec:
        return make_group([spec["vector"]["p"]] * spec["vector"]["n"])
    if "cyclic" in spec:
        return make_group([spec["cyclic"]["p"]])
    return make_group(spec["moduli"])


def _require(config: dict, *keys: str) -> None:
    for key in keys:
        if key not in config:
            raise ConfigError(f"command {config.get('command')!r} needs '{key}' in the config")


def parse_function(spec, group: GroupSpec, base: Path) -> DensityTable:
    if isinstance(spec, str):
        try:
            value = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad uniform function {spec!r}") from exc
        return DensityTable.constant(group, value)
    if isinstance(spec, list):
        if len(spec) != group.order:
            raise ConfigError(f"inline table has {len(spec)} values, the group has {group.order} elements")
        return DensityTable(group, spec)
    recipe = load_recipe(base / spec["recipe"])
    if recipe.group != group:
        raise ConfigError(f"recipe lives on {recipe.group}, the config group is {group}")
    return assemble(recipe)


def prime_list(spec, default) -> list[int]:
    if spec is None:
        return list(default)
    if isinstance(spec, dict):
        return primes_between(spec["lo"], spec["hi"])
    return list(spec)


def as_fraction(x: float, max_den: int = 10**6) -> str | None:
    """Short rational form when x is one to 1e-12."""
    fr = Fraction(x).limit_denominator(max_den)
    return f"{fr.numerator}/{fr.denominator}" if abs(float(fr) - x) <= 1e-12 else None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


# -- commands -------------------------------------------------------------------------


def structure_summary(system: FormSystem) -> dict:
    g = system.group
    out = {"d": system.d, "r": system.r, "distinct": system.distinct, "group": str(g), "order": g.order}
    if g.is_vector:
        out["rank"] = system.rank
        out["injective"] = system.injective
        if system.d < 4:
            out["four_ap"] = "no 4-AP possible (d<4)"
        else:
            q = detect_four_ap(system)
            out["four_ap"] = None if q is None else [i + 1 for i in q]
        pair = detect_proportional_pair(system)
        out["proportional_pair"] = (
            None if pair is None else {"forms": [pair.i + 1, pair.j + 1], "c": pair.c, "negation": pair.has_negation}
        )
    else:
        out["injective"] = None
        out["four_ap"] = "no 4-AP possible (d<4)" if system.d < 4 else "not tested (group is not F_p^n)"
    return out


def verdict_line(value: float, thr: float) -> str:
    if abs(value - thr) <= 1e-12:
        return "at-threshold"
    return "below-threshold" if value < thr else "above-threshold"


def analyze_command(config: dict, ctx: dict) -> tuple[dict, list, int]:
    _require(config, "group", "matrix", "function")
    g = parse_group(config["group"])
    system = induce_system(config["matrix"], g)
    f = parse_function(config["function"], g, ctx["base"])
    t, tc = multiplicity_pair(system, f)
    pair = t + tc
    thr = threshold(system.d)
    inst = system.instances()
    repeated = np.zeros(len(inst), dtype=bool)
    for i in range(system.d):
        for j in range(i + 1, system.d):
            repeated |= inst[:, i] == inst[:, j]
    degenerate = int(repeated.sum())
    structure = structure_summary(system)
    results = {
        "structure": structure,
        "multiplicity_kind": "arithmetic multiplicity" if structure.get("injective") else "parameter-space multiplicity",
        "parameter_count": system.parameter_count,
        "degenerate_instance_count": degenerate,
        "t_f": t,
        "t_1_minus_f": tc,
        "pair": pair,
        "pair_fraction": as_fraction(pair),
        "threshold": thr,
        "verdict": verdict_line(pair, thr),
    }
    lines = [
        f"system: d={system.d} r={system.r} over {g}; distinct={structure['distinct']} injective={structure['injective']}",
        f"4-AP: {structure['four_ap']}",
        f"t(f) = {t:.12g}   t(1-f) = {tc:.12g}",
        f"t(f) + t(1-f) = {pair:.12g}" + (f" = {results['pair_fraction']}" if results["pair_fraction"] else ""),
        f"threshold 2^(1-d) = {thr:.12g}",
        f"degenerate instances: {degenerate} of {system.parameter_count} parameter tuples",
        f"verdict: {results['verdict']}",
    ]
    ctx["print"](lines)
    return results, [], 0


def counterexample_command(config: dict, ctx: dict) -> tuple[dict, list, int]:
    _require(config, "group", "matrix")
    opts = config.get("options", {})
    g = parse_group(config["group"])
    system = induce_system(config["matrix"], g)
    out: Path = ctx["out"]
    mode = opts.get("mode", "vector" if len(g.moduli) > 1 or "vector" in config["group"] else "cyclic")
    want_round = opts.get("round", True)
    if want_round and not system.distinct:
        raise NoConstruction("rounding needs pairwise distinct forms; this system repeats a form")
    if not g.is_vector:
        raise NoConstruction(f"constructions live on F_p^n or Z_p, got {g}")
    n_opt = opts.get("n", "auto")
    betas = opts.get("betas", list(DEFAULT_BETAS))
    kwargs = dict(betas=betas, alpha_points=opts.get("alpha_points", 24), subset_cap=opts.get("subset_cap"), mapper=ctx["map"])
    if mode == "vector":
        ns = DEFAULT_NS if n_opt == "auto" else [n_opt]
        res = tune_parameters(system, "vector", g.p, ns, **kwargs)
    else:
        primes = prime_list(opts.get("primes"), [g.p])
        res = tune_parameters(system, "cyclic", primes=primes, **kwargs)

    thr = threshold(system.d)
    results = {"structure": structure_summary(system), "tuning": res.summary()}
    if res.recipe is not None:
        save_recipe(res.recipe, out / "recipe.json")
        results["recipe_file"] = "recipe.json"
        target = res.recipe.group
        table = assemble(res.recipe) if target.order <= opts.get("max_table", 10**5) else None
    else:
        target = make_group([res.p] * res.n)
        table = proportional_counterexample(induce_system(system.matrix, target), res.alpha)
    if table is not None:
        (out / "table.json").write_text(json.dumps({"group": list(target.moduli), "values": table.values.tolist()}))
        results["table_file"] = "table.json"

    slack = math.comb(system.d, 2) / target.order
    if want_round:
        target_system = induce_system(system.matrix, target)
        if table is not None and target_system.parameter_count * system.d <= ctx["cap"]:
            rr = round_to_set(table, target_system)
            results["rounding"] = {
                "subset": list(rr.subset),
                "pair_set": rr.pair_set,
                "pair_function": rr.pair_function,
                "slack": rr.slack,
                "bound": rr.bound,
                "holds": rr.holds,
                "below_threshold": rr.pair_set < thr,
            }
        else:
            results["rounding"] = {
                "symbolic": f"some A in {target} has t(A)+t(A^C) <= {res.value!r} + {math.comb(system.d, 2)}/{target.p}^{len(target.moduli)}",
                "bound": res.value + slack,
            }
    uncommon = res.margin > 0 and res.uncommon
    verdict = f"uncommon at (p={res.p}, n={res.n})" if uncommon else "no margin found at searched grid"
    results["verdict"] = verdict
    ctx["print"](
        [
            f"construction: {res.construction}",
            f"best: p={res.p} n={res.n} alpha={res.alpha:.6g} beta={res.beta}",
            f"value = {res.value:.12g}, threshold = {thr:.12g}, margin = {res.margin:.6g}",
            f"verdict: {verdict}",
        ]
    )
    return results, res.rows, 0


def _phase_suite(opts: dict, ctx: dict) -> SuiteReport:
    rep = SuiteReport("phase-vanish")
    combos = []
    for p in prime_list(opts.get("primes"), (101, 499, 997)):
        for C in opts.get("C", [2, 3]):
            if 4 * C**4 >= p:
                rep.excluded.append({"p": p, "C": C, "reason": "hypothesis 4C^4 < p fails"})
            else:
                combos.append((p, C))
    trials, seed = opts.get("trials", 10_000), ctx["seed"]
    for sub in ctx["map"](lambda pc: check_phase_bounds(pc[0], pc[1], trials, seed=seed + 1000 * pc[0] + pc[1]), combos):
        rep.merge(sub)
    return rep


def verify_command(config: dict, ctx: dict) -> tuple[dict, list, int]:
    opts = config.get("options", {})
    suite = opts.get("suite")
    if suite is None:
        raise ConfigError("verify needs options.suite")
    seed, trials = ctx["seed"], opts.get("trials")
    sweep = []
    if suite == "directional-sweep":
        ps = prime_list(opts.get("primes"), primes_between(5, 500))
        rep = directional_sweep(min(ps), max(ps))
        sweep = rep.rows
    elif suite == "case6-sweep":
        ps = prime_list(opts.get("primes"), primes_between(201, 2003))
        rep = case6_sweep(min(ps), max(ps))
        sweep = rep.rows
    elif suite == "gauss":
        rep = check_gauss_bounds(
            prime_list(opts.get("primes"), (5, 7, 11, 13)), opts.get("ns", [1, 2]), opts.get("exclude_trivial", True)
        )
    elif suite == "phase-vanish":
        rep = _phase_suite(opts, ctx)
    elif suite == "muting-bounds":
        rep = SuiteReport("muting-bounds")
        for p in prime_list(opts.get("primes"), (5, 7)):
            for n in opts.get("ns", [4, 40]):
                for b in opts.get("betas", [1.0, 0.5, 0.25]):
                    rep.merge(check_muting_subconfig_bounds(p, n, b))
    elif suite == "cube":
        groups = [tuple(m) for m in opts.get("groups", [list(m) for m in CUBE_GROUPS])]
        per = ctx["map"](lambda gm: check_cube([gm], 1000 if trials is None else trials, seed=seed + sum(gm) * 31 + len(gm)), groups)
        rep = SuiteReport("cube")
        for sub in per:
            rep.merge(sub)
    elif suite == "splitting":
        rep = check_splitting(1000 if trials is None else trials, seed)
    elif suite == "reparam":
        rep = check_reparametrization(200 if trials is None else trials, seed)
    else:
        rep = c_fraction_census()
    results = rep.to_dict()
    if suite not in ("directional-sweep", "case6-sweep"):
        results["rows"] = rep.rows
    lines = [f"suite {suite}: {rep.trials} checks, {len(rep.violations)} violations"]
    lines += [f"  worst {k}: {v:.6g}" for k, v in sorted(rep.worst_ratio.items())]
    lines += [f"  excluded: {e}" for e in rep.excluded[:5]]
    ctx["print"](lines)
    return results, sweep, 0 if rep.ok else InequalityViolation.exit_code


def min_coloring_command(config: dict, ctx: dict) -> tuple[dict, list, int]:
    _require(config, "group", "matrix")
    g = parse_group(config["group"])
    system = induce_system(config["matrix"], g)
    res = min_coloring(system)
    results = {
        "structure": structure_summary(system),
        "subset": list(res.subset),
        "min_value": res.value,
        "min_value_float": float(res.value),
        "threshold": res.threshold,
        "common_at_this_size": res.common,
    }
    ctx["print"](
        [
            f"min t(A)+t(A^C) = {res.value} at A = {set(res.subset) or '{}'}",
            f"threshold = {res.threshold}; {'common' if res.common else 'not common'} at |G| = {g.order}",
        ]
    )
    return results, [], 0


HANDLERS = {
    "analyze": analyze_command,
    "counterexample": counterexample_command,
    "verify": verify_command,
    "min-coloring": min_coloring_command,
}


# -- entry point -----------------------------------------------------------------------


def write_sweep(path: Path, rows: list) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in SWEEP_COLUMNS})


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="multicommon", description="Arithmetic multiplicities and counterexamples for linear configurations.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON job configuration")
    ap.add_argument("--out", default=".", help="output directory (default: current directory)")
    ap.add_argument("--seed", type=int, default=None, help="64-bit seed for randomised suites (default 0)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for independent grid cells")
    ap.add_argument("--quiet", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    previous_cap = group_core.ENUMERATION_CAP
    try:
        config = load_config(args.config)
        if config.get("command", args.command) != args.command:
            raise ConfigError(f"config is for {config['command']!r}, invoked as {args.command!r}")
        config["command"] = args.command
        opts = config.get("options", {})
        seed = args.seed if args.seed is not None else opts.get("seed", 0)
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cap = opts.get("cap", previous_cap)
        set_enumeration_cap(cap)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        pool = ThreadPoolExecutor(args.threads) if args.threads > 1 else None

        def echo(lines):
            if not args.quiet:
                print("\n".join(lines))

        ctx = {
            "base": Path(args.config).resolve().parent,
            "out": out,
            "seed": seed,
            "cap": cap,
            "map": pool.map if pool else map,
            "print": echo,
        }
        try:
            results, sweep, code = HANDLERS[args.command](config, ctx)
        finally:
            if pool:
                pool.shutdown()
        report = {
            "schema_version": SCHEMA_VERSION,
            "command": args.command,
            "inputs": config,
            "results": results,
            "environment": {"version": __version__, "tolerance": 1e-9, "enumeration_cap": cap, "seed": seed},
        }
        (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
        if sweep:
            write_sweep(out / "sweep.csv", sweep)
        (out / "timing.json").write_text(json.dumps({"seconds": time.perf_counter() - started, "threads": args.threads}) + "\n")
        return code
    except MulticommonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:  # invalid values that passed the schema (non-prime p, alpha out of range, ...)
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    finally:
        set_enumeration_cap(previous_cap)


def main(argv=None) -> None:
    sys.exit(run(argv))
