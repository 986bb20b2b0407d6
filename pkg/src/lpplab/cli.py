"""Command line entry point: run experiments from a config, oracle selftest, TW table check.

Config files are INI: a [run] section with master_seed and workers, and
one section per experiment named by its kind, optionally "kind:label".
Each experiment section needs n_list and trials; all other keys are the
kind's parameters.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import CapacityError, ConfigError, ContractError
from .experiments import COLUMNS, KINDS, ExperimentConfig, run_experiment
from .stats import TW_MEAN, TW_VARIANCE, TWReference

log = logging.getLogger("lpplab")

RUN_KEYS = {"master_seed", "workers"}
EXIT_CONFIG = 2
EXIT_CAPACITY = 3


def parse_config(text: str, seed_override=None, workers=None):
    """Return (master_seed, workers, [ExperimentConfig]) from INI text."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if not cp.has_section("run"):
        raise ConfigError("config needs a [run] section with master_seed")
    run = cp["run"]
    for key in run:
        if key not in RUN_KEYS:
            raise ConfigError(f"unknown key {key!r} in [run] (allowed: {sorted(RUN_KEYS)})")
    try:
        seed = int(run["master_seed"]) if seed_override is None else int(seed_override)
        nworkers = int(run.get("workers", "1")) if workers is None else int(workers)
    except KeyError:
        raise ConfigError("[run] needs master_seed") from None
    except ValueError as exc:
        raise ConfigError(f"bad value in [run]: {exc}") from None

    configs = []
    for name in cp.sections():
        if name == "run":
            continue
        kind, _, label = name.partition(":")
        kind = kind.strip()
        if kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r} in section [{name}] "
                              f"(known: {', '.join(KINDS)})")
        sec = dict(cp[name])
        for key in ("n_list", "trials"):
            if key not in sec:
                raise ConfigError(f"section [{name}] needs {key!r}")
        try:
            n_list = [int(v) for v in sec.pop("n_list").replace(",", " ").split()]
            trials = int(sec.pop("trials"))
        except ValueError as exc:
            raise ConfigError(f"bad n_list or trials in [{name}]: {exc}") from None
        configs.append(ExperimentConfig(kind, n_list, trials, seed, sec,
                                        label=label.strip() or kind, workers=nworkers))
    if not configs:
        raise ConfigError("config defines no experiments")
    labels = [c.label for c in configs]
    dup = sorted({x for x in labels if labels.count(x) > 1})
    if dup:
        raise ConfigError(f"duplicate experiment labels {dup}; use [kind:label] sections")
    return seed, nworkers, configs


def _clean(v):
    """JSON-safe copy: tuples to lists, numpy scalars to Python, non-finite to null."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, result, header_lines):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\r\n")
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        w.writerow([f"{name} [{unit}]" if unit else name for name, unit in COLUMNS])
        for row in result.rows:
            w.writerow([_fmt(row[name]) for name, _ in COLUMNS])


def _safe_name(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def cmd_run(args) -> int:
    from .plotting import save_figures

    with open(args.config, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    seed, workers, configs = parse_config(raw.decode("utf-8"), args.seed_override, args.workers)
    os.makedirs(args.out, exist_ok=True)
    ident = f"master_seed={seed} config_sha256={digest}"
    summary = {"lpplab_version": __version__, "config_file": os.path.basename(args.config),
               "config_sha256": digest, "master_seed": seed,
               "seed_override": args.seed_override is not None,
               "csv_columns": [f"{n} [{u}]" if u else n for n, u in COLUMNS],
               "experiments": {}}
    timing = {}
    for cfg in configs:
        log.info("running %s (%s) n=%s trials=%d", cfg.label, cfg.kind, cfg.n_list, cfg.trials)
        t0 = time.perf_counter()
        result = run_experiment(cfg, keep_samples=False)
        stem = os.path.join(args.out, _safe_name(cfg.label))
        write_csv(stem + ".csv", result,
                  [f"lpplab {__version__}", ident, f"experiment={cfg.label} kind={cfg.kind}"])
        plots = save_figures(result, stem, f"lpplab {cfg.label} {ident}")
        entry = result.summary()
        entry["csv"] = os.path.basename(stem + ".csv")
        entry["plots"] = [os.path.basename(p) for p in plots]
        summary["experiments"][cfg.label] = entry
        timing[cfg.label] = round(time.perf_counter() - t0, 3)
        log.info("  done in %.1f s", timing[cfg.label])
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(_clean(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    # wall-clock times vary between runs, so they live outside summary.json
    with open(os.path.join(args.out, "timing.json"), "w", encoding="utf-8") as fh:
        json.dump({"master_seed": seed, "config_sha256": digest, "workers": workers,
                   "seconds": timing}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(configs)} experiments to {args.out}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import oracle_selftest

    rep = oracle_selftest(args.max_size, args.cases, args.seed, args.inject_bug, log=print)
    for line in rep.lines():
        print(line)
    if not rep.ok:
        kind, seed = rep.failing_seeds[0]
        print(f"FAIL: first failing {kind} case has seed {seed}")
        return 1
    print("PASS")
    return 0


def cmd_tw_check(args) -> int:
    ref = TWReference.load(args.table)
    mean, var = ref.moments()
    checks = [
        ("covers [-5, 3]", ref.z[0] <= -5 and ref.z[-1] >= 3),
        ("step <= 0.02", float(np.max(np.diff(ref.z))) <= 0.02 + 1e-12),
        ("F(-5) < 0.001", float(ref(-5.0)) < 1e-3),
        ("F(3) > 0.999", float(ref(3.0)) > 0.999),
        ("strictly increasing on [-5, 3]",
         bool(np.all(np.diff(ref.cdf[(ref.z >= -5) & (ref.z <= 3)]) > 0))),
        (f"mean {mean:.5f} vs {TW_MEAN:.5f}", abs(mean - TW_MEAN) < 1e-3),
        (f"variance {var:.5f} vs {TW_VARIANCE:.5f}", abs(var - TW_VARIANCE) < 1e-3),
    ]
    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok &= bool(passed)
    if args.n:
        cfg = ExperimentConfig("tw", [args.n], args.trials, args.seed, {"h": str(args.h)})
        est = run_experiment(cfg).estimates[f"n={args.n}"]
        print(f"n={args.n} h={args.h} trials={args.trials}: KS={est['ks']:.4f} "
              f"mean Z={est['mean_Z'][0]:.4f} var Z={est['var_Z']:.4f} "
              f"unscaled sd ratio={est['sd_ratio_unscaled_to_TW']:.4f}")
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="lpplab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lpplab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the experiments of a config file")
    r.add_argument("--config", required=True, help="INI experiment config")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed-override", type=int, default=None, help="replace [run] master_seed")
    r.add_argument("--workers", type=int, default=None, help="replace [run] workers")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("selftest", help="DP and disjoint-count oracle suites")
    s.add_argument("--max-size", type=int, default=7, help="largest grid side (<= 7)")
    s.add_argument("--cases", type=int, default=200, help="random cases per suite")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--inject-bug", action="store_true",
                   help="mutation fixture: count the last vertex; must fail")
    s.set_defaults(func=cmd_selftest)

    t = sub.add_parser("tw-check", help="check the Tracy-Widom table, optionally against data")
    t.add_argument("--table", default=None, help="alternative table file")
    t.add_argument("--n", type=int, default=0, help="also simulate at this n")
    t.add_argument("--h", type=float, default=1.0)
    t.add_argument("--trials", type=int, default=200)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_tw_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
