"""Monte Carlo estimators over independent seeded trials.

Every experiment kind has a trial function (seed, n, params) -> dict of
numbers and a summarizer that turns per-scale samples into table rows,
estimates and fits. Trial seeds come from (master seed, experiment label,
n, trial index) alone, so results do not depend on the worker count.
"""

from __future__ import annotations

import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__
from .bundle import GeodesicBundle
from .core import (GridEncoding, constrained_best, grid_for_segments,
                   implicit_geodesic, implicit_passage_time)
from .errors import CapacityError, ConfigError, ContractError, DegenerateFitError
from .geometry import (coalescence_classes, default_band, global_tf, local_tf,
                       max_disjoint_count, middle_vertex_count, rightmost_at_height)
from .lattice import (AntidiagSegment, AxisSegment, Box, antidiag_segment,
                      derive_seed, max_cells, sample_field, segment_box)
from .stats import (TWReference, exceedance, fit_loglog, fit_semilog, ks_distance,
                    mean_se, proportion_se, shape_function, tw_scale)

KINDS = ("disjoint", "coalescence", "midpoint", "origin_hit", "tw",
         "segment_fluct", "tf", "thin_cylinder")


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(",", " ").split()]


# name -> (parser, default) for every kind
PARAM_SPECS = {
    "disjoint": {"width_factor": (float, 1.0), "ell_max": (int, 8)},
    "coalescence": {"geometry": (str, "antidiagonal"), "slope": (float, 1.0),
                    "width_factor": (float, 1.0), "ell_max": (int, 8)},
    "midpoint": {"rel_tol": (float, 1e-10)},
    "origin_hit": {"h": (float, 0.5), "window_low": (float, 0.5),
                   "window_high": (float, 2.0), "max_n": (int, 256)},
    "tw": {"h": (float, 1.0), "t_max": (float, 4.0), "t_step": (float, 0.25)},
    "segment_fluct": {"mode": (str, "flat"), "slope": (float, 1.0), "eps": (float, 0.05),
                      "width_factor": (float, 1.0), "centering": (str, "analytic"),
                      "pilot_trials": (int, 50), "t_max": (float, 4.0),
                      "t_step": (float, 0.5)},
    "tf": {"mode": (str, "global"), "slope": (float, 1.0), "eps_list": (_floats, [0.01, 0.04]),
           "height": (int, 1000), "s_grid": (_floats, [0.1 * i for i in range(1, 21)]),
           "x_grid": (_floats, [0.25, 0.5, 1.0, 2.0, 4.0]),
           "m_grid": (_ints, [0, 5, 10, 20, 40, 80])},
    "thin_cylinder": {"h_list": (_floats, [4.0, 16.0]), "ell": (int, 256), "c0": (float, 1.0),
                      "c1_grid": (_floats, [0.0, 1.0, 2.0, 4.0]), "slope": (float, 1.0),
                      "random_encodings": (int, 1)},
}

ENUMS = {
    ("coalescence", "geometry"): ("antidiagonal", "vertical", "mixed"),
    ("segment_fluct", "mode"): ("flat", "tilted", "steep"),
    ("segment_fluct", "centering"): ("analytic", "empirical"),
    ("tf", "mode"): ("global", "local_steep", "rightmost"),
}


@dataclass
class ExperimentConfig:
    kind: str
    n_list: list
    trials: int
    master_seed: int
    params: dict = dc_field(default_factory=dict)
    label: str = ""
    workers: int = 1

    def __post_init__(self):
        if not self.label:
            self.label = self.kind
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not self.n_list or any(int(n) < 1 for n in self.n_list):
            raise ConfigError("n_list must hold positive scales")
        self.n_list = [int(n) for n in self.n_list]
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("master_seed must fit in 64 bits")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        spec = PARAM_SPECS[self.kind]
        for key in self.params:
            if key not in spec:
                raise ConfigError(f"unknown parameter {key!r} for experiment kind {self.kind!r}")
        full = {}
        for key, (parse, default) in spec.items():
            raw = self.params.get(key, default)
            try:
                full[key] = parse(raw) if key in self.params else default
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
            allowed = ENUMS.get((self.kind, key))
            if allowed and full[key] not in allowed:
                raise ConfigError(f"{key!r} must be one of {allowed}, got {full[key]!r}")
        self.params = full
        _KIND_CHECKS.get(self.kind, lambda c: None)(self)
        for n in self.n_list:
            cells = estimate_cells(self.kind, n, self.params)
            if cells > max_cells():
                raise CapacityError(
                    f"n={n} in experiment {self.label!r} needs about {cells} cells, above "
                    f"the budget of {max_cells()} (lower n_list or set LPPLAB_MAX_CELLS)")

    def to_dict(self):
        return {"kind": self.kind, "label": self.label, "n_list": list(self.n_list),
                "trials": self.trials, "master_seed": int(self.master_seed),
                "params": {k: _jsonable(v) for k, v in sorted(self.params.items())}}


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _check_midpoint(cfg):
    odd = [n for n in cfg.n_list if n % 2]
    if odd:
        raise ConfigError(f"midpoint experiment needs even n, got {odd}")


def _check_origin(cfg):
    h = cfg.params["h"]
    if not 0 < h < 1:
        raise ConfigError(f"origin-hit h must lie in (0, 1), got {h}")
    big = [n for n in cfg.n_list if n > cfg.params["max_n"]]
    if big:
        raise CapacityError(f"origin-hit n={big} exceeds max_n={cfg.params['max_n']}")


def _check_tw(cfg):
    if cfg.params["h"] <= 0:
        raise ConfigError("h must be positive")


def _check_tf(cfg):
    p = cfg.params
    if p["mode"] == "global":
        return
    for n in cfg.n_list:
        for eps in p["eps_list"]:
            if eps * n < 1:
                raise ConfigError(f"eps*n < 1 for eps={eps}, n={n}")
        if p["height"] > n or p["height"] < 1:
            raise ConfigError(f"height {p['height']} must lie in [1, n={n}]")


def _check_segment(cfg):
    p = cfg.params
    if p["mode"] == "steep":
        if not p["eps"] / 100 < p["slope"] < 100 * p["eps"]:
            raise ConfigError("steep mode needs slope in (eps/100, 100 eps)")
    elif p["slope"] <= 0:
        raise ConfigError("slope must be positive")


def _check_thin(cfg):
    p = cfg.params
    for h in p["h_list"]:
        if h < 0 or h > math.sqrt(p["ell"]):
            raise ConfigError(f"thin cylinder needs 0 <= h <= sqrt(ell), got h={h}")
        if h and int(h) != h:
            raise ConfigError("h must be an integer number of stages")
    if p["c0"] <= 0:
        raise ConfigError("c0 must be positive")


_KIND_CHECKS = {"midpoint": _check_midpoint, "origin_hit": _check_origin, "tw": _check_tw,
                "tf": _check_tf, "segment_fluct": _check_segment, "thin_cylinder": _check_thin}


def estimate_cells(kind: str, n: int, params: dict) -> int:
    """Rough peak number of 8-byte cells a single trial holds."""
    k = int(n ** (2 / 3)) + 1
    if kind in ("disjoint", "coalescence"):
        side = n + 2 * int(params.get("width_factor", 1.0) * k) + 1
        return side * side * 2 + side * side * (2 * k // 64 + 1)
    if kind == "origin_hit":
        side = 2 * n + 1
        return side * side * (1 + (2 * n + 1) // 64 + 1)
    if kind in ("midpoint", "tw"):
        return 4 * n
    if kind == "tf":
        return n * n // 8
    if kind == "segment_fluct":
        side = n + 4 * k
        return side * side * (2 + (k // 32))
    if kind == "thin_cylinder":
        side = n + 4 * k * max(1, int(params.get("ell", 1) ** 0.125))
        return side * side * 2
    return 0


@dataclass
class ExperimentResult:
    config: dict
    columns: list
    rows: list
    estimates: dict
    fits: dict
    samples: dict
    ties: int
    runtime_s: float
    manifest: dict

    def summary(self):
        """JSON-ready summary without raw samples or timings."""
        return {"config": self.config, "estimates": self.estimates,
                "fits": self.fits, "ties": self.ties, "manifest": self.manifest}


COLUMNS = [("n", "lattice steps"), ("variant", ""), ("statistic", ""), ("argument", ""),
           ("value", ""), ("stderr", ""), ("value_unit", ""), ("trials", "count")]


def _row(n, variant, stat, arg, value, se, unit, trials):
    return {"n": int(n), "variant": variant, "statistic": stat,
            "argument": "" if arg is None else float(arg),
            "value": float(value), "stderr": "" if se is None or not np.isfinite(se) else float(se),
            "value_unit": unit, "trials": int(trials)}


# ---------------------------------------------------------------- trials

def _disjoint_segments(n, wf):
    return antidiag_segment((0, 0), n, wf), antidiag_segment((n, n), n, wf)


def trial_disjoint(seed, n, params, extra=None):
    A, B = _disjoint_segments(n, params["width_factor"])
    field = sample_field(seed, segment_box(A, B))
    bd = GeodesicBundle.between_segments(field, A, B)
    return {"N": max_disjoint_count(field, A, B, bundle=bd), "ties": bd.ties}


def coalescence_geometry(n, params):
    """(A, B, band, axis, D) for a coalescence trial; D only for mixed."""
    m = params["slope"]
    k = int(math.floor(params["width_factor"] * n ** (2 / 3) + 1e-9))
    top = (n, int(round(m * n)))
    if params["geometry"] == "antidiagonal":
        A = AntidiagSegment((0, 0), k)
        B = AntidiagSegment(top, k)
        return A, B, default_band(A, B, "sum"), "sum", None
    A = AxisSegment.centered((0, 0), k, vertical=True)
    band = (n / 3.0, 2.0 * n / 3.0)
    if params["geometry"] == "vertical":
        return A, AxisSegment.centered(top, k, vertical=True), band, "x", None
    B = AxisSegment.centered(top, k, vertical=False)
    # reduction segment: 4k steps ending k left of the top centre
    D = AxisSegment((top[0] - 5 * k, top[1]), 4 * k, vertical=False)
    return A, B, band, "x", D


def trial_coalescence(seed, n, params, extra=None):
    A, B, band, axis, D = coalescence_geometry(n, params)
    parts = [A, B] if D is None else [A, B, D]
    field = sample_field(seed, segment_box(*parts))
    if D is None:
        bd = GeodesicBundle.between_segments(field, A, B)
    else:
        bd = GeodesicBundle.in_box(field, A, B)
    M, _ = coalescence_classes(field, A, B, band, axis, bundle=bd)
    N = middle_vertex_count(field, A, B, band, axis, bundle=bd)
    out = {"M": M, "N": N, "ties": bd.ties}
    if D is not None:
        hit = bd.touches_points(D.points())
        out["all_hit_D"] = int(bool(np.all(hit[bd.comparable])))
    return out


def trial_midpoint(seed, n, params, extra=None):
    mid = (n // 2, n // 2)
    t_end, t_mid, ties = implicit_passage_time(seed, (0, 0), (n, n), probe=mid)
    t_rest, _, ties2 = implicit_passage_time(seed, mid, (n, n))
    hit = abs(t_mid + t_rest - t_end) <= params["rel_tol"] * abs(t_end)
    return {"hit": int(hit), "ties": ties + ties2}


def origin_boundaries(n):
    """Sources on Ent_n that precede 0 and targets on Exit_n that follow it."""
    src = [(-n, y) for y in range(-n, 1)] + [(x, -n) for x in range(-n + 1, 1)]
    tgt = [(n, y) for y in range(0, n + 1)] + [(x, n) for x in range(0, n)]
    return np.array(src, np.int64), np.array(tgt, np.int64)


def slope_window(src, tgt, lo, hi):
    dx = tgt[None, :, 0] - src[:, None, 0]
    dy = tgt[None, :, 1] - src[:, None, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(dx > 0, dy / np.where(dx > 0, dx, 1), np.inf)
    return (s > lo) & (s < hi)


def trial_origin_hit(seed, n, params, extra=None):
    h = params["h"]
    src, tgt = origin_boundaries(n)
    field = sample_field(seed, Box(-n, -n, n, n))
    bd = GeodesicBundle.in_box(field, src, tgt)
    touch = bd.touches_points([(0, 0)])
    window = slope_window(src, tgt, h * params["window_low"], params["window_high"] / h)
    return {"hit": int(bool(np.any(touch & window & bd.comparable))), "ties": bd.ties}


def trial_tw(seed, n, params, extra=None):
    h = params["h"]
    top = int(round(h * n))
    t, _, ties = implicit_passage_time(seed, (0, 0), (n, top))
    center = shape_function(n, top)
    return {"T": t, "Z": (t - center) / tw_scale(n, h),
            "Z_unscaled": (t - center) / (h ** (-1 / 6) * n ** (1 / 3)), "ties": ties}


def segment_geometry(n, params):
    """(A, B, scale) for the segment fluctuation modes."""
    m = params["slope"]
    if params["mode"] == "steep":
        eps = params["eps"]
        k = int(math.floor(params["width_factor"] * eps ** (2 / 3) * n ** (2 / 3) + 1e-9))
        A = AxisSegment((0, 0), k, vertical=False)
        B = AxisSegment((int(round(m * n)), n), k, vertical=False)
        return A, B, eps ** (-1 / 6) * n ** (1 / 3)
    k = int(math.floor(params["width_factor"] * n ** (2 / 3) + 1e-9))
    top = (n, int(round(m * n)))
    if params["mode"] == "flat":
        return AxisSegment((0, 0), k, True), AxisSegment(top, k, True), n ** (1 / 3)
    return AntidiagSegment((0, 0), k), AntidiagSegment(top, k), n ** (1 / 3)


def analytic_centers(A, B) -> np.ndarray:
    pa, pb = A.points(), B.points()
    dx = pb[None, :, 0] - pa[:, None, 0]
    dy = pb[None, :, 1] - pa[:, None, 1]
    if np.any(dx <= 0) or np.any(dy <= 0):
        raise ContractError("analytic centering needs positive displacements for every pair")
    return (np.sqrt(dx) + np.sqrt(dy)) ** 2


def _pair_values(seed, n, params):
    A, B, scale = segment_geometry(n, params)
    field = sample_field(seed, segment_box(A, B))
    return A, B, scale, GeodesicBundle.between_segments(field, A, B, store_bits=False)


def trial_segment_pilot(seed, n, params, extra=None):
    _, _, _, bd = _pair_values(seed, n, params)
    return {"values": bd.values, "ties": bd.ties}


def trial_segment(seed, n, params, extra=None):
    A, B, scale, bd = _pair_values(seed, n, params)
    center = analytic_centers(A, B) if extra is None else extra
    dev = (bd.values - center)[bd.comparable]
    return {"sup": float(dev.max()) / scale, "inf": float(dev.min()) / scale, "ties": bd.ties}


def trial_tf(seed, n, params, extra=None):
    mode = params["mode"]
    if mode == "global":
        g = implicit_geodesic(seed, (0, 0), (n, int(round(params["slope"] * n))))
        return {"tf": global_tf(g), "ties": g.ties}
    out = {"ties": 0}
    L = params["height"]
    for i, eps in enumerate(params["eps_list"]):
        # independent field per eps so the two curves do not share noise
        g = implicit_geodesic(derive_seed(seed, i), (0, 0), (int(round(eps * n)), n))
        out["ties"] += g.ties
        out[f"tf_{i}"] = local_tf(g, L, eps) / (eps ** (2 / 3) * L ** (2 / 3))
        out[f"x_{i}"] = rightmost_at_height(g, L)
    return out


def thin_geometry(n, h, params):
    """(A, B, grid) for the thin-cylinder experiment at stage count h."""
    m_slope = params["slope"]
    A = antidiag_segment((0, 0), n)
    B = antidiag_segment((n, int(round(m_slope * n))), n)
    if h == 0:
        return A, B, grid_for_segments(A, B, 1, None, 0)
    cells_per_unit = h ** (2 / 3) / params["c0"]
    width = n ** (2 / 3) / cells_per_unit
    half = math.ceil(int(params["ell"] ** 0.125 + 1e-9) * cells_per_unit)
    return A, B, grid_for_segments(A, B, int(h), width, half)


def _random_encoding(rng, stages, lo, hi):
    j = int(rng.integers(lo, hi))
    out = [j]
    for _ in range(stages):
        j = int(np.clip(j + rng.integers(-1, 2), lo, hi - 1))
        out.append(j)
    return tuple(out)


def trial_thin_cylinder(seed, n, params, extra=None):
    out = {"ties": 0}
    rng = np.random.default_rng(seed)
    for i, h in enumerate(params["h_list"]):
        A, B, grid = thin_geometry(n, h, params)
        lo, hi = grid.index_range
        pts = [A.points(), B.points()]
        if grid.cell_width is not None:
            for s in (0, grid.stages):
                pts.append(grid.cell_points(s, lo))
                pts.append(grid.cell_points(s, hi - 1))
        allp = np.concatenate(pts)
        field = sample_field(derive_seed(seed, i),
                             Box(int(allp[:, 0].min()), int(allp[:, 1].min()),
                                 int(allp[:, 0].max()), int(allp[:, 1].max())))
        center = shape_function(*(B.center - A.center))
        central = GridEncoding(tuple([0] * (grid.stages + 1)), (lo, hi))
        out[f"central_{i}"] = constrained_best(field, A, central, grid, B) - center
        for r in range(params["random_encodings"]):
            enc = GridEncoding(_random_encoding(rng, grid.stages, lo, hi), (lo, hi))
            out[f"random_{i}_{r}"] = constrained_best(field, A, enc, grid, B) - center
        bd = GeodesicBundle.between_segments(field, A, B, store_bits=False)
        vals = bd.values[bd.comparable]
        out[f"sup_{i}"] = float(vals.max()) - center
        out[f"inf_{i}"] = float(vals.min()) - center
    return out


TRIALS = {"disjoint": trial_disjoint, "coalescence": trial_coalescence,
          "midpoint": trial_midpoint, "origin_hit": trial_origin_hit, "tw": trial_tw,
          "segment_fluct": trial_segment, "tf": trial_tf,
          "thin_cylinder": trial_thin_cylinder}


# ---------------------------------------------------------------- runner

def _call(args):
    fn, seed, n, params, extra = args
    return fn(seed, n, params, extra)


def stream_id(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def trial_seeds(cfg: ExperimentConfig, n: int, count: int | None = None, stream: int = 0):
    count = cfg.trials if count is None else count
    sid = stream_id(cfg.label)
    return [derive_seed(cfg.master_seed, sid, stream, n, t) for t in range(count)]


def run_trials(cfg: ExperimentConfig, fn, n: int, extra=None, count=None, stream=0, pool=None):
    seeds = trial_seeds(cfg, n, count, stream)
    jobs = [(fn, s, n, cfg.params, extra) for s in seeds]
    if pool is None:
        return [_call(j) for j in jobs]
    return list(pool.map(_call, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))


def _collect(results, key):
    return np.array([r[key] for r in results], float)


def run_experiment(cfg: ExperimentConfig, keep_samples: bool = True) -> ExperimentResult:
    runner = {"disjoint": run_disjoint_tail, "coalescence": run_coalescence,
              "midpoint": run_midpoint, "origin_hit": run_origin_hit,
              "tw": run_tw_rescaling, "segment_fluct": run_segment_fluct,
              "tf": run_tf, "thin_cylinder": run_thin_cylinder}[cfg.kind]
    return runner(cfg, keep_samples=keep_samples)


def _execute(cfg, summarize, keep_samples, pilot=None):
    t0 = time.perf_counter()
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        per_n = {}
        for n in cfg.n_list:
            extra = pilot(cfg, n, pool) if pilot else None
            per_n[n] = run_trials(cfg, TRIALS[cfg.kind], n, extra=extra, pool=pool)
    finally:
        if pool is not None:
            pool.shutdown()
    rows, estimates, fits, samples = summarize(cfg, per_n)
    ties = int(sum(r.get("ties", 0) for res in per_n.values() for r in res))
    manifest = {"master_seed": int(cfg.master_seed), "label": cfg.label,
                "seed_derivation": "splitmix64 chain of (master_seed, crc32(label), "
                                   "stream, n, trial)",
                "code_version": __version__}
    return ExperimentResult(cfg.to_dict(), COLUMNS, rows, estimates, fits,
                            samples if keep_samples else {}, ties,
                            time.perf_counter() - t0, manifest)


def _fit_or_reason(fn, *args, **kw):
    try:
        return fn(*args, **kw).to_dict()
    except (DegenerateFitError, ContractError) as exc:
        return {"error": str(exc)}


# ---------------------------------------------------------------- summaries

def _tail_rows(n, variant, name, samples, grid, unit="probability"):
    p, se = exceedance(samples, grid)
    return [_row(n, variant, name, t, pi, si, unit, len(samples))
            for t, pi, si in zip(grid, p, se)]


def _mean_row(n, variant, name, samples, unit):
    m, se = mean_se(samples)
    return _row(n, variant, name, None, m, se, unit, len(samples))


def run_disjoint_tail(cfg: ExperimentConfig, keep_samples=True) -> ExperimentResult:
    """P(N >= ell) and E N for the maximal number of disjoint geodesics."""
    if cfg.kind != "disjoint":
        raise ConfigError("run_disjoint_tail needs kind = disjoint")

    def summarize(cfg, per_n):
        rows, est, fits, samples = [], {}, {}, {}
        ells = np.arange(1, cfg.params["ell_max"] + 1)
        for n, res in per_n.items():
            N = _collect(res, "N")
            samples[n] = {"N": N}
            rows += _tail_rows(n, "", "P(N>=ell)", N, ells)
            rows.append(_mean_row(n, "", "mean N", N, "count"))
            p, _ = exceedance(N, ells)
            est[f"n={n}"] = {"mean_N": mean_se(N), "tail": p.tolist()}
            fits[f"tail_rate_ell^(1/4)_n={n}"] = _fit_or_reason(
                fit_semilog, ells[1:], p[1:], transform=lambda t: t ** 0.25)
        return rows, est, fits, samples

    return _execute(cfg, summarize, keep_samples)


def run_coalescence(cfg: ExperimentConfig, keep_samples=True) -> ExperimentResult:
    """Coalescence class count M and middle-band vertex count N."""
    if cfg.kind != "coalescence":
        raise ConfigError("run_coalescence needs kind = coalescence")

    def summarize(cfg, per_n):
        rows, est, fits, samples = [], {}, {}, {}
        ells = np.arange(1, cfg.params["ell_max"] + 1)
        for n, res in per_n.items():
            M, N = _collect(res, "M"), _collect(res, "N")
            samples[n] = {"M": M, "N": N}
            rows += _tail_rows(n, "", "P(M>=ell)", M, ells)
            rows.append(_mean_row(n, "", "mean M", M, "count"))
            rows.append(_mean_row(n, "", "mean N", N, "vertices"))
            rows.append(_mean_row(n, "", "mean N/n", N / n, "vertices per step"))
            e = {"mean_M": mean_se(M), "mean_N": mean_se(N), "mean_N_over_n": mean_se(N / n)}
            if "all_hit_D" in res[0]:
                hits = int(_collect(res, "all_hit_D").sum())
                p, se = proportion_se(hits, len(res))
                rows.append(_row(n, "", "P(all geodesics meet D)", None, p, se,
                                 "probability", len(res)))
                e["p_all_hit_D"] = (p, se)
            est[f"n={n}"] = e
        return rows, est, fits, samples

    return _execute(cfg, summarize, keep_samples)


def _proportion_summary(name):
    def summarize(cfg, per_n):
        rows, est, fits, samples = [], {}, {}, {}
        ns, ps = [], []
        for n, res in per_n.items():
            hits = _collect(res, "hit")
            samples[n] = {"hit": hits}
            p, se = proportion_se(int(hits.sum()), len(hits))
            rows.append(_row(n, "", name, None, p, se, "probability", len(hits)))
            est[f"n={n}"] = {"p": p, "se": se, "hits": int(hits.sum())}
            ns.append(n)
            ps.append(p)
        if len(ns) >= 3 and all(p > 0 for p in ps):
            fits["exponent"] = _fit_or_reason(fit_loglog, ns, ps)
        else:
            fits["exponent"] = {"error": "need 3 scales with positive estimates"}
        est["strictly_decreasing"] = bool(all(b < a for a, b in zip(ps, ps[1:])))
        return rows, est, fits, samples
    return summarize


def run_midpoint(cfg: ExperimentConfig, keep_samples=True) -> ExperimentResult:
    """P(the geodesic from 0 to (n, n) passes (n/2, n/2))."""
    if cfg.kind != "midpoint":
        raise ConfigError("run_midpoint needs kind = midpoint")
    return _execute(cfg, _proportion_summary("P(midpoint on geodesic)"), keep_samples)


def run_origin_hit(cfg: ExperimentConfig, keep_samples=True) -> ExperimentResult:
    """P(some boundary-to-boundary geodesic of the square through 0 hits 0)."""
    if cfg.kind != "origin_hit":
        raise ConfigError("run_origin_hit needs kind = origin_hit")
    return _execute(cfg, _proportion_summary("P(origin hit)"), keep_samples)


def _t_grid(p):
    return np.round(np.arange(0.0, p["t_max"] + 1e-9, p["t_step"]), 10)


def run_tw_rescaling(cfg: ExperimentConfig, keep_samples=True) -> ExperimentResult:
    """Rescaled point-to-point passage times against Tracy-Widom."""
    if cfg.kind != "tw":
        raise ConfigError("run_tw_rescaling needs kind = tw")
    ref = TWReference.load()
    ref_mean, ref_var = ref.moments()

    def summarize(cfg, per_n):
        rows, est, fits, samples = [], {}, {}, {}
        grid = _t_grid(cfg.params)
        h = cfg.params["h"]
        for n, res in per_n.items():
            T, Z, Zu = _collect(res, "T"), _collect(res, "Z"), _collect(res, "Z_unscaled")
            samples[n] = {"T": T, "Z": Z}
            ks = ks_distance(Z, ref)
            var = float(Z.var(ddof=1)) if len(Z) > 1 else math.nan
            rows.append(_mean_row(n, "", "mean T/n", T / n, "passage time per step"))
            rows.append(_mean_row(n, "", "mean Z", Z, "TW units"))
            rows.append(_row(n, "", "var Z", None, var, None, "TW units^2", len(Z)))
            rows.append(_row(n, "", "KS distance", None, ks, None, "", len(Z)))
            absz = np.abs(Z)
            rows += _tail_rows(n, "", "P(|Z|>=t)", absz, grid)
            p, _ = exceedance(absz, grid)
            sel = (grid >= 2) & (grid <= 4)
            fits[f"abs_tail_rate_n={n}"] = _fit_or_reason(fit_semilog, grid[sel], p[sel])
            sd_ratio = float(np.std(Zu, ddof=1) / np.sqrt(ref_var)) if len(Zu) > 1 else math.nan
            est[f"n={n}"] = {"mean_T_over_n": mean_se(T / n), "mean_Z": mean_se(Z),
                             "var_Z": var, "ks": ks,
                             "reference_mean": ref_mean, "reference_var": ref_var,
                             "scale_factor_(1+sqrt h)^(4/3)": (1 + math.sqrt(h)) ** (4 / 3),
                             "sd_ratio_unscaled_to_TW": sd_ratio}
        return rows, est, fits, samples

    return _execute(cfg, summarize, keep_samples)


def run_segment_fluct(cfg: ExperimentConfig, keep_samples=True) -> ExperimentResult:
    """Sup and inf of centred passage times between two short segments."""
    if cfg.kind != "segment_fluct":
        raise ConfigError("run_segment_fluct needs kind = segment_fluct")

    def pilot(cfg, n, pool):
        if cfg.params["centering"] != "empirical":
            return None
        res = run_trials(cfg, trial_segment_pilot, n, count=cfg.params["pilot_trials"],
                         stream=1, pool=pool)
        return np.mean([r["values"] for r in res], axis=0)

    def summarize(cfg, per_n):
        rows, est, fits, samples = [], {}, {}, {}
        grid = _t_grid(cfg.params)
        for n, res in per_n.items():
            sup, inf = _collect(res, "sup"), _collect(res, "inf")
            samples[n] = {"sup": sup, "inf": inf}
            rows += _tail_rows(n, "", "P(sup>=t)", sup, grid, "probability")
            rows += _tail_rows(n, "", "P(-inf>=t)", -inf, grid, "probability")
            rows.append(_mean_row(n, "", "mean sup", sup, "fluctuation units"))
            rows.append(_mean_row(n, "", "mean inf", inf, "fluctuation units"))
            est[f"n={n}"] = {"mean_sup": mean_se(sup), "mean_inf": mean_se(inf)}
            for name, s in (("sup", sup), ("inf", -inf)):
                p, _ = exceedance(s, grid)
                sel = grid >= 1
                fits[f"{name}_tail_rate_n={n}"] = _fit_or_reason(fit_semilog, grid[sel], p[sel])
        return rows, est, fits, samples

    return _execute(cfg, summarize, keep_samples, pilot=pilot)


def run_tf(cfg: ExperimentConfig, mode: str | None = None, keep_samples=True) -> ExperimentResult:
    """Global, local (steep) and rightmost-point transversal fluctuations."""
    if cfg.kind != "tf":
        raise ConfigError("run_tf needs kind = tf")
    if mode is not None and mode != cfg.params["mode"]:
        cfg = ExperimentConfig(cfg.kind, cfg.n_list, cfg.trials, cfg.master_seed,
                               {**cfg.params, "mode": mode}, cfg.label, cfg.workers)
    p = cfg.params

    def summarize(cfg, per_n):
        rows, est, fits, samples = [], {}, {}, {}
        if p["mode"] == "global":
            ns, meds = [], []
            for n, res in per_n.items():
                tf = _collect(res, "tf")
                samples[n] = {"tf": tf}
                s = tf / n ** (2 / 3)
                med = float(np.median(tf))
                rows.append(_row(n, "", "median TF", None, med, None, "lattice units", len(tf)))
                rows.append(_mean_row(n, "", "mean TF/n^(2/3)", s, "n^(2/3) units"))
                rows += _tail_rows(n, "", "P(TF/n^(2/3)>=s)", s, p["s_grid"])
                pe, _ = exceedance(s, p["s_grid"])
                fits[f"tail_rate_s^2_n={n}"] = _fit_or_reason(
                    fit_semilog, p["s_grid"], pe, transform=lambda t: t ** 2)
                est[f"n={n}"] = {"median_tf": med, "mean_scaled": mean_se(s)}
                ns.append(n)
                meds.append(med)
            if len(ns) >= 3 and all(m > 0 for m in meds):
                fits["median_exponent"] = _fit_or_reason(fit_loglog, ns, meds)
            return rows, est, fits, samples
        L = p["height"]
        for n, res in per_n.items():
            samples[n] = {}
            for i, eps in enumerate(p["eps_list"]):
                var = f"eps={eps:g}"
                tf = _collect(res, f"tf_{i}")
                X = _collect(res, f"x_{i}")
                samples[n][var] = tf
                if p["mode"] == "local_steep":
                    med = float(np.median(tf))
                    rows.append(_row(n, var, "median TF_L/(eps L)^(2/3)", None, med, None,
                                     "scaled units", len(tf)))
                    rows += _tail_rows(n, var, "P(TF_L/(eps L)^(2/3)>=x)", tf, p["x_grid"])
                    pe, _ = exceedance(tf, p["x_grid"])
                    est[f"n={n},{var}"] = {"median_scaled": med, "p_zero": float(np.mean(tf == 0)),
                                           "exceedance": pe.tolist()}
                else:
                    rows += _tail_rows(n, var, f"P(X_L>=M) L={L}", X, p["m_grid"])
                    pe, _ = exceedance(X, p["m_grid"])
                    est[f"n={n},{var}"] = {"exceedance": pe.tolist(), "mean_X_L": mean_se(X)}
        return rows, est, fits, samples

    return _execute(cfg, summarize, keep_samples)


def run_thin_cylinder(cfg: ExperimentConfig, keep_samples=True) -> ExperimentResult:
    """Best paths forced through grid cells compared with the unconstrained best."""
    if cfg.kind != "thin_cylinder":
        raise ConfigError("run_thin_cylinder needs kind = thin_cylinder")
    p = cfg.params

    def summarize(cfg, per_n):
        rows, est, fits, samples = [], {}, {}, {}
        for n, res in per_n.items():
            samples[n] = {}
            for i, h in enumerate(p["h_list"]):
                var = f"h={h:g}"
                central = _collect(res, f"central_{i}")
                rand = np.concatenate([_collect(res, f"random_{i}_{r}")
                                       for r in range(p["random_encodings"])]) \
                    if p["random_encodings"] else np.empty(0)
                sup, inf = _collect(res, f"sup_{i}"), _collect(res, f"inf_{i}")
                samples[n][var] = {"central": central, "random": rand, "sup": sup, "inf": inf}
                ok_c = np.isfinite(central)
                ok_r = np.isfinite(rand)
                for name, s in (("central", central[ok_c]), ("random", rand[ok_r]),
                                ("sup", sup), ("inf", inf)):
                    if len(s):
                        rows.append(_mean_row(n, var, f"mean {name} - center", s,
                                              "passage time"))
                thr = np.array(p["c1_grid"]) * h ** (2 / 3) * n ** (1 / 3)
                pc = np.array([(central >= -t).mean() for t in thr])
                for c1, pi in zip(p["c1_grid"], pc):
                    rows.append(_row(n, var, "P(central >= center - c1 h^(2/3) n^(1/3))", c1,
                                     pi, math.sqrt(pi * (1 - pi) / len(central)),
                                     "probability", len(central)))
                est[f"n={n},{var}"] = {
                    "mean_central": mean_se(central[ok_c]) if ok_c.any() else None,
                    "infeasible_central": int((~ok_c).sum()),
                    "mean_random": mean_se(rand[ok_r]) if ok_r.any() else None,
                    "infeasible_random": int((~ok_r).sum()),
                    "mean_sup": mean_se(sup), "mean_inf": mean_se(inf)}
        return rows, est, fits, samples

    return _execute(cfg, summarize, keep_samples)
