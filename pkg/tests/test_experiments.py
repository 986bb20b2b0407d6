import numpy as np
import pytest

from lpplab.core import brute_force, geodesic, passage_time
from lpplab.errors import CapacityError, ConfigError
from lpplab.experiments import (ExperimentConfig, analytic_centers, coalescence_geometry,
                                origin_boundaries, run_experiment, run_tf, segment_geometry,
                                slope_window, thin_geometry, trial_coalescence, trial_disjoint,
                                trial_midpoint, trial_origin_hit, trial_seeds, trial_segment,
                                trial_tf, trial_thin_cylinder, trial_tw)
from lpplab.geometry import default_band, global_tf, local_tf
from lpplab.lattice import Box, derive_seed, sample_field, segment_box
from lpplab.selftest import exhaustive_disjoint
from lpplab.stats import shape_function, tw_scale

SEEDS = [derive_seed(77, i) for i in range(12)]


def _cfg(kind, n_list=(8,), trials=5, **params):
    return ExperimentConfig(kind, list(n_list), trials, 1, params)


def _params(kind, **params):
    return _cfg(kind, **params).params


# ------------------------------------------------------------ small-n cross-checks

@pytest.mark.parametrize("seed", SEEDS)
def test_disjoint_trial_matches_exhaustive(seed):
    from lpplab.experiments import _disjoint_segments
    p = _params("disjoint")
    A, B = _disjoint_segments(4, p["width_factor"])
    f = sample_field(seed, segment_box(A, B))
    assert trial_disjoint(seed, 4, p)["N"] == exhaustive_disjoint(f, A, B)


@pytest.mark.parametrize("seed", SEEDS)
def test_coalescence_trial_matches_enumeration(seed):
    p = _params("coalescence")
    A, B, band, _, _ = coalescence_geometry(6, p)
    f = sample_field(seed, segment_box(A, B))
    parts, cells = set(), set()
    for u in A.points():
        for v in B.points():
            if u[0] <= v[0] and u[1] <= v[1]:
                g = brute_force(f, u, v).path.vertices
                s = g.sum(axis=1)
                part = tuple(map(tuple, g[(s >= band[0]) & (s <= band[1])]))
                if part:
                    parts.add(part)
                    cells.update(part)
    out = trial_coalescence(seed, 6, p)
    assert out["M"] == len(parts) and out["N"] == len(cells)


def test_mixed_coalescence_reports_reduction_segment():
    p = _params("coalescence", geometry="mixed")
    A, B, band, axis, D = coalescence_geometry(8, p)
    assert axis == "x" and D is not None
    f = sample_field(SEEDS[0], segment_box(A, B, D))
    hit_all = True
    for u in A.points():
        for v in B.points():
            if u[0] <= v[0] and u[1] <= v[1]:
                g = geodesic(f, u, v)
                hit_all &= any(g.contains(d) for d in D.points())
    assert trial_coalescence(SEEDS[0], 8, p)["all_hit_D"] == int(hit_all)


@pytest.mark.parametrize("n", [2, 4, 6, 8, 10])
def test_midpoint_trial_matches_enumeration(n):
    hits = 0
    for seed in SEEDS:
        f = sample_field(seed, Box(0, 0, n, n))
        want = brute_force(f, (0, 0), (n, n)).path.contains((n // 2, n // 2))
        got = trial_midpoint(seed, n, _params("midpoint"))["hit"]
        assert got == int(want)
        hits += got
    assert 0 < hits <= len(SEEDS)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("seed", SEEDS[:6])
def test_origin_hit_trial_matches_enumeration(n, seed):
    p = _params("origin_hit")
    src, tgt = origin_boundaries(n)
    f = sample_field(seed, Box(-n, -n, n, n))
    window = slope_window(src, tgt, p["h"] * p["window_low"], p["window_high"] / p["h"])
    want = False
    for i, u in enumerate(src):
        for j, v in enumerate(tgt):
            if window[i, j] and u[0] <= v[0] and u[1] <= v[1]:
                want |= brute_force(f, u, v).path.contains((0, 0))
    assert trial_origin_hit(seed, n, p)["hit"] == int(want)


def test_origin_boundaries_shape():
    src, tgt = origin_boundaries(2)
    assert len(src) == len(tgt) == 5
    assert {tuple(p) for p in src} == {(-2, -2), (-2, -1), (-2, 0), (-1, -2), (0, -2)}
    assert {tuple(p) for p in tgt} == {(2, 0), (2, 1), (2, 2), (0, 2), (1, 2)}


@pytest.mark.parametrize("seed", SEEDS[:6])
def test_tw_trial_matches_enumeration(seed):
    n = 6
    f = sample_field(seed, Box(0, 0, n, n))
    bf = brute_force(f, (0, 0), (n, n)).value
    out = trial_tw(seed, n, _params("tw"))
    assert out["T"] == pytest.approx(bf, rel=1e-12)
    assert out["Z"] == pytest.approx((bf - shape_function(n, n)) / tw_scale(n, 1.0))


@pytest.mark.parametrize("seed", SEEDS[:6])
def test_tf_trials_match_enumeration(seed):
    n = 10
    f = sample_field(seed, Box(0, 0, n, n))
    g = brute_force(f, (0, 0), (n, n)).path
    assert trial_tf(seed, n, _params("tf"))["tf"] == pytest.approx(global_tf(g))
    p = _params("tf", mode="local_steep", eps_list="0.2", height="5")
    out = trial_tf(seed, n, p)
    sub_seed = derive_seed(seed, 0)
    f2 = sample_field(sub_seed, Box(0, 0, 2, n))
    g2 = brute_force(f2, (0, 0), (2, n)).path
    assert out["tf_0"] == pytest.approx(local_tf(g2, 5, 0.2) / (0.2 * 5) ** (2 / 3))
    assert out["x_0"] == int(g2.vertices[g2.vertices[:, 1] == 5, 0].max())


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_flat_segment_trial_matches_enumeration(seed):
    p = _params("segment_fluct")
    A, B, scale = segment_geometry(8, p)
    f = sample_field(seed, segment_box(A, B))
    centers = analytic_centers(A, B)
    devs = [brute_force(f, u, v).value - centers[i, j]
            for i, u in enumerate(A.points()) for j, v in enumerate(B.points())]
    out = trial_segment(seed, 8, p)
    assert out["sup"] == pytest.approx(max(devs) / scale)
    assert out["inf"] == pytest.approx(min(devs) / scale)


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_tilted_segment_trial_matches_single_sweeps(seed):
    p = _params("segment_fluct", mode="tilted")
    A, B, scale = segment_geometry(12, p)
    f = sample_field(seed, segment_box(A, B))
    centers = analytic_centers(A, B)
    devs = [passage_time(f, u, v) - centers[i, j]
            for i, u in enumerate(A.points()) for j, v in enumerate(B.points())]
    out = trial_segment(seed, 12, p)
    assert out["sup"] == pytest.approx(max(devs) / scale)
    assert out["inf"] == pytest.approx(min(devs) / scale)


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_thin_cylinder_trial_against_enumeration(seed):
    n = 6
    p = _params("thin_cylinder", h_list="0 2", ell="4", random_encodings="2")
    out = trial_thin_cylinder(seed, n, p)
    A, B, grid = thin_geometry(n, 0.0, p)
    f = sample_field(derive_seed(seed, 0), segment_box(A, B))
    best = max(brute_force(f, u, v).value for u in A.points() for v in B.points()
               if u[0] <= v[0] and u[1] <= v[1])
    center = shape_function(*(B.center - A.center))
    # h = 0 is the unconstrained maximum
    assert out["central_0"] == pytest.approx(best - center)
    assert out["sup_0"] == pytest.approx(best - center)
    for key in ("central_1", "random_1_0", "random_1_1"):
        assert out[key] <= out["sup_1"] + 1e-9


# ------------------------------------------------------------ config validation

def test_unknown_parameter_is_named():
    with pytest.raises(ConfigError, match="trails"):
        _cfg("tw", trails="5")


def test_enum_and_range_checks():
    with pytest.raises(ConfigError):
        _cfg("coalescence", geometry="diagonal")
    with pytest.raises(ConfigError, match="even"):
        _cfg("midpoint", n_list=(7,))
    with pytest.raises(ConfigError):
        _cfg("origin_hit", h="1.5")
    with pytest.raises(CapacityError, match="max_n"):
        _cfg("origin_hit", n_list=(300,))
    with pytest.raises(ConfigError):
        _cfg("tf", n_list=(50,), mode="local_steep", eps_list="0.01", height="10")
    with pytest.raises(ConfigError):
        _cfg("thin_cylinder", h_list="20", ell="16")
    with pytest.raises(ConfigError):
        _cfg("segment_fluct", mode="steep", eps="0.01", slope="5")
    with pytest.raises(ConfigError):
        ExperimentConfig("nope", [8], 5, 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("tw", [8], 0, 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("tw", [8], 5, -1)


def test_capacity_budget_names_parameter(monkeypatch):
    monkeypatch.setenv("LPPLAB_MAX_CELLS", "1000")
    with pytest.raises(CapacityError, match="n_list"):
        _cfg("disjoint", n_list=(100,))


def test_bad_value_reports_key():
    with pytest.raises(ConfigError, match="width_factor"):
        _cfg("disjoint", width_factor="wide")


# ------------------------------------------------------------ runner behaviour

def _strip(res):
    return res.rows, res.estimates, res.fits, res.ties


def test_results_do_not_depend_on_worker_count():
    for kind, params in [("disjoint", {}), ("midpoint", {}), ("tf", {})]:
        one = ExperimentConfig(kind, [8, 16], 6, 5, params, workers=1)
        two = ExperimentConfig(kind, [8, 16], 6, 5, params, workers=2)
        a, b = run_experiment(one), run_experiment(two)
        assert repr(_strip(a)) == repr(_strip(b))
        for n in (8, 16):
            for key, arr in a.samples[n].items():
                assert np.array_equal(arr, b.samples[n][key])


def test_trial_seeds_depend_on_label_and_scale():
    a = ExperimentConfig("tw", [8], 3, 1, label="x")
    b = ExperimentConfig("tw", [8], 3, 1, label="y")
    assert trial_seeds(a, 8) != trial_seeds(b, 8)
    assert trial_seeds(a, 8) != trial_seeds(a, 9)
    assert len(set(trial_seeds(a, 8))) == 3


@pytest.mark.parametrize("kind,params", [
    ("disjoint", {}), ("coalescence", {}), ("coalescence", {"geometry": "vertical"}),
    ("coalescence", {"geometry": "mixed"}), ("midpoint", {}), ("origin_hit", {}),
    ("tw", {}), ("segment_fluct", {}), ("segment_fluct", {"mode": "tilted", "slope": "2"}),
    ("segment_fluct", {"mode": "steep", "eps": "0.2", "slope": "0.2",
                       "centering": "empirical", "pilot_trials": "4"}),
    ("tf", {}), ("tf", {"mode": "local_steep", "eps_list": "0.1 0.3", "height": "8"}),
    ("tf", {"mode": "rightmost", "eps_list": "0.2", "height": "8"}),
    ("thin_cylinder", {"h_list": "0 1 2", "ell": "4"}),
])
def test_every_kind_runs_and_tails_are_monotone(kind, params):
    res = run_experiment(ExperimentConfig(kind, [16, 24], 8, 3, params))
    assert res.rows and res.config["kind"] == kind
    # the thin-cylinder rows are cumulative from below, all others are tails
    sign = -1 if kind == "thin_cylinder" else 1
    groups = {}
    for r in res.rows:
        if r["argument"] != "" and r["value_unit"] == "probability":
            groups.setdefault((r["statistic"], r["variant"], r["n"]), []).append(
                (r["argument"], r["value"]))
    for pts in groups.values():
        vals = [v for _, v in sorted(pts)]
        assert all(sign * (b - a) <= 0 for a, b in zip(vals, vals[1:]))
    assert "runtime" not in repr(res.summary())


def test_run_tf_mode_override():
    cfg = ExperimentConfig("tf", [16], 4, 2, {"eps_list": "0.25", "height": "8"})
    res = run_tf(cfg, mode="rightmost")
    assert res.config["params"]["mode"] == "rightmost"


def test_midpoint_decreases_with_n():
    res = run_experiment(ExperimentConfig("midpoint", [4, 64], 400, 8))
    assert res.estimates["n=4"]["p"] > res.estimates["n=64"]["p"]


def test_thin_cylinder_mean_drops_with_more_stages():
    res = run_experiment(ExperimentConfig("thin_cylinder", [64], 40, 9,
                                          {"h_list": "0 4", "ell": "16"}))
    e0 = res.estimates["n=64,h=0"]["mean_central"][0]
    e4 = res.estimates["n=64,h=4"]["mean_central"][0]
    assert e4 < e0


def test_default_band_is_middle_third():
    p = _params("coalescence")
    A, B, band, _, _ = coalescence_geometry(30, p)
    assert band == default_band(A, B)
    assert band[0] == pytest.approx(20) and band[1] == pytest.approx(40)
