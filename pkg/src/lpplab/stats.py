"""Estimators, exponent fits and the Tracy-Widom reference distribution."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from .errors import ContractError, DegenerateFitError

# GUE Tracy-Widom moments (high-precision literature values)
TW_MEAN = -1.7710868074116
TW_VARIANCE = 0.8131947928329


@dataclass(frozen=True)
class FitResult:
    estimate: float
    lo: float
    hi: float
    intercept: float
    points_used: int
    points_dropped: int
    resamples: int
    residual_sd: float

    def to_dict(self):
        return asdict(self)


class TWReference:
    """Tabulated GUE Tracy-Widom distribution function F2."""

    def __init__(self, z: np.ndarray, cdf: np.ndarray):
        z = np.asarray(z, float)
        cdf = np.asarray(cdf, float)
        if z.ndim != 1 or z.shape != cdf.shape or len(z) < 2:
            raise ContractError("table must be two equal-length columns")
        if np.any(np.diff(z) <= 0) or np.any(np.diff(cdf) < 0):
            raise ContractError("table must be increasing in z and monotone in F")
        self.z = z
        self.cdf = cdf

    @classmethod
    def load(cls, path=None) -> "TWReference":
        if path is None:
            with resources.files("lpplab").joinpath("data/tw_gue_cdf.txt").open() as fh:
                data = np.loadtxt(fh, comments="#")
        else:
            data = np.loadtxt(path, comments="#")
        return cls(data[:, 0], data[:, 1])

    def __call__(self, z):
        return np.interp(z, self.z, self.cdf, left=0.0, right=1.0)

    def quantile(self, p):
        # flat tails of the table are dropped so the inverse is single valued
        keep = np.concatenate([[True], np.diff(self.cdf) > 0])
        return np.interp(p, self.cdf[keep], self.z[keep])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantile(rng.random(size))

    def moments(self):
        """Mean and variance of the tabulated law (midpoint rule on the CDF)."""
        mid = 0.5 * (self.z[1:] + self.z[:-1])
        mass = np.diff(self.cdf)
        mean = float((mid * mass).sum() / mass.sum())
        # within-bin spread of a locally uniform density adds h^2/12
        h2 = np.diff(self.z) ** 2 / 12.0
        var = float((((mid - mean) ** 2 + h2) * mass).sum() / mass.sum())
        return mean, var


def ks_distance(sample, reference) -> float:
    """Kolmogorov-Smirnov distance between an empirical sample and a CDF."""
    x = np.sort(np.asarray(sample, float))
    n = len(x)
    if n == 0:
        raise ContractError("empty sample")
    F = reference(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def mean_se(samples):
    s = np.asarray(samples, float)
    if len(s) < 2:
        return float(s.mean()) if len(s) else math.nan, math.nan
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(len(s)))


def proportion_se(hits: int, trials: int):
    p = hits / trials
    return p, math.sqrt(max(p * (1 - p), 0.0) / trials)


def exceedance(samples, thresholds):
    """P(X >= t) with binomial standard errors, for every threshold."""
    s = np.sort(np.asarray(samples, float))
    n = len(s)
    t = np.asarray(thresholds, float)
    p = (n - np.searchsorted(s, t, side="left")) / n
    return p, np.sqrt(p * (1 - p) / n)


def _ols(x, y):
    xm = x - x.mean()
    slope = float((xm * (y - y.mean())).sum() / (xm * xm).sum())
    return slope, float(y.mean() - slope * x.mean())


def _residual_sd(x, y, slope, icpt):
    r = y - icpt - slope * x
    return float(np.sqrt((r * r).sum() / max(len(x) - 2, 1)))


def _bootstrap(x, y, resamples, seed, level):
    slope, icpt = _ols(x, y)
    rng = np.random.default_rng(seed)
    n = len(x)
    idx = rng.integers(0, n, (resamples, n))
    xr, yr = x[idx], y[idx]
    xm = xr - xr.mean(axis=1, keepdims=True)
    sxx = (xm * xm).sum(axis=1)
    # resamples that repeat a single abscissa carry no slope information
    ok = np.ptp(xr, axis=1) > 0
    slopes = (xm * yr).sum(axis=1)[ok] / sxx[ok]
    if len(slopes):
        a = (1 - level) / 2
        lo, hi = np.quantile(slopes, [a, 1 - a])
    else:
        lo = hi = slope
    # the reported interval always brackets the point estimate
    return slope, icpt, float(min(lo, slope)), float(max(hi, slope))


def fit_loglog(xs, ys, resamples: int = 2000, seed: int = 0, level: float = 0.95) -> FitResult:
    """Least-squares slope of log y against log x with a pairs-bootstrap interval."""
    x = np.asarray(xs, float)
    y = np.asarray(ys, float)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError("xs and ys must be 1-d and of equal length")
    if len(x) < 3:
        raise ContractError("a power-law fit needs at least 3 points")
    if not (np.all(x > 0) and np.all(y > 0) and np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ContractError("power-law fit inputs must be finite and positive")
    if np.ptp(x) == 0:
        raise DegenerateFitError("all abscissae are equal")
    lx, ly = np.log(x), np.log(y)
    slope, icpt, lo, hi = _bootstrap(lx, ly, resamples, seed, level)
    return FitResult(slope, lo, hi, icpt, len(x), 0, resamples,
                     _residual_sd(lx, ly, slope, icpt))


def fit_semilog(ts, ps, resamples: int = 2000, seed: int = 0, level: float = 0.95,
                transform=None) -> FitResult:
    """Slope of log p against g(t) (g defaults to identity); decay gives a negative rate.

    Zero probabilities are dropped and counted; fewer than three usable
    points is a degenerate fit.
    """
    t = np.asarray(ts, float)
    p = np.asarray(ps, float)
    if t.shape != p.shape:
        raise ContractError("ts and ps differ in length")
    g = t if transform is None else np.asarray(transform(t), float)
    keep = (p > 0) & np.isfinite(p) & np.isfinite(g)
    if keep.sum() < 3 or np.ptp(g[keep]) == 0:
        raise DegenerateFitError(f"only {int(keep.sum())} positive probabilities to fit")
    gk, lp = g[keep], np.log(p[keep])
    slope, icpt, lo, hi = _bootstrap(gk, lp, resamples, seed, level)
    return FitResult(slope, lo, hi, icpt, int(keep.sum()), int((~keep).sum()), resamples,
                     _residual_sd(gk, lp, slope, icpt))


def tw_scale(n: int, h: float = 1.0) -> float:
    """Standard fluctuation scale of T((0,0), (n, hn)) for Exp(1) weights."""
    return h ** (-1 / 6) * (1 + math.sqrt(h)) ** (4 / 3) * n ** (1 / 3)


def shape_function(dx: float, dy: float) -> float:
    """First-order passage time (sqrt(dx) + sqrt(dy))^2."""
    return (math.sqrt(dx) + math.sqrt(dy)) ** 2


def is_log_convex_decreasing(p, tol: float = 0.0) -> bool:
    """Strictly decreasing with convex log on an equally spaced grid.

    A zero entry has log -inf and fails convexity.
    """
    p = np.asarray(p, float)
    if len(p) < 3 or np.any(p <= 0):
        return False
    lp = np.log(p)
    return bool(np.all(np.diff(lp) < 0) and np.all(np.diff(lp, 2) >= -tol))
