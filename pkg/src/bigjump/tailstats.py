"""Empirical tails of the scalarization and heavy-tail class diagnostics.

All class verdicts are statements about the simulated range only: a verdict
is read off the deepest threshold that still has enough exceedances, never
extrapolated to a limit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "DEFAULT_LEVELS",
    "MIN_EXCEEDANCES",
    "clopper_pearson",
    "EmpiricalTail",
    "TailEstimate",
    "RatioCurve",
    "CURVE_COLUMNS",
    "long_tail_curve",
    "dominated_variation_curve",
    "ConsistentVariationProfile",
    "consistent_variation_profile",
    "subexponential_curve",
    "HillEstimator",
    "hill_index",
    "ClassVerdicts",
    "classify_tail",
]

DEFAULT_LEVELS = (0.9, 0.99, 0.999, 0.9999)
MIN_EXCEEDANCES = 50
CURVE_COLUMNS = ("x", "lhs", "rhs", "ratio", "ci_lo", "ci_hi", "n_exceed")


def clopper_pearson(k, n, level=0.95):
    """Exact two-sided binomial interval for ``k`` successes out of ``n``."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(k < 0) or np.any(k > n):
        raise ValueError("need 0 <= k <= n")
    alpha = 1.0 - level
    with np.errstate(invalid="ignore"):
        lo = np.where(k > 0, stats.beta.ppf(alpha / 2, k, n - k + 1), 0.0)
        hi = np.where(k < n, stats.beta.ppf(1 - alpha / 2, k + 1, n - k), 1.0)
    return lo, hi


class EmpiricalTail(BaseEstimator):
    """Empirical survival function of a scalar sample.

    Parameters
    ----------
    level : float
        Default confidence level of :meth:`ci`.

    Attributes
    ----------
    sorted_values_ : ndarray
        Ascending order statistics.
    n_ : int
    """

    def __init__(self, level=0.95):
        self.level = level

    def fit(self, y, x=None):
        y = np.asarray(y, dtype=float).ravel()
        if y.size == 0:
            raise ValueError("need at least one sample")
        if not np.all(np.isfinite(y)):
            raise ValueError("sample contains non-finite values")
        self.sorted_values_ = np.sort(y, kind="stable")
        self.n_ = y.size
        return self

    def count_exceed(self, x):
        """Number of sample values strictly above ``x``."""
        check_is_fitted(self, "sorted_values_")
        return self.n_ - np.searchsorted(self.sorted_values_, x, side="right")

    def sf(self, x):
        return self.count_exceed(x) / self.n_

    eval = sf

    def ci(self, x, level=None):
        lo, hi = clopper_pearson(self.count_exceed(x), self.n_, self.level if level is None else level)
        return lo, hi

    def quantile(self, q):
        """Order statistic ``x_(ceil(q n))``, so ``sf(quantile(q)) <= 1 - q``."""
        check_is_fitted(self, "sorted_values_")
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise ValueError("quantile levels must lie in [0, 1]")
        idx = np.clip(np.ceil(q * self.n_).astype(np.int64) - 1, 0, self.n_ - 1)
        return self.sorted_values_[idx]


TailEstimate = EmpiricalTail


def _to_jsonable(a):
    return [None if (isinstance(v, float) and not math.isfinite(v)) else v for v in np.asarray(a, dtype=float).tolist()]


@dataclass
class RatioCurve:
    """LHS/RHS estimates on a threshold grid, with conservative ratio intervals.

    ``n_exceed`` holds the exceedance counts that decide resolvability; points
    with fewer than ``min_exceed`` are flagged and their ratio is NaN.
    """

    grid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    lhs_lo: np.ndarray
    lhs_hi: np.ndarray
    rhs_lo: np.ndarray
    rhs_hi: np.ndarray
    n_exceed: np.ndarray
    levels: np.ndarray | None = None
    min_exceed: int = MIN_EXCEEDANCES
    label: str = ""
    ratio: np.ndarray = field(init=False)
    ci_lo: np.ndarray = field(init=False)
    ci_hi: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("grid", "lhs", "rhs", "lhs_lo", "lhs_hi", "rhs_lo", "rhs_hi", "n_exceed"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.levels is not None:
            self.levels = np.asarray(self.levels, dtype=float)
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("threshold grid must be strictly increasing")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = self.lhs / self.rhs
            lo = self.lhs_lo / self.rhs_hi
            hi = np.where(self.rhs_lo > 0, self.lhs_hi / self.rhs_lo, np.inf)
        bad = ~self.resolvable
        self.ratio = np.where(bad, np.nan, ratio)
        self.ci_lo = np.where(bad, np.nan, lo)
        self.ci_hi = np.where(bad, np.nan, hi)

    @classmethod
    def from_counts(
        cls, grid, lhs_count, lhs_trials, rhs_count, rhs_trials, lhs_scale=1.0, rhs_scale=1.0,
        level=0.95, resolve_on="lhs", **kwargs,
    ):
        """Curve from binomial counts; estimates are ``scale * count / trials``.

        ``resolve_on`` picks the counts that decide resolvability: ``"lhs"``,
        ``"rhs"`` or ``"both"`` (the smaller of the two).
        """
        lhs_count = np.asarray(lhs_count)
        rhs_count = np.asarray(rhs_count)
        l_lo, l_hi = clopper_pearson(lhs_count, lhs_trials, level)
        r_lo, r_hi = clopper_pearson(rhs_count, rhs_trials, level)
        if resolve_on == "both":
            n_exceed = np.minimum(lhs_count, rhs_count)
        else:
            n_exceed = lhs_count if resolve_on == "lhs" else rhs_count
        return cls(
            grid=grid,
            lhs=lhs_scale * lhs_count / lhs_trials,
            rhs=rhs_scale * rhs_count / rhs_trials,
            lhs_lo=lhs_scale * l_lo, lhs_hi=lhs_scale * l_hi,
            rhs_lo=rhs_scale * r_lo, rhs_hi=rhs_scale * r_hi,
            n_exceed=n_exceed, **kwargs,
        )

    @property
    def resolvable(self) -> np.ndarray:
        return (self.n_exceed >= self.min_exceed) & (self.rhs > 0)

    def deepest_index(self) -> int | None:
        idx = np.flatnonzero(self.resolvable)
        return int(idx[-1]) if idx.size else None

    def index_of_level(self, level: float) -> int:
        if self.levels is None:
            raise ValueError("curve has no quantile levels attached")
        hits = np.flatnonzero(np.isclose(self.levels, level))
        if not hits.size:
            raise KeyError(f"level {level} not on the grid")
        return int(hits[0])

    def intersects(self, i: int, band) -> bool:
        lo, hi = band
        return bool(self.ci_lo[i] <= hi and self.ci_hi[i] >= lo)

    def rows(self):
        for i in range(self.grid.size):
            yield (self.grid[i], self.lhs[i], self.rhs[i], self.ratio[i], self.ci_lo[i], self.ci_hi[i], int(self.n_exceed[i]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(v)) if not isinstance(v, int) else v for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        d = {c: _to_jsonable(getattr(self, "grid" if c == "x" else c)) for c in CURVE_COLUMNS if c != "n_exceed"}
        d["n_exceed"] = [int(v) for v in self.n_exceed]
        d["levels"] = None if self.levels is None else self.levels.tolist()
        d["resolvable"] = self.resolvable.tolist()
        d["min_exceed"] = self.min_exceed
        d["label"] = self.label
        return d


def _grid(t: EmpiricalTail, levels):
    levels = np.asarray(levels, dtype=float)
    x = t.quantile(levels)
    keep = np.concatenate([[True], np.diff(x) > 0])
    return x[keep], levels[keep]


def _same_sample_curve(t, x, lhs_args, levels, label, level):
    """LHS and RHS both evaluated on the same sample ``t``."""
    return RatioCurve.from_counts(
        x, t.count_exceed(lhs_args), t.n_, t.count_exceed(x), t.n_,
        level=level, resolve_on="rhs", levels=levels, label=label,
    )


def long_tail_curve(t: EmpiricalTail, shift: float, levels=DEFAULT_LEVELS, level=0.95) -> RatioCurve:
    """``F(x - a) / F(x)`` on the quantile grid."""
    check_is_fitted(t, "sorted_values_")
    if shift < 0:
        raise ValueError("shift must be nonnegative")
    if shift >= t.sorted_values_[-1]:
        raise ValueError("shift exceeds the sample range; no resolvable grid")
    x, lv = _grid(t, levels)
    return _same_sample_curve(t, x, x - shift, lv, f"L(a={shift})", level)


def dominated_variation_curve(t: EmpiricalTail, b: float, levels=DEFAULT_LEVELS, level=0.95) -> RatioCurve:
    """``F(b x) / F(x)`` on the quantile grid."""
    check_is_fitted(t, "sorted_values_")
    if not 0 < b <= 1:
        raise ValueError("b must lie in (0, 1]")
    x, lv = _grid(t, levels)
    return _same_sample_curve(t, x, b * x, lv, f"D(b={b})", level)


@dataclass
class ConsistentVariationProfile:
    b_grid: np.ndarray
    curves: list
    plateau: np.ndarray
    plateau_lo: np.ndarray
    plateau_hi: np.ndarray
    growing: np.ndarray

    def to_dict(self) -> dict:
        return {
            "b_grid": self.b_grid.tolist(),
            "plateau": _to_jsonable(self.plateau),
            "plateau_lo": _to_jsonable(self.plateau_lo),
            "plateau_hi": _to_jsonable(self.plateau_hi),
            "growing": self.growing.tolist(),
        }


def _plateau_levels(t: EmpiricalTail):
    # exceedance probabilities from 1e-1 down to the deepest resolvable one
    deepest = MIN_EXCEEDANCES / t.n_
    if deepest >= 0.1:
        return np.array([0.9])
    return 1.0 - np.logspace(-1, math.log10(deepest), 25)


def _growth(curve: RatioCurve, tol: float) -> bool:
    """Whether the ratio rises beyond its CI between the 99% point and the deepest one."""
    i = curve.deepest_index()
    if i is None or curve.levels is None:
        return False
    ref = np.flatnonzero(curve.resolvable & (curve.levels >= 0.99 - 1e-12))
    if ref.size < 2:
        ref = np.flatnonzero(curve.resolvable)
    j = int(ref[0])
    if j >= i:
        return False
    return bool(curve.ci_lo[i] > curve.ci_hi[j] * (1.0 + tol))


def consistent_variation_profile(t: EmpiricalTail, b_grid, growth_tol=0.1, level=0.95) -> ConsistentVariationProfile:
    """Per-``b`` plateau of ``F(b x) / F(x)``: median ratio over the top decade of ``x``."""
    check_is_fitted(t, "sorted_values_")
    b_grid = np.asarray(b_grid, dtype=float)
    if b_grid.size == 0 or np.any((b_grid <= 0) | (b_grid > 1)) or np.any(np.diff(b_grid) < 0):
        raise ValueError("b_grid must be ascending within (0, 1]")
    levels = _plateau_levels(t)
    curves, plateau, p_lo, p_hi, growing = [], [], [], [], []
    for b in b_grid:
        c = dominated_variation_curve(t, b, levels=levels, level=level)
        curves.append(c)
        i = c.deepest_index()
        if i is None:
            plateau.append(np.nan), p_lo.append(np.nan), p_hi.append(np.nan), growing.append(False)
            continue
        top = c.resolvable & (c.grid >= c.grid[i] / 10.0)
        plateau.append(float(np.median(c.ratio[top])))
        p_lo.append(float(np.median(c.ci_lo[top])))
        p_hi.append(float(np.median(c.ci_hi[top])))
        growing.append(_growth(c, growth_tol))
    return ConsistentVariationProfile(
        b_grid, curves, np.array(plateau), np.array(p_lo), np.array(p_hi), np.array(growing, dtype=bool)
    )


def subexponential_curve(batch1, batch2, ruin_set, levels=DEFAULT_LEVELS, level=0.95) -> RatioCurve:
    """``P[Y' + Y'' > x] / P[Y > x]`` from two independent batches of one law."""
    if batch1 is batch2 or batch1.seed == batch2.seed or np.shares_memory(batch1.vectors, batch2.vectors):
        raise ValueError("batches must be independent draws; the same batch was passed twice")
    if batch1.law != batch2.law:
        raise ValueError("batches come from different laws")
    if batch1.n != batch2.n:
        raise ValueError("batches must have equal size")
    y1 = batch1.y_a(ruin_set)
    y2 = batch2.y_a(ruin_set)
    single = EmpiricalTail().fit(np.concatenate([y1, y2]))
    pair = EmpiricalTail().fit(y1 + y2)
    x, lv = _grid(single, levels)
    return RatioCurve.from_counts(
        x, pair.count_exceed(x), pair.n_, single.count_exceed(x), single.n_,
        level=level, resolve_on="rhs", levels=lv, label="S(n=2)",
    )


class HillEstimator(BaseEstimator):
    """Hill estimate of the tail index from the ``k`` largest values.

    Parameters
    ----------
    k : int
        Number of top order statistics, ``10 <= k <= n / 10``.
    level : float
        Coverage of the asymptotic interval ``alpha (1 +- z / sqrt(k))``.
    check_k : int or None
        Smaller window used for the stability flag; defaults to ``max(10, k // 10)``.

    Attributes
    ----------
    alpha_, ci_, threshold_, alpha_check_, unstable_
    """

    def __init__(self, k=1000, level=0.95, check_k=None):
        self.k = k
        self.level = level
        self.check_k = check_k

    @staticmethod
    def _hill(desc, k):
        u = desc[k]
        if u <= 0:
            raise ValueError("nonpositive order statistic inside the top-k window")
        return k / np.sum(np.log(desc[:k] / u))

    def fit(self, y, x=None):
        y = np.asarray(y, dtype=float).ravel()
        n = y.size
        k = int(self.k)
        if not (10 <= k <= n / 10):
            raise ValueError(f"k={k} outside [10, n/10] for n={n}")
        desc = -np.sort(-np.partition(y, n - k - 1)[n - k - 1:])
        self.alpha_ = float(self._hill(desc, k))
        z = stats.norm.ppf(0.5 + self.level / 2)
        self.ci_ = (self.alpha_ * (1 - z / math.sqrt(k)), self.alpha_ * (1 + z / math.sqrt(k)))
        self.threshold_ = float(desc[k])
        kc = int(self.check_k or max(10, k // 10))
        self.alpha_check_ = float(self._hill(desc, kc))
        spread = z * math.sqrt(self.alpha_**2 / k + self.alpha_check_**2 / kc)
        self.unstable_ = bool(abs(self.alpha_check_ - self.alpha_) > spread)
        return self


def hill_index(t: EmpiricalTail, k: int, level=0.95) -> HillEstimator:
    check_is_fitted(t, "sorted_values_")
    return HillEstimator(k=k, level=level).fit(t.sorted_values_)


@dataclass
class ClassVerdicts:
    long_tailed: bool
    dominated: bool
    consistent: bool
    subexponential: bool | None
    rules: dict
    details: dict

    @property
    def ordering_consistent(self) -> bool:
        """A positive C verdict must come with positive D and L verdicts."""
        return not self.consistent or (self.dominated and self.long_tailed)

    def to_dict(self) -> dict:
        return {
            "L": self.long_tailed, "D": self.dominated, "C": self.consistent,
            "S": self.subexponential, "ordering_consistent": self.ordering_consistent,
            "rules": self.rules, "details": self.details,
        }


def classify_tail(
    t: EmpiricalTail, shift=1.0, b=0.5, b_grid=(0.8, 0.9, 0.95, 0.99), s_curve=None,
    l_tol=0.15, d_max=10.0, c_tol=0.05, growth_tol=0.1, s_band=(1.8, 2.2),
) -> ClassVerdicts:
    """CI-based verdicts at the deepest resolvable grid point.

    Each verdict reads "consistent with the class over the simulated range".
    """
    lc = long_tail_curve(t, shift)
    dc = dominated_variation_curve(t, b)
    prof = consistent_variation_profile(t, b_grid, growth_tol=growth_tol)

    i = lc.deepest_index()
    long_tailed = i is not None and lc.intersects(i, (1.0 / (1.0 + l_tol), 1.0 + l_tol))
    j = dc.deepest_index()
    dominated = j is not None and dc.intersects(j, (1.0, d_max)) and not _growth(dc, growth_tol)
    # each plateau may not exceed the upper CI of the plateau at the next smaller b
    monotone = np.all(prof.plateau[1:] <= prof.plateau_hi[:-1])
    consistent = bool(
        np.isfinite(prof.plateau).all()
        and not prof.growing.any()
        and monotone
        and prof.plateau_lo[-1] <= 1.0 + c_tol
    )
    subexp = None
    if s_curve is not None:
        k = s_curve.deepest_index()
        subexp = k is not None and s_curve.intersects(k, s_band)
    rules = {
        "L": f"ratio CI at deepest resolvable x meets [1/(1+{l_tol}), 1+{l_tol}]",
        "D": f"ratio CI at deepest resolvable x meets [1, {d_max}] and no growth beyond CI (tol {growth_tol})",
        "C": f"no plateau grows with x, plateaus nonincreasing in b, plateau at b={float(b_grid[-1])} within 1+{c_tol}",
        "S": f"two-fold ratio CI at deepest resolvable x meets {list(s_band)}",
        "min_exceedances": MIN_EXCEEDANCES,
    }
    details = {"L": lc.to_dict(), "D": dc.to_dict(), "C": prof.to_dict()}
    if s_curve is not None:
        details["S"] = s_curve.to_dict()
    return ClassVerdicts(bool(long_tailed), bool(dominated), consistent, subexp, rules, details)
