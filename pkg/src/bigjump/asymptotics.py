"""Monte Carlo verifiers for the single-big-jump family of tail asymptotics.

Every verifier follows the same pattern: a pilot draw fixes a threshold grid
at quantiles of the single-claim scalarization, then chunked simulation
returns integer exceedance counts for both sides of the asymptotic relation
on shared draws.  The verdict is read at the deepest grid point with enough
exceedances and is a statement about the simulated range only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import RuinSet, sandwich_margin, y_a_translated
from .parallel import CHUNK_SIZE, map_chunks, sum_counts
from .randsrc import (
    CountLaw,
    MarginalLaw,
    SeedSpec,
    Stream,
    ThetaLaw,
    VectorLaw,
    draw_counts,
    draw_dependent_sequence,
)
from .tailstats import DEFAULT_LEVELS, MIN_EXCEEDANCES, EmpiricalTail, RatioCurve, clopper_pearson

__all__ = [
    "PASS",
    "FAIL",
    "INCONCLUSIVE",
    "PILOT_CAP",
    "REL_SLACK",
    "VerifierReport",
    "pilot_grid",
    "compound_sums",
    "check_pathwise_subadditivity",
    "verify_finite_sum_sbj",
    "verify_random_sum",
    "verify_scale_mixture",
    "verify_convolution_maxsum",
    "verify_kesten_growth",
    "verify_translation_insensitivity",
    "check_dependence_assumption",
    "sample_dependence_pairs",
]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
PILOT_CAP = 1 << 21
REL_SLACK = 1e-12
REPORT_SCHEMA_VERSION = 1


@dataclass
class VerifierReport:
    """Outcome of one verifier run.

    ``rule`` states the acceptance rule in words; ``verdict`` is ``"pass"``
    only when that rule was met.  ``curve`` is None for verifiers that count
    violations or work at a single threshold; ``tables`` then carries the
    per-row numbers.
    """

    theorem_tag: str
    verdict: str
    rule: str
    curve: RatioCurve | None = None
    violations: int | None = None
    seed: int | None = None
    config_hash: str | None = None
    stats: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def headline(self) -> dict:
        """Deepest resolvable point of the curve, for summary tables."""
        if self.curve is None:
            return {"deepest_x": None, "ratio": None, "ci_lo": None, "ci_hi": None}
        i = self.curve.deepest_index()
        if i is None:
            return {"deepest_x": None, "ratio": None, "ci_lo": None, "ci_hi": None}
        c = self.curve
        return {
            "deepest_x": float(c.grid[i]), "ratio": float(c.ratio[i]),
            "ci_lo": float(c.ci_lo[i]), "ci_hi": float(c.ci_hi[i]),
        }

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "theorem_tag": self.theorem_tag,
            "verdict": self.verdict,
            "rule": self.rule,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "violations": self.violations,
            "headline": self.headline(),
            "curve": None if self.curve is None else self.curve.to_dict(),
            "stats": _jsonable(self.stats),
            "tables": _jsonable(self.tables),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _master(seed) -> int:
    return seed.master_seed if isinstance(seed, SeedSpec) else int(seed)


def _check_sizes(n_paths):
    if int(n_paths) < 1:
        raise ValueError("n_paths must be at least 1")


def _band_verdict(curve: RatioCurve, band) -> str:
    i = curve.deepest_index()
    if i is None:
        return INCONCLUSIVE
    return PASS if curve.intersects(i, band) else FAIL


def _band_rule(band, what="ratio") -> str:
    return (
        f"{what} CI at the deepest grid point with >= {MIN_EXCEEDANCES} exceedances on each side "
        f"intersects [{band[0]}, {band[1]}]"
    )


def _counts_above(y, grid) -> np.ndarray:
    """``#{y > g}`` for each grid value, via one sort."""
    s = np.sort(np.asarray(y, dtype=float).ravel())
    return (s.size - np.searchsorted(s, grid, side="right")).astype(np.int64)


def pilot_grid(ruin_set: RuinSet, law: VectorLaw, n_pilot: int, seed, levels=DEFAULT_LEVELS):
    """Threshold grid at quantiles of the single-claim ``Y_A``.

    Drawn from its own stream, so the grid never shares draws with the
    counts it is used for.  Duplicate quantiles (atoms) are dropped.
    """
    if n_pilot < 1:
        raise ValueError("n_pilot must be at least 1")
    rng = SeedSpec(_master(seed), Stream.PILOT, 0).generator()
    y = ruin_set.scalarize(law.sample(rng, int(n_pilot)))
    levels = np.asarray(levels, dtype=float)
    x = EmpiricalTail().fit(y).quantile(levels)
    keep = np.concatenate([[True], np.diff(x) > 0]) & (x > 0)
    return x[keep], levels[keep]


def _grid_for(ruin_set, law, n_paths, seed, levels, n_pilot, grid):
    if grid is not None:
        g = np.asarray(grid, dtype=float)
        return g, None
    n_pilot = min(int(n_paths), PILOT_CAP) if n_pilot is None else int(n_pilot)
    return pilot_grid(ruin_set, law, n_pilot, seed, levels)


# -- finite sums ---------------------------------------------------------------


def _sbj_chunk(index, size, ruin_set, law, n, structure, shock, master, grid):
    x = draw_dependent_sequence(
        law, n, structure, SeedSpec(master, Stream.CLAIMS, index), n_paths=size, shock=shock
    )
    ys = ruin_set.scalarize(x.sum(axis=1))
    yi = ruin_set.scalarize(x)
    ysum = yi.sum(axis=1)
    exc = yi[:, :, None] > grid
    per_path = exc.sum(axis=1)
    violations = int(np.count_nonzero(ys > ysum + REL_SLACK * np.maximum(ysum, 1.0)))
    return np.concatenate([
        _counts_above(ys, grid),
        exc.sum(axis=(0, 1)),
        exc.any(axis=1).sum(axis=0),
        _counts_above(ysum, grid),
        (per_path * (per_path - 1) // 2).sum(axis=0),
        [violations],
    ]).astype(np.int64)


def _unpack(total, g, names):
    out = {}
    for k, name in enumerate(names):
        out[name] = total[k * g:(k + 1) * g]
    out["violations"] = int(total[len(names) * g])
    return out


def verify_finite_sum_sbj(
    ruin_set: RuinSet, law: VectorLaw, n_summands=2, structure="independent", n_paths=10**6,
    seed=0, band=(0.9, 1.1), levels=DEFAULT_LEVELS, shock: MarginalLaw | None = None,
    workers=1, chunk_size=CHUNK_SIZE, n_pilot=None, grid=None,
) -> VerifierReport:
    """``P[S_n in xA]`` against ``sum_i P[X^(i) in xA]`` on shared draws.

    Also checks two exact count relations on the same tuples: the sum of
    scalarizations dominates the scalarized sum, and the union-bound lower
    bound (singles minus pairs) holds.
    """
    _check_sizes(n_paths)
    n = int(n_summands)
    master = _master(seed)
    grid, lv = _grid_for(ruin_set, law, n_paths, master, levels, n_pilot, grid)
    g = grid.size
    results = map_chunks(
        _sbj_chunk, n_paths, ruin_set, law, n, structure, shock, master, grid,
        workers=workers, chunk_size=chunk_size,
    )
    c = _unpack(sum_counts(results), g, ("lhs", "singles", "union", "ysum", "pairs"))
    curve = RatioCurve.from_counts(
        grid, c["lhs"], n_paths, c["singles"], n_paths * n, rhs_scale=n,
        resolve_on="both", levels=lv, label=f"sum n={n} {structure}",
    )
    dominance = bool(np.all(c["lhs"] <= c["ysum"]))
    bonferroni = bool(np.all(c["lhs"] >= c["union"]) and np.all(c["union"] >= c["singles"] - c["pairs"]))
    return VerifierReport(
        theorem_tag="single-big-jump",
        verdict=_band_verdict(curve, band),
        rule=_band_rule(band),
        curve=curve,
        violations=c["violations"],
        seed=master,
        stats={
            "n_summands": n, "structure": structure, "n_paths": int(n_paths), "band": list(band),
            "counts": {k: c[k] for k in ("lhs", "singles", "union", "ysum", "pairs")},
            "dominance_holds": dominance, "bonferroni_holds": bonferroni,
        },
    )


def check_pathwise_subadditivity(ruin_set: RuinSet, vectors, rel_slack=REL_SLACK) -> VerifierReport:
    """Count tuples with ``y_a(sum X) > sum y_a(X)`` beyond the relative slack.

    ``vectors`` has shape ``(n_tuples, n, d)``.
    """
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 3:
        raise ValueError("vectors must have shape (n_tuples, n, d)")
    ys = ruin_set.scalarize(x.sum(axis=1))
    ysum = ruin_set.scalarize(x).sum(axis=1)
    scale = np.maximum(np.abs(ysum), 1.0)
    bad = int(np.count_nonzero(ys > ysum + rel_slack * scale))
    return VerifierReport(
        theorem_tag="pathwise-subadditivity",
        verdict=PASS if bad == 0 else FAIL,
        rule=f"zero tuples with y_a(sum X) > sum y_a(X) + {rel_slack} * max(1, sum y_a(X))",
        violations=bad,
        stats={"n_tuples": int(x.shape[0]), "n": int(x.shape[1]),
               "max_excess": float(np.max(ys - ysum)) if x.shape[0] else 0.0},
    )


# -- random sums ---------------------------------------------------------------


def compound_sums(first, counts, extra, first_factor=None, extra_factor=None) -> np.ndarray:
    """Per-path sums ``sum_{i <= N} f_i X^(i)``.

    ``first`` holds one claim per path (used only where ``N >= 1``) and
    ``extra`` the ``sum(max(N - 1, 0))`` remaining claims in path order.  The
    factors are optional; omitting them is the undiscounted sum.
    """
    counts = np.asarray(counts)
    size = counts.size
    s = first * first_factor[:, None] if first_factor is not None else first.copy()
    s[counts == 0] = 0.0
    n_extra = np.maximum(counts - 1, 0)
    if extra.shape[0]:
        owner = np.repeat(np.arange(size), n_extra)
        e = extra * extra_factor[:, None] if extra_factor is not None else extra
        for j in range(s.shape[1]):
            s[:, j] += np.bincount(owner, weights=e[:, j], minlength=size)
    return s


def _draw_compound_claims(law, counts, master, index):
    first = law.sample(SeedSpec(master, Stream.CLAIMS, index).generator(), counts.size)
    m = int(np.maximum(counts - 1, 0).sum())
    extra = law.sample(SeedSpec(master, Stream.EXTRA_CLAIMS, index).generator(), m)
    return first, extra


def _random_sum_chunk(index, size, ruin_set, law, count_law, master, grid):
    counts = draw_counts(count_law, size, SeedSpec(master, Stream.COUNTS, index))
    first, extra = _draw_compound_claims(law, counts, master, index)
    y = ruin_set.scalarize(compound_sums(first, counts, extra))
    y1 = ruin_set.scalarize(first)
    return np.concatenate([_counts_above(y, grid), _counts_above(y1, grid)])


def verify_random_sum(
    ruin_set: RuinSet, law: VectorLaw, count_law: CountLaw, n_paths=10**6, seed=0,
    band=(0.85, 1.15), levels=DEFAULT_LEVELS, workers=1, chunk_size=CHUNK_SIZE,
    n_pilot=None, grid=None, readout_level=0.999,
) -> VerifierReport:
    """``P[S_N in xA]`` against ``E[N] P[X in xA]``.

    The first claim of every path drives the right side, and paths add their
    remaining claims on top of it, so both sides share draws and ``N = 1``
    gives identical counts.
    """
    _check_sizes(n_paths)
    if not isinstance(count_law, CountLaw):
        raise TypeError("count_law must be a CountLaw")
    master = _master(seed)
    grid, lv = _grid_for(ruin_set, law, n_paths, master, levels, n_pilot, grid)
    g = grid.size
    total = sum_counts(map_chunks(
        _random_sum_chunk, n_paths, ruin_set, law, count_law, master, grid,
        workers=workers, chunk_size=chunk_size,
    ))
    lhs, single = total[:g], total[g:]
    en = count_law.expectation()
    curve = RatioCurve.from_counts(
        grid, lhs, n_paths, single, n_paths, rhs_scale=en,
        resolve_on="both", levels=lv, label=f"random sum {count_law.kind}",
    )
    stats = {"count_law": count_law.to_dict(), "E[N]": en, "n_paths": int(n_paths),
             "band": list(band), "counts": {"lhs": lhs, "single": single}}
    stats.update(_level_readout(curve, readout_level, band))
    return VerifierReport(
        theorem_tag="random-sum", verdict=_band_verdict(curve, band), rule=_band_rule(band),
        curve=curve, seed=master, stats=stats,
    )


def _level_readout(curve, level, band) -> dict:
    """The curve at a fixed quantile level, reported next to the deepest-point verdict."""
    if curve.levels is None or level is None:
        return {}
    try:
        i = curve.index_of_level(level)
    except KeyError:
        return {}
    ok = bool(curve.resolvable[i]) and curve.intersects(i, band)
    return {"readout": {
        "level": level, "x": float(curve.grid[i]), "ratio": float(curve.ratio[i]),
        "ci": [float(curve.ci_lo[i]), float(curve.ci_hi[i])], "in_band": ok,
    }}


# -- scale mixtures ------------------------------------------------------------


def _mixture_chunk(index, size, ruin_set, law, theta, n, master, grid):
    x = draw_dependent_sequence(law, n, "independent", SeedSpec(master, Stream.CLAIMS, index), n_paths=size)
    rng = SeedSpec(master, Stream.THETA, index).generator()
    if theta.mode == "componentwise":
        th = theta.sample(rng, (size, n, law.dims))
        mixed = x * th
    else:
        th = theta.sample(rng, (size, n))
        mixed = x * th[:, :, None]
    lo, hi = theta.bounds
    ys = ruin_set.scalarize(mixed.sum(axis=1))
    ym = ruin_set.scalarize(mixed)
    y1 = ruin_set.scalarize(x[:, 0])
    return np.concatenate([
        _counts_above(ys, grid),
        _counts_above(ym, grid),
        _counts_above(ym[:, 0], grid),
        _counts_above(y1, grid),
        _counts_above(lo * y1, grid),
        _counts_above(hi * y1, grid),
    ])


def verify_scale_mixture(
    ruin_set: RuinSet, law: VectorLaw, theta: ThetaLaw, n_summands=2, n_paths=10**6, seed=0,
    band=(0.9, 1.1), levels=DEFAULT_LEVELS, tail_index=None, workers=1, chunk_size=CHUNK_SIZE,
    n_pilot=None, grid=None,
) -> VerifierReport:
    """Single big jump for ``sum Theta^(i) X^(i)`` plus the scaling bracket.

    The bracket compares ``P[Theta Y > x] / P[Y > x]`` with
    ``[a^alpha, b^alpha]`` for ``Theta`` supported on ``[a, b]`` when the law
    has a tail index ``alpha``; the pathwise ordering
    ``#{aY > x} <= #{Theta Y > x} <= #{bY > x}`` is checked exactly.
    """
    _check_sizes(n_paths)
    if not isinstance(theta, ThetaLaw):
        raise TypeError("theta must be a ThetaLaw (bounded laws only)")
    n = int(n_summands)
    master = _master(seed)
    grid, lv = _grid_for(ruin_set, law, n_paths, master, levels, n_pilot, grid)
    g = grid.size
    total = sum_counts(map_chunks(
        _mixture_chunk, n_paths, ruin_set, law, theta, n, master, grid,
        workers=workers, chunk_size=chunk_size,
    ))
    lhs, singles, mixed1, plain1, low1, high1 = (total[k * g:(k + 1) * g] for k in range(6))
    curve = RatioCurve.from_counts(
        grid, lhs, n_paths, singles, n_paths * n, rhs_scale=n,
        resolve_on="both", levels=lv, label=f"mixed sum n={n}",
    )
    bracket = RatioCurve.from_counts(
        grid, mixed1, n_paths, plain1, n_paths, resolve_on="rhs", levels=lv, label="theta bracket",
    )
    a, b = theta.bounds
    alpha = law.tail_index if tail_index is None else tail_index
    ordered = bool(np.all(low1 <= mixed1) and np.all(mixed1 <= high1))
    bracket_ok = ordered
    analytic = None
    if alpha is not None:
        analytic = (a**alpha, b**alpha)
        res = bracket.resolvable
        bracket_ok = ordered and bool(np.all(
            (bracket.ci_hi[res] >= analytic[0]) & (bracket.ci_lo[res] <= analytic[1])
        ))
    verdict = _band_verdict(curve, band)
    if verdict == PASS and not bracket_ok:
        verdict = FAIL
    rule = _band_rule(band) + "; theta bracket ordered pathwise"
    if analytic is not None:
        rule += " and its CI meets [a^alpha, b^alpha] at every resolvable point"
    with np.errstate(divide="ignore", invalid="ignore"):
        k1 = low1 / plain1
        k2 = high1 / plain1
    return VerifierReport(
        theorem_tag="scale-mixture", verdict=verdict, rule=rule, curve=curve, seed=master,
        stats={
            "theta": theta.to_dict(), "n_summands": n, "n_paths": int(n_paths), "band": list(band),
            "bracket_ordered": ordered, "bracket_ok": bracket_ok,
            "analytic_bracket": None if analytic is None else list(analytic),
            "empirical_K1": k1, "empirical_K2": k2,
            "counts": {"lhs": lhs, "singles": singles, "mixed_first": mixed1, "plain_first": plain1,
                       "low_first": low1, "high_first": high1},
        },
        tables={"bracket": bracket.to_dict()},
    )


# -- convolution ---------------------------------------------------------------


def _convolution_chunk(index, size, ruin_set, law1, law2, master, grid):
    if law1 == law2:
        x = draw_dependent_sequence(law1, 2, "independent", SeedSpec(master, Stream.CLAIMS, index), n_paths=size)
        x1, x2 = x[:, 0], x[:, 1]
    else:
        x1 = law1.sample(SeedSpec(master, Stream.CLAIMS, index).generator(), size)
        x2 = law2.sample(SeedSpec(master, Stream.EXTRA_CLAIMS, index).generator(), size)
    return np.concatenate([
        _counts_above(ruin_set.scalarize(x1 + x2), grid),
        _counts_above(ruin_set.scalarize(x1), grid),
        _counts_above(ruin_set.scalarize(x2), grid),
    ])


def verify_convolution_maxsum(
    ruin_set: RuinSet, law1: VectorLaw, law2: VectorLaw, n_paths=10**6, seed=0, band=(0.9, 1.1),
    levels=DEFAULT_LEVELS, workers=1, chunk_size=CHUNK_SIZE, n_pilot=None, grid=None,
) -> VerifierReport:
    """``P[X1 + X2 in xA]`` against ``P[X1 in xA] + P[X2 in xA]``.

    Equal laws reuse the two-summand draw layout, so they reproduce the
    ``n = 2`` single-big-jump counts.  The grid follows ``law1``.
    """
    _check_sizes(n_paths)
    if law1.dims != law2.dims:
        raise ValueError("laws must have the same dimension")
    master = _master(seed)
    grid, lv = _grid_for(ruin_set, law1, n_paths, master, levels, n_pilot, grid)
    g = grid.size
    total = sum_counts(map_chunks(
        _convolution_chunk, n_paths, ruin_set, law1, law2, master, grid,
        workers=workers, chunk_size=chunk_size,
    ))
    lhs, c1, c2 = total[:g], total[g:2 * g], total[2 * g:]
    curve = RatioCurve.from_counts(
        grid, lhs, n_paths, c1 + c2, 2 * n_paths, rhs_scale=2.0,
        resolve_on="both", levels=lv, label="convolution",
    )
    return VerifierReport(
        theorem_tag="max-sum-equivalence", verdict=_band_verdict(curve, band), rule=_band_rule(band),
        curve=curve, seed=master,
        stats={"n_paths": int(n_paths), "band": list(band),
               "counts": {"lhs": lhs, "law1": c1, "law2": c2}},
    )


# -- Kesten-type growth --------------------------------------------------------


def _kesten_chunk(index, size, ruin_set, law, n_max, theta, master, x_level):
    x = draw_dependent_sequence(law, n_max, "independent", SeedSpec(master, Stream.CLAIMS, index), n_paths=size)
    if theta is not None:
        rng = SeedSpec(master, Stream.THETA, index).generator()
        if theta.mode == "componentwise":
            x = x * theta.sample(rng, x.shape)
        else:
            x = x * theta.sample(rng, (size, n_max))[:, :, None]
    partial = ruin_set.scalarize(np.cumsum(x, axis=1))
    first = ruin_set.scalarize(x[:, 0])
    return np.concatenate([
        np.count_nonzero(partial > x_level, axis=0),
        [np.count_nonzero(first > x_level)],
    ]).astype(np.int64)


def verify_kesten_growth(
    ruin_set: RuinSet, law: VectorLaw, n_max=10, n_paths=10**6, seed=0, eps=0.5, quantile=0.99,
    theta: ThetaLaw | None = None, workers=1, chunk_size=CHUNK_SIZE, n_pilot=None, x_level=None,
) -> VerifierReport:
    """Ratios ``r_n = P[S_n in xA] / (n P[X in xA])`` at one fixed ``x``.

    ``x`` is the ``quantile`` of the single-claim ``Y_A`` from the pilot.
    Passes when ``r_n / (1 + eps)^n`` is nonincreasing from ``n = 3`` on;
    ``K_hat`` is its maximum and ``eps_hat`` the smallest growth rate that
    would keep the tail of the sequence nonincreasing.
    """
    _check_sizes(n_paths)
    n_max = int(n_max)
    if not 1 <= n_max <= 20:
        raise ValueError("n_max must lie in [1, 20]")
    master = _master(seed)
    if x_level is None:
        grid, _ = _grid_for(ruin_set, law, n_paths, master, (quantile,), n_pilot, None)
        x_level = float(grid[0])
    total = sum_counts(map_chunks(
        _kesten_chunk, n_paths, ruin_set, law, n_max, theta, master, float(x_level),
        workers=workers, chunk_size=chunk_size,
    ))
    partial, first = total[:n_max], int(total[n_max])
    ns = np.arange(1, n_max + 1)
    rule = (
        f"r_n / (1+{eps})^n nonincreasing for n >= 3 at x = {quantile:g} quantile "
        f"(needs >= {MIN_EXCEEDANCES} single-claim exceedances)"
    )
    if first < MIN_EXCEEDANCES:
        return VerifierReport(
            theorem_tag="kesten-bound", verdict=INCONCLUSIVE, rule=rule, seed=master,
            stats={"x": float(x_level), "first_exceedances": first, "n_paths": int(n_paths)},
        )
    r = partial / (ns * first)
    q = r / (1.0 + eps) ** ns
    tail = q[2:]
    monotone = bool(np.all(np.diff(tail) <= 0)) if tail.size > 1 else True
    steps = r[3:] / r[2:-1] if n_max > 3 else np.array([])
    eps_hat = float(max(0.0, steps.max() - 1.0)) if steps.size else 0.0
    return VerifierReport(
        theorem_tag="kesten-bound", verdict=PASS if monotone else FAIL, rule=rule, seed=master,
        stats={
            "x": float(x_level), "quantile": quantile, "eps": eps, "n_paths": int(n_paths),
            "first_exceedances": first, "K_hat": float(q.max()), "argmax_n": int(ns[np.argmax(q)]),
            "eps_hat": eps_hat, "monotone_from_3": monotone,
        },
        tables={"growth": {"n": ns, "lhs_count": partial, "r_n": r, "r_n_over_growth": q}},
    )


# -- translation ---------------------------------------------------------------


def _translation_chunk(index, size, ruin_set, law, shift, margin, master, grid):
    x = law.sample(SeedSpec(master, Stream.CLAIMS, index).generator(), size)
    y = ruin_set.scalarize(x)
    yt = y_a_translated(ruin_set, x, shift)
    inner = y[:, None] > grid + margin
    mid = yt[:, None] > grid
    outer = y[:, None] > grid - margin
    violations = np.count_nonzero(inner & ~mid) + np.count_nonzero(mid & ~outer)
    return np.concatenate([mid.sum(axis=0), _counts_above(y, grid), [violations]]).astype(np.int64)


def verify_translation_insensitivity(
    ruin_set: RuinSet, law: VectorLaw, shift, n_paths=10**6, seed=0, band=(0.9, 1.1),
    levels=DEFAULT_LEVELS, workers=1, chunk_size=CHUNK_SIZE, n_pilot=None, grid=None,
) -> VerifierReport:
    """``P[X in xA + a] / P[X in xA]`` on shared draws.

    Also counts draws breaking the sandwich ``(x+u1)A ⊂ xA + a ⊂ (x-u1)A``,
    which must be zero.
    """
    _check_sizes(n_paths)
    a = np.asarray(shift, dtype=float)
    margin = sandwich_margin(ruin_set, a)
    master = _master(seed)
    grid, lv = _grid_for(ruin_set, law, n_paths, master, levels, n_pilot, grid)
    g = grid.size
    total = sum_counts(map_chunks(
        _translation_chunk, n_paths, ruin_set, law, a, margin, master, grid,
        workers=workers, chunk_size=chunk_size,
    ))
    shifted, plain, violations = total[:g], total[g:2 * g], int(total[2 * g])
    curve = RatioCurve.from_counts(
        grid, shifted, n_paths, plain, n_paths, resolve_on="rhs", levels=lv, label="translation",
    )
    verdict = _band_verdict(curve, band)
    if violations:
        verdict = FAIL
    return VerifierReport(
        theorem_tag="translation-insensitivity", verdict=verdict,
        rule=_band_rule(band) + "; zero sandwich violations",
        curve=curve, violations=violations, seed=master,
        stats={"shift": a, "sandwich_margin": margin, "n_paths": int(n_paths), "band": list(band),
               "counts": {"shifted": shifted, "plain": plain}},
    )


# -- dependence assumptions ----------------------------------------------------

_RD_BIN_LEVELS = (0.9, 0.95, 0.98, 0.99, 0.995, 0.999, 1.0)


def check_dependence_assumption(
    yi, yj, which="QAI", levels=DEFAULT_LEVELS, threshold=0.05, c_max=3.0, min_cell=20, level=0.95,
) -> VerifierReport:
    """Empirical check of an asymptotic-independence condition on paired samples.

    QAI estimates ``P[Y_i > x, Y_j > x] / (P[Y_i > x] + P[Y_j > x])`` and TAI
    ``P[Y_i > x | Y_j > x]``; both pass when the estimate does not rise
    beyond its CI along the grid and sits below ``threshold`` at the deepest
    point.  RD bins ``Y_j`` above its 90% quantile and reports
    ``C_hat = max P[Y_i > x | Y_j in bin] / P[Y_i > x]`` over cells with at
    least ``min_cell`` expected exceedances; it passes when ``C_hat <= c_max``.
    """
    yi = np.asarray(yi, dtype=float).ravel()
    yj = np.asarray(yj, dtype=float).ravel()
    if yi.shape != yj.shape or yi.size == 0:
        raise ValueError("paired samples must be non-empty and of equal length")
    which = which.upper()
    if which not in ("QAI", "TAI", "RD"):
        raise ValueError("which must be one of QAI, TAI, RD")
    n = yi.size
    pooled = EmpiricalTail().fit(np.concatenate([yi, yj]))
    levels = np.asarray(levels, dtype=float)
    grid = pooled.quantile(levels)
    keep = np.concatenate([[True], np.diff(grid) > 0])
    grid, levels = grid[keep], levels[keep]
    ci_count = _counts_above(yi, grid)
    cj_count = _counts_above(yj, grid)
    if which == "RD":
        return _regression_dependence(yi, yj, grid, ci_count, n, c_max, min_cell)

    joint = np.array([np.count_nonzero((yi > x) & (yj > x)) for x in grid], dtype=np.int64)
    resolvable = np.minimum(ci_count, cj_count) >= MIN_EXCEEDANCES
    j_lo, j_hi = clopper_pearson(joint, n, level)
    denom = (ci_count + cj_count) if which == "QAI" else cj_count
    with np.errstate(divide="ignore", invalid="ignore"):
        est = np.where(resolvable, joint / denom, np.nan)
        est_lo = np.where(resolvable, j_lo * n / denom, np.nan)
        est_hi = np.where(resolvable, j_hi * n / denom, np.nan)
    idx = np.flatnonzero(resolvable)
    rule = (
        f"{which} estimate never rises above the upper CI of the previous grid point and is "
        f"< {threshold} at the deepest point with >= {MIN_EXCEEDANCES} marginal exceedances"
    )
    table = {"x": grid, "levels": levels, "estimate": est, "ci_lo": est_lo, "ci_hi": est_hi,
             "joint": joint, "count_i": ci_count, "count_j": cj_count}
    if idx.size == 0:
        return VerifierReport(theorem_tag=f"dependence-{which}", verdict=INCONCLUSIVE, rule=rule,
                              stats={"n_pairs": n}, tables={"estimate": table})
    e = est[idx]
    nonrising = bool(np.all(e[1:] <= est_hi[idx][:-1]))
    small = bool(e[-1] < threshold)
    return VerifierReport(
        theorem_tag=f"dependence-{which}", verdict=PASS if (nonrising and small) else FAIL,
        rule=rule,
        stats={"n_pairs": n, "deepest_x": float(grid[idx[-1]]), "deepest_estimate": float(e[-1]),
               "nonrising": nonrising, "below_threshold": small},
        tables={"estimate": table},
    )


def _regression_dependence(yi, yj, grid, ci_count, n, c_max, min_cell):
    edges = np.quantile(yj, _RD_BIN_LEVELS)
    edges[-1] = np.inf
    p_i = ci_count / n
    cells = []
    for b in range(len(edges) - 1):
        in_bin = (yj > edges[b]) & (yj <= edges[b + 1])
        size = int(np.count_nonzero(in_bin))
        for k, x in enumerate(grid):
            if size * p_i[k] < min_cell:
                continue
            hits = int(np.count_nonzero(yi[in_bin] > x))
            cells.append((b, float(x), size, hits, hits / (size * p_i[k])))
    rule = (
        f"C_hat = max over (bin, x) cells with >= {min_cell} expected exceedances of "
        f"P[Y_i > x | Y_j in bin] / P[Y_i > x] is <= {c_max}"
    )
    widths = np.diff(edges[:-1]).tolist() + [math.inf]
    if not cells:
        return VerifierReport(theorem_tag="dependence-RD", verdict=INCONCLUSIVE, rule=rule,
                              stats={"n_pairs": n, "bin_edges": edges, "bin_widths": widths})
    arr = np.array(cells, dtype=float)
    c_hat = float(arr[:, 4].max())
    return VerifierReport(
        theorem_tag="dependence-RD", verdict=PASS if c_hat <= c_max else FAIL, rule=rule,
        stats={"n_pairs": n, "C_hat": c_hat, "bin_levels": list(_RD_BIN_LEVELS),
               "bin_edges": edges, "bin_widths": widths, "n_cells": len(cells)},
        tables={"cells": {"bin": arr[:, 0].astype(int), "x": arr[:, 1], "bin_size": arr[:, 2].astype(int),
                          "hits": arr[:, 3].astype(int), "ratio": arr[:, 4]}},
    )


def _pairs_chunk(index, size, ruin_set, law, structure, shock, master):
    x = draw_dependent_sequence(
        law, 2, structure, SeedSpec(master, Stream.CLAIMS, index), n_paths=size, shock=shock
    )
    return ruin_set.scalarize(x)


def sample_dependence_pairs(
    ruin_set: RuinSet, law: VectorLaw, structure="independent", n_pairs=10**6, seed=0,
    shock: MarginalLaw | None = None, workers=1, chunk_size=CHUNK_SIZE,
):
    """Scalarized summand pairs ``(Y_A^(1), Y_A^(2))`` drawn as in the sum verifier.

    ``structure="comonotone"`` returns two copies of one draw.
    """
    _check_sizes(n_pairs)
    master = _master(seed)
    base = "independent" if structure == "comonotone" else structure
    parts = map_chunks(_pairs_chunk, n_pairs, ruin_set, law, base, shock, master,
                       workers=workers, chunk_size=chunk_size)
    y = np.concatenate(parts, axis=0)
    if structure == "comonotone":
        return y[:, 0].copy(), y[:, 0].copy()
    return y[:, 0].copy(), y[:, 1].copy()
