import numpy as np
import pytest
from scipy import stats

from bigjump.randsrc import MarginalLaw, SeedSpec, Stream, VectorLaw, draw_vectors
from bigjump.tailstats import (
    CURVE_COLUMNS,
    EmpiricalTail,
    HillEstimator,
    RatioCurve,
    classify_tail,
    clopper_pearson,
    consistent_variation_profile,
    dominated_variation_curve,
    hill_index,
    long_tail_curve,
    subexponential_curve,
)


def pareto_sample(n, alpha=1.5, seed=0):
    return MarginalLaw("pareto", alpha=alpha).sample(np.random.default_rng(seed), n)


@pytest.mark.parametrize("n,p", [(20, 0.05), (50, 0.5), (200, 0.01), (1000, 0.003)])
def test_clopper_pearson_exact_coverage(n, p):
    # exact coverage from the binomial pmf must be at least the nominal level
    k = np.arange(n + 1)
    lo, hi = clopper_pearson(k, n, 0.95)
    covered = (lo <= p) & (p <= hi)
    assert stats.binom.pmf(k, n, p)[covered].sum() >= 0.95 - 1e-12


def test_clopper_pearson_edges():
    lo, hi = clopper_pearson(0, 10)
    assert lo == 0.0 and hi == pytest.approx(1 - 0.025 ** 0.1)
    lo, hi = clopper_pearson(10, 10)
    assert hi == 1.0
    with pytest.raises(ValueError):
        clopper_pearson(11, 10)


def test_empirical_tail_counts_strict():
    t = EmpiricalTail().fit([1.0, 2.0, 2.0, 3.0])
    assert t.count_exceed(2.0) == 1
    assert t.sf(0.5) == 1.0
    assert t.quantile(0.5) == 2.0
    assert t.sf(t.quantile(0.75)) <= 0.25


def test_empirical_tail_rejects_bad_input():
    with pytest.raises(ValueError):
        EmpiricalTail().fit([])
    with pytest.raises(ValueError):
        EmpiricalTail().fit([1.0, np.nan])


def test_ratio_curve_resolvability_and_csv():
    c = RatioCurve.from_counts([1.0, 2.0, 3.0], [500, 100, 10], 1000, [400, 100, 20], 1000)
    assert c.resolvable.tolist() == [True, True, False]
    assert c.deepest_index() == 1
    assert np.isnan(c.ratio[2])
    assert c.ci_lo[0] < c.ratio[0] < c.ci_hi[0]
    lines = c.to_csv().splitlines()
    assert lines[0] == ",".join(CURVE_COLUMNS)
    assert len(lines) == 4
    with pytest.raises(ValueError):
        RatioCurve.from_counts([2.0, 1.0], [1, 1], 10, [1, 1], 10)


def test_ratio_curve_both_sides():
    c = RatioCurve.from_counts([1.0], [60], 100, [40], 100, resolve_on="both")
    assert not c.resolvable[0]


def test_curves_monotone_exceedances():
    t = EmpiricalTail().fit(pareto_sample(10**5))
    c = long_tail_curve(t, 1.0)
    assert np.all(np.diff(c.rhs) <= 0)
    assert np.all(c.lhs >= c.rhs)


def test_dominated_variation_pareto():
    t = EmpiricalTail().fit(pareto_sample(10**6))
    c = dominated_variation_curve(t, 0.5)
    i = c.deepest_index()
    assert c.intersects(i, (2 ** 1.5 * 0.9, 2 ** 1.5 * 1.1))
    with pytest.raises(ValueError):
        dominated_variation_curve(t, 1.5)


def test_long_tail_shift_beyond_range():
    t = EmpiricalTail().fit([1.0, 2.0])
    with pytest.raises(ValueError):
        long_tail_curve(t, 5.0)


def test_consistent_profile_plateaus():
    t = EmpiricalTail().fit(pareto_sample(10**6))
    prof = consistent_variation_profile(t, [0.8, 0.9, 0.99])
    np.testing.assert_allclose(prof.plateau, [0.8 ** -1.5, 0.9 ** -1.5, 0.99 ** -1.5], rtol=0.1)
    assert not prof.growing.any()


def test_subexponential_refuses_same_batch():
    law = VectorLaw.iid(MarginalLaw("pareto"), 2)
    from bigjump.geometry import make_halfspace_set

    h = make_halfspace_set([0.5, 0.5], 1.0)
    b = draw_vectors(law, 1000, SeedSpec(1))
    with pytest.raises(ValueError, match="same batch"):
        subexponential_curve(b, b, h)
    b2 = draw_vectors(law, 1000, SeedSpec(1))
    with pytest.raises(ValueError):
        subexponential_curve(b, b2, h)
    b3 = draw_vectors(law, 1000, SeedSpec(1, Stream.SECOND_BATCH))
    assert subexponential_curve(b, b3, h).grid.size == 4
    other = draw_vectors(VectorLaw.iid(MarginalLaw("exponential"), 2), 1000, SeedSpec(2))
    with pytest.raises(ValueError, match="different laws"):
        subexponential_curve(b, other, h)


def test_hill_recovers_index():
    y = pareto_sample(10**6, alpha=2.0, seed=3)
    h = HillEstimator(k=2000).fit(y)
    assert h.ci_[0] <= 2.0 <= h.ci_[1]
    assert h.alpha_ == pytest.approx(2.0, rel=0.08)
    assert not h.unstable_


def test_hill_k_range():
    with pytest.raises(ValueError):
        HillEstimator(k=5).fit(np.ones(1000))
    with pytest.raises(ValueError):
        HillEstimator(k=200).fit(pareto_sample(1000))


def test_hill_index_from_tail():
    t = EmpiricalTail().fit(pareto_sample(10**5, alpha=2.0))
    assert hill_index(t, 500).alpha_ == pytest.approx(2.0, rel=0.15)


def test_classify_pareto_and_exponential():
    heavy = classify_tail(EmpiricalTail().fit(pareto_sample(10**6)))
    assert heavy.long_tailed and heavy.dominated and heavy.consistent
    assert heavy.ordering_consistent
    light = classify_tail(EmpiricalTail().fit(np.random.default_rng(1).exponential(size=10**6)))
    assert not light.long_tailed
    assert not light.consistent
    assert light.ordering_consistent
