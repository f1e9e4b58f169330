import json

import numpy as np
import pytest

from bigjump.asymptotics import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    check_dependence_assumption,
    check_pathwise_subadditivity,
    compound_sums,
    sample_dependence_pairs,
    verify_convolution_maxsum,
    verify_finite_sum_sbj,
    verify_kesten_growth,
    verify_random_sum,
    verify_scale_mixture,
    verify_translation_insensitivity,
)
from bigjump.randsrc import CountLaw, MarginalLaw, SeedSpec, ThetaLaw, VectorLaw, draw_dependent_sequence

N = 200_000


def test_single_summand_ratio_is_one(halfspace, pareto2d):
    rep = verify_finite_sum_sbj(halfspace, pareto2d, n_summands=1, n_paths=N, seed=1)
    c = rep.curve
    np.testing.assert_array_equal(rep.stats["counts"]["lhs"], rep.stats["counts"]["singles"])
    assert np.all(c.ratio[c.resolvable] == 1.0)
    assert rep.verdict == PASS


def test_sum_pareto_passes_and_exact_relations(halfspace, pareto2d):
    rep = verify_finite_sum_sbj(halfspace, pareto2d, n_summands=3, n_paths=N, seed=2)
    assert rep.theorem_tag == "single-big-jump"
    assert rep.verdict == PASS
    assert rep.stats["dominance_holds"] and rep.stats["bonferroni_holds"]
    assert rep.violations == 0
    json.dumps(rep.to_dict())


def test_sum_exponential_control_fails(halfspace, expo2d):
    rep = verify_finite_sum_sbj(halfspace, expo2d, n_summands=2, n_paths=N, seed=3)
    assert rep.verdict == FAIL


def test_sum_tiny_sample_inconclusive(halfspace, pareto2d):
    rep = verify_finite_sum_sbj(halfspace, pareto2d, n_paths=100, seed=4)
    assert rep.verdict == INCONCLUSIVE


@pytest.mark.parametrize("structure", ["independent", "qai_common_shock"])
def test_sum_workers_identical(any_exceed, pareto2d, structure):
    kw = dict(n_summands=2, structure=structure, n_paths=5000, seed=5, chunk_size=1024,
              shock=MarginalLaw("exponential"))
    a = verify_finite_sum_sbj(any_exceed, pareto2d, workers=1, **kw)
    b = verify_finite_sum_sbj(any_exceed, pareto2d, workers=3, **kw)
    assert a.to_dict() == b.to_dict()


def test_pathwise_subadditivity(halfspace, any_exceed, pareto2d):
    x = draw_dependent_sequence(pareto2d, 4, "independent", SeedSpec(6), n_paths=10_000)
    for rs in (halfspace, any_exceed):
        rep = check_pathwise_subadditivity(rs, x)
        assert rep.verdict == PASS and rep.violations == 0
    with pytest.raises(ValueError):
        check_pathwise_subadditivity(halfspace, x[:, 0])


def test_compound_sums_bincount():
    first = np.array([[1.0], [2.0], [3.0]])
    extra = np.array([[10.0], [20.0], [30.0]])
    s = compound_sums(first, np.array([0, 3, 2]), extra)
    np.testing.assert_allclose(s.ravel(), [0.0, 32.0, 33.0])


def test_random_sum_fixed_one_is_exact(halfspace, pareto2d):
    rep = verify_random_sum(halfspace, pareto2d, CountLaw("fixed", n=1), n_paths=N, seed=7)
    np.testing.assert_array_equal(rep.stats["counts"]["lhs"], rep.stats["counts"]["single"])
    assert rep.verdict == PASS


def test_random_sum_poisson(halfspace, pareto2d):
    rep = verify_random_sum(halfspace, pareto2d, CountLaw("poisson", mean=2.0), n_paths=N, seed=8)
    assert rep.theorem_tag == "random-sum"
    assert rep.stats["E[N]"] == 2.0
    assert rep.verdict in (PASS, INCONCLUSIVE)
    assert "readout" in rep.stats


def test_random_sum_requires_count_law(halfspace, pareto2d):
    with pytest.raises(TypeError):
        verify_random_sum(halfspace, pareto2d, "poisson", n_paths=10)


def test_degenerate_theta_matches_sbj(halfspace, pareto2d):
    kw = dict(n_summands=2, n_paths=50_000, seed=9)
    mix = verify_scale_mixture(halfspace, pareto2d, ThetaLaw("degenerate", value=1.0), **kw)
    sbj = verify_finite_sum_sbj(halfspace, pareto2d, **kw)
    np.testing.assert_array_equal(mix.stats["counts"]["lhs"], sbj.stats["counts"]["lhs"])
    np.testing.assert_array_equal(mix.stats["counts"]["singles"], sbj.stats["counts"]["singles"])


def test_scale_mixture_bracket(halfspace, pareto2d):
    rep = verify_scale_mixture(halfspace, pareto2d, ThetaLaw("bounded_uniform", low=0.5, high=2.0),
                               n_paths=N, seed=10)
    assert rep.stats["bracket_ordered"]
    assert rep.stats["analytic_bracket"] == pytest.approx([0.5 ** 1.5, 2.0 ** 1.5])
    assert rep.verdict == PASS
    with pytest.raises(ValueError):
        ThetaLaw("lognormal")


def test_convolution_equal_laws_matches_sbj(halfspace, pareto2d):
    kw = dict(n_paths=50_000, seed=11)
    conv = verify_convolution_maxsum(halfspace, pareto2d, pareto2d, **kw)
    sbj = verify_finite_sum_sbj(halfspace, pareto2d, n_summands=2, **kw)
    np.testing.assert_array_equal(conv.stats["counts"]["lhs"], sbj.stats["counts"]["lhs"])
    np.testing.assert_array_equal(conv.stats["counts"]["law1"] + conv.stats["counts"]["law2"],
                                  sbj.stats["counts"]["singles"])


def test_convolution_mixed_laws(halfspace, pareto2d):
    lognorm = VectorLaw.iid(MarginalLaw("lognormal", mu=0.0, sigma=1.0), 2)
    rep = verify_convolution_maxsum(halfspace, pareto2d, lognorm, n_paths=N, seed=12)
    assert rep.theorem_tag == "max-sum-equivalence"
    assert rep.verdict == PASS


def test_kesten_first_ratio_is_one(halfspace, pareto2d):
    rep = verify_kesten_growth(halfspace, pareto2d, n_max=6, n_paths=N, seed=13)
    r = np.asarray(rep.tables["growth"]["r_n"])
    assert r[0] == 1.0
    assert rep.verdict == PASS
    assert rep.stats["K_hat"] == pytest.approx(1 / 1.5)


def test_kesten_inconclusive_and_limits(halfspace, pareto2d):
    assert verify_kesten_growth(halfspace, pareto2d, n_paths=500, seed=0).verdict == INCONCLUSIVE
    with pytest.raises(ValueError):
        verify_kesten_growth(halfspace, pareto2d, n_max=21, n_paths=10)


def test_translation_zero_shift_is_one(halfspace, pareto2d):
    rep = verify_translation_insensitivity(halfspace, pareto2d, [0.0, 0.0], n_paths=N, seed=14)
    c = rep.curve
    assert np.all(c.ratio[c.resolvable] == 1.0)
    assert rep.violations == 0


def test_translation_pareto_and_exponential(halfspace, pareto2d, expo2d):
    ok = verify_translation_insensitivity(halfspace, pareto2d, [1.0, 1.0], n_paths=N, seed=15)
    assert ok.verdict == PASS and ok.violations == 0
    bad = verify_translation_insensitivity(halfspace, expo2d, [1.0, 1.0], n_paths=N, seed=15)
    assert bad.verdict == FAIL


@pytest.mark.parametrize("structure,which,expected", [
    ("independent", "QAI", PASS),
    ("qai_common_shock", "QAI", PASS),
    ("independent", "TAI", PASS),
    ("independent", "RD", PASS),
    ("comonotone", "QAI", FAIL),
    ("comonotone", "RD", FAIL),
])
def test_dependence(halfspace, pareto2d, structure, which, expected):
    yi, yj = sample_dependence_pairs(halfspace, pareto2d, structure, n_pairs=N, seed=16,
                                     shock=MarginalLaw("exponential"))
    rep = check_dependence_assumption(yi, yj, which)
    assert rep.theorem_tag == f"dependence-{which}"
    assert rep.verdict == expected


def test_dependence_rejects_bad_input():
    with pytest.raises(ValueError):
        check_dependence_assumption([1.0, 2.0], [1.0], "QAI")
    with pytest.raises(ValueError):
        check_dependence_assumption([1.0], [1.0], "XYZ")
