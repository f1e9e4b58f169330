import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bigjump.geometry import (
    NotInFamilyError,
    RuinSet,
    RuinSetScalarizer,
    make_all_exceed_set,
    make_any_exceed_set,
    make_halfspace_set,
    member,
    ruin_set_from_dict,
    sandwich_margin,
    y_a,
    y_a_translated,
)

finite = st.floats(0, 1e6, allow_nan=False, allow_infinity=False)
points2 = arrays(np.float64, 2, elements=finite)


def test_halfspace_scalarization():
    h = make_halfspace_set([0.5, 0.5], 1.0)
    assert y_a(h, [2.0, 4.0]) == 3.0
    assert h.directions.tolist() == [[0.5, 0.5]]


def test_any_exceed_scalarization():
    s = make_any_exceed_set([2.0, 4.0])
    assert y_a(s, [1.0, 8.0]) == 2.0
    assert y_a(s, [3.0, 0.0]) == 1.5


def test_boundary_is_open():
    h = make_halfspace_set([0.5, 0.5], 1.0)
    assert not member(h, [1.0, 1.0], 1.0)
    assert member(h, [1.0, 1.0 + 1e-9], 1.0)


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError, match="sum to 1"):
        make_halfspace_set([0.5, 0.6], 1.0)
    make_halfspace_set([0.3, 0.7], 2.0)


@pytest.mark.parametrize("d", [2, 3])
def test_all_exceed_box_rejected(d):
    with pytest.raises(NotInFamilyError, match="non-convex"):
        make_all_exceed_set(np.ones(d))


def test_all_exceed_one_dimensional_ok():
    s = make_all_exceed_set([2.0])
    assert y_a(s, [3.0]) == 1.5


def test_directions_validated():
    with pytest.raises(NotInFamilyError):
        RuinSet([[1.0, -0.1]])
    with pytest.raises(NotInFamilyError):
        RuinSet([[0.0, 0.0]])
    with pytest.raises(ValueError):
        RuinSet([[np.inf, 1.0]])


def test_immutable_and_picklable():
    h = make_halfspace_set([0.5, 0.5], 1.0)
    with pytest.raises(AttributeError):
        h.label = "x"
    with pytest.raises(ValueError):
        h.directions[0, 0] = 3.0
    h2 = pickle.loads(pickle.dumps(h))
    assert h2 == h and hash(h2) == hash(h)


def test_prune_keeps_scalarization():
    full = RuinSet([[1.0, 0.5], [0.5, 0.25], [0.2, 1.0]])
    pruned = RuinSet(full.directions, prune=True)
    assert len(pruned) == 2
    x = np.random.default_rng(0).random((100, 2)) * 10
    np.testing.assert_array_equal(full.scalarize(x), pruned.scalarize(x))


def test_from_dict_roundtrip():
    for s in (make_halfspace_set([0.25, 0.75], 3.0), make_any_exceed_set([1.0, 2.0, 3.0])):
        assert ruin_set_from_dict(s.to_dict()) == s


def test_sandwich_margin_values():
    h = make_halfspace_set([0.5, 0.5], 1.0)
    assert sandwich_margin(h, [1.0, 1.0]) == 1.0
    assert y_a_translated(h, [3.0, 3.0], [1.0, 1.0]) == 2.0
    assert y_a_translated(h, [0.5, 0.5], [1.0, 1.0]) == 0.0


def test_scalarizer_transformer():
    x = np.array([[1.0, 3.0], [4.0, 0.0]])
    out = RuinSetScalarizer(kind="any_exceed", barriers=[1.0, 2.0]).fit_transform(x)
    np.testing.assert_array_equal(out, [1.5, 4.0])
    tr = RuinSetScalarizer().fit(x)
    np.testing.assert_array_equal(tr.transform(x), [2.0, 2.0])
    with pytest.raises(ValueError):
        tr.transform(np.ones((2, 3)))


@settings(max_examples=200, deadline=None)
@given(x=points2, y=points2, kind=st.sampled_from(["half", "any"]))
def test_subadditive(x, y, kind):
    s = make_halfspace_set([0.3, 0.7], 2.0) if kind == "half" else make_any_exceed_set([1.0, 3.0])
    assert y_a(s, x + y) <= y_a(s, x) + y_a(s, y) + 1e-12 * max(1.0, y_a(s, x) + y_a(s, y))


@settings(max_examples=200, deadline=None)
@given(x=points2, c=st.floats(1e-3, 1e3))
def test_positively_homogeneous(x, c):
    s = make_any_exceed_set([1.0, 3.0])
    assert y_a(s, c * x) == pytest.approx(c * y_a(s, x), rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(x=points2, dx=arrays(np.float64, 2, elements=st.floats(0, 1e3)))
def test_monotone(x, dx):
    s = make_halfspace_set([0.5, 0.5], 1.0)
    assert y_a(s, x + dx) >= y_a(s, x)


@settings(max_examples=200, deadline=None)
@given(x=points2, a=arrays(np.float64, 2, elements=st.floats(-50, 50)), u=st.floats(0.1, 1e4))
def test_sandwich(x, a, u):
    s = make_any_exceed_set([1.0, 2.0])
    m = sandwich_margin(s, a)
    yt = y_a_translated(s, x, a)
    if y_a(s, x) > u + m + 1e-9:
        assert yt > u
    if yt > u + 1e-9:
        assert y_a(s, x) > u - m
