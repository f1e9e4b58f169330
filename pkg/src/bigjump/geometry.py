"""Polyhedral ruin sets and their scalarization.

A ruin set is encoded by a finite list of nonnegative direction vectors ``p``;
the set itself is ``{x : p @ x > 1 for some p}``.  Everything downstream works
with the scalar ``y_a(x) = max_p p @ x``, i.e. the largest ``u`` with
``x in u * A``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

__all__ = [
    "NotInFamilyError",
    "RuinSet",
    "RuinSetScalarizer",
    "make_halfspace_set",
    "make_any_exceed_set",
    "make_all_exceed_set",
    "ruin_set_from_dict",
    "y_a",
    "member",
    "y_a_translated",
    "sandwich_margin",
]

_WEIGHT_SUM_TOL = 1e-12


class NotInFamilyError(ValueError):
    """Raised when a candidate set is not open/increasing with convex complement."""


class RuinSet:
    """Immutable ruin set given by its direction vectors.

    Parameters
    ----------
    directions : array-like of shape (n_directions, dims)
        Nonnegative vectors, each with at least one positive entry.
    label : str
        Short tag used in reports.
    spec : dict
        The constructor arguments, kept for provenance.
    prune : bool
        Drop directions dominated componentwise by another one.  Never
        changes ``y_a``.
    """

    def __init__(self, directions, label="", spec=None, prune=False):
        p = np.array(directions, dtype=float, ndmin=2)
        if p.ndim != 2 or p.shape[0] == 0 or p.shape[1] == 0:
            raise ValueError("directions must be a non-empty 2-d array")
        if not np.all(np.isfinite(p)):
            raise ValueError("directions must be finite")
        if np.any(p < 0):
            raise NotInFamilyError("direction components must be nonnegative")
        if np.any(~np.any(p > 0, axis=1)):
            raise NotInFamilyError("every direction needs a positive component")
        _, first = np.unique(p, axis=0, return_index=True)
        p = p[np.sort(first)]
        if prune:
            p = _prune_dominated(p)
        p.setflags(write=False)
        object.__setattr__(self, "directions", p)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "spec", dict(spec or {}))

    @property
    def dims(self) -> int:
        return self.directions.shape[1]

    def __len__(self):
        return self.directions.shape[0]

    def __setattr__(self, name, value):
        raise AttributeError("RuinSet is immutable")

    def __repr__(self):
        return f"RuinSet(label={self.label!r}, directions={self.directions.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, RuinSet):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.directions, other.directions)

    def __hash__(self):
        return hash((self.label, self.directions.tobytes(), self.directions.shape))

    def __reduce__(self):
        return (_rebuild_ruin_set, (self.directions.copy(), self.label, self.spec))

    def scalarize(self, x) -> np.ndarray:
        """Vectorized ``y_a`` over the last axis of ``x``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dims:
            raise ValueError(f"expected points of dimension {self.dims}, got {x.shape[-1]}")
        if len(self) == 1:
            return x @ self.directions[0]
        return (x @ self.directions.T).max(axis=-1)

    def to_dict(self) -> dict:
        if self.spec:
            return dict(self.spec)
        return {"kind": "directions", "directions": self.directions.tolist()}


def _rebuild_ruin_set(directions, label, spec):
    return RuinSet(directions, label=label, spec=spec)


def _prune_dominated(p):
    keep = []
    for i, row in enumerate(p):
        dominated = np.all(p >= row, axis=1) & np.any(p > row, axis=1)
        if not dominated.any():
            keep.append(i)
    return p[keep]


def make_halfspace_set(weights, threshold) -> RuinSet:
    """``{x : sum(l_i x_i) > c}`` with ``l >= 0`` summing to one."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    if not np.any(w > 0):
        raise ValueError("weights must not all be zero")
    if abs(w.sum() - 1.0) > _WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    spec = {"kind": "halfspace", "weights": w.tolist(), "threshold": float(threshold)}
    return RuinSet(w / threshold, label="halfspace", spec=spec)


def make_any_exceed_set(barriers) -> RuinSet:
    """``{x : x_i > b_i for some i}``."""
    b = _check_barriers(barriers)
    spec = {"kind": "any_exceed", "barriers": b.tolist()}
    return RuinSet(np.diag(1.0 / b), label="any_exceed", spec=spec)


def make_all_exceed_set(barriers) -> RuinSet:
    """``{x : x_i > b_i for all i}``; only a member of the family when d == 1.

    For ``d >= 2`` the complement is a union of half-spaces and is not convex,
    so the set cannot be written as a union of ``{p @ x > 1}``; that case
    raises :class:`NotInFamilyError`.
    """
    b = _check_barriers(barriers)
    if b.size >= 2:
        raise NotInFamilyError(
            "the all-lines-exceed box {x : x_i > b_i for all i} has a non-convex "
            f"complement for d={b.size} >= 2, so it is not an admissible ruin set "
            "(use any_exceed or halfspace instead)"
        )
    spec = {"kind": "all_exceed", "barriers": b.tolist()}
    return RuinSet(1.0 / b[None, :], label="all_exceed", spec=spec)


def _check_barriers(barriers):
    b = np.asarray(barriers, dtype=float).ravel()
    if b.size == 0:
        raise ValueError("barriers must be non-empty")
    if not np.all(np.isfinite(b)) or np.any(b <= 0):
        raise ValueError("barriers must be finite and positive")
    return b


def ruin_set_from_dict(block: dict) -> RuinSet:
    """Build a set from a config block (``kind`` plus its parameters)."""
    kind = block.get("kind")
    if kind == "halfspace":
        return make_halfspace_set(block["weights"], block["threshold"])
    if kind == "any_exceed":
        return make_any_exceed_set(block["barriers"])
    if kind == "all_exceed":
        return make_all_exceed_set(block["barriers"])
    raise ValueError(f"unknown set kind {kind!r}")


def y_a(ruin_set: RuinSet, x) -> float:
    """``sup{u : x in u*A}`` for a single point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (ruin_set.dims,):
        raise ValueError(f"point must have shape ({ruin_set.dims},), got {x.shape}")
    return float(ruin_set.scalarize(x))


def member(ruin_set: RuinSet, x, u) -> bool:
    """Whether ``x`` lies in the open set ``u*A``."""
    if not u > 0:
        raise ValueError("scale u must be positive")
    return y_a(ruin_set, x) > u


def y_a_translated(ruin_set: RuinSet, x, shift) -> np.ndarray | float:
    """Scalarization of ``x - shift``, clamped at zero.

    ``x in u*A + a`` exactly when the returned value exceeds ``u``.  Accepts a
    single point or a batch along the leading axes.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(shift, dtype=float)
    if a.shape != (ruin_set.dims,):
        raise ValueError(f"shift must have shape ({ruin_set.dims},), got {a.shape}")
    out = np.maximum(ruin_set.scalarize(x - a), 0.0)
    return float(out) if out.ndim == 0 else out


def sandwich_margin(ruin_set: RuinSet, shift) -> float:
    """Margin ``u1 = max_p |p @ a|`` with ``(u+u1)A ⊂ uA + a ⊂ (u-u1)A``."""
    a = np.asarray(shift, dtype=float)
    return float(np.abs(ruin_set.directions @ a).max())


class RuinSetScalarizer(TransformerMixin, BaseEstimator):
    """Map claim vectors to their scalarization ``Y_A``.

    Parameters
    ----------
    kind : {"halfspace", "any_exceed", "all_exceed"}
    weights, threshold : used by ``"halfspace"``
    barriers : used by the exceedance kinds
    """

    def __init__(self, kind="halfspace", weights=None, threshold=1.0, barriers=None):
        self.kind = kind
        self.weights = weights
        self.threshold = threshold
        self.barriers = barriers

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=1)
        block = {"kind": self.kind}
        if self.kind == "halfspace":
            weights = self.weights
            if weights is None:
                weights = np.full(X.shape[1], 1.0 / X.shape[1])
            block.update(weights=weights, threshold=self.threshold)
        else:
            block["barriers"] = self.barriers if self.barriers is not None else np.ones(X.shape[1])
        self.ruin_set_ = ruin_set_from_dict(block)
        if self.ruin_set_.dims != X.shape[1]:
            raise ValueError(
                f"set has dimension {self.ruin_set_.dims} but X has {X.shape[1]} features"
            )
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "ruin_set_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.ruin_set_.scalarize(X)
