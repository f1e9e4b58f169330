"""Seeded sampling of claim vectors, summand sequences, counts and scale factors.

Every draw comes from a Philox generator keyed by ``(master_seed, stream_id,
chunk_index)``, so any chunk can be regenerated on any worker without shared
state.  Stream ids separate the roles inside one experiment (claims, counts,
arrival times, ...) so that switching one ingredient on or off never shifts
the draws of another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special, stats

from .parallel import CHUNK_SIZE, map_chunks

__all__ = [
    "Stream",
    "SeedSpec",
    "MarginalLaw",
    "VectorLaw",
    "ThetaLaw",
    "CountLaw",
    "SampleBatch",
    "draw_vectors",
    "draw_vectors_chunked",
    "draw_dependent_sequence",
    "draw_theta",
    "draw_counts",
]

_MAX_SEED = 2**64


class Stream:
    """Stream ids used by the simulators."""

    CLAIMS = 0
    EXTRA_CLAIMS = 1
    COUNTS = 2
    THETA = 3
    SHOCK = 4
    TIMES = 5
    RETURNS = 6
    INNER_CLAIMS = 7
    INNER_RETURNS = 8
    SECOND_BATCH = 9
    REFERENCE = 10
    PILOT = 99


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0
    chunk_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id", "chunk_index"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
        if not 0 <= self.master_seed < _MAX_SEED:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if self.stream_id < 0 or self.chunk_index < 0:
            raise ValueError("stream_id and chunk_index must be nonnegative")

    def stream(self, stream_id: int) -> "SeedSpec":
        return replace(self, stream_id=int(stream_id))

    def chunk(self, chunk_index: int) -> "SeedSpec":
        return replace(self, chunk_index=int(chunk_index))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            int(self.master_seed), spawn_key=(int(self.stream_id), int(self.chunk_index))
        )
        return np.random.Generator(np.random.Philox(seq))


_MARGINAL_PARAMS = {
    "pareto": ("alpha", "x_min"),
    "lognormal": ("mu", "sigma"),
    "weibull": ("shape", "scale"),
    "exponential": ("rate",),
    "degenerate": ("value",),
}


@dataclass(frozen=True)
class MarginalLaw:
    """One-dimensional nonnegative claim law.

    Parameters not used by ``kind`` are ignored.  Pareto uses ``x_min = 1`` by
    default, so its tail is exactly ``x ** -alpha`` above one.
    """

    kind: str
    alpha: float = 1.5
    x_min: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    shape: float = 0.5
    scale: float = 1.0
    rate: float = 1.0
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in _MARGINAL_PARAMS:
            raise ValueError(
                f"unknown marginal kind {self.kind!r}; expected one of {sorted(_MARGINAL_PARAMS)}"
            )
        for name in _MARGINAL_PARAMS[self.kind]:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError(f"{self.kind}: {name} must be a finite number")
            if name == "mu":
                continue
            if name == "value":
                if v < 0:
                    raise ValueError("degenerate: value must be nonnegative")
            elif v <= 0:
                raise ValueError(f"{self.kind}: {name} must be positive")
        if self.kind == "weibull" and self.shape > 1:
            raise ValueError("weibull: shape must lie in (0, 1]")

    @property
    def is_heavy(self) -> bool:
        if self.kind in ("pareto", "lognormal"):
            return True
        if self.kind == "weibull":
            return self.shape < 1
        return False

    @property
    def tail_index(self) -> float | None:
        """Regular-variation index, when the law has one."""
        return float(self.alpha) if self.kind == "pareto" else None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        d.update({k: float(getattr(self, k)) for k in _MARGINAL_PARAMS[self.kind]})
        return d

    def isf(self, s):
        """Inverse survival function: the ``x`` with ``P[X > x] = s``."""
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            if self.kind == "pareto":
                return self.x_min * s ** (-1.0 / self.alpha)
            if self.kind == "exponential":
                return -np.log(s) / self.rate
            if self.kind == "weibull":
                return self.scale * (-np.log(s)) ** (1.0 / self.shape)
            if self.kind == "lognormal":
                return np.exp(self.mu - self.sigma * special.ndtri(s))
        return np.full_like(s, self.value)

    def sf(self, x):
        """Analytic tail ``P[X > x]``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "pareto":
            return np.where(x < self.x_min, 1.0, (np.maximum(x, self.x_min) / self.x_min) ** -self.alpha)
        if self.kind == "exponential":
            return np.exp(-self.rate * np.maximum(x, 0.0))
        if self.kind == "weibull":
            return np.exp(-((np.maximum(x, 0.0) / self.scale) ** self.shape))
        if self.kind == "lognormal":
            with np.errstate(divide="ignore"):
                return stats.norm.sf((np.log(np.maximum(x, 0.0)) - self.mu) / self.sigma)
        return np.where(x < self.value, 1.0, 0.0)

    def mean(self) -> float:
        if self.kind == "pareto":
            return math.inf if self.alpha <= 1 else self.alpha * self.x_min / (self.alpha - 1)
        if self.kind == "exponential":
            return 1.0 / self.rate
        if self.kind == "weibull":
            return self.scale * math.gamma(1 + 1 / self.shape)
        if self.kind == "lognormal":
            return math.exp(self.mu + self.sigma**2 / 2)
        return float(self.value)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        # survival-uniform in (0, 1]; isf is decreasing, so sharing s is comonotone
        return self.isf(1.0 - rng.random(size))


_COUPLINGS = ("independent", "comonotone", "common_light_shock")


@dataclass(frozen=True)
class VectorLaw:
    """Law of a claim vector: ``d`` marginals plus a coupling of the components."""

    marginals: tuple
    coupling: str = "independent"
    shock: MarginalLaw | None = None

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if len(self.marginals) < 1:
            raise ValueError("a vector law needs at least one marginal")
        if not all(isinstance(m, MarginalLaw) for m in self.marginals):
            raise TypeError("marginals must be MarginalLaw instances")
        if self.coupling not in _COUPLINGS:
            raise ValueError(f"unknown coupling {self.coupling!r}; expected one of {_COUPLINGS}")
        if self.coupling == "common_light_shock":
            if self.shock is None:
                object.__setattr__(self, "shock", MarginalLaw("exponential"))
            if self.shock.kind not in ("exponential", "degenerate"):
                raise ValueError("the common shock must be light-tailed (exponential)")

    @classmethod
    def iid(cls, marginal: MarginalLaw, dims: int, **kwargs) -> "VectorLaw":
        return cls((marginal,) * int(dims), **kwargs)

    @property
    def dims(self) -> int:
        return len(self.marginals)

    @property
    def is_heavy(self) -> bool:
        return any(m.is_heavy for m in self.marginals)

    @property
    def tail_index(self) -> float | None:
        """Smallest Pareto index over the marginals, if every heavy marginal is Pareto."""
        heavy = [m for m in self.marginals if m.is_heavy]
        if not heavy or any(m.tail_index is None for m in heavy):
            return None
        return min(m.tail_index for m in heavy)

    def to_dict(self) -> dict:
        d = {"marginals": [m.to_dict() for m in self.marginals], "coupling": self.coupling}
        if self.coupling == "common_light_shock":
            d["shock"] = self.shock.to_dict()
        return d

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        n = int(n)
        d = self.dims
        if self.coupling == "comonotone":
            s = 1.0 - rng.random(n)
            return np.column_stack([m.isf(s) for m in self.marginals]) if n else np.empty((0, d))
        s = 1.0 - rng.random((n, d))
        out = np.empty((n, d))
        for j, m in enumerate(self.marginals):
            out[:, j] = m.isf(s[:, j])
        if self.coupling == "common_light_shock":
            out += self.shock.sample(rng, n)[:, None]
        return out


_THETA_KINDS = ("bounded_uniform", "degenerate")


@dataclass(frozen=True)
class ThetaLaw:
    """Positive bounded scale factor; ``mode`` picks scalar or componentwise product."""

    kind: str = "degenerate"
    low: float = 1.0
    high: float = 1.0
    value: float = 1.0
    mode: str = "scalar"

    def __post_init__(self):
        if self.kind not in _THETA_KINDS:
            raise ValueError(
                f"theta kind {self.kind!r} refused: only bounded laws {_THETA_KINDS} are supported"
            )
        if self.mode not in ("scalar", "componentwise"):
            raise ValueError("theta mode must be 'scalar' or 'componentwise'")
        if self.kind == "bounded_uniform":
            if not (0 < self.low <= self.high < math.inf):
                raise ValueError("bounded_uniform needs 0 < low <= high < inf")
        elif not (0 < self.value < math.inf):
            raise ValueError("degenerate theta needs a positive finite value")

    @property
    def bounds(self) -> tuple:
        if self.kind == "bounded_uniform":
            return float(self.low), float(self.high)
        return float(self.value), float(self.value)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "mode": self.mode}
        if self.kind == "bounded_uniform":
            d.update(low=float(self.low), high=float(self.high))
        else:
            d["value"] = float(self.value)
        return d

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "degenerate" or self.low == self.high:
            lo, _ = self.bounds
            return np.full(size, lo)
        return rng.uniform(self.low, self.high, size)


_COUNT_KINDS = ("poisson", "geometric", "uniform_int", "fixed")
_HEAVY_COUNT_KINDS = ("zipf", "zeta", "pareto", "yule_simon")


@dataclass(frozen=True)
class CountLaw:
    """Law of the random number of summands.

    ``geometric`` lives on ``{1, 2, ...}`` with success probability ``p``.
    Laws without a finite ``E[(1+eps)^N]`` are refused.
    """

    kind: str = "fixed"
    mean: float = 1.0
    p: float = 0.5
    low: int = 1
    high: int = 1
    n: int = 1

    def __post_init__(self):
        if self.kind in _HEAVY_COUNT_KINDS:
            raise ValueError(
                f"count law {self.kind!r} refused: heavy-tailed N has no finite (1+eps)^N moment"
            )
        if self.kind not in _COUNT_KINDS:
            raise ValueError(f"unknown count kind {self.kind!r}; expected one of {_COUNT_KINDS}")
        if self.kind == "poisson" and not (0 < self.mean < math.inf):
            raise ValueError("poisson mean must be positive and finite")
        if self.kind == "geometric" and not (0 < self.p <= 1):
            raise ValueError("geometric p must lie in (0, 1]")
        if self.kind == "uniform_int" and not (0 <= self.low <= self.high and self.high >= 1):
            raise ValueError("uniform_int needs 0 <= low <= high with high >= 1")
        if self.kind == "fixed" and self.n < 1:
            raise ValueError("fixed count must be at least 1")

    def expectation(self) -> float:
        if self.kind == "poisson":
            return float(self.mean)
        if self.kind == "geometric":
            return 1.0 / self.p
        if self.kind == "uniform_int":
            return (self.low + self.high) / 2.0
        return float(self.n)

    def to_dict(self) -> dict:
        keys = {"poisson": ("mean",), "geometric": ("p",), "uniform_int": ("low", "high"), "fixed": ("n",)}
        d = {"kind": self.kind}
        d.update({k: getattr(self, k) for k in keys[self.kind]})
        return d

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "poisson":
            return rng.poisson(self.mean, size).astype(np.int64)
        if self.kind == "geometric":
            return rng.geometric(self.p, size).astype(np.int64)
        if self.kind == "uniform_int":
            return rng.integers(self.low, self.high, size, endpoint=True, dtype=np.int64)
        return np.full(size, self.n, dtype=np.int64)


@dataclass(frozen=True)
class SampleBatch:
    """A reproducible block of ``n`` claim vectors."""

    vectors: np.ndarray
    seed: SeedSpec
    law: VectorLaw = field(compare=False)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def y_a(self, ruin_set) -> np.ndarray:
        return ruin_set.scalarize(self.vectors)


def draw_vectors(law: VectorLaw, n: int, seed: SeedSpec) -> SampleBatch:
    """``n`` iid vectors from ``law``; a pure function of ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x = law.sample(seed.generator(), n)
    x.setflags(write=False)
    return SampleBatch(x, seed, law)


def _vectors_chunk(index, size, law, seed):
    return law.sample(seed.chunk(seed.chunk_index + index).generator(), size)


def draw_vectors_chunked(law: VectorLaw, n: int, seed: SeedSpec, workers=1, chunk_size=CHUNK_SIZE) -> SampleBatch:
    """Like :func:`draw_vectors` for large ``n``: chunk ``c`` uses ``seed.chunk(seed.chunk_index + c)``.

    The result does not depend on ``workers``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x = np.concatenate(map_chunks(_vectors_chunk, n, law, seed, workers=workers, chunk_size=chunk_size))
    x.setflags(write=False)
    return SampleBatch(x, seed, law)


def draw_dependent_sequence(
    law: VectorLaw,
    n_summands: int,
    structure: str,
    seed: SeedSpec,
    n_paths: int | None = None,
    shock: MarginalLaw | None = None,
) -> np.ndarray:
    """Summand vectors ``X^(1..n)`` with the requested cross-summand dependence.

    ``"qai_common_shock"`` returns ``V^(i) + W`` where the ``V^(i)`` are iid
    from ``law`` and ``W`` is one light-tailed vector shared by all summands of
    a path.

    Returns shape ``(n_summands, d)`` when ``n_paths`` is None, else
    ``(n_paths, n_summands, d)``.
    """
    if n_summands < 1:
        raise ValueError("n_summands must be at least 1")
    if structure not in ("independent", "qai_common_shock"):
        raise ValueError(f"unknown dependence structure {structure!r}")
    shock = shock or MarginalLaw("exponential")
    if structure == "qai_common_shock" and shock.kind not in ("exponential", "degenerate"):
        raise ValueError("heavy-tailed common shock refused: it would break quasi-asymptotic independence")
    paths = 1 if n_paths is None else int(n_paths)
    x = law.sample(seed.generator(), paths * n_summands).reshape(paths, n_summands, law.dims)
    if structure == "qai_common_shock" and n_summands > 1:
        w = shock.sample(seed.stream(Stream.SHOCK).generator(), (paths, 1, law.dims))
        x += w
    return x[0] if n_paths is None else x


def draw_theta(law: ThetaLaw, n: int, seed: SeedSpec, dims: int | None = None) -> np.ndarray:
    """``n`` scale draws, shape ``(n,)`` or ``(n, dims)`` in componentwise mode."""
    if n < 1:
        raise ValueError("n must be at least 1")
    size = (n, int(dims)) if law.mode == "componentwise" and dims else n
    return law.sample(seed.generator(), size)


def draw_counts(law: CountLaw, n: int, seed: SeedSpec) -> np.ndarray:
    return law.sample(seed.generator(), int(n))
