"""Weight sets for analog fountain codes and their Gaussianity criterion.

A coded symbol of degree ``d`` is a sum of ``d`` terms ``+/-w`` with the
weights ``w`` drawn from a finite weight set. For a channel-capacity
achieving code the distribution of that sum should look Gaussian; this
module computes the exact distribution by enumeration, scores it against
binned Gaussian masses and searches for weight sets that pass the score.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import special

__all__ = [
    "AFC8_WEIGHTS",
    "ENUMERATION_CAP",
    "GaussFitSpec",
    "SymbolPmf",
    "WeightDesignError",
    "WeightSet",
    "avg_energy",
    "coded_symbol_pmf",
    "design_weights",
    "gaussianity_residual",
    "q_function",
]

ENUMERATION_CAP = 2**24

STANDARD_NORMAL = "standard_normal"
MATCHED_VARIANCE = "matched_variance"
VARIANCE_MODES = (STANDARD_NORMAL, MATCHED_VARIANCE)

# atoms closer than this are merged when building a pmf
_ATOM_DECIMALS = 12


def _parse_weight(token) -> float:
    if isinstance(token, str):
        return float(Fraction(token.strip()))
    return float(token)


@dataclass(frozen=True)
class WeightSet:
    """Strictly descending tuple of positive weights."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) < 1:
            raise ValueError("a weight set needs at least one weight")
        if any(not math.isfinite(x) or x <= 0.0 for x in w):
            raise ValueError(f"weights must be finite and positive, got {w}")
        if any(a <= b for a, b in zip(w, w[1:])):
            raise ValueError("weights must be strictly descending (no duplicates)")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_values(cls, values: Iterable) -> "WeightSet":
        """Build a canonical (sorted, descending) set from floats or strings like ``"1/3"``."""
        return cls(tuple(sorted((_parse_weight(v) for v in values), reverse=True)))

    @classmethod
    def from_json(cls, text: str) -> "WeightSet":
        return cls.from_values(json.loads(text))

    def to_json(self) -> str:
        return json.dumps([repr(w) for w in self.weights])

    @property
    def f(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def scaled(self, c: float) -> "WeightSet":
        if c <= 0:
            raise ValueError("scale must be positive")
        return WeightSet(tuple(c * w for w in self.weights))

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)


AFC8_WEIGHTS = WeightSet.from_values(
    ["1/2", "1/3", "1/5", "1/7", "1/11", "1/13", "1/17", "1/19"]
)

NAMED_WEIGHT_SETS = {"afc8": AFC8_WEIGHTS}


def avg_energy(w: WeightSet) -> float:
    """Average weight energy, the mean of the squared weights."""
    return math.fsum(x * x for x in w.weights) / w.f


@dataclass(frozen=True)
class SymbolPmf:
    """Finite distribution over real support points.

    ``values`` is sorted ascending; ``probs`` holds the matching masses.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size == 0:
            raise ValueError("values and probs must be equal-length, nonempty 1-D arrays")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        order = np.argsort(v, kind="stable")
        object.__setattr__(self, "values", v[order])
        object.__setattr__(self, "probs", p[order])

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @property
    def variance(self) -> float:
        mu = self.mean
        return float(np.dot((self.values - mu) ** 2, self.probs))

    def as_dict(self) -> dict:
        return dict(zip(self.values.tolist(), self.probs.tolist()))

    def prob(self, v: float, tol: float = 1e-12) -> float:
        hit = np.abs(self.values - v) <= tol
        return float(self.probs[hit].sum())

    def mass_between(self, lo: float, hi: float) -> float:
        """Mass on the half-open interval ``[lo, hi)``."""
        sel = (self.values >= lo) & (self.values < hi)
        return float(self.probs[sel].sum())


def _merge_atoms(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # +0.0 folds -0.0 into 0.0; np.round is sign-symmetric so the pmf stays symmetric
    keys = np.round(values, _ATOM_DECIMALS) + 0.0
    uniq, inv = np.unique(keys, return_inverse=True)
    return uniq, np.bincount(inv, weights=probs, minlength=uniq.size)


def coded_symbol_pmf(
    w: WeightSet, d: int, replacement: bool = True, cap: int = ENUMERATION_CAP
) -> SymbolPmf:
    """Exact distribution of a degree-``d`` coded symbol ``sum_j +/- w_j``.

    Signs are uniform. With ``replacement`` each term draws its weight
    uniformly and independently from ``w``; without it the ``d`` weights
    are a uniformly random ``d``-subset of ``w``.

    Raises
    ------
    ValueError
        If the number of enumerated outcomes, ``(2f)**d`` with replacement or
        ``C(f, d) * 2**d`` without, exceeds ``cap``. Use a Monte Carlo
        estimate for such sizes.
    """
    f = w.f
    if d < 1:
        raise ValueError("degree must be at least 1")
    if not replacement and d > f:
        raise ValueError(f"degree {d} exceeds weight-set size {f} without replacement")
    outcomes = (2 * f) ** d if replacement else math.comb(f, d) * 2**d
    if outcomes > cap:
        raise ValueError(
            f"too large: {outcomes} outcomes exceed the enumeration cap {cap}; "
            "use a Monte Carlo estimate"
        )
    atoms = np.concatenate([w.as_array(), -w.as_array()])
    if replacement:
        # d-fold convolution of the single-term law; equal to enumerating all (2f)^d outcomes
        values = np.array([0.0])
        probs = np.array([1.0])
        step = np.full(2 * f, 1.0 / (2 * f))
        for _ in range(d):
            values, probs = _merge_atoms(
                (values[:, None] + atoms[None, :]).ravel(),
                (probs[:, None] * step[None, :]).ravel(),
            )
    else:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
        subsets = np.array(list(itertools.combinations(w.weights, d)))
        values = (subsets @ signs.T).ravel()
        probs = np.full(values.size, 1.0 / values.size)
        values, probs = _merge_atoms(values, probs)
    return SymbolPmf(values, probs / probs.sum())


def q_function(x):
    """Gaussian tail probability ``Q(x) = P(Z > x)`` for standard normal ``Z``."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GaussFitSpec:
    """Bin width, tolerance and bin count of the Gaussianity criterion."""

    delta: float = 0.2
    epsilon: float = 1e-4
    i_max: int = 15
    variance_mode: str = MATCHED_VARIANCE

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.i_max) != self.i_max or self.i_max < 10:
            raise ValueError("i_max must be an integer >= 10")
        if self.variance_mode not in VARIANCE_MODES:
            raise ValueError(f"variance_mode must be one of {VARIANCE_MODES}")


def gaussianity_residual(pmf: SymbolPmf, spec: GaussFitSpec) -> float:
    """Largest squared gap between binned pmf mass and binned Gaussian mass.

    Bin ``i`` covers ``[(i-1)*delta*s, i*delta*s)`` for ``i = 1..i_max`` and is
    compared to ``Q((i-1)*delta) - Q(i*delta)``. ``s`` is 1 in
    ``standard_normal`` mode and the pmf's own standard deviation in
    ``matched_variance`` mode.
    """
    var = pmf.variance
    if var <= 0.0:
        raise ValueError("pmf has zero variance")
    scale = math.sqrt(var) if spec.variance_mode == MATCHED_VARIANCE else 1.0
    edges = spec.delta * np.arange(spec.i_max + 1)
    idx = np.searchsorted(edges * scale, pmf.values, side="right") - 1
    inside = (idx >= 0) & (idx < spec.i_max)
    p_bins = np.bincount(idx[inside], weights=pmf.probs[inside], minlength=spec.i_max)
    q_bins = -np.diff(q_function(edges))
    return float(np.max((p_bins - q_bins) ** 2))


class WeightDesignError(RuntimeError):
    """Search budget ran out; carries the best candidate seen."""

    def __init__(self, message: str, best: WeightSet, residual: float):
        super().__init__(message)
        self.best = best
        self.residual = residual


def _residual_of(weights: Sequence[float], d, spec, replacement) -> float:
    try:
        ws = WeightSet.from_values(weights)
    except ValueError:
        return math.inf
    return gaussianity_residual(coded_symbol_pmf(ws, d, replacement), spec)


def design_weights(
    f: int,
    d: int | None = None,
    spec: GaussFitSpec | None = None,
    seed: int = 0,
    *,
    replacement: bool = False,
    restarts: int = 64,
    steps: int = 400,
    step_size: float = 0.3,
) -> WeightSet:
    """Seeded stochastic search for a weight set passing the Gaussianity test.

    Each restart draws ``f`` weights uniformly from (0, 1] and then tries
    ``steps`` single-coordinate multiplicative perturbations, keeping the
    ones that lower the residual. The first candidate whose residual is at
    most ``spec.epsilon`` is returned.

    ``d`` defaults to ``f``, so every weight appears in each coded symbol.
    """
    spec = spec or GaussFitSpec()
    d = f if d is None else d
    if f < 1 or d < 1:
        raise ValueError("f and d must be positive")
    if not replacement and d > f:
        raise ValueError("f must be >= d when sampling without replacement")
    rng = np.random.default_rng(seed)
    best, best_res = None, math.inf
    for _ in range(restarts):
        cur = 1.0 - rng.random(f)  # (0, 1]
        res = _residual_of(cur, d, spec, replacement)
        for _ in range(steps + 1):
            if res < best_res:
                best, best_res = cur.copy(), res
            if res <= spec.epsilon:
                return WeightSet.from_values(cur)
            trial = cur.copy()
            j = rng.integers(f)
            trial[j] = min(1.0, trial[j] * math.exp(step_size * rng.standard_normal()))
            trial_res = _residual_of(trial, d, spec, replacement)
            if trial_res < res:
                cur, res = trial, trial_res
    raise WeightDesignError(
        f"no weight set reached residual <= {spec.epsilon} "
        f"(best {best_res:.3g} after {restarts} restarts)",
        WeightSet.from_values(best),
        best_res,
    )


def resolve_weight_set(ref) -> WeightSet:
    """Accept a list of weights, a named set (``"afc8"``) or a path to a JSON array."""
    if isinstance(ref, WeightSet):
        return ref
    if isinstance(ref, str):
        if ref in NAMED_WEIGHT_SETS:
            return NAMED_WEIGHT_SETS[ref]
        with open(ref) as fh:
            return WeightSet.from_values(json.load(fh))
    return WeightSet.from_values(ref)
