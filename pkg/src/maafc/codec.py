"""Per-user analog fountain code: balanced-degree generator and encoder."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .weights import WeightSet, resolve_weight_set

__all__ = [
    "CodeSpec",
    "GeneratorMatrix",
    "bpsk_map",
    "build_generator",
    "empty_generator",
    "encode",
    "extend_generator",
    "hard_decision",
    "row_uniforms",
]


@dataclass(frozen=True)
class CodeSpec:
    """Parameters fixing one user's code.

    ``replacement=False`` (default) draws the ``d_c`` weights of a row as
    distinct members of the weight set, which needs ``f >= d_c``.
    """

    k: int
    d_c: int
    weight_set: WeightSet
    seed: int = 0
    replacement: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.d_c < 1:
            raise ValueError("d_c must be >= 1")
        if not self.replacement and self.d_c > self.weight_set.f:
            raise ValueError(
                f"d_c={self.d_c} exceeds weight-set size {self.weight_set.f} without replacement"
            )
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "d_c": self.d_c,
                "weights": [repr(w) for w in self.weight_set],
                "seed": self.seed,
                "replacement": self.replacement,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        doc = json.loads(text)
        return cls(
            k=int(doc["k"]),
            d_c=int(doc["d_c"]),
            weight_set=resolve_weight_set(doc["weights"]),
            seed=int(doc.get("seed", 0)),
            replacement=bool(doc.get("replacement", False)),
        )


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Sparse generator with a fixed number of entries per row.

    ``cols[i]`` and ``weights[i]`` list the ``d_c`` (column, weight) pairs of
    row ``i``. Arrays are read-only; extension returns a new matrix.
    """

    k: int
    cols: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        cols = np.array(self.cols, dtype=np.int64, ndmin=2)
        w = np.array(self.weights, dtype=float, ndmin=2)
        if cols.shape != w.shape:
            raise ValueError("cols and weights must have the same shape")
        if cols.size and (cols.min() < 0 or cols.max() >= self.k):
            raise ValueError("column index out of range")
        cols.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", w)

    @property
    def n_rows(self) -> int:
        return self.cols.shape[0]

    @property
    def degree(self) -> int:
        return self.cols.shape[1]

    @property
    def rows(self) -> list:
        return [list(zip(c.tolist(), w.tolist())) for c, w in zip(self.cols, self.weights)]

    def column_degrees(self) -> np.ndarray:
        return np.bincount(self.cols.ravel(), minlength=self.k)

    def prefix(self, m: int) -> "GeneratorMatrix":
        if m > self.n_rows:
            raise ValueError(f"only {self.n_rows} rows available, asked for {m}")
        return GeneratorMatrix(self.k, self.cols[:m], self.weights[:m])

    def to_dense(self) -> np.ndarray:
        g = np.zeros((self.n_rows, self.k))
        np.add.at(g, (np.arange(self.n_rows)[:, None], self.cols), self.weights)
        return g

    def __eq__(self, other):
        if not isinstance(other, GeneratorMatrix):
            return NotImplemented
        return (
            self.k == other.k
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    def to_text(self) -> str:
        """One line per row, space-separated ``col:weight`` pairs."""
        return "".join(
            " ".join(f"{c}:{w!r}" for c, w in zip(cr.tolist(), wr.tolist())) + "\n"
            for cr, wr in zip(self.cols, self.weights)
        )

    @classmethod
    def from_text(cls, text: str, k: int) -> "GeneratorMatrix":
        cols, weights = [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            pairs = [tok.split(":") for tok in line.split()]
            cols.append([int(c) for c, _ in pairs])
            weights.append([float(w) for _, w in pairs])
        if len({len(r) for r in cols}) > 1:
            raise ValueError("rows have differing degrees")
        if not cols:
            return cls(k, np.zeros((0, 0), dtype=np.int64), np.zeros((0, 0)))
        return cls(k, np.array(cols), np.array(weights))


def _draws_per_row(d_c: int) -> int:
    # padded to whole Philox blocks (4 words) so row i starts at counter i * P / 4
    return 4 * -(-2 * d_c // 4)


def row_uniforms(seed: int, start: int, n: int, d_c: int) -> np.ndarray:
    """Uniforms driving rows ``start .. start+n-1`` of a code, shape ``(n, P)``.

    Philox is counter based, so the block of row ``i`` depends only on
    ``(seed, i)``.
    """
    per_row = _draws_per_row(d_c)
    bitgen = np.random.Philox(key=seed, counter=start * per_row // 4)
    return np.random.Generator(bitgen).random((n, per_row))


def empty_generator(spec: CodeSpec) -> GeneratorMatrix:
    return GeneratorMatrix(
        spec.k, np.zeros((0, spec.d_c), dtype=np.int64), np.zeros((0, spec.d_c))
    )


def extend_generator(spec: CodeSpec, g: GeneratorMatrix, n_new: int) -> GeneratorMatrix:
    """Append ``n_new`` rows, each joining ``d_c`` of the least-connected columns.

    Columns are drawn uniformly among the current minimum-degree columns. If
    fewer than ``d_c`` share the minimum, all of them are taken and the rest
    come uniformly from the next degree tier. Row ``i`` is driven by
    ``row_uniforms(spec.seed, i, 1, d_c)``, so any prefix is reproducible
    from the seed alone.
    """
    if spec.d_c > spec.k:
        raise ValueError(f"d_c={spec.d_c} exceeds k={spec.k}")
    if n_new < 0:
        raise ValueError("n_new must be nonnegative")
    if g.k != spec.k or (g.n_rows and g.degree != spec.d_c):
        raise ValueError("generator does not match the code spec")
    k, d_c, f = spec.k, spec.d_c, spec.weight_set.f
    wvals = spec.weight_set.weights
    deg = g.column_degrees()
    low = int(deg.min())
    # sorted columns still at the minimum degree; sorted order keeps the
    # state at a row boundary a function of the degrees alone
    pool = np.flatnonzero(deg == low).tolist()
    u = row_uniforms(spec.seed, g.n_rows, n_new, d_c).tolist()
    new_cols = []
    new_w = []
    for draws in u:
        picked = []
        before_refill = None
        for j in range(d_c):
            if not pool:
                # tier exhausted mid-row: spill over to the next tier, minus this row's picks
                before_refill = list(picked)
                taken = set(picked)
                pool = [c for c in range(k) if c not in taken]
            picked.append(pool.pop(int(draws[j] * len(pool))))
        if before_refill:
            # those picks now sit at the new minimum degree alongside the leftovers
            pool = sorted(pool + before_refill)
        if not pool:
            pool = list(range(k))
        new_cols.append(picked)
        if spec.replacement:
            new_w.append([wvals[int(x * f)] for x in draws[d_c : 2 * d_c]])
        else:
            idx = list(range(f))
            row = []
            for j, x in enumerate(draws[d_c : 2 * d_c]):
                i = j + int(x * (f - j))
                idx[j], idx[i] = idx[i], idx[j]
                row.append(wvals[idx[j]])
            new_w.append(row)
    cols = np.array(new_cols, dtype=np.int64).reshape(n_new, d_c)
    weights = np.array(new_w, dtype=float).reshape(n_new, d_c)
    return GeneratorMatrix(
        k,
        np.concatenate([g.cols.reshape(-1, d_c), cols]),
        np.concatenate([g.weights.reshape(-1, d_c), weights]),
    )


def build_generator(spec: CodeSpec, m: int) -> GeneratorMatrix:
    return extend_generator(spec, empty_generator(spec), m)


def bpsk_map(bits) -> np.ndarray:
    """Map bit 1 to +1 and bit 0 to -1."""
    bits = np.asarray(bits)
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0 or 1")
    return 2.0 * bits.astype(float) - 1.0


def hard_decision(llr) -> np.ndarray:
    """Bit 1 where the LLR is strictly positive, else 0 (ties go to 0)."""
    return (np.asarray(llr) > 0).astype(np.int8)


def encode(g: GeneratorMatrix, b) -> np.ndarray:
    """Coded symbols ``u_i = sum_j g_ij * b_j``."""
    b = np.asarray(b, dtype=float)
    if b.shape != (g.k,):
        raise ValueError(f"expected {g.k} modulated symbols, got shape {b.shape}")
    if g.n_rows == 0:
        return np.zeros(0)
    return np.sum(g.weights * b[g.cols], axis=1)
