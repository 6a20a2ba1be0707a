"""Gaussian multiple-access channel and the destination's equivalent code.

Every active user sends one coded symbol per slot; the destination sees the
gain-weighted sum plus unit-variance noise. Since each coded symbol is a
weighted sum of BPSK symbols, the received sequence is itself the output of
a larger code whose columns are the users' information symbols side by
side.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .codec import CodeSpec, GeneratorMatrix, bpsk_map, build_generator
from .weights import avg_energy, resolve_weight_set

__all__ = [
    "EquivalentCode",
    "Scenario",
    "UserLink",
    "alpha_for_snr",
    "equivalent_generator",
    "received_powers",
    "received_snr",
    "scenario_from_config",
    "sum_capacity",
    "transmit",
    "user_generators",
]


@dataclass(frozen=True, eq=False)
class UserLink:
    user_id: int
    h: float
    spec: CodeSpec
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.int8)
        if bits.shape != (self.spec.k,):
            raise ValueError(f"user {self.user_id}: expected {self.spec.k} bits, got {bits.shape}")
        if not np.all((bits == 0) | (bits == 1)):
            raise ValueError("bits must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        if self.h == 0:
            raise ValueError(f"user {self.user_id}: active users need a nonzero gain")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Active users, common amplitude scale ``power_scale`` and noise seed.

    Noise variance is fixed at 1.
    """

    users: tuple
    power_scale: float = 1.0
    noise_seed: int = 0
    noise_variance: float = field(default=1.0, init=False)

    def __post_init__(self):
        users = tuple(self.users)
        if not users:
            raise ValueError("at least one active user is required")
        if not self.power_scale > 0:
            raise ValueError("power_scale must be positive")
        object.__setattr__(self, "users", users)

    @property
    def k(self) -> int:
        ks = {u.spec.k for u in self.users}
        if len(ks) != 1:
            raise ValueError(f"active users disagree on k: {sorted(ks)}")
        return ks.pop()

    @property
    def n_users(self) -> int:
        return len(self.users)

    def stacked_symbols(self) -> np.ndarray:
        return np.concatenate([bpsk_map(u.bits) for u in self.users])

    def stacked_bits(self) -> np.ndarray:
        return np.concatenate([u.bits for u in self.users])

    def with_power_scale(self, alpha: float) -> "Scenario":
        return replace(self, power_scale=alpha)


@dataclass(frozen=True, eq=False)
class EquivalentCode:
    """Sparse code over ``n_users * k`` columns in compressed-row layout.

    Row ``i`` holds entries ``cols[row_ptr[i]:row_ptr[i+1]]`` with matching
    ``weights``. Columns ``j*k .. (j+1)*k - 1`` belong to user ``j``.
    """

    n_users: int
    k: int
    row_ptr: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name, dt in (("row_ptr", np.int64), ("cols", np.int64), ("weights", float)):
            a = np.array(getattr(self, name), dtype=dt)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.cols.size:
            raise ValueError("row_ptr is inconsistent with the entry arrays")
        if self.cols.size != self.weights.size:
            raise ValueError("cols and weights differ in length")
        if self.cols.size and (self.cols.min() < 0 or self.cols.max() >= self.n_vars):
            raise ValueError("column index out of range")

    @classmethod
    def from_rows(cls, rows, n_users: int, k: int) -> "EquivalentCode":
        """Build from a list of rows, each a list of ``(column, weight)`` pairs."""
        lengths = [len(r) for r in rows]
        row_ptr = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        cols = [c for r in rows for c, _ in r]
        weights = [w for r in rows for _, w in r]
        return cls(n_users, k, row_ptr, cols, weights)

    @property
    def n_vars(self) -> int:
        return self.n_users * self.k

    @property
    def n_rows(self) -> int:
        return self.row_ptr.size - 1

    @property
    def row_degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    @property
    def d_e(self) -> int:
        """Common row degree; the largest one if rows differ."""
        deg = self.row_degrees
        return int(deg.max()) if deg.size else 0

    @property
    def edge_rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_rows), self.row_degrees)

    def row(self, i: int) -> list:
        s, e = self.row_ptr[i], self.row_ptr[i + 1]
        return list(zip(self.cols[s:e].tolist(), self.weights[s:e].tolist()))

    def apply(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape != (self.n_vars,):
            raise ValueError(f"expected {self.n_vars} symbols, got shape {b.shape}")
        return np.bincount(self.edge_rows, weights=self.weights * b[self.cols], minlength=self.n_rows)

    def to_dense(self) -> np.ndarray:
        g = np.zeros((self.n_rows, self.n_vars))
        np.add.at(g, (self.edge_rows, self.cols), self.weights)
        return g


def user_generators(sc: Scenario, m: int) -> list:
    return [build_generator(u.spec, m) for u in sc.users]


def equivalent_generator(sc: Scenario, m: int, generators=None) -> EquivalentCode:
    """Destination-side code: row ``i`` joins every user's row ``i`` scaled by ``alpha * h_j``.

    ``generators`` may pass prebuilt per-user matrices with at least ``m``
    rows; otherwise they are rebuilt from each user's seed.
    """
    k = sc.k
    if generators is None:
        generators = user_generators(sc, m)
    blocks_c, blocks_w = [], []
    for j, (u, g) in enumerate(zip(sc.users, generators)):
        if g.k != k:
            raise ValueError("generator width does not match k")
        g = g.prefix(m)
        blocks_c.append(g.cols + j * k)
        blocks_w.append(sc.power_scale * u.h * g.weights)
    cols = np.concatenate(blocks_c, axis=1)
    weights = np.concatenate(blocks_w, axis=1)
    d_e = cols.shape[1]
    row_ptr = np.arange(m + 1, dtype=np.int64) * d_e
    return EquivalentCode(sc.n_users, k, row_ptr, cols.ravel(), weights.ravel())


def noise_vector(seed: int, m: int) -> np.ndarray:
    """Unit-variance noise; the first ``m`` samples do not depend on later ones."""
    return np.random.Generator(np.random.Philox(key=seed)).standard_normal(m)


def transmit(sc: Scenario, m: int, noise: bool = True, generators=None) -> np.ndarray:
    """Received samples ``y = G b + n`` for the first ``m`` slots."""
    y = equivalent_generator(sc, m, generators).apply(sc.stacked_symbols())
    if noise:
        y = y + noise_vector(sc.noise_seed, m)
    return y


def received_powers(sc: Scenario) -> np.ndarray:
    """Per-user received power ``alpha^2 h_j^2 d_j sigma_w^2`` (noise power is 1)."""
    return np.array(
        [
            sc.power_scale**2 * u.h**2 * u.spec.d_c * avg_energy(u.spec.weight_set)
            for u in sc.users
        ]
    )


def received_snr(sc: Scenario) -> float:
    """Total received signal-to-noise ratio in dB."""
    return 10.0 * math.log10(received_powers(sc).sum())


def alpha_for_snr(sc: Scenario, snr_db: float) -> float:
    """Amplitude scale giving total received SNR ``snr_db``."""
    unit = received_powers(sc.with_power_scale(1.0)).sum()
    return math.sqrt(10.0 ** (snr_db / 10.0) / unit)


def sum_capacity(powers) -> float:
    """Gaussian MAC sum-rate bound ``0.5 * log2(1 + sum(P))`` in bits per channel use."""
    p = np.asarray(powers, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    return 0.5 * math.log2(1.0 + float(p.sum()))


def scenario_from_config(doc) -> Scenario:
    """Build a scenario from a JSON document (dict, JSON text or file path).

    Keys: ``users`` (list of ``{"h", "d", "seed", "bits"}``; ``bits`` is a
    0/1 list or ``"random"``), ``k``, ``weights`` (list or named set),
    ``replacement``, ``noise_seed``, ``bits_seed``, and exactly one of
    ``alpha`` or ``snr_db``.
    """
    if isinstance(doc, str):
        if doc.lstrip().startswith("{"):
            doc = json.loads(doc)
        else:
            with open(doc) as fh:
                doc = json.load(fh)
    if ("alpha" in doc) == ("snr_db" in doc):
        raise ValueError("give exactly one of 'alpha' or 'snr_db'")
    wset = resolve_weight_set(doc.get("weights", "afc8"))
    bits_rng = np.random.default_rng(int(doc.get("bits_seed", 0)))
    users = []
    for j, ud in enumerate(doc["users"]):
        k = int(ud.get("k", doc.get("k", 0)))
        spec = CodeSpec(
            k=k,
            d_c=int(ud.get("d", doc.get("d", 4))),
            weight_set=wset,
            seed=int(ud.get("seed", j)),
            replacement=bool(doc.get("replacement", False)),
        )
        bits = ud.get("bits", "random")
        if isinstance(bits, str):
            if bits != "random":
                raise ValueError(f"unknown bits source {bits!r}")
            bits = bits_rng.integers(0, 2, size=k)
        users.append(UserLink(j, float(ud.get("h", 1.0)), spec, bits))
    sc = Scenario(tuple(users), 1.0, int(doc.get("noise_seed", 0)))
    sc.k  # validates equal k
    if "alpha" in doc:
        return sc.with_power_scale(float(doc["alpha"]))
    return sc.with_power_scale(alpha_for_snr(sc, float(doc["snr_db"])))
