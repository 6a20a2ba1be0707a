"""Monte Carlo experiments: BER points, minimum-symbol search and sweeps.

Every frame ``t`` draws its message bits, noise and (by default) code seeds
from ``SeedSequence(master_seed, spawn_key=(t,))``, so an experiment is a
pure function of its config. Frames are decoded in batches; batches may run
on several threads, but results are reduced in frame order and the stopping
rule is applied frame by frame, so neither the batch size nor the thread
count changes any output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    Scenario,
    UserLink,
    alpha_for_snr,
    equivalent_generator,
    noise_vector,
    received_powers,
    received_snr,
    sum_capacity,
)
from .codec import CodeSpec, build_generator, extend_generator
from .decoder import DecoderConfig, decode_batch
from .density import DeScenario, de_run, predict_ber
from .weights import AFC8_WEIGHTS, WeightSet, resolve_weight_set

__all__ = [
    "BerPoint",
    "ExperimentConfig",
    "MinSymbols",
    "SearchError",
    "UserSetup",
    "ber_curve",
    "find_min_symbols",
    "load_config",
    "run_ber_point",
    "sweep",
    "sweep_snr",
]


@dataclass(frozen=True)
class UserSetup:
    h: float = 1.0
    d: int = 4
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment depends on.

    ``trials`` caps the frames per point; fewer are used once every user has
    ``min_errors`` bit errors. Exactly one of ``snr_db`` (total received SNR)
    and ``alpha`` (transmit amplitude scale) sets the power.
    """

    users: tuple = (UserSetup(1.0, 4, 1), UserSetup(1.0, 4, 2))
    k: int = 200
    weights: WeightSet = AFC8_WEIGHTS
    replacement: bool = False
    snr_db: float | None = 20.0
    alpha: float | None = None
    decoder: DecoderConfig = DecoderConfig(max_iters=100, damping=0.7)
    trials: int = 500
    min_errors: int = 50
    batch_frames: int = 16
    target_ber: float = 1e-3
    snr_grid: tuple = ()
    rate_grid: tuple = ()
    master_seed: int = 0
    threads: int = 1
    fresh_code_per_trial: bool = True
    m_cap: int = 100_000
    grid_factor: float = 1.25
    search_rel_tol: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        object.__setattr__(self, "rate_grid", tuple(float(r) for r in self.rate_grid))
        if not self.users:
            raise ValueError("at least one user is required")
        if self.trials < 1 or self.min_errors < 1 or self.batch_frames < 1 or self.threads < 1:
            raise ValueError("trials, min_errors, batch_frames and threads must be >= 1")
        if not 0.0 < self.target_ber <= 0.5:
            raise ValueError("target_ber must lie in (0, 0.5]")
        if (self.snr_db is None) == (self.alpha is None):
            raise ValueError("set exactly one of snr_db and alpha")
        for name in ("snr_grid", "rate_grid"):
            g = getattr(self, name)
            if list(g) != sorted(g):
                raise ValueError(f"{name} must be sorted")
        if any(r <= 0 for r in self.rate_grid):
            raise ValueError("inverse sum-rates must be positive")
        if self.grid_factor <= 1.0:
            raise ValueError("grid_factor must exceed 1")

    @property
    def n_users(self) -> int:
        return len(self.users)

    def at_snr(self, snr_db: float) -> "ExperimentConfig":
        return replace(self, snr_db=float(snr_db), alpha=None)

    def nominal_scenario(self) -> Scenario:
        """Scenario with all-zero bits and the configured user seeds; fixes ``alpha``."""
        users = tuple(
            UserLink(j, u.h, self._spec(u.d, u.seed), np.zeros(self.k, dtype=np.int8))
            for j, u in enumerate(self.users)
        )
        sc = Scenario(users, 1.0, 0)
        alpha = self.alpha if self.alpha is not None else alpha_for_snr(sc, self.snr_db)
        return sc.with_power_scale(alpha)

    def _spec(self, d, seed) -> CodeSpec:
        return CodeSpec(self.k, d, self.weights, seed, self.replacement)


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    m: int
    inverse_sum_rate: float
    ber_sim: tuple
    ber_de: tuple
    frames: int
    bit_errors: tuple
    bits_per_user: int
    resolved: tuple
    mean_llr: tuple = ()
    de_mean: tuple = ()

    @property
    def worst_ber(self) -> float:
        return max(self.ber_sim)


@dataclass(frozen=True)
class MinSymbols:
    m: int
    sum_rate: float
    sum_capacity: float
    point: BerPoint
    evaluations: list = field(default_factory=list)

    @property
    def capacity_fraction(self) -> float:
        return self.sum_rate / self.sum_capacity

    @property
    def capacity_gap(self) -> float:
        return self.sum_capacity - self.sum_rate


class SearchError(RuntimeError):
    def __init__(self, message, best: BerPoint | None):
        super().__init__(message)
        self.best = best


def _frame_seeds(cfg: ExperimentConfig, t: int):
    words = np.random.SeedSequence(cfg.master_seed, spawn_key=(t,)).generate_state(
        2 * cfg.n_users + 1, dtype=np.uint64
    )
    return [int(w) for w in words]


class _Runner:
    """Frame factory for one config; caches generators across ``m`` for reuse."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.nominal = cfg.nominal_scenario()
        self._cache = {}

    def frame(self, t: int, m: int):
        cfg = self.cfg
        words = _frame_seeds(cfg, t)
        users = []
        gens = []
        for j, u in enumerate(cfg.users):
            bits = np.random.default_rng(words[2 * j]).integers(0, 2, cfg.k)
            code_seed = words[2 * j + 1] if cfg.fresh_code_per_trial else u.seed
            spec = cfg._spec(u.d, code_seed)
            users.append(UserLink(j, u.h, spec, bits))
            gens.append(self._generator(t, j, spec, m))
        sc = Scenario(tuple(users), self.nominal.power_scale, words[-1])
        code = equivalent_generator(sc, m, gens)
        y = code.apply(sc.stacked_symbols()) + noise_vector(sc.noise_seed, m)
        return code, y, sc.stacked_bits()

    def _generator(self, t, j, spec, m):
        g = self._cache.get((t, j))
        if g is None:
            g = build_generator(spec, m)
        elif g.n_rows < m:
            g = extend_generator(spec, g, m - g.n_rows)
        self._cache[(t, j)] = g
        return g

    def clear(self):
        self._cache.clear()

    def batch(self, frames, m):
        codes, ys, truths = zip(*(self.frame(t, m) for t in frames))
        results = decode_batch(codes, ys, self.cfg.decoder)
        k = self.cfg.k
        out = []
        for res, truth in zip(results, truths):
            errs = [int(np.sum(b != truth[j * k : (j + 1) * k])) for j, b in enumerate(res.bits)]
            # LLR signed so that positive means correct
            signed = res.llr * (2.0 * truth - 1.0)
            llr = [float(signed[j * k : (j + 1) * k].mean()) for j in range(len(res.bits))]
            out.append((errs, llr))
        return out


def _frame_results(runner: _Runner, m: int):
    """Yield per-frame ``(errors, mean signed LLR)`` in frame order, lazily by wave."""
    cfg = runner.cfg
    bsz = cfg.batch_frames
    starts = list(range(0, cfg.trials, bsz))
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        for w in range(0, len(starts), cfg.threads):
            wave = [range(s, min(s + bsz, cfg.trials)) for s in starts[w : w + cfg.threads]]
            if pool is None:
                done = [runner.batch(fr, m) for fr in wave]
            else:
                done = list(pool.map(lambda fr: runner.batch(fr, m), wave))
            for batch in done:
                for item in batch:
                    yield item
    finally:
        if pool is not None:
            pool.shutdown()


def _measure(runner: _Runner, m: int, fail_above: float | None = None) -> BerPoint:
    cfg = runner.cfg
    n = cfg.n_users
    errors = np.zeros(n, dtype=np.int64)
    llr_sum = np.zeros(n)
    frames = 0
    limit = None if fail_above is None else fail_above * cfg.trials * cfg.k
    for errs, llr in _frame_results(runner, m):
        frames += 1
        errors += errs
        llr_sum += llr
        if errors.min() >= cfg.min_errors:
            break
        if limit is not None and errors.max() > limit:
            break
    bits = frames * cfg.k
    de_sc = DeScenario.from_scenario(runner.nominal, m)
    traj, _ = de_run(de_sc)
    de_m = traj[-1].as_array()
    return BerPoint(
        snr_db=received_snr(runner.nominal),
        m=m,
        inverse_sum_rate=m / (n * cfg.k),
        ber_sim=tuple((errors / bits).tolist()),
        ber_de=tuple(np.atleast_1d(predict_ber(de_m)).tolist()),
        frames=frames,
        bit_errors=tuple(errors.tolist()),
        bits_per_user=bits,
        resolved=tuple((errors >= cfg.min_errors).tolist()),
        mean_llr=tuple((llr_sum / frames).tolist()),
        de_mean=tuple(de_m.tolist()),
    )


def run_ber_point(cfg: ExperimentConfig, m: int) -> BerPoint:
    """Simulated and predicted per-user BER with ``m`` received symbols."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return _measure(_Runner(cfg), int(m))


def find_min_symbols(cfg: ExperimentConfig) -> MinSymbols:
    """Smallest ``m`` whose worst-user BER meets ``cfg.target_ber``.

    A geometric grid (factor ``grid_factor``) brackets the answer, then
    bisection narrows it to ``max(1, search_rel_tol * m)``. A point fails as
    soon as its error count guarantees a BER above target.
    """
    runner = _Runner(cfg)
    capacity = sum_capacity(received_powers(runner.nominal))
    target = cfg.target_ber
    evaluations = []

    def passes(m):
        pt = _measure(runner, m, fail_above=target)
        evaluations.append(pt)
        return pt.worst_ber <= target, pt

    def result(m, pt):
        rate = cfg.n_users * cfg.k / m
        return MinSymbols(m, rate, capacity, pt, evaluations)

    if target >= 0.5:
        # guessing meets the target; one symbol is the least admissible m
        return result(1, _measure(runner, 1))
    lo, hi, hi_pt = 0, 1, None
    while True:
        ok, pt = passes(hi)
        if ok:
            hi_pt = pt
            break
        lo = hi
        if hi >= cfg.m_cap:
            best = min(evaluations, key=lambda p: p.worst_ber)
            raise SearchError(f"target BER {target} not reached with m <= {cfg.m_cap}", best)
        hi = min(cfg.m_cap, max(hi + 1, math.ceil(hi * cfg.grid_factor)))
    while hi - lo > max(1, int(cfg.search_rel_tol * hi)):
        mid = (lo + hi) // 2
        ok, pt = passes(mid)
        if ok:
            hi, hi_pt = mid, pt
        else:
            lo = mid
    runner.clear()
    return result(hi, hi_pt)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


SNR_COLUMNS = [
    "snr_db",
    "m_star",
    "sum_rate",
    "per_user_rate",
    "sum_capacity",
    "capacity_fraction",
    "worst_ber",
    "worst_ber_resolved",
    "frames",
]

CURVE_COLUMNS = [
    "inverse_sum_rate",
    "m",
    "snr_db",
    "user",
    "h",
    "d",
    "ber_sim",
    "ber_de",
    "bit_errors",
    "bits",
    "frames",
    "resolved",
    "mean_llr_sim",
    "mean_llr_de",
]


def _write_csv(path, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
    return text


def _clean_grid(grid):
    return [g for g in dict.fromkeys(grid) if math.isfinite(g)]


def sweep_snr(cfg: ExperimentConfig, path=None):
    """Minimum-symbol search per SNR; returns ``(results, csv_text)``."""
    grid = _clean_grid(cfg.snr_grid)
    if not grid:
        raise ValueError("snr_grid is empty")
    results, rows = [], []
    for snr in grid:
        r = find_min_symbols(cfg.at_snr(snr))
        results.append(r)
        pt = r.point
        worst = int(np.argmax(pt.ber_sim))
        rows.append(
            [
                float(snr),
                r.m,
                r.sum_rate,
                r.sum_rate / cfg.n_users,
                r.sum_capacity,
                r.capacity_fraction,
                pt.worst_ber,
                pt.resolved[worst],
                pt.frames,
            ]
        )
    return results, _write_csv(path, SNR_COLUMNS, rows)


def ber_curve(cfg: ExperimentConfig, path=None):
    """BER against inverse sum-rate; one CSV row per grid value and user."""
    grid = [r for r in _clean_grid(cfg.rate_grid) if r > 0]
    if not grid:
        raise ValueError("rate_grid is empty")
    runner = _Runner(cfg)
    points, rows = [], []
    for x in grid:
        m = max(1, int(round(x * cfg.n_users * cfg.k)))
        pt = _measure(runner, m)
        points.append(pt)
        for j, u in enumerate(cfg.users):
            rows.append(
                [
                    x,
                    m,
                    pt.snr_db,
                    j + 1,
                    float(u.h),
                    u.d,
                    pt.ber_sim[j],
                    pt.ber_de[j],
                    pt.bit_errors[j],
                    pt.bits_per_user,
                    pt.frames,
                    pt.resolved[j],
                    pt.mean_llr[j],
                    pt.de_mean[j],
                ]
            )
    return points, _write_csv(path, CURVE_COLUMNS, rows)


def sweep(cfg: ExperimentConfig, mode: str, path=None):
    """``mode`` is ``"snr"`` (minimum symbols per SNR) or ``"curve"`` (BER per rate)."""
    if mode == "snr":
        return sweep_snr(cfg, path)
    if mode == "curve":
        return ber_curve(cfg, path)
    raise ValueError(f"unknown sweep mode {mode!r}")


_DECODER_KEYS = {"max_iters", "check_mode", "exact_degree_cap", "early_stop", "clamp", "damping"}


def load_config(doc, **overrides) -> ExperimentConfig:
    """Experiment config from a dict, JSON text or path, with keyword overrides."""
    if isinstance(doc, (str, os.PathLike)):
        text = str(doc)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(doc) as fh:
                doc = json.load(fh)
    doc = dict(doc or {})
    doc.update({k: v for k, v in overrides.items() if v is not None})
    kw = {}
    if "users" in doc:
        kw["users"] = tuple(
            UserSetup(float(u.get("h", 1.0)), int(u.get("d", 4)), int(u.get("seed", j)))
            for j, u in enumerate(doc["users"])
        )
    if "weights" in doc:
        kw["weights"] = resolve_weight_set(doc["weights"])
    if "decoder" in doc or "check_mode" in doc:
        dec = dict(doc.get("decoder", {}))
        if "check_mode" in doc:
            dec["check_mode"] = doc["check_mode"]
        unknown = set(dec) - _DECODER_KEYS
        if unknown:
            raise ValueError(f"unknown decoder keys: {sorted(unknown)}")
        kw["decoder"] = replace(ExperimentConfig.decoder, **dec)
    if "alpha" in doc and "snr_db" in doc:
        raise ValueError("give exactly one of 'alpha' or 'snr_db'")
    if "alpha" in doc:
        kw["alpha"] = float(doc["alpha"])
        kw["snr_db"] = None
    for key in (
        "k",
        "trials",
        "min_errors",
        "batch_frames",
        "master_seed",
        "threads",
        "m_cap",
    ):
        if key in doc:
            kw[key] = int(doc[key])
    for key in ("snr_db", "target_ber", "grid_factor", "search_rel_tol"):
        if key in doc:
            kw[key] = float(doc[key])
    for key in ("replacement", "fresh_code_per_trial"):
        if key in doc:
            kw[key] = bool(doc[key])
    for key in ("snr_grid", "rate_grid"):
        if key in doc:
            kw[key] = tuple(doc[key])
    return ExperimentConfig(**kw)
