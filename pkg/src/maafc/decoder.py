"""Joint belief-propagation decoding on the equivalent multiple-access code.

Variables are the BPSK symbols of all users, checks are the received
samples. Messages are LLRs ``log P(b=+1)/P(b=-1)``. A check of degree ``D``
sees ``y = sum_r g_r b_r + n`` with unit-variance noise; the exact update
marginalises over the ``2**(D-1)`` sign patterns of the other neighbours,
the Gaussian update replaces their sum by a Gaussian of matching mean and
variance (soft interference cancellation).

The flooding schedule updates every check, then every variable. Several
independent frames can be decoded in one call; they are laid side by side
as one disconnected graph and give the same result as decoding each alone.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .channel import EquivalentCode
from .codec import hard_decision

__all__ = [
    "DecodeResult",
    "DecoderConfig",
    "check_to_var_exact",
    "check_to_var_gauss",
    "decode",
    "decode_batch",
    "var_to_check",
    "write_trace_csv",
]

EXACT = "exact"
GAUSS = "gaussian_approx"
CHECK_MODES = (EXACT, GAUSS)

# rows x sign-patterns per chunk in the exact update
_CHUNK_CELLS = 1 << 22
# below this the pooled exp-sum is redone in the log domain
_UNDERFLOW = 1e-250


@dataclass(frozen=True)
class DecoderConfig:
    max_iters: int = 50
    check_mode: str = EXACT
    exact_degree_cap: int = 12
    early_stop: bool = True
    clamp: float = 50.0
    damping: float = 0.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.check_mode not in CHECK_MODES:
            raise ValueError(f"check_mode must be one of {CHECK_MODES}")
        if self.exact_degree_cap < 1:
            raise ValueError("exact_degree_cap must be >= 1")
        if not self.clamp > 0:
            raise ValueError("clamp must be positive")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")


@dataclass
class DecodeResult:
    bits: list
    llr: np.ndarray
    iterations: int
    trace: list = field(default_factory=list)

    @property
    def all_bits(self) -> np.ndarray:
        return np.concatenate(self.bits)


@lru_cache(maxsize=None)
def _sign_table(deg: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=deg)))


def _exact_messages(y, w, lin, clamp):
    """Extrinsic check-to-variable LLRs for ``R`` checks of common degree ``D``.

    ``y`` has shape ``(R,)``, ``w`` and ``lin`` shape ``(R, D)``. The joint
    log-weight of a sign pattern includes every neighbour's prior; the
    target's own prior is removed afterwards by subtracting its LLR.
    """
    R, D = w.shape
    signs = _sign_table(D)
    plus = (signs > 0).astype(float)
    out = np.empty((R, D))
    step = max(1, _CHUNK_CELLS // signs.shape[0])
    for s in range(0, R, step):
        ws, ls, ys = w[s : s + step], lin[s : s + step], y[s : s + step]
        logp = -0.5 * (ys[:, None] - ws @ signs.T) ** 2 + 0.5 * (ls @ signs.T)
        logp -= logp.max(axis=1, keepdims=True)
        e = np.exp(logp)
        num = e @ plus
        den = e @ (1.0 - plus)
        with np.errstate(divide="ignore"):
            llr = np.log(num) - np.log(den)
        bad = np.flatnonzero(np.minimum(num, den).min(axis=1) < _UNDERFLOW)
        if bad.size:
            lb = logp[bad]
            for j in range(D):
                pos = signs[:, j] > 0
                llr[bad, j] = logsumexp(lb[:, pos], axis=1) - logsumexp(lb[:, ~pos], axis=1)
        out[s : s + step] = llr - ls
    return np.clip(out, -clamp, clamp)


def _gauss_messages(y_edge, w, lin, edge_rows, n_rows, clamp):
    """Edge-wise Gaussian interference update; ``edge_rows`` maps edges to checks."""
    t = np.tanh(0.5 * lin)
    mean_e = w * t
    var_e = w * w * (1.0 - t * t)
    mean = np.bincount(edge_rows, mean_e, minlength=n_rows)[edge_rows] - mean_e
    var = np.maximum(np.bincount(edge_rows, var_e, minlength=n_rows)[edge_rows] - var_e, 0.0)
    return np.clip(2.0 * w * (y_edge - mean) / (1.0 + var), -clamp, clamp)


def _incident_arrays(incident):
    arr = np.asarray(incident, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def check_to_var_exact(y, incident, target_index, *, degree_cap=12, clamp=50.0):
    """Exact LLR from one check to one neighbour.

    ``incident`` lists ``(weight, incoming LLR)`` for every neighbour,
    including the target (whose LLR is ignored).
    """
    if len(incident) > degree_cap:
        raise ValueError(
            f"check degree {len(incident)} exceeds exact_degree_cap={degree_cap}; "
            "use the gaussian_approx check mode"
        )
    w, lin = _incident_arrays(incident)
    lin = np.clip(lin, -clamp, clamp)
    return float(_exact_messages(np.array([float(y)]), w[None, :], lin[None, :], clamp)[0, target_index])


def check_to_var_gauss(y, incident, target_index, *, clamp=50.0):
    """Gaussian-interference LLR from one check to one neighbour."""
    if len(incident) < 1:
        raise ValueError("a check needs at least one neighbour")
    w, lin = _incident_arrays(incident)
    lin = np.clip(lin, -clamp, clamp)
    rows = np.zeros(w.size, dtype=np.int64)
    msgs = _gauss_messages(np.full(w.size, float(y)), w, lin, rows, 1, clamp)
    return float(msgs[target_index])


def var_to_check(incoming, excluded_index, *, clamp=50.0):
    """Sum of incoming check LLRs except the one on the excluded edge."""
    inc = np.asarray(incoming, dtype=float)
    total = inc.sum() - inc[excluded_index] if inc.size else 0.0
    return float(np.clip(total, -clamp, clamp))


class _Graph:
    """Flat edge arrays for a list of frames placed side by side."""

    def __init__(self, codes, ys, cfg):
        self.n_vars = np.array([c.n_vars for c in codes])
        self.n_edges = np.array([c.cols.size for c in codes])
        var_off = np.concatenate([[0], np.cumsum(self.n_vars)])
        row_off = np.concatenate([[0], np.cumsum([c.n_rows for c in codes])])
        edge_off = np.concatenate([[0], np.cumsum(self.n_edges)])
        self.var_off, self.edge_off = var_off, edge_off
        self.n = int(var_off[-1])
        self.m = int(row_off[-1])
        self.cols = np.concatenate([c.cols + o for c, o in zip(codes, var_off)])
        self.w = np.concatenate([c.weights for c in codes])
        self.row_ptr = np.concatenate(
            [codes[0].row_ptr[:1]] + [c.row_ptr[1:] + o for c, o in zip(codes, edge_off)]
        )
        self.y = np.concatenate(ys)
        deg = np.diff(self.row_ptr)
        self.edge_rows = np.repeat(np.arange(self.m), deg)
        exact_ok = (deg <= cfg.exact_degree_cap) if cfg.check_mode == EXACT else np.zeros(self.m, bool)
        # exact rows grouped by degree as (rows, edge-index matrix)
        self.exact_groups = []
        for d in np.unique(deg[exact_ok & (deg > 0)]):
            rows = np.flatnonzero(exact_ok & (deg == d))
            self.exact_groups.append((rows, self.row_ptr[rows][:, None] + np.arange(d)))
        gauss_rows = ~exact_ok & (deg > 0)
        self.gauss_edges = np.flatnonzero(gauss_rows[self.edge_rows])
        self.gauss_y = self.y[self.edge_rows[self.gauss_edges]]
        self.gauss_edge_rows = self.edge_rows[self.gauss_edges]

    def check_update(self, v2c, clamp):
        c2v = np.zeros_like(v2c)
        for rows, idx in self.exact_groups:
            c2v[idx] = _exact_messages(self.y[rows], self.w[idx], v2c[idx], clamp)
        if self.gauss_edges.size:
            e = self.gauss_edges
            c2v[e] = _gauss_messages(self.gauss_y, self.w[e], v2c[e], self.gauss_edge_rows, self.m, clamp)
        return c2v


def _check_inputs(code, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (code.n_rows,):
        raise ValueError(f"expected {code.n_rows} received samples, got shape {y.shape}")
    return y


def decode_batch(codes, ys, cfg: DecoderConfig | None = None, truths=None) -> list:
    """Decode independent frames together; results match per-frame :func:`decode`.

    ``truths`` (optional, one bit vector per frame) enables a per-iteration
    trace of mean ``|LLR|`` and tentative BER per user block.
    """
    cfg = cfg or DecoderConfig()
    codes = list(codes)
    ys = [_check_inputs(c, y) for c, y in zip(codes, ys)]
    if len(ys) != len(codes):
        raise ValueError("one received vector per code is required")
    n_frames = len(codes)
    results = [None] * n_frames
    active = list(range(n_frames))
    graph = _Graph([codes[i] for i in active], [ys[i] for i in active], cfg)
    v2c = np.zeros(graph.cols.size)
    prev = [None] * n_frames
    stable = [0] * n_frames
    traces = [[] for _ in range(n_frames)]
    for t in range(1, cfg.max_iters + 1):
        new = graph.check_update(v2c, cfg.clamp)
        c2v = new if t == 1 or not cfg.damping else (1.0 - cfg.damping) * new + cfg.damping * c2v
        total = np.bincount(graph.cols, c2v, minlength=graph.n)
        v2c = np.clip(total[graph.cols] - c2v, -cfg.clamp, cfg.clamp)
        finished = []
        for pos, i in enumerate(active):
            llr = total[graph.var_off[pos] : graph.var_off[pos + 1]]
            dec = hard_decision(llr)
            if truths is not None:
                traces[i].append(_trace_row(t, llr, dec, truths[i], codes[i]))
            if prev[i] is not None and np.array_equal(dec, prev[i]):
                stable[i] += 1
            else:
                stable[i] = 0
            prev[i] = dec
            if t == cfg.max_iters or (cfg.early_stop and stable[i] >= 2):
                results[i] = _result(codes[i], llr.copy(), t, traces[i])
                finished.append(pos)
        if finished:
            keep = [p for p in range(len(active)) if p not in set(finished)]
            if not keep:
                break
            spans = [slice(graph.edge_off[p], graph.edge_off[p + 1]) for p in keep]
            v2c = np.concatenate([v2c[s] for s in spans])
            c2v = np.concatenate([c2v[s] for s in spans])
            active = [active[p] for p in keep]
            graph = _Graph([codes[i] for i in active], [ys[i] for i in active], cfg)
    return results


def _result(code, llr, t, trace):
    k = code.k
    bits = [hard_decision(llr[j * k : (j + 1) * k]) for j in range(code.n_users)]
    return DecodeResult(bits, llr, t, trace)


def _trace_row(t, llr, dec, truth, code):
    k = code.k
    truth = np.asarray(truth)
    row = {"iteration": t}
    for j in range(code.n_users):
        sl = slice(j * k, (j + 1) * k)
        row[f"mean_abs_llr_{j + 1}"] = float(np.mean(np.abs(llr[sl])))
        row[f"ber_{j + 1}"] = float(np.mean(dec[sl] != truth[sl]))
    return row


def decode(code: EquivalentCode, y, cfg: DecoderConfig | None = None, truth=None) -> DecodeResult:
    """Decode one frame; ``truth`` (stacked bits) turns on the iteration trace."""
    return decode_batch([code], [y], cfg, None if truth is None else [truth])[0]


def write_trace_csv(path, trace) -> None:
    if not trace:
        raise ValueError("empty trace")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(trace[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(trace)
