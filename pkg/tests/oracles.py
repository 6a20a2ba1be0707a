"""Slow reference implementations used only to check the library."""

import itertools
import math

import numpy as np
from scipy.integrate import quad


def brute_check_message(y, weights, llrs, target):
    """Check-to-variable LLR by listing every sign vector of the other neighbours."""
    weights = np.asarray(weights, dtype=float)
    llrs = np.asarray(llrs, dtype=float)
    others = np.array([i for i in range(len(weights)) if i != target], dtype=int)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=len(others)))).reshape(-1, len(others))
    rest = signs @ weights[others]
    # log P(b) with P(+1) = logistic(L), summed over the other neighbours
    logprior = -np.logaddexp(0.0, -signs * llrs[others]).sum(axis=1)
    plus = -0.5 * (y - weights[target] - rest) ** 2 + logprior
    minus = -0.5 * (y + weights[target] - rest) ** 2 + logprior
    return float(np.logaddexp.reduce(plus) - np.logaddexp.reduce(minus))


def map_llrs(dense, y):
    """Posterior LLR of every variable under uniform priors, by full enumeration."""
    n = dense.shape[1]
    configs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    logp = -0.5 * np.sum((y[None, :] - configs @ dense.T) ** 2, axis=1)
    out = np.empty(n)
    for r in range(n):
        pos = configs[:, r] > 0
        out[r] = np.logaddexp.reduce(logp[pos]) - np.logaddexp.reduce(logp[~pos])
    return out


def q_quad(x):
    return quad(lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi), x, math.inf, epsabs=1e-15)[0]


def s_quad(x):
    pdf = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    f = lambda z: (1.0 - math.tanh(x - z * math.sqrt(x))) * pdf(z)
    return quad(f, -math.inf, math.inf, epsabs=1e-14, epsrel=1e-13, limit=500)[0]


def random_tree_code(rng, n_users, k, weights, gains):
    """Rows of a random tree-shaped factor graph over ``n_users * k`` variables.

    Checks are added one at a time, each touching exactly one variable
    already in the tree plus zero or more new ones, so no cycle can form.
    Entry weights are ``gains[user] * w`` with ``w`` drawn from ``weights``.
    """
    n = n_users * k
    order = rng.permutation(n).tolist()
    placed = [order.pop()]
    rows = []

    def entry(c):
        return (c, float(gains[c // k] * weights[rng.integers(len(weights))]))

    while order:
        anchor = placed[rng.integers(len(placed))]
        fresh = [order.pop() for _ in range(min(len(order), int(rng.integers(1, 4))))]
        rows.append([entry(anchor)] + [entry(c) for c in fresh])
        placed += fresh
    # extra degree-1 checks keep the graph a tree
    for _ in range(int(rng.integers(0, n + 1))):
        rows.append([entry(int(rng.integers(n)))])
    return rows
