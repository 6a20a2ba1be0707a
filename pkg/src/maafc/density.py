"""Mean-LLR density evolution for joint BP on the multiple-access code.

Each user's variable-to-check LLR is modelled as Gaussian with mean ``m_i``
and variance ``2 m_i``. One step maps the current means to

    m_i <- h_i^2 * sigma_w^2 * d_i * (m/k) * 2 / (1 + var_Y)
    var_Y = sum_j h_j^2 * d_j * sigma_w^2 * S(m_j)

where ``S`` measures the residual uncertainty of a user whose LLR has
mean ``x``. Gains ``h`` here are effective amplitudes (channel gain times
the transmit scale).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .weights import avg_energy, q_function

__all__ = [
    "DeScenario",
    "DeState",
    "ber_transfer",
    "de_run",
    "de_step",
    "predict_ber",
    "q_inverse",
    "s_function",
    "write_trajectory_csv",
]

HERMITE_NODES = 256


@lru_cache(maxsize=None)
def _hermite(n):
    return np.polynomial.hermite.hermgauss(n)


def s_function(x, nodes: int = HERMITE_NODES):
    """``E[1 - tanh(x - Z sqrt(x))]`` for standard normal ``Z``, by Gauss-Hermite quadrature."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or not np.all(np.isfinite(xa)):
        raise ValueError("S(x) needs finite x >= 0")
    t, w = _hermite(nodes)
    # Z = sqrt(2) t turns the normal weight into exp(-t^2)
    arg = xa[..., None] - math.sqrt(2.0) * t * np.sqrt(xa)[..., None]
    out = (w * (1.0 - np.tanh(arg))).sum(axis=-1) / math.sqrt(math.pi)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DeScenario:
    gains: tuple
    degrees: tuple
    sigma_w_sq: float
    symbol_ratio: float

    def __post_init__(self):
        object.__setattr__(self, "gains", tuple(float(h) for h in self.gains))
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if len(self.gains) != len(self.degrees) or not self.gains:
            raise ValueError("need one (gain, degree) pair per user")
        if not self.symbol_ratio > 0:
            raise ValueError("symbol_ratio must be positive")
        if not self.sigma_w_sq > 0:
            raise ValueError("sigma_w_sq must be positive")

    @classmethod
    def from_scenario(cls, sc, m: int) -> "DeScenario":
        """Effective gains ``alpha * h_j`` of a channel scenario with ``m`` received symbols."""
        energies = {avg_energy(u.spec.weight_set) for u in sc.users}
        if len(energies) != 1:
            raise ValueError("density evolution assumes one weight set for all users")
        return cls(
            tuple(sc.power_scale * u.h for u in sc.users),
            tuple(u.spec.d_c for u in sc.users),
            energies.pop(),
            m / sc.k,
        )

    @property
    def strengths(self) -> np.ndarray:
        """``h_i^2 d_i sigma_w^2`` per user."""
        return np.square(self.gains) * np.asarray(self.degrees) * self.sigma_w_sq


@dataclass(frozen=True)
class DeState:
    m: tuple
    t: int = 0

    @classmethod
    def initial(cls, n_users: int) -> "DeState":
        return cls((0.0,) * n_users, 0)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.m, dtype=float)


def de_step(state: DeState, sc: DeScenario) -> DeState:
    strength = sc.strengths
    var_y = float(np.dot(strength, s_function(state.as_array())))
    m = strength * sc.symbol_ratio * 2.0 / (1.0 + var_y)
    return DeState(tuple(m.tolist()), state.t + 1)


def de_run(sc: DeScenario, max_t: int = 200, tol: float = 1e-10):
    """Iterate from zero means until the largest change drops below ``tol``.

    Returns the trajectory (starting with the zero state) and whether it
    converged within ``max_t`` steps.
    """
    if max_t < 1 or not tol > 0:
        raise ValueError("need max_t >= 1 and tol > 0")
    traj = [DeState.initial(len(sc.gains))]
    for _ in range(max_t):
        nxt = de_step(traj[-1], sc)
        traj.append(nxt)
        if np.max(np.abs(nxt.as_array() - traj[-2].as_array())) < tol:
            return traj, True
    return traj, False


def predict_ber(m):
    """Bit error rate ``Q(sqrt(m))`` for mean LLR ``m``."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise ValueError("mean LLR must be nonnegative")
    return q_function(np.sqrt(m))


def q_inverse(p: float, tol: float = 1e-12) -> float:
    """Solve ``Q(x) = p`` by Newton steps safeguarded with bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    lo, hi = -40.0, 40.0
    x = 0.0
    for _ in range(200):
        fx = q_function(x) - p
        if fx > 0:
            lo = x
        else:
            hi = x
        deriv = -math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        nxt = x - fx / deriv if deriv != 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= tol * max(1.0, abs(x)):
            return nxt
        x = nxt
    return x


def ber_transfer(p_j: float, gain_ratio: float) -> float:
    """BER of user ``i`` given user ``j``'s BER ``p_j`` and ``h_i^2 d_i / (h_j^2 d_j)``."""
    if not 0.0 < p_j < 1.0:
        raise ValueError("p_j must lie in (0, 1)")
    if not gain_ratio > 0:
        raise ValueError("gain_ratio must be positive")
    return q_function(q_inverse(p_j) * math.sqrt(gain_ratio))


def write_trajectory_csv(path, traj) -> str:
    """Write one row per DE step (``path=None`` only returns the text)."""
    n = len(traj[0].m)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"m_{i + 1}" for i in range(n)] + [f"ber_{i + 1}" for i in range(n)])
    for st in traj:
        m = st.as_array()
        w.writerow([st.t] + [repr(float(v)) for v in m] + [repr(float(b)) for b in np.atleast_1d(predict_ber(m))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
