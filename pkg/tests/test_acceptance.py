"""Acceptance suite: one test (and one summary line) per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the PASS/FAIL lines
appear under "acceptance criteria" in the terminal summary.
"""

import itertools
import math
import time

import numpy as np
import pytest

from maafc.channel import EquivalentCode
from maafc.cli import main as cli_main
from maafc.decoder import DecoderConfig, check_to_var_exact, decode
from maafc.density import DeScenario, ber_transfer, de_run, predict_ber, s_function
from maafc.harness import ExperimentConfig, UserSetup, ber_curve, sweep_snr
from maafc.weights import (
    AFC8_WEIGHTS,
    GaussFitSpec,
    avg_energy,
    coded_symbol_pmf,
    design_weights,
    gaussianity_residual,
    q_function,
)

from oracles import brute_check_message, map_llrs, q_quad, random_tree_code, s_quad

FOUR_GAINS = (1.0, 2.0, 3.0, 4.0)
RATE_GRID = (0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6)
SNR_POINTS = (5.0, 10.0, 15.0, 20.0)


def _line(report, number, name, ok, detail):
    report(f"criterion {number} [{name}]: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_1_check_node_oracle(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for case in range(10_000):
        deg = 2 + case % 9  # degrees 2..10, evenly covered
        w = rng.choice(AFC8_WEIGHTS.weights, deg) * rng.uniform(0.5, 4.0)
        lin = rng.normal(0.0, 4.0, deg)
        y = rng.normal(0.0, 1.0 + w.sum())
        t = int(rng.integers(deg))
        got = check_to_var_exact(y, list(zip(w, lin)), t, clamp=1e6)
        worst = max(worst, abs(got - brute_check_message(y, w, lin, t)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 60
    _line(report, 1, "check-node oracle", ok, f"max |diff| {worst:.2e} over 10^4 cases, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert elapsed < 60


def test_criterion_2_tree_exactness(report):
    rng = np.random.default_rng(7)
    cfg = DecoderConfig(max_iters=40, early_stop=False, clamp=1e4)
    t0 = time.perf_counter()
    checked = mismatched = 0
    worst_llr = 0.0
    while checked < 150:
        n_users = int(rng.integers(1, 4))
        k = int(rng.integers(1, 12 // n_users + 1))
        gains = rng.uniform(0.5, 3.0, n_users)
        rows = random_tree_code(rng, n_users, k, AFC8_WEIGHTS.weights, gains)
        code = EquivalentCode.from_rows(rows, n_users, k)
        b = rng.choice([-1.0, 1.0], n_users * k)
        y = code.apply(b) + rng.standard_normal(code.n_rows)
        exact = map_llrs(code.to_dense(), y)
        if np.min(np.abs(exact)) < 1e-6:
            continue  # decision undefined at a tie
        res = decode(code, y, cfg)
        checked += 1
        mismatched += int(np.any((exact > 0) != (res.llr > 0)))
        worst_llr = max(worst_llr, float(np.max(np.abs(exact - res.llr))))
    elapsed = time.perf_counter() - t0
    ok = mismatched == 0 and elapsed < 60
    _line(
        report, 2, "tree exactness", ok,
        f"{checked} instances, {mismatched} decision mismatches, max LLR gap {worst_llr:.1e}, {elapsed:.1f} s",
    )
    assert mismatched == 0
    assert elapsed < 60


def test_criterion_3_de_ratio_law(report):
    sigma = avg_energy(AFC8_WEIGHTS)
    worst_ratio = worst_transfer = 0.0
    for x in RATE_GRID:
        sc = DeScenario(FOUR_GAINS, (4, 4, 4, 4), sigma, x * len(FOUR_GAINS))
        strength = sc.strengths
        traj, _ = de_run(sc)
        for state in traj[1:]:
            m = state.as_array()
            p = np.atleast_1d(predict_ber(m))
            for i, j in itertools.permutations(range(4), 2):
                want = strength[i] / strength[j]
                worst_ratio = max(worst_ratio, abs(m[i] / m[j] - want) / want)
                if 0.0 < p[j] < 0.5 and p[i] > 0.0:
                    got = ber_transfer(float(p[j]), want)
                    worst_transfer = max(worst_transfer, abs(got - p[i]) / p[i])
    ok = worst_ratio <= 1e-9 and worst_transfer <= 1e-9
    _line(report, 3, "DE ratio law", ok, f"ratio rel err {worst_ratio:.1e}, transfer rel err {worst_transfer:.1e}")
    assert worst_ratio <= 1e-9
    assert worst_transfer <= 1e-9


@pytest.fixture(scope="module")
def four_user_curve():
    cfg = ExperimentConfig(
        users=tuple(UserSetup(h, 4, j + 1) for j, h in enumerate(FOUR_GAINS)),
        k=200,
        snr_db=30.0,
        decoder=DecoderConfig(max_iters=100, check_mode="gaussian_approx", damping=0.7),
        trials=2000,
        min_errors=50,
        rate_grid=RATE_GRID,
        threads=4,
    )
    t0 = time.perf_counter()
    points, _ = ber_curve(cfg)
    return points, time.perf_counter() - t0


def _waterfall(pt, j):
    return pt.resolved[j] and 0.0 < pt.ber_sim[j] <= 0.1


def test_criterion_4_four_user_ordering(report, four_user_curve):
    points, elapsed = four_user_curve
    checked, broken = [], []
    for pt in points:
        if all(pt.resolved):
            checked.append(pt.inverse_sum_rate)
            b = pt.ber_sim
            if not (b[3] < b[2] < b[1] < b[0]):
                broken.append(pt.inverse_sum_rate)
    ok = bool(checked) and not broken and elapsed <= 1800
    _line(
        report, 4, "four-user BER ordering", ok,
        f"strict ordering at {len(checked)} fully resolved points {checked}, broken at {broken}, {elapsed:.0f} s",
    )
    assert checked and not broken
    assert elapsed <= 1800


def test_criterion_4_four_user_de_agreement(report, four_user_curve):
    points, _ = four_user_curve
    gaps = []
    for pt in points:
        for j in range(4):
            if _waterfall(pt, j):
                de = max(pt.ber_de[j], 1e-300)
                gaps.append((pt.inverse_sum_rate, j + 1, abs(math.log10(de / pt.ber_sim[j]))))
    bad = [g for g in gaps if g[2] > 1.0]
    worst = max((g[2] for g in gaps), default=0.0)
    ok = bool(gaps) and not bad
    _line(
        report, 4, "DE BER within 10x of simulation", ok,
        f"{len(gaps)} waterfall (rate, user) pairs, {len(bad)} off by more than one decade, worst {worst:.1f} decades",
    )
    assert gaps and not bad


def test_criterion_4_four_user_llr_tracking(report, four_user_curve):
    points, _ = four_user_curve
    ratios = []
    for pt in points:
        for j in range(4):
            if _waterfall(pt, j) and pt.mean_llr[j] > 0:
                ratios.append((pt.inverse_sum_rate, j + 1, pt.de_mean[j] / pt.mean_llr[j]))
    bad = [r for r in ratios if not 0.5 <= r[2] <= 2.0]
    span = (min(r[2] for r in ratios), max(r[2] for r in ratios)) if ratios else (math.nan, math.nan)
    ok = bool(ratios) and not bad
    _line(
        report, 4, "DE mean LLR within 2x of simulation", ok,
        f"{len(ratios)} waterfall pairs, DE/sim ratio in [{span[0]:.2f}, {span[1]:.2f}], {len(bad)} outside [0.5, 2]",
    )
    assert ratios and not bad


def test_criterion_5_sum_rate_vs_capacity(report):
    cfg = ExperimentConfig(
        users=(UserSetup(1.0, 4, 1), UserSetup(1.0, 4, 2)),
        k=200,
        target_ber=1e-3,
        decoder=DecoderConfig(max_iters=100, check_mode="exact", damping=0.7),
        trials=500,
        min_errors=50,
        snr_grid=SNR_POINTS,
        threads=4,
    )
    t0 = time.perf_counter()
    results, _ = sweep_snr(cfg)
    elapsed = time.perf_counter() - t0
    above = [s for s, r in zip(SNR_POINTS, results) if r.sum_rate > r.sum_capacity]
    low = [s for s, r in zip(SNR_POINTS, results) if 5 <= s <= 20 and r.capacity_fraction < 0.6]
    table = ", ".join(f"{s:g} dB: {r.capacity_fraction:.2f}" for s, r in zip(SNR_POINTS, results))
    ok = not above and not low and elapsed <= 3600
    _line(
        report, 5, "sum-rate vs capacity", ok,
        f"capacity fractions {table}; above capacity at {above}; below 60% at {low}; {elapsed:.0f} s",
    )
    assert not above
    assert not low
    assert elapsed <= 3600


def test_criterion_6_weight_pipeline(report):
    t0 = time.perf_counter()
    spec = GaussFitSpec(delta=0.2, epsilon=1e-4, i_max=15, variance_mode="matched_variance")
    designed = design_weights(8, 8, spec, seed=0)
    own = gaussianity_residual(coded_symbol_pmf(designed, 8, replacement=False), spec)
    energy = avg_energy(AFC8_WEIGHTS)
    pmf = coded_symbol_pmf(AFC8_WEIGHTS, 8, replacement=False)
    logged = {
        mode: gaussianity_residual(pmf, GaussFitSpec(0.2, 1e-4, 15, mode))
        for mode in ("matched_variance", "standard_normal")
    }
    elapsed = time.perf_counter() - t0
    ok = own <= 1e-4 and abs(energy - 0.0552414) <= 1e-6 and all(map(math.isfinite, logged.values()))
    _line(
        report, 6, "weight pipeline", ok,
        f"designed residual {own:.2e}, reference energy {energy:.7f}, reference residuals "
        + ", ".join(f"{m} {r:.3e}" for m, r in logged.items())
        + f", {elapsed:.1f} s",
    )
    assert own <= 1e-4
    assert abs(energy - 0.0552414) <= 1e-6
    assert all(map(math.isfinite, logged.values()))
    assert elapsed <= 300


def test_criterion_7_numeric_kernels(report):
    s0 = s_function(0.0)
    gaps = {x: abs(s_function(x) - s_quad(x)) for x in (0.1, 1.0, 5.0, 10.0)}
    q0, q1 = q_function(0.0), q_function(1.0)
    ok = abs(s0 - 1) <= 1e-8 and max(gaps.values()) <= 1e-8 and q0 == 0.5 and abs(q1 - 0.158655) <= 1e-6
    _line(
        report, 7, "numeric kernels", ok,
        f"S(0)={s0!r}, max |S - quad| {max(gaps.values()):.1e}, Q(0)={q0!r}, Q(1)={q1:.9f} (quad {q_quad(1.0):.9f})",
    )
    assert abs(s0 - 1.0) <= 1e-8
    assert max(gaps.values()) <= 1e-8
    assert q0 == 0.5
    assert abs(q1 - 0.158655) <= 1e-6


def test_criterion_8_determinism(report, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        '{"k": 60, "trials": 40, "batch_frames": 4, "target_ber": 0.02,'
        ' "snr_grid": [8.0, 16.0], "rate_grid": [0.5, 0.8, 1.2], "snr_db": 12.0}'
    )
    outputs = {}
    for cmd in ("sweep-snr", "ber-curve"):
        for run, threads in enumerate((1, 1, 4)):
            out = tmp_path / f"{cmd}-{run}.csv"
            assert cli_main([cmd, "--config", str(cfg), "--seed", "11", "--threads", str(threads), "--out", str(out)]) == 0
            outputs.setdefault(cmd, []).append(out.read_bytes())
    same = {cmd: len(set(v)) == 1 for cmd, v in outputs.items()}
    ok = all(same.values())
    _line(report, 8, "determinism", ok, f"byte-identical reruns (threads 1, 1, 4): {same}")
    assert ok
