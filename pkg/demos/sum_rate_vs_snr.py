"""
Achieved sum-rate against received SNR
======================================

Two equal users stop transmitting once the receiver reaches the target BER.
The achieved sum-rate is 2k/m and can be compared with the capacity of the
Gaussian multiple-access channel. Small settings keep this demo short.
"""

from maafc.harness import ExperimentConfig, sweep_snr

cfg = ExperimentConfig(k=100, trials=150, target_ber=1e-2, snr_grid=(5.0, 15.0, 25.0), threads=4)
results, text = sweep_snr(cfg)
for snr, r in zip(cfg.snr_grid, results):
    print(
        f"{snr:5.1f} dB  m*={r.m:5d}  rate {r.sum_rate:.3f}  capacity {r.sum_capacity:.3f}"
        f"  ({100 * r.capacity_fraction:.0f}%)"
    )
