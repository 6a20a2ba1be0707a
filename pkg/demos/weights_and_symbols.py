"""
Weight sets and the shape of a coded symbol
===========================================

A coded symbol is a signed sum of weights. With enough distinct weights its
distribution starts to look Gaussian, which is what a Gaussian channel wants.
"""

import numpy as np

from maafc.weights import (
    AFC8_WEIGHTS,
    GaussFitSpec,
    avg_energy,
    coded_symbol_pmf,
    design_weights,
    gaussianity_residual,
)

# the reference eight-weight set and its mean squared weight
print("weights:", [round(w, 4) for w in AFC8_WEIGHTS.weights])
print("average energy:", avg_energy(AFC8_WEIGHTS))

###############################################################################
# Exact distribution of a degree-8 symbol. Each row uses every weight once,
# so only the signs are random: 2**8 equally likely outcomes.
pmf = coded_symbol_pmf(AFC8_WEIGHTS, 8, replacement=False)
print("support size:", pmf.values.size, " variance:", pmf.variance)

# crude text histogram in units of the symbol's own standard deviation
sd = np.sqrt(pmf.variance)
edges = np.arange(-3, 3.01, 0.5)
for lo, hi in zip(edges[:-1], edges[1:]):
    mass = pmf.mass_between(lo * sd, hi * sd)
    print(f"[{lo:+.1f}, {hi:+.1f}) sd  {'#' * int(200 * mass)}")

###############################################################################
# How far from Gaussian? The residual is the worst squared gap between binned
# pmf mass and binned normal mass. Bins can be measured against the symbol's
# own spread or against a unit normal.
for mode in ("matched_variance", "standard_normal"):
    spec = GaussFitSpec(delta=0.2, epsilon=1e-4, i_max=15, variance_mode=mode)
    print(f"{mode:>17}: residual {gaussianity_residual(pmf, spec):.3e}")

###############################################################################
# A seeded search finds a set that passes at 1e-4.
spec = GaussFitSpec()
found = design_weights(8, 8, spec, seed=0)
print("designed:", found.to_json())
print("its residual:", gaussianity_residual(coded_symbol_pmf(found, 8, False), spec))
