"""
Rateless encoding and superposition on the channel
==================================================

Each user joins a few of its least used information bits into every coded
symbol. The receiver sees the sum of all users' symbols plus noise and can
treat it as one larger code.
"""

import numpy as np

from maafc.channel import Scenario, UserLink, equivalent_generator, received_snr, sum_capacity, transmit, received_powers
from maafc.codec import CodeSpec, bpsk_map, build_generator, encode, extend_generator
from maafc.weights import AFC8_WEIGHTS

k = 12
spec = CodeSpec(k, 4, AFC8_WEIGHTS, seed=5)
g = build_generator(spec, 6)
print(g.to_text())

# every column is used as evenly as possible
print("column degrees after 6 rows:", g.column_degrees())

###############################################################################
# More symbols can be produced at any time. The old rows never change, so a
# receiver that already has them just keeps listening.
longer = extend_generator(spec, g, 4)
bits = np.random.default_rng(0).integers(0, 2, k)
u_short = encode(g, bpsk_map(bits))
u_long = encode(longer, bpsk_map(bits))
print("prefix unchanged:", np.array_equal(u_long[:6], u_short))

###############################################################################
# Two users with gains 1 and 2 share the channel.
rng = np.random.default_rng(1)
users = (
    UserLink(0, 1.0, CodeSpec(k, 4, AFC8_WEIGHTS, 1), rng.integers(0, 2, k)),
    UserLink(1, 2.0, CodeSpec(k, 4, AFC8_WEIGHTS, 2), rng.integers(0, 2, k)),
)
sc = Scenario(users, power_scale=3.0, noise_seed=7)
eq = equivalent_generator(sc, 5)
print("equivalent degree:", eq.d_e)
print("row 0:", [(c, round(w, 3)) for c, w in eq.row(0)])

# columns 0..k-1 are user 1, k..2k-1 are user 2 (scaled by its gain)
print("received SNR %.2f dB" % received_snr(sc))
print("sum capacity %.3f bits/use" % sum_capacity(received_powers(sc)))
print("y:", np.round(transmit(sc, 5), 3))
