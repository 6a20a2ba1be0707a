"""
Predicting BER with density evolution
=====================================

Track one number per user, the mean of its LLR, through the iterations.
Users keep a fixed ratio of means set by gain squared times degree, so one
user's BER determines the others'.
"""

import numpy as np

from maafc.density import DeScenario, ber_transfer, de_run, predict_ber, s_function
from maafc.weights import AFC8_WEIGHTS, avg_energy

print("S(x) for x = 0, 1, 5, 10:", np.round(s_function([0.0, 1.0, 5.0, 10.0]), 6))

# four users with gains 1..4, degree 4, 0.35 symbols per information bit per user
alpha = 1.6
sc = DeScenario(tuple(alpha * h for h in (1, 2, 3, 4)), (4, 4, 4, 4), avg_energy(AFC8_WEIGHTS), 0.35 * 4)
traj, converged = de_run(sc)
print("converged:", converged, "after", traj[-1].t, "steps")
for state in traj[:6]:
    print(state.t, np.round(state.as_array(), 4), predict_ber(state.as_array()))

###############################################################################
# The ratio law: user 4's mean is 16 times user 1's at every step.
m = traj[3].as_array()
print("m4 / m1 =", m[3] / m[0])

# and BER of user 2 follows from user 1's
p = predict_ber(m)
print("transfer:", ber_transfer(float(p[0]), 4.0), "direct:", p[1])
