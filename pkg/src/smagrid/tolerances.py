"""Shared numeric tolerances.

Continuous-time equalities (a release falling due, an instance finishing,
deadline pressure setting in, the battery hitting its SOC window) are
measure-zero conditions; the event engine needs one declared tolerance for
each quantity so that arriving "exactly" at an event is robust to float
drift.  All modules compare against these constants, never ad-hoc ones.
"""

# Time comparisons, in hours (s = 0, r = 0, o + r = D, trace breakpoints).
EPS_TIME = 1e-9

# State-of-charge comparisons, as a fraction of capacity.
EPS_SOC = 1e-9

# Power comparisons in the admission test and deficiency arithmetic, in kW.
EPS_POWER = 1e-9

# Batteries must never be drawn below 20% of capacity; surplus beyond a full
# charge is curtailed.
SOC_FLOOR = 0.20
SOC_CEILING = 1.00
