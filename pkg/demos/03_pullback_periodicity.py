"""Pull-back construction and the two periodicity checks.

Starting further and further in the past on one fixed noise path, the state
at time t settles down.  The limit should repeat after one period, pathwise
on the shifted noise and in law across independent noise.
"""
import numpy as np

from rpslab import presets
from rpslab.analysis import (distributional_periodicity_test, pathwise_periodicity_test,
                             pullback)
from rpslab.noise import ensemble_noise, make_noise

h = 1e-2

#%% OU: on one path the gaps shrink roughly like e^{-1} per period (exactly so in mean)
ou = presets.ou()
w = make_noise(1, 0, -12.0, h, 1200, 1)
res = pullback(ou, 0.0, [3.0], 12, w)
print("OU gaps:", np.array2string(res.cauchy_gaps, precision=2))
print(f"fitted ratio {res.fitted_ratio:.4f}, Euler prediction {(1 - h) ** 100:.4f}")

#%% double well, ensemble mean of the gaps
dw = presets.double_well()
w = ensemble_noise(2, 200, -10.0, h, 1000, 1)
res = pullback(dw, 0.0, [0.5], 10, w)
print("\ndouble-well mean gaps:", np.array2string(res.mean_gaps, precision=4))
print("decreasing after burn-in:", res.decreasing_after(2))

#%% pathwise: bit identity on the shifted noise, and a small limit gap
rep = pathwise_periodicity_test(dw, 0.0, [0.5], 30, 4, h)
print(f"\npathwise: identical={rep.details['identical']} gap={rep.details['limit_gap']:.2e}")

#%% in law: one period apart passes, half a period apart fails
tilt = presets.tilted_double_well()
for shift in (1.0, 0.5):
    rep = distributional_periodicity_test(tilt, 0.25, [0.0], 12, 300, 5, h, shift=shift)
    print(f"shift {shift}: W1 {rep.statistic:.4f} vs 3 x resolution {3 * rep.resolution:.4f}"
          f" -> {'pass' if rep.passed else 'fail'}")
