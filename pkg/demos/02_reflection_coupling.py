"""Reflection coupling on the periodically forced double well.

Two copies start in opposite wells; Y uses the mirrored noise until they
meet.  The phi-distance should shrink at least as fast as the certificate
promises.  N is kept small here so the script runs in a few seconds.
"""
import math

import numpy as np

from rpslab import presets
from rpslab.analysis import contraction_fit
from rpslab.certificates import HHParams, certify_reflection
from rpslab.engine import simulate_reflection_coupled
from rpslab.metric import build_phi
from rpslab.noise import ensemble_noise

h, N, periods = 1e-3, 1000, 10
model = presets.double_well()
metric = build_phi(1.0, 1.0, 2 * math.sqrt(2))
cert = certify_reflection(HHParams(1.0, 1.0, 2 * math.sqrt(2), model.alpha), metric)

#%% run the coupled ensemble
w = ensemble_noise(3, N, 0.0, h, round(periods / h), 1)
run = simulate_reflection_coupled(model, 0.0, float(periods), [2.0], [-2.0], w,
                                  metric=metric, record_every=100)
print(f"eps_couple = {run.eps_couple:.4f}, coupled fraction {run.coupled_fraction:.3f}")

#%% survival of uncoupled pairs, period by period
meet = np.where(run.coupled_at >= 0, run.coupled_at * h, np.inf)
for k in range(1, periods + 1):
    print(f"  t = {k:2d}: still apart {np.mean(meet > k):.4f}")

#%% rate fit with a bootstrap interval
fit = contraction_fit(run, model.period, metric=metric, predicted=-cert.per_period_decay)
print(f"\nslope {fit.slope:.4f} per period, 95% CI [{fit.ci_low:.4f}, {fit.ci_high:.4f}]")
print(f"certificate bound {fit.predicted:.5f} -> holds: {fit.bound_holds}")
# the certified rate is far from sharp: the metric's C^* is about 108
