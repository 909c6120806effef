"""Certificates and the coupling metric, before any simulation.

Every experiment starts by asking whether the coefficients contract at all,
and at what rate per period.  Run: python3 demos/01_certificates.py
"""
import math

import numpy as np

from rpslab import presets
from rpslab.certificates import (HHParams, RateTriple, c_window_bounds, certify_reflection,
                                 certify_theorem2, check_corollary_EW, check_theorem3,
                                 verify_delay_margins)
from rpslab.metric import build_phi
from rpslab.rates import PeriodicRate

#%% the coupling metric for the double well
# K1 = 1 on |x - y| < L = 2 sqrt(2), dissipative (K2 = 1) outside.
metric = build_phi(1.0, 1.0, 2 * math.sqrt(2))
print(f"C_* = {metric.C_star:.6f}  C^* = {metric.C_upper_star:.6f}  (2e^4 - 1 = {2 * math.e**4 - 1:.6f})")
for r in (0.5, 1.0, 2.0, 4.0):
    print(f"  phi({r}) = {metric.phi(r):9.4f}   phi'({r}) = {metric.phi_prime(r):9.4f}")

#%% reflection certificate: decay per period is (1/C^*) * int alpha
dw = presets.double_well()
cert = certify_reflection(HHParams(1.0, 1.0, 2 * math.sqrt(2), dw.alpha), metric, drift=dw.drift)
print(f"\nreflection: passed={cert.passed}  decay/period={cert.per_period_decay:.5f}")
for c in cert.checks:
    print(f"  {c.name:8s} {c.relation:5s} margin {c.margin:+.4g}  {'ok' if c.passed else 'FAILS'}")

#%% finite delay with constant rates: the elementary margin and the window integral agree
rates = RateTriple.constants(-10.0, 0.1, 0.1)
fin = certify_theorem2(rates, 0.01)
ok, margin = check_corollary_EW(10.0, 0.1, 0.1, 0.01)
print(f"\nfinite delay: ell = {fin.ell:.4f}, elementary margin = {margin:.4f} ({ok})")

#%% periodic rates make the window bounds non-trivial
lam = PeriodicRate.trig(1.0, -10.0, [(1, 0.0, 4.0)])
lo, hi = c_window_bounds(lam, 0.05)
periodic = certify_theorem2(RateTriple(lam, PeriodicRate.constant(0.1), PeriodicRate.constant(0.1)), 0.05)
print(f"lambda1 = -10 + 4 sin: c_* = {lo:.4f}, c^* = {hi:.4f}, ell = {periodic.ell:.4f}")

#%% the presets really satisfy their declared rate bounds (sampled, so a falsification test)
b, s = verify_delay_margins(presets.linear_delay(), rates, 1e-3)
print(f"linear-delay worst drift margin {b:+.3f}, worst noise margin {s:+.3f} (both must be <= 0)")

#%% infinite memory with weight alpha0 = 1
inf = check_theorem3(RateTriple.constants(-2.0, 0.2, 0.1), 1.0)
print(f"\ninfinite delay: passed={inf.passed} weight={inf.lambda_weight} decay={inf.per_period_decay:.4f}")
bad = check_theorem3(RateTriple.constants(-1.0, 2.0, 0.0), 1.0)
print("a failing one:", [(c.name, c.passed, round(c.margin, 3)) for c in bad.checks])
print(np.round([inf.per_period_decay, fin.per_period_decay, cert.per_period_decay], 5))
