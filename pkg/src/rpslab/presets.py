"""Named models used by configs, tests and demos.

``double-well``
    b(t, x) = alpha(t) (x - x^3) + forcing*cos(2 pi t/tau), noise sqrt(alpha(t)) dW.
    Dissipative only at long distance: with K1 = K2 = 1 and L = 2*sqrt(2),
    <x-y, b(x)-b(y)> = alpha (x-y)^2 (1 - (x^2+xy+y^2)) and
    x^2+xy+y^2 >= (x-y)^2/4.
``tilted-double-well``
    double-well with alpha = 1 and forcing = 2; the periodic tilt makes the
    laws at t and t + tau/2 differ, which the half-period misuse test needs.
``ou``
    b = -theta x, constant noise intensity.
``anti-dissipative``
    b = +x with unit noise; its second moment grows like e^{2t}.
``frozen``
    b = 0 and no noise.
``linear-delay``
    b(t, xi) = a xi(0) + c xi(-lag) + forcing*sin(2 pi t/tau),
    sigma(t, xi) = sigma0 (1 + sigma_amp cos(2 pi t/tau)) + sigma_slope xi(-lag),
    with lag = r0 for finite memory.  ``infinite-delay`` is the same law on
    the weighted space with memory weight alpha0.
"""

import math

import numpy as np

from .errors import ConfigError
from .models import DelayModel, SdeModel
from .rates import PeriodicRate


def double_well(alpha=None, period=1.0, forcing=0.0):
    if alpha is None:
        alpha = PeriodicRate.trig(period, 1.0, [(1, 0.0, 0.5)], sign_class="positive")
    w = 2.0 * math.pi / period

    def drift(t, x):
        return alpha(t) * (x - x ** 3) + forcing * math.cos(w * t)

    return SdeModel(drift, 1, alpha=alpha, period=period, name="double-well",
                    params={"forcing": forcing, "alpha": alpha.to_spec()})


def tilted_double_well(forcing=2.0, period=1.0):
    """Constant-intensity double well pushed by a periodic tilt; its law at t and t + tau/2 differ."""
    m = double_well(PeriodicRate.constant(1.0, period, sign_class="positive"), period, forcing)
    m.name = "tilted-double-well"
    return m


def ou(theta=1.0, noise=1.0, period=1.0, dim=1):
    def drift(t, x):
        return -theta * x

    return SdeModel(drift, dim, alpha=PeriodicRate.constant(noise, period), period=period,
                    name="ou", params={"theta": theta, "noise": noise})


def anti_dissipative(rate=1.0, noise=1.0, period=1.0):
    def drift(t, x):
        return rate * x

    return SdeModel(drift, 1, alpha=PeriodicRate.constant(noise, period), period=period,
                    name="anti-dissipative", params={"rate": rate, "noise": noise})


def frozen_sde(period=1.0, dim=1):
    def drift(t, x):
        return np.zeros_like(x)

    def sigma(t, x):
        return np.zeros_like(x)

    return SdeModel(drift, dim, sigma=sigma, period=period, name="frozen")


def frozen_delay(period=1.0, r0=None, alpha0=None, history=None, step=None, dim=1):
    def drift(t, seg):
        return np.zeros_like(seg[-1])

    return DelayModel(drift, None, dim, period, r0=r0, alpha0=alpha0, history=history,
                      step=step, name="frozen")


def _linear_delay_coefficients(a, c, lag_steps, forcing, sigma0, sigma_amp, sigma_slope, period):
    w = 2.0 * math.pi / period
    lag = lag_steps + 1   # seg[-1 - lag_steps] is xi(-lag)

    def drift(t, seg):
        return a * seg[-1] + c * seg[-lag] + forcing * math.sin(w * t)

    if sigma0 == 0 and sigma_slope == 0:
        return drift, None

    def sigma(t, seg):
        return sigma0 * (1.0 + sigma_amp * math.cos(w * t)) + sigma_slope * seg[-lag]

    return drift, sigma


def linear_delay(a=-5.1, c=0.05, r0=0.01, step=1e-3, forcing=1.0, sigma0=0.5, sigma_amp=0.5,
                 sigma_slope=0.3, period=1.0):
    lag_steps = round(r0 / step)
    if abs(lag_steps * step - r0) > 1e-12 * max(1.0, r0 / step):
        raise ConfigError([("r0", f"{r0!r} is not a multiple of the step {step!r}")])
    drift, sigma = _linear_delay_coefficients(a, c, lag_steps, forcing, sigma0, sigma_amp,
                                              sigma_slope, period)
    return DelayModel(drift, sigma, 1, period, r0=r0, name="linear-delay",
                      params={"a": a, "c": c, "r0": r0, "forcing": forcing, "sigma0": sigma0,
                              "sigma_amp": sigma_amp, "sigma_slope": sigma_slope})


def infinite_delay(a=-1.05, c=0.1, lag=0.1, alpha0=1.0, step=1e-2, forcing=1.0, sigma0=0.5,
                   sigma_amp=0.5, sigma_slope=0.25, period=1.0, history=None,
                   truncation=1e-8):
    lag_steps = round(lag / step)
    if abs(lag_steps * step - lag) > 1e-12 * max(1.0, lag / step):
        raise ConfigError([("lag", f"{lag!r} is not a multiple of the step {step!r}")])
    drift, sigma = _linear_delay_coefficients(a, c, lag_steps, forcing, sigma0, sigma_amp,
                                              sigma_slope, period)
    return DelayModel(drift, sigma, 1, period, alpha0=alpha0, history=history, step=step,
                      truncation=truncation, name="infinite-delay",
                      params={"a": a, "c": c, "lag": lag, "alpha0": alpha0, "forcing": forcing,
                              "sigma0": sigma0, "sigma_amp": sigma_amp,
                              "sigma_slope": sigma_slope})


SDE_PRESETS = {
    "double-well": double_well,
    "tilted-double-well": tilted_double_well,
    "ou": ou,
    "anti-dissipative": anti_dissipative,
    "frozen": frozen_sde,
}

DELAY_PRESETS = {
    "linear-delay": linear_delay,
    "frozen": frozen_delay,
}

INFINITE_PRESETS = {
    "infinite-delay": infinite_delay,
    "linear-delay": infinite_delay,
    "frozen": frozen_delay,
}
