"""Model containers: SDEs with additive or general noise, and functional SDEs.

Conventions
-----------
States are arrays with a trailing dimension axis: ``(d,)`` for one path,
``(n, d)`` for an ensemble of n paths.

A segment is time-major and ascending: ``seg[j]`` is the state at time
``t - (m - j) * h``, so ``seg[-1]`` is the current value xi(0) and
``seg[-1 - k]`` is xi(-k h).  Each ``seg[j]`` has the state shape above.

Drift callables take ``(t, x)`` (or ``(t, seg)`` for delay models) and return
an array shaped like the state.  Diffusion callables return either a full
matrix ``(..., d, d)`` or a vector ``(..., d)`` read as a diagonal.
"""

import math

import numpy as np

from .defaults import history_cut, NUMERICS
from .errors import ConfigError
from .rates import PeriodicRate, as_multiple


def apply_diffusion(S, dW):
    S = np.asarray(S, dtype=float)
    if S.ndim == dW.ndim + 1:
        return np.einsum("...ij,...j->...i", S, dW)
    return S * dW


class SdeModel:
    """dX = b(t, X) dt + sqrt(alpha(t)) dW  (additive) or sigma(t, X) dW (general)."""

    def __init__(self, drift, dim=1, alpha=None, sigma=None, period=1.0, name=None, params=None):
        if (alpha is None) == (sigma is None):
            raise ConfigError([("noise", "give exactly one of alpha (additive) or sigma (general)")])
        if alpha is not None:
            if not isinstance(alpha, PeriodicRate):
                alpha = PeriodicRate.constant(float(alpha), period)
            if alpha.min() <= 0:
                raise ConfigError([("alpha", "additive noise intensity must be strictly positive")])
            if alpha.period != period:
                raise ConfigError([("alpha.period", "must equal the model period")])
        self.drift = drift
        self.dim = int(dim)
        self.alpha = alpha
        self.sigma = sigma
        self.period = float(period)
        self.name = name or getattr(drift, "__name__", "sde")
        self.params = dict(params or {})

    @property
    def additive(self):
        return self.alpha is not None

    def __repr__(self):
        kind = "additive" if self.additive else "general"
        return f"SdeModel({self.name!r}, dim={self.dim}, noise={kind}, period={self.period})"

    def check_periodic(self, times, states, tol=1e-12):
        """Largest |b(t+tau, x) - b(t, x)| (and of the diffusion) over samples."""
        x = np.atleast_2d(np.asarray(states, dtype=float))
        worst = 0.0
        for t in np.atleast_1d(times):
            worst = max(worst, float(np.max(np.abs(self.drift(t + self.period, x)
                                                   - self.drift(t, x)))))
            if self.sigma is not None:
                worst = max(worst, float(np.max(np.abs(
                    np.asarray(self.sigma(t + self.period, x)) - np.asarray(self.sigma(t, x))))))
            else:
                worst = max(worst, abs(self.alpha(t + self.period) - self.alpha(t)))
        if worst > tol:
            raise ConfigError([("model", f"coefficients are not {self.period}-periodic "
                                          f"(discrepancy {worst!r})")])
        return worst


class DelayModel:
    """dX = b(t, X_t) dt + sigma(t, X_t) dW with a finite or infinite memory window.

    Finite memory: pass ``r0``.  Infinite memory: pass ``alpha0`` (the weight
    of the norm sup e^{alpha0 theta}|xi(theta)|) and optionally ``history``,
    the truncation horizon H; by default the smallest grid multiple with
    e^{-alpha0 H} <= ``truncation``.  ``sigma=None`` means no noise.
    """

    def __init__(self, drift, sigma=None, dim=1, period=1.0, r0=None, alpha0=None,
                 history=None, step=None, truncation=NUMERICS["truncation"], name=None,
                 params=None):
        if (r0 is None) == (alpha0 is None):
            raise ConfigError([("memory", "give exactly one of r0 (finite) or alpha0 (infinite)")])
        self.drift = drift
        self.sigma = sigma
        self.dim = int(dim)
        self.period = float(period)
        self.name = name or getattr(drift, "__name__", "delay")
        self.params = dict(params or {})
        self.truncation = float(truncation)
        if r0 is not None:
            if not r0 > 0:
                raise ConfigError([("r0", "must be positive")])
            self.memory = "finite"
            self.r0 = float(r0)
            self.alpha0 = None
            self.window = self.r0
        else:
            if not alpha0 > 0:
                raise ConfigError([("alpha0", "must be positive")])
            self.memory = "infinite"
            self.r0 = None
            self.alpha0 = float(alpha0)
            if history is None:
                if step is None:
                    raise ConfigError([("history", "give history H or the step to derive it")])
                history = history_cut(self.alpha0, step, self.truncation)
            if math.exp(-self.alpha0 * history) > self.truncation * (1 + 1e-9):
                raise ConfigError([("history", f"exp(-alpha0*H) = {math.exp(-self.alpha0 * history)!r} "
                                               f"exceeds the truncation tolerance {self.truncation!r}")])
            self.window = float(history)

    @property
    def norm_kind(self):
        return "sup" if self.memory == "finite" else "weighted"

    def with_history(self, history):
        """Same infinite-memory model with another truncation horizon."""
        return DelayModel(self.drift, self.sigma, self.dim, self.period, alpha0=self.alpha0,
                          history=history, truncation=max(self.truncation,
                                                          math.exp(-self.alpha0 * history)),
                          name=self.name, params=self.params)

    def window_steps(self, step):
        m = as_multiple(self.window, step)
        if m is None:
            what = "r0" if self.memory == "finite" else "history H"
            raise ConfigError([(what, f"{self.window!r} is not a multiple of the step {step!r}")])
        return m

    def __repr__(self):
        mem = f"r0={self.r0}" if self.memory == "finite" else f"alpha0={self.alpha0}, H={self.window}"
        return f"DelayModel({self.name!r}, dim={self.dim}, {mem}, period={self.period})"

    def norm(self, values, step):
        if self.memory == "finite":
            return sup_norm(values)
        return weighted_norm(values, self.alpha0, step)


def sup_norm(values):
    """max_j |values[j]| over a time-major segment (per path for ensembles)."""
    v = np.asarray(values, dtype=float)
    return np.max(np.linalg.norm(v, axis=-1), axis=0)


def weighted_norm(values, alpha0, step):
    """max_j exp(-alpha0 (m-j) h) |values[j]|, the exponentially weighted sup norm."""
    v = np.asarray(values, dtype=float)
    m = v.shape[0] - 1
    w = np.exp(-alpha0 * step * np.arange(m, -1, -1))
    mags = np.linalg.norm(v, axis=-1)
    return np.max(w.reshape((-1,) + (1,) * (mags.ndim - 1)) * mags, axis=0)


class SegmentState:
    """A path window ending at ``anchor`` on a grid of spacing ``step``.

    ``values`` is time-major and ascending (see module docstring).
    """

    def __init__(self, anchor, step, values, norm_kind="sup", alpha0=None):
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if norm_kind not in ("sup", "weighted"):
            raise ConfigError([("norm_kind", "must be 'sup' or 'weighted'")])
        if norm_kind == "weighted" and alpha0 is None:
            raise ConfigError([("alpha0", "weighted norm needs alpha0")])
        values.setflags(write=False)
        self.anchor = float(anchor)
        self.step = float(step)
        self.values = values
        self.norm_kind = norm_kind
        self.alpha0 = alpha0

    @property
    def m(self):
        return self.values.shape[0] - 1

    @property
    def current(self):
        return self.values[-1]

    @property
    def times(self):
        return self.anchor - self.step * np.arange(self.m, -1, -1)

    def norm(self):
        if self.norm_kind == "sup":
            return sup_norm(self.values)
        return weighted_norm(self.values, self.alpha0, self.step)

    def __sub__(self, other):
        return SegmentState(self.anchor, self.step, self.values - other.values,
                            self.norm_kind, self.alpha0)

    def __repr__(self):
        return (f"SegmentState(anchor={self.anchor}, step={self.step}, m={self.m}, "
                f"shape={self.values.shape}, norm={self.norm_kind})")

    @classmethod
    def for_model(cls, model, anchor, step, fill, n=None):
        """Segment of the model's window length filled from ``fill``.

        ``fill`` is a constant, a state vector, or a callable of the lag
        theta <= 0 returning a state.  ``n`` replicates it for an ensemble.
        """
        m = model.window_steps(step)
        theta = -step * np.arange(m, -1, -1)
        if callable(fill):
            vals = np.array([np.broadcast_to(np.asarray(fill(th), dtype=float), (model.dim,))
                             for th in theta])
        else:
            vals = np.broadcast_to(np.asarray(fill, dtype=float), (m + 1, model.dim)).copy()
        if n is not None:
            vals = np.repeat(vals[:, None, :], n, axis=1)
        return cls(anchor, step, vals, model.norm_kind, model.alpha0)
