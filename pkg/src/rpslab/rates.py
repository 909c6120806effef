"""Periodic rate functions with exact integrals.

A :class:`PeriodicRate` is either a trigonometric polynomial or a
piecewise-constant function of period ``tau``.  Both forms have closed-form
antiderivatives, so integrals over arbitrarily long windows are computed by
splitting off whole periods and integrating the sub-period remainder exactly.
"""

import math

import numpy as np
from scipy import optimize

from .defaults import INTEGER_GUARD, NUMERICS
from .errors import ArgumentOrderError, ConfigError

SIGN_CLASSES = ("signed", "nonnegative", "positive")


def guarded_floor(x):
    """floor(x), except that x within INTEGER_GUARD of an integer rounds to it."""
    r = round(x)
    if abs(x - r) <= INTEGER_GUARD:
        return int(r)
    return math.floor(x)


def as_multiple(value, unit):
    """Return the integer n with value == n * unit (guarded), or None."""
    q = value / unit
    r = round(q)
    if abs(q - r) <= INTEGER_GUARD * max(1.0, abs(q)):
        return int(r)
    return None


class PeriodicRate:
    """A tau-periodic scalar function of time.

    Build with :meth:`constant`, :meth:`trig` or :meth:`piecewise`, or from a
    config mapping with :meth:`from_spec`.  Instances are immutable.
    """

    __slots__ = ("period", "kind", "const", "terms", "breaks", "values", "sign_class")

    def __init__(self, period, kind, *, const=0.0, terms=(), breaks=(), values=(),
                 sign_class="signed", validate=True):
        period = float(period)
        if not period > 0 or not math.isfinite(period):
            raise ConfigError([("period", f"must be positive and finite, got {period!r}")])
        if kind not in ("trig", "piecewise"):
            raise ConfigError([("type", f"unknown rate type {kind!r}; use 'trig' or 'piecewise'")])
        if sign_class not in SIGN_CLASSES:
            raise ConfigError([("sign_class", f"must be one of {SIGN_CLASSES}, got {sign_class!r}")])
        setattr_ = object.__setattr__
        setattr_(self, "period", period)
        setattr_(self, "kind", kind)
        setattr_(self, "sign_class", sign_class)
        if kind == "trig":
            terms = tuple((int(k), float(a), float(b)) for k, a, b in terms)
            if any(k < 1 for k, _, _ in terms):
                raise ConfigError([("terms", "frequency indices must be >= 1")])
            setattr_(self, "const", float(const))
            setattr_(self, "terms", terms)
            setattr_(self, "breaks", ())
            setattr_(self, "values", ())
        else:
            breaks = [float(b) for b in breaks]
            values = [float(v) for v in values]
            problems = []
            if len(breaks) != len(values) or not breaks:
                problems.append(("breaks", "need one value per breakpoint and at least one breakpoint"))
            elif any(b1 <= b0 for b0, b1 in zip(breaks, breaks[1:])):
                problems.append(("breaks", "breakpoints must be strictly increasing"))
            elif breaks[0] < 0 or breaks[-1] >= period:
                problems.append(("breaks", f"breakpoints must lie in [0, {period!r})"))
            if problems:
                raise ConfigError(problems)
            if breaks[0] > 0:
                # the last piece wraps around to cover [0, breaks[0])
                breaks = [0.0] + breaks
                values = [values[-1]] + values
            setattr_(self, "const", 0.0)
            setattr_(self, "terms", ())
            setattr_(self, "breaks", tuple(breaks))
            setattr_(self, "values", tuple(values))
        if validate:
            self._validate_sign()

    def __setattr__(self, name, value):
        raise AttributeError("PeriodicRate is immutable")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value, period=1.0, sign_class=None):
        if sign_class is None:
            sign_class = "positive" if value > 0 else ("nonnegative" if value == 0 else "signed")
        return cls(period, "trig", const=value, sign_class=sign_class)

    @classmethod
    def trig(cls, period, const=0.0, terms=(), sign_class="signed"):
        """``const + sum(a*cos(2 pi k t/tau) + b*sin(2 pi k t/tau))`` over (k, a, b) terms."""
        return cls(period, "trig", const=const, terms=terms, sign_class=sign_class)

    @classmethod
    def piecewise(cls, period, breaks, values, sign_class="signed"):
        """Value ``values[i]`` on ``[breaks[i], breaks[i+1])``, wrapping at ``period``."""
        return cls(period, "piecewise", breaks=breaks, values=values, sign_class=sign_class)

    @classmethod
    def from_spec(cls, spec, path="rate"):
        """Parse ``{type: trig|piecewise|constant, period: tau, ...}``."""
        if not isinstance(spec, dict):
            raise ConfigError([(path, "rate must be a mapping with 'type' and 'period'")])
        kind = spec.get("type")
        problems = []
        if "period" not in spec:
            problems.append((f"{path}.period", "missing"))
        if kind not in ("trig", "piecewise", "constant"):
            problems.append((f"{path}.type",
                             f"unknown rate type {kind!r}; closures are not accepted, "
                             "use 'trig', 'piecewise' or 'constant'"))
        if problems:
            raise ConfigError(problems)
        sign_class = spec.get("sign_class", "signed")
        try:
            if kind == "constant":
                return cls.constant(spec["value"], spec["period"],
                                    sign_class=spec.get("sign_class"))
            if kind == "trig":
                return cls.trig(spec["period"], spec.get("const", 0.0),
                                [tuple(t) for t in spec.get("terms", [])], sign_class)
            return cls.piecewise(spec["period"], spec["breaks"], spec["values"], sign_class)
        except ConfigError as exc:
            raise ConfigError([(f"{path}.{p}" if p else path, m) for p, m in exc.violations])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError([(path, f"malformed rate spec: {exc}")])

    def to_spec(self):
        if self.kind == "trig":
            return {"type": "trig", "period": self.period, "const": self.const,
                    "terms": [list(t) for t in self.terms], "sign_class": self.sign_class}
        return {"type": "piecewise", "period": self.period, "breaks": list(self.breaks),
                "values": list(self.values), "sign_class": self.sign_class}

    def __repr__(self):
        return f"PeriodicRate({self.to_spec()!r})"

    def __eq__(self, other):
        return isinstance(other, PeriodicRate) and self.to_spec() == other.to_spec()

    def __hash__(self):
        return hash(repr(self))

    @property
    def is_constant(self):
        if self.kind == "trig":
            return all(a == 0 and b == 0 for _, a, b in self.terms)
        return len(set(self.values)) == 1

    # -- evaluation -------------------------------------------------------
    def _eval_reduced(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "trig":
            out = np.full(u.shape, self.const)
            w = 2.0 * math.pi / self.period
            for k, a, b in self.terms:
                out = out + a * np.cos(k * w * u) + b * np.sin(k * w * u)
            return out
        idx = np.searchsorted(np.asarray(self.breaks), u, side="right") - 1
        return np.asarray(self.values)[np.clip(idx, 0, len(self.values) - 1)]

    def __call__(self, t):
        out = self._eval_reduced(np.mod(t, self.period))
        return float(out) if np.ndim(out) == 0 else out

    def period_integral(self):
        """Integral over one full period."""
        if self.kind == "trig":
            return self.const * self.period
        b = np.append(self.breaks, self.period)
        return float(np.dot(np.diff(b), self.values))

    def _antiderivative(self, x):
        # valid for any real x; callers only pass reduced windows
        if self.kind == "trig":
            w = 2.0 * math.pi / self.period
            out = self.const * x
            for k, a, b in self.terms:
                out += (a * math.sin(k * w * x) - b * math.cos(k * w * x)) / (k * w)
            return out
        n = math.floor(x / self.period)
        u = x - n * self.period
        acc = n * self.period_integral()
        b = self.breaks + (self.period,)
        for i, v in enumerate(self.values):
            if u <= b[i]:
                break
            acc += v * (min(u, b[i + 1]) - b[i])
        return acc

    def integrate(self, s, t):
        """Integral over [s, t]: whole periods plus an exact sub-period remainder."""
        if t < s:
            raise ArgumentOrderError(f"integrate needs t >= s, got s={s!r}, t={t!r}")
        if t == s:
            return 0.0
        tau = self.period
        n = guarded_floor((t - s) / tau)
        ks = guarded_floor(s / tau)
        lo = s - ks * tau
        hi = t - (ks + n) * tau
        if hi < lo:  # n was rounded up by the guard
            hi = lo
        return n * self.period_integral() + (self._antiderivative(hi) - self._antiderivative(lo))

    # -- extrema ----------------------------------------------------------
    def _extremum(self, sign, grid=None):
        """max over one period of sign*f (sign=+1 for max, -1 for min)."""
        if self.kind == "piecewise":
            return max(sign * v for v in self.values) * sign
        n = grid or NUMERICS["sign_grid"]
        u = np.linspace(0.0, self.period, n + 1)
        vals = sign * self._eval_reduced(u)
        i = int(np.argmax(vals))
        best = vals[i]
        if self.terms:
            du = self.period / n
            res = optimize.minimize_scalar(
                lambda x: -sign * float(self._eval_reduced(x)),
                bounds=(u[i] - du, u[i] + du), method="bounded",
                options={"xatol": 1e-12})
            best = max(best, -res.fun)
        return sign * best

    def max(self):
        return self._extremum(+1)

    def min(self):
        return self._extremum(-1)

    def sup_abs_one_period(self):
        return max(abs(self.max()), abs(self.min()))

    def _validate_sign(self):
        if self.sign_class == "signed":
            return
        m = self.min()
        if self.sign_class == "nonnegative" and m < 0:
            raise ConfigError([("sign_class", f"declared nonnegative but minimum is {m!r}")])
        if self.sign_class == "positive" and m <= 0:
            raise ConfigError([("sign_class", f"declared positive but minimum is {m!r}")])

    def __add__(self, other):
        """Sum with a number or another rate of the same period."""
        if isinstance(other, (int, float)):
            if self.kind == "trig":
                return PeriodicRate.trig(self.period, self.const + other, self.terms)
            return PeriodicRate.piecewise(self.period, self.breaks,
                                          [v + other for v in self.values])
        if not isinstance(other, PeriodicRate):
            return NotImplemented
        if other.period != self.period:
            raise ConfigError([("period", "cannot add rates with different periods")])
        if self.kind == other.kind == "trig":
            coef = {}
            for k, a, b in self.terms + other.terms:
                a0, b0 = coef.get(k, (0.0, 0.0))
                coef[k] = (a0 + a, b0 + b)
            return PeriodicRate.trig(self.period, self.const + other.const,
                                     [(k, a, b) for k, (a, b) in sorted(coef.items())])
        if self.kind == other.kind == "piecewise" or self.is_constant or other.is_constant:
            pw = [r if r.kind == "piecewise" else r._as_piecewise() for r in (self, other)]
            b = sorted(set(pw[0].breaks) | set(pw[1].breaks))
            return PeriodicRate.piecewise(self.period, b,
                                          [float(pw[0](x) + pw[1](x)) for x in b])
        raise ConfigError([("kind", "cannot add a non-constant trig rate to a piecewise rate")])

    __radd__ = __add__

    def scaled(self, c):
        if self.kind == "trig":
            return PeriodicRate.trig(self.period, c * self.const,
                                     [(k, c * a, c * b) for k, a, b in self.terms])
        return PeriodicRate.piecewise(self.period, self.breaks, [c * v for v in self.values])

    def _as_piecewise(self):
        if not self.is_constant:
            raise ConfigError([("kind", "only constant trig rates convert to piecewise")])
        return PeriodicRate.piecewise(self.period, [0.0], [self.const])


def integrate(f, s, t):
    return f.integrate(s, t)


def period_integral(f):
    return f.period_integral()


def sup_abs_one_period(f):
    return f.sup_abs_one_period()
