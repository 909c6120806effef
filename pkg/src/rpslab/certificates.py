"""Constants and hypothesis checks for the existence theorems.

Three settings are covered:

* additive-noise SDEs whose drift is dissipative at long distance, checked
  on samples by :func:`verify_hh_margin`;
* finite-memory functional SDEs, where :func:`rate_theorem2` computes the
  one-period exponent ``ell`` that must be negative;
* infinite-memory functional SDEs, checked by :func:`check_theorem3`.

Results are collected in a :class:`Certificate`.

Sign convention: ``ell`` is stored as the signed one-period integral (the
hypothesis is ``ell < 0``); the predicted contraction per period is
``per_period_decay = -ell`` and ``-ell / tau`` per unit time.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .defaults import BDG_CHI, NUMERICS
from .errors import ConfigError, DomainError, PreconditionError
from .rates import PeriodicRate


def bdg_chi():
    return BDG_CHI


@dataclass(frozen=True)
class RateTriple:
    lambda1: PeriodicRate
    lambda2: PeriodicRate
    lambda3: PeriodicRate

    def __post_init__(self):
        problems = []
        periods = {self.lambda1.period, self.lambda2.period, self.lambda3.period}
        if len(periods) != 1:
            problems.append(("rates", f"lambda1..3 must share one period, got {sorted(periods)}"))
        for name in ("lambda2", "lambda3"):
            r = getattr(self, name)
            if r.sign_class == "signed" and r.min() < 0:
                problems.append((name, "must be nonnegative"))
        if problems:
            raise ConfigError(problems)

    @property
    def period(self):
        return self.lambda1.period

    @classmethod
    def constants(cls, l1, l2, l3, period=1.0):
        """Constant rates lambda1 = l1 (signed), lambda2 = l2, lambda3 = l3."""
        return cls(PeriodicRate.constant(l1, period, sign_class="signed"),
                   PeriodicRate.constant(l2, period, sign_class="nonnegative"),
                   PeriodicRate.constant(l3, period, sign_class="nonnegative"))


@dataclass(frozen=True)
class HHParams:
    K1: float
    K2: float
    L: float
    alpha: PeriodicRate

    def __post_init__(self):
        problems = []
        if not self.K2 > 0:
            problems.append(("K2", "must be > 0"))
        if self.K1 < 0:
            problems.append(("K1", "must be >= 0"))
        if self.L < 0:
            problems.append(("L", "must be >= 0"))
        if self.alpha.min() <= 0:
            problems.append(("alpha", "must be strictly positive"))
        if problems:
            raise ConfigError(problems)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float
    relation: str   # how margin is compared with zero for a pass: "<0", "<=0", ">0", ">=0"

    def __post_init__(self):
        expect = {"<0": self.margin < 0, "<=0": self.margin <= 0,
                  ">0": self.margin > 0, ">=0": self.margin >= 0}[self.relation]
        if expect != self.passed:
            raise ValueError(f"check {self.name}: passed={self.passed} disagrees with margin")


def _check(name, margin, relation):
    margin = float(margin)
    ok = {"<0": margin < 0, "<=0": margin <= 0, ">0": margin > 0, ">=0": margin >= 0}[relation]
    return Check(name, ok, margin, relation)


@dataclass(frozen=True)
class Certificate:
    """Computed constants plus pass/fail of each hypothesis.

    Fields that do not apply to a theorem are ``None``.
    """
    theorem: str
    input_digest: str
    checks: tuple
    per_period_decay: float
    c_star: float = None
    c_upper_star: float = None
    ell: float = None
    lambda_weight: float = None
    period: float = None
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "input_digest": self.input_digest,
            "c_star": self.c_star,
            "c_upper_star": self.c_upper_star,
            "ell": self.ell,
            "lambda_weight": self.lambda_weight,
            "per_period_decay": self.per_period_decay,
            "per_unit_time_decay": (None if self.period is None
                                    else self.per_period_decay / self.period),
            "period": self.period,
            "checks": [{"name": c.name, "passed": c.passed, "margin": c.margin,
                        "relation": c.relation} for c in self.checks],
            "passed": self.passed,
            "sign_convention": ("ell is the signed one-period integral; the hypothesis is "
                                "ell < 0 and the predicted decay per period is -ell"),
            "extras": self.extras,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def digest(obj):
    """Stable short hash of a JSON-able description of the inputs."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# -- window extremes of int lambda1 ----------------------------------------

def _refine(fun, x0, lo, hi, sign):
    """Coordinate-wise bounded refinement of sign*fun around the grid optimum x0."""
    x = np.array(x0, dtype=float)
    best = sign * fun(x)
    for _ in range(2):
        for j in range(len(x)):
            def g(v, j=j):
                y = x.copy()
                y[j] = v
                return -sign * fun(y)
            res = optimize.minimize_scalar(g, bounds=(lo[j], hi[j]), method="bounded",
                                           options={"xatol": 1e-12})
            if -res.fun > best:
                best = -res.fun
                x[j] = res.x
    return sign * best


def c_window_bounds(lambda1, r0, tau=None, grid=NUMERICS["window_grid"]):
    """(inf, sup) over u in [0, tau], theta in [-r0, 0] of int_{u+theta}^u lambda1."""
    if not r0 > 0:
        raise DomainError(f"r0 must be positive, got {r0!r}")
    tau = lambda1.period if tau is None else tau
    if tau != lambda1.period:
        raise DomainError("tau must equal the period of lambda1")
    if lambda1.is_constant:
        # exact: the window integral is c*|theta| and extremes sit at theta = -r0 or 0
        c = lambda1.period_integral() / tau
        lo, hi = sorted((c * r0, 0.0))
        return (lo + 0.0, hi + 0.0)
    A = np.vectorize(lambda1._antiderivative)
    u = np.linspace(0.0, tau, grid + 1)
    th = np.linspace(-r0, 0.0, grid + 1)
    Au = A(u)
    vals = Au[:, None] - A(u[:, None] + th[None, :])
    F = lambda p: lambda1._antiderivative(p[0]) - lambda1._antiderivative(p[0] + p[1])
    out = []
    for sign in (-1, +1):
        i, j = np.unravel_index(np.argmax(sign * vals), vals.shape)
        du, dth = tau / grid, r0 / grid
        lo = (max(0.0, u[i] - du), max(-r0, th[j] - dth))
        hi = (min(tau, u[i] + du), min(0.0, th[j] + dth))
        out.append(_refine(F, (u[i], th[j]), lo, hi, sign))
    c_lo, c_hi = float(out[0]), float(out[1])
    if not c_lo <= 0.0 <= c_hi:
        raise PreconditionError(f"window extremes ({c_lo!r}, {c_hi!r}) do not bracket 0; "
                                "theta = 0 is on the grid so this indicates a grid failure")
    return (c_lo, c_hi)


def rate_theorem2(rates, r0, grid=NUMERICS["window_grid"]):
    """The one-period exponent ell for finite memory r0; the hypothesis is ell < 0."""
    c_lo, c_hi = c_window_bounds(rates.lambda1, r0, grid=grid)
    chi2 = BDG_CHI ** 2
    i1 = rates.lambda1.period_integral()
    i2 = rates.lambda2.period_integral()
    i3 = rates.lambda3.period_integral()
    return i1 + 2.0 * math.exp(-c_lo) * (i2 + i3 + 2.0 * chi2 * math.exp(-c_lo + 2.0 * c_hi) * i3)


def check_corollary_EW(lambda1c, lambda2c, lambda3c, r0):
    """Constant-rate condition; returns (passed, margin) with margin > 0 meaning pass."""
    if not lambda1c > 0:
        raise DomainError("lambda1c must be positive")
    e = math.exp(lambda1c * r0)
    margin = lambda1c - 2.0 * e * (lambda2c + lambda3c + 2.0 * lambda3c * BDG_CHI ** 2 * e)
    return margin > 0, margin


def certify_theorem2(rates, r0, grid=NUMERICS["window_grid"]):
    c_lo, c_hi = c_window_bounds(rates.lambda1, r0, grid=grid)
    ell = rate_theorem2(rates, r0, grid=grid)
    tag = digest({"theorem": "finite-delay", "rates": [r.to_spec() for r in
                  (rates.lambda1, rates.lambda2, rates.lambda3)], "r0": r0, "grid": grid})
    return Certificate("finite-delay", tag, (_check("WE", ell, "<0"),), -ell,
                       c_star=c_lo, c_upper_star=c_hi, ell=ell, period=rates.period,
                       extras={"r0": r0, "chi": BDG_CHI})


# -- infinite memory -------------------------------------------------------

def lambda_weight(lambda1, alpha0, tau=None, grid=NUMERICS["window_grid"]):
    """sup over theta <= 0, a, b in [0, tau] of (theta+a)/tau*I - int_b^{a+b} g.

    Here g = lambda1 + 2*alpha0 and I = int_0^tau g.  With I >= 0 the
    objective increases with theta, so the supremum sits at theta = 0.
    """
    if not alpha0 > 0:
        raise DomainError("alpha0 must be positive")
    tau = lambda1.period if tau is None else tau
    g = lambda1 + 2.0 * alpha0
    I = g.period_integral()
    if I < 0:
        raise PreconditionError(f"int_0^tau (lambda1 + 2 alpha0) = {I!r} < 0; "
                                "the weight is unbounded in theta")
    if g.is_constant:
        # objective is a*(I/tau - c) = 0 identically
        return 0.0
    G = np.vectorize(g._antiderivative)
    a = np.linspace(0.0, tau, grid + 1)
    b = np.linspace(0.0, tau, grid + 1)
    Gb = G(b)
    vals = a[:, None] / tau * I - (G(a[:, None] + b[None, :]) - Gb[None, :])
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    F = lambda p: p[0] / tau * I - (g._antiderivative(p[0] + p[1]) - g._antiderivative(p[1]))
    d = tau / grid
    lo = (max(0.0, a[i] - d), max(0.0, b[j] - d))
    hi = (min(tau, a[i] + d), min(tau, b[j] + d))
    return max(0.0, _refine(F, (a[i], b[j]), lo, hi, +1))


def check_theorem3(rates, alpha0, grid=NUMERICS["window_grid"]):
    """Certificate for infinite memory with weight alpha0."""
    if not alpha0 > 0:
        raise DomainError("alpha0 must be positive")
    bb1 = (rates.lambda1 + 2.0 * alpha0).period_integral()
    chi2 = BDG_CHI ** 2
    bstar = (rates.lambda1.period_integral() + rates.lambda2.period_integral()
             + (1.0 + 2.0 * chi2) * rates.lambda3.period_integral())
    weight = lambda_weight(rates.lambda1, alpha0, grid=grid) if bb1 >= 0 else None
    tag = digest({"theorem": "infinite-delay", "rates": [r.to_spec() for r in
                  (rates.lambda1, rates.lambda2, rates.lambda3)], "alpha0": alpha0, "grid": grid})
    return Certificate("infinite-delay", tag,
                       (_check("BB1", bb1, ">=0"), _check("Bstar", bstar, "<0")),
                       -bstar, lambda_weight=weight, period=rates.period,
                       extras={"alpha0": alpha0, "chi": BDG_CHI})


# -- additive noise, dissipativity at long distance -------------------------

def verify_hh_margin(drift, params, t, x, y):
    """Largest violation of the long-distance dissipativity bound on samples.

    ``t`` is a 1-D array of times; ``x`` and ``y`` are arrays of points of
    shape (n, d) (or (n,) in one dimension).  Every (t, x, y) combination is
    evaluated.  A result <= 0 means the bound holds on the sample.
    """
    t = np.asarray(t, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x, y = x[:, None], y[:, None]
    if t.size == 0 or len(x) == 0 or len(y) == 0:
        raise DomainError("sample grid must be nonempty")
    worst = -np.inf
    for ti in t:
        bx = np.asarray(drift(ti, x), dtype=float).reshape(x.shape)
        by = np.asarray(drift(ti, y), dtype=float).reshape(y.shape)
        dz = x[:, None, :] - y[None, :, :]
        db = bx[:, None, :] - by[None, :, :]
        lhs = np.einsum("ijk,ijk->ij", dz, db)
        r2 = np.einsum("ijk,ijk->ij", dz, dz)
        near = np.sqrt(r2) <= params.L
        bound = params.alpha(ti) * np.where(near, params.K1 * r2, -params.K2 * r2)
        worst = max(worst, float(np.max(lhs - bound)))
    return worst


def certify_reflection(params, metric=None, drift=None, samples=None):
    """Certificate for the additive-noise SDE: predicted decay (1/C^*) int_0^tau alpha.

    With ``drift`` given, the long-distance bound is also checked on
    ``samples = (t, x, y)`` (default: 64 times, 64 points in [-4, 4]).
    """
    from .metric import build_phi
    metric = build_phi(params.K1, params.K2, params.L) if metric is None else metric
    ia = params.alpha.period_integral()
    decay = ia / metric.C_upper_star
    checks = [_check("alpha_positive", params.alpha.min(), ">0"),
              _check("K2_positive", params.K2, ">0")]
    if drift is not None:
        if samples is None:
            pts = np.linspace(-4.0, 4.0, 64)
            samples = (np.linspace(0.0, params.alpha.period, 64), pts, pts)
        checks.append(_check("HH", verify_hh_margin(drift, params, *samples), "<=0"))
    tag = digest({"theorem": "reflection", "K1": params.K1, "K2": params.K2, "L": params.L,
                  "alpha": params.alpha.to_spec()})
    return Certificate("reflection", tag, tuple(checks), decay, period=params.alpha.period,
                       extras={"C_star": metric.C_star, "C_upper_star": metric.C_upper_star,
                               "alpha_period_integral": ia})


def verify_delay_margins(model, rates, step, n_samples=200, seed=0, scale=2.0):
    """Sampled check of the one-sided rate bounds on random segment pairs.

    For segments xi, eta with difference D, returns the largest values of
    ``2<D(0), b(xi) - b(eta)> - lambda1 |D(0)|^2 - lambda2 ||D||^2`` and
    ``|sigma(xi) - sigma(eta)|^2 - lambda3 ||D||^2`` in the model's norm.
    Both <= 0 means the rates are consistent with the drift on the sample.
    """
    rng = np.random.default_rng(seed)
    m = model.window_steps(step)
    worst_b = worst_s = -np.inf
    tau = model.period
    for _ in range(n_samples):
        t = rng.uniform(0.0, tau)
        xi = scale * rng.standard_normal((m + 1, model.dim))
        eta = scale * rng.standard_normal((m + 1, model.dim))
        d = xi - eta
        nd = float(model.norm(d, step)) ** 2
        db = np.asarray(model.drift(t, xi) - model.drift(t, eta), dtype=float)
        lhs = 2.0 * float(np.dot(d[-1], db))
        worst_b = max(worst_b, lhs - rates.lambda1(t) * float(np.dot(d[-1], d[-1]))
                      - rates.lambda2(t) * nd)
        if model.sigma is not None:
            ds = np.asarray(model.sigma(t, xi), dtype=float) - np.asarray(model.sigma(t, eta), dtype=float)
            worst_s = max(worst_s, float(np.sum(ds * ds)) - rates.lambda3(t) * nd)
        else:
            worst_s = max(worst_s, -rates.lambda3(t) * nd)
    return worst_b, worst_s
