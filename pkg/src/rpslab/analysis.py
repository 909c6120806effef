"""Pull-back construction and the empirical tests built on it.

All routines take explicit noise or a seed and are deterministic given
them.  Ensembles are handled with one noise stream per member and every
reduction runs in member order.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import optimize, stats

from .defaults import RUN, SLICED_DIRECTIONS, EXACT_ASSIGNMENT_MAX
from .engine import simulate, simulate_delay, CoupledRun, DelayCoupledRun
from .errors import DegenerateFitError, DomainError, PreconditionError
from .models import DelayModel, SegmentState
from .noise import ensemble_noise, make_noise, shift_noise
from .rates import as_multiple


# -- running a model class-agnostically ------------------------------------

def _is_delay(model):
    return isinstance(model, DelayModel)


def _start_state(model, xi, anchor, step):
    """Initial data placed at ``anchor``: a point, or a segment re-anchored there."""
    if not _is_delay(model):
        return np.atleast_1d(np.asarray(xi, dtype=float))
    if isinstance(xi, SegmentState):
        return SegmentState(anchor, step, xi.values, xi.norm_kind, xi.alpha0)
    return SegmentState.for_model(model, anchor, step, xi)


def _run(model, s, t, state, w):
    """Final state at t: a point array, or the segment values for delay models."""
    if _is_delay(model):
        return simulate_delay(model, s, t, state, w).final.values
    return simulate(model, s, t, state, w, record_every=max(1, as_multiple(t - s, w.step) or 1)).final


def _distance(model, a, b, step):
    """Euclidean distance for points, the model norm for segments (per path)."""
    if _is_delay(model):
        return model.norm(a - b, step)
    return np.linalg.norm(a - b, axis=-1)


def pullback_depth(per_period_decay, target=RUN["pullback_target"], cap=RUN["pullback_max"]):
    """Smallest K with exp(-decay*K) < target, capped; at least 2."""
    if not per_period_decay > 0:
        return cap
    k = math.floor(math.log(1.0 / target) / per_period_decay) + 1
    return int(min(cap, max(2, k)))


def geometric_ratio(gaps):
    """exp of the least-squares slope of log(gap) against index (positive gaps only).

    Returns 0.0 when no gap is positive (nothing left to contract) and nan
    when only one is.
    """
    g = np.asarray(gaps, dtype=float)
    k = np.arange(len(g))
    keep = g > 0
    if not keep.any():
        return 0.0
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(k[keep], np.log(g[keep]), 1)[0]
    return float(np.exp(slope))


# -- pull-back -------------------------------------------------------------

@dataclass
class PullbackResult:
    """Endpoint states X^{t-k tau, xi}(t), k = 1..K, on one noise realization.

    For ensembles every entry carries a path axis; ``mean_gaps`` and the
    fitted ratio then refer to the ensemble mean of the gaps.
    """
    anchor: float
    K: int
    endpoint_states: list
    cauchy_gaps: np.ndarray
    fitted_ratio: float
    mean_gaps: np.ndarray = None
    gap_stderr: np.ndarray = None

    def decreasing_after(self, burn_in=2, nsigma=3.0):
        """True if the ensemble-mean gap never increases after ``burn_in`` periods.

        An increase is tolerated while it stays within ``nsigma`` standard
        errors of the paired per-path differences.
        """
        g = np.atleast_2d(self.cauchy_gaps.T).T   # (K-1, n)
        for k in range(burn_in, g.shape[0] - 1):
            d = g[k + 1] - g[k]
            se = d.std(ddof=1) / math.sqrt(len(d)) if len(d) > 1 else 0.0
            if d.mean() > nsigma * se:
                return False
        return True

    def to_dict(self):
        return {"anchor": self.anchor, "K": self.K, "fitted_ratio": self.fitted_ratio,
                "mean_gaps": None if self.mean_gaps is None else self.mean_gaps.tolist(),
                "cauchy_gaps": np.asarray(self.cauchy_gaps).tolist()}


def pullback(model, t, xi, K, noise):
    """Start from ``xi`` at t - k tau for k = 1..K and record the state at t.

    ``noise`` must cover [t - K tau, t]; all starts use the same increments.
    """
    if K < 2:
        raise DomainError("pull-back depth K must be at least 2")
    tau, h = model.period, noise.step
    ends = []
    for k in range(1, K + 1):
        s = t - k * tau
        ends.append(_run(model, s, t, _start_state(model, xi, s, h), noise))
    gaps = np.array([_distance(model, ends[k], ends[k + 1], h) for k in range(K - 1)])
    if noise.ensemble:
        mean = gaps.mean(axis=1)
        se = gaps.std(axis=1, ddof=1) / math.sqrt(gaps.shape[1])
        return PullbackResult(t, K, ends, gaps, geometric_ratio(mean), mean, se)
    return PullbackResult(t, K, ends, gaps, geometric_ratio(gaps))


# -- Wasserstein estimators -------------------------------------------------

def _as_samples(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def w1_method(n, d):
    if d == 1:
        return "sorted"
    if n <= EXACT_ASSIGNMENT_MAX:
        return "assignment"
    return "sliced"


def _directions(d, M=SLICED_DIRECTIONS):
    """M fixed unit vectors spread over the sphere.

    Scrambled Sobol points with a fixed seed, mapped through the normal
    quantile; the unscrambled sequence hits the cube centre, a zero direction.
    """
    if d == 2:
        ang = np.pi * (np.arange(M) + 0.5) / M
        return np.column_stack([np.cos(ang), np.sin(ang)])
    u = stats.qmc.Sobol(d, scramble=True, seed=0).random(M)
    v = stats.norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def empirical_w1(a, b, method="auto"):
    """W1 between two equal-size samples.

    d = 1 uses the sorted pairing (exact); d > 1 with at most 256 points
    uses an optimal assignment (exact); larger d > 1 samples use the sliced
    distance over 64 fixed directions, which bounds W1 from below.
    """
    a, b = _as_samples(a), _as_samples(b)
    if a.shape != b.shape:
        raise ValueError(f"sample sets differ in shape: {a.shape} vs {b.shape}")
    n, d = a.shape
    if n == 0:
        raise ValueError("empty sample sets")
    method = w1_method(n, d) if method == "auto" else method
    if method == "sorted":
        if d != 1:
            raise ValueError("sorted pairing needs one-dimensional samples")
        # correctly rounded sum: the value does not depend on the pairing order
        return math.fsum(np.abs(np.sort(a[:, 0]) - np.sort(b[:, 0]))) / n
    if method == "assignment":
        cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
        r, c = optimize.linear_sum_assignment(cost)
        return math.fsum(cost[r, c]) / n
    if method == "sliced":
        dirs = _directions(d)
        pa, pb = np.sort(a @ dirs.T, axis=0), np.sort(b @ dirs.T, axis=0)
        return float(np.mean(np.abs(pa - pb)))
    raise ValueError(f"unknown method {method!r}")


def coupled_w1(x, y):
    """Mean |x - y| over coupled pairs: the cost of this coupling, an upper bound for W1."""
    return float(np.mean(np.linalg.norm(_as_samples(x) - _as_samples(y), axis=-1)))


def coupled_w_phi(metric, x, y):
    """Mean phi(|x - y|) over coupled pairs, an upper bound for W_phi."""
    r = np.linalg.norm(_as_samples(x) - _as_samples(y), axis=-1)
    return float(np.mean(metric.phi(r)))


# -- contraction rates -----------------------------------------------------

@dataclass
class ContractionFit:
    """Least-squares slope of log E[quantity] per period with a bootstrap CI."""
    slope: float
    ci_low: float
    ci_high: float
    predicted: float
    quantity: str
    n_runs: int
    periods: np.ndarray
    log_means: np.ndarray
    residual_rms: float
    notes: list = field(default_factory=list)

    @property
    def bound_holds(self):
        """The fitted slope is at or below the predicted one and the CI does not exclude it."""
        if self.predicted is None:
            return None
        return bool(self.slope <= self.predicted and self.ci_low <= self.predicted)

    @property
    def factor(self):
        return math.exp(self.slope)

    def to_dict(self):
        d = asdict(self)
        d["periods"] = self.periods.tolist()
        d["log_means"] = self.log_means.tolist()
        d["bound_holds"] = self.bound_holds
        return d


def _run_matrix(runs, metric):
    """(times, values[n_records, n_paths], quantity name) from a coupled ensemble."""
    if isinstance(runs, DelayCoupledRun):
        v = np.asarray(runs.diff_norms, dtype=float) ** 2
        return runs.times, v.reshape(len(runs.times), -1), "E||Lambda_t||^2"
    if isinstance(runs, CoupledRun):
        z = np.asarray(runs.z_norms, dtype=float)
        if metric is not None:
            return runs.times, metric.phi(z).reshape(len(runs.times), -1), "E phi(|Z|)"
        return runs.times, z.reshape(len(runs.times), -1), "E|Z|"
    raise TypeError("expected a CoupledRun or DelayCoupledRun ensemble")


def _slopes(x, logm):
    """Least-squares slopes of each row of logm against x."""
    xc = x - x.mean()
    return (logm - logm.mean(axis=-1, keepdims=True)) @ xc / (xc @ xc)


def contraction_fit(runs, period, metric=None, window=None, predicted=None,
                    n_boot=RUN["bootstrap"], seed=0, min_runs=100):
    """Fit the per-period exponent of an ensemble of coupled runs.

    ``window`` is a (start, end) time interval (default: the whole run) and
    must span at least two periods.  Records where every pair has already
    met are dropped; if fewer than two remain the fit is degenerate.
    """
    times, V, name = _run_matrix(runs, metric)
    n = V.shape[1]
    if n < min_runs:
        raise PreconditionError(f"need at least {min_runs} runs, got {n}")
    t0, t1 = (times[0], times[-1]) if window is None else window
    sel = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
    if (t1 - t0) < 2 * period - 1e-12:
        raise PreconditionError("the fit window must span at least two periods")
    means = V[sel].mean(axis=1)
    alive = means > 0
    if alive.sum() < 2:
        raise DegenerateFitError("all pairs have met (or started equal) before the fit window")
    x = (times[sel][alive] - times[0]) / period
    W = V[sel][alive]
    logm = np.log(W.mean(axis=1))
    slope = float(_slopes(x, logm[None, :])[0])
    resid = logm - (logm.mean() + slope * (x - x.mean()))
    rng = np.random.default_rng(seed)
    boots = []
    for start in range(0, n_boot, 100):
        b = min(100, n_boot - start)
        counts = rng.multinomial(n, np.full(n, 1.0 / n), size=b).astype(float)
        bm = (W @ counts.T).T / n
        with np.errstate(divide="ignore"):
            lb = np.log(bm)
        ok = np.all(np.isfinite(lb), axis=1)
        boots.append(_slopes(x, lb[ok]))
    boots = np.concatenate(boots)
    lo, hi = np.percentile(boots, [2.5, 97.5])
    notes = []
    rms = float(np.sqrt(np.mean(resid ** 2)))
    if rms > 0.25:
        notes.append("large log-linear residual: decay may not be geometric")
    return ContractionFit(slope, float(lo), float(hi), predicted, name, n, x, logm, rms, notes)


# -- periodicity tests -----------------------------------------------------

@dataclass
class PeriodicityReport:
    mode: str
    statistic: float
    resolution: float
    passed: bool
    K: int
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _spread(samples):
    s = _as_samples(samples)
    return float(np.sqrt(np.sum(np.var(s, axis=0, ddof=1)))) if len(s) > 1 else 0.0


def distributional_periodicity_test(model, t, xi, K, N, seed, step, shift=None, first_stream=0):
    """Compare the laws of pull-back approximants at t and t + shift.

    The two samples use disjoint sets of N noise streams.  ``shift``
    defaults to the period; other values exist to demonstrate the power of
    the test.  Passes iff W1 <= 3 * (2 * std / sqrt(N)).
    """
    if N < 2:
        raise DomainError("ensemble size must be at least 2")
    tau = model.period
    shift = tau if shift is None else shift
    span = K * tau
    n_steps = as_multiple(span, step)
    samples = []
    for j, anchor in enumerate((t, t + shift)):
        s = anchor - span
        w = ensemble_noise(seed, N, s, step, n_steps, model.dim, first_stream + j * N)
        end = _run(model, s, anchor, _start_state(model, xi, s, step), w)
        samples.append(end[-1] if _is_delay(model) else end)
    a, b = samples
    stat = empirical_w1(a, b)
    res = 2.0 * _spread(np.concatenate([_as_samples(a), _as_samples(b)])) / math.sqrt(N)
    return PeriodicityReport("distributional", stat, res, bool(stat <= 3.0 * res), K,
                             {"N": N, "shift": shift, "seed": seed,
                              "method": w1_method(N, model.dim)})


def pathwise_periodicity_test(model, t, xi, K, seed, step, stream=0,
                              tolerance=RUN["pullback_target"],
                              ratio_depth=None):
    """Pathwise checks on one noise realization.

    (a) identity: the state at t + tau started at t + tau - K tau on omega
        must equal, bit for bit, the state at t started at t - K tau on the
        shifted noise theta_tau omega;
    (b) limit: distance between the starts t - K tau and t - (K+1) tau at
        time t, with the geometric ratio fitted from a pull-back of depth
        ``ratio_depth`` (default min(K + 1, 8)).
    """
    tau = model.period
    origin = t - (K + 1) * tau
    w = make_noise(seed, stream, origin, step, as_multiple((K + 2) * tau, step), model.dim)
    s1 = t + tau - K * tau
    a = _run(model, s1, t + tau, _start_state(model, xi, s1, step), w)
    s0 = t - K * tau
    b = _run(model, s0, t, _start_state(model, xi, s0, step), shift_noise(w, tau))
    identical = bool(np.array_equal(a, b))
    ident_stat = float(np.max(np.abs(a - b))) if a.size else 0.0
    c = _run(model, s0, t, _start_state(model, xi, s0, step), w)
    d = _run(model, origin, t, _start_state(model, xi, origin, step), w)
    gap = float(_distance(model, c, d, step))
    depth = min(K + 1, 8) if ratio_depth is None else ratio_depth
    ratio = pullback(model, t, xi, depth, w).fitted_ratio if depth >= 2 else float("nan")
    passed = identical and gap <= tolerance
    return PeriodicityReport("pathwise", ident_stat, 0.0, passed, K,
                             {"identical": identical, "limit_gap": gap,
                              "tolerance": tolerance, "fitted_ratio": ratio,
                              "seed": seed, "stream": stream})


# -- moment probes ---------------------------------------------------------

@dataclass
class MomentProbe:
    times: np.ndarray
    mean_square: np.ndarray
    stderr: np.ndarray
    max_mean_square: float
    trend: bool
    trend_z: float

    def to_dict(self):
        return {"times": self.times.tolist(), "mean_square": self.mean_square.tolist(),
                "stderr": self.stderr.tolist(), "max_mean_square": self.max_mean_square,
                "trend": self.trend, "trend_z": self.trend_z}


def moment_probe(model, s, horizon, xi, N, seed, step, probes=RUN["probe_points"],
                 first_stream=0):
    """Ensemble E||X_t||^2 at ``probes`` equally spaced times in (s, s + horizon].

    The trend flag is raised when the last-quarter average exceeds the
    first-quarter average by more than three combined standard errors,
    using per-path quarter averages so probe correlation is accounted for.
    """
    if N < 2:
        raise DomainError("ensemble size must be at least 2")
    n_steps = as_multiple(horizon, step)
    if n_steps is None:
        raise DomainError(f"horizon {horizon!r} is not a multiple of the step {step!r}")
    w = ensemble_noise(seed, N, s, step, n_steps, model.dim, first_stream)
    marks = [round(j * n_steps / probes) for j in range(1, probes + 1)]
    state = _start_state(model, xi, s, step)
    prev = 0
    sq = []
    for k in marks:
        a, b = s + prev * step, s + k * step
        if _is_delay(model):
            state = simulate_delay(model, a, b, state, w).final
            sq.append(model.norm(state.values, step) ** 2)
        else:
            state = simulate(model, a, b, state, w, record_every=max(1, k - prev)).final
            sq.append(np.sum(state ** 2, axis=-1))
        prev = k
    sq = np.array(sq)                      # (probes, N)
    ms = sq.mean(axis=1)
    se = sq.std(axis=1, ddof=1) / math.sqrt(N)
    q = max(1, probes // 4)
    first, last = sq[:q].mean(axis=0), sq[-q:].mean(axis=0)
    diff = last.mean() - first.mean()
    comb = math.sqrt(first.var(ddof=1) / N + last.var(ddof=1) / N)
    z = diff / comb if comb > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
    times = s + step * np.array(marks)
    return MomentProbe(times, ms, se, float(ms.max()), bool(z > 3.0), float(z))
