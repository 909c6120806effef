"""Explicit Euler-Maruyama for SDEs and functional SDEs with periodic coefficients.

Time is handled as integer grid indices.  Step n covers [n h, (n+1) h], uses
noise increment n of the :class:`~rpslab.noise.NoiseGrid`, and evaluates the
coefficients at the phase time ``(n mod P) * h`` where ``P = tau / h``.  Since
the coefficients are tau-periodic this is the same mathematical value as
b(n h, .), and it makes the discrete solution map satisfy

    simulate(model, s + tau, t + tau, x, w) == simulate(model, s, t, x, shift(w, tau))

bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from .defaults import NUMERICS, eps_couple as default_eps
from .errors import AlignmentError, DivergenceError, UnsupportedModelError
from .models import DelayModel, SdeModel, SegmentState, apply_diffusion
from .rates import as_multiple


@dataclass
class Path:
    times: np.ndarray
    values: np.ndarray      # (n_records, d) or (n_records, n_paths, d)

    @property
    def final(self):
        return self.values[-1]


@dataclass
class CoupledRun:
    times: np.ndarray
    x_path: np.ndarray
    y_path: np.ndarray
    coupled_at: object      # step index (relative to s) or None; an int array for ensembles (-1 = never)
    z_norms: np.ndarray
    phi_z: np.ndarray = None
    eps_couple: float = None
    step: float = None

    @property
    def coupled_fraction(self):
        c = np.atleast_1d(np.asarray(self.coupled_at if self.coupled_at is not None else -1))
        return float(np.mean(c >= 0))


def _index(t, h, what="time"):
    n = as_multiple(t, h)
    if n is None:
        raise AlignmentError(f"{what} {t!r} is not a multiple of the step {h!r}")
    return n


def _period_steps(period, h):
    P = as_multiple(period, h)
    if P is None or P < 1:
        raise AlignmentError(f"period {period!r} is not a multiple of the step {h!r}")
    return P


def _window(w, s, t):
    h = w.step
    ns, nt = _index(s, h, "start"), _index(t, h, "end")
    if nt < ns:
        raise AlignmentError(f"end time {t!r} precedes start time {s!r}")
    i0, i1 = ns - w.origin_index, nt - w.origin_index
    if i0 < 0 or i1 > w.length:
        raise AlignmentError(f"noise covers [{w.origin!r}, {w.end!r}] but the run needs "
                             f"[{s!r}, {t!r}]")
    return ns, nt, i0, i1


def _state(x0, w, dim):
    x = np.array(x0, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    want = 2 if w.ensemble else 1
    if x.ndim == 1 and w.ensemble:
        x = np.repeat(x[None, :], w.n_paths, axis=0)
    if x.ndim != want or x.shape[-1] != dim or (w.ensemble and x.shape[0] != w.n_paths):
        raise AlignmentError(f"initial state of shape {x.shape} does not match the noise "
                             f"({'ensemble of %d' % w.n_paths if w.ensemble else 'single path'}, "
                             f"dim={dim})")
    if w.dim != dim:
        raise AlignmentError(f"noise dimension {w.dim} differs from model dimension {dim}")
    return x


def _guard(x, k, t, limit):
    mag = np.max(np.abs(x)) if x.size else 0.0
    if not np.isfinite(mag) or mag > limit:
        raise DivergenceError(k, t, float(mag))


def _recorder(n_steps, every):
    keep = np.arange(0, n_steps + 1, every)
    if keep[-1] != n_steps:
        keep = np.append(keep, n_steps)
    return keep


def simulate(model, s, t, x0, w, record_every=1, guard=NUMERICS["divergence_guard"]):
    """Euler-Maruyama path of an SdeModel from x0 at time s to time t.

    Returns a :class:`Path` with the states at every ``record_every``-th step
    (the final state is always included).
    """
    if not isinstance(model, SdeModel):
        raise UnsupportedModelError("simulate expects an SdeModel; use simulate_delay for "
                                    "functional SDEs")
    h = w.step
    P = _period_steps(model.period, h)
    ns, nt, i0, i1 = _window(w, s, t)
    x = _state(x0, w, model.dim)
    n_steps = nt - ns
    keep = _recorder(n_steps, record_every)
    out = np.empty((len(keep),) + x.shape)
    out[0] = x
    r = 1
    sa = np.sqrt(model.alpha(np.arange(P) * h)) if model.additive else None
    drift, sigma = model.drift, model.sigma
    k = 0
    for i, dW in w.chunks(i0, i1):
        n = i + w.origin_index
        for row in dW:
            p = n % P
            tp = p * h
            if sa is not None:
                x = x + drift(tp, x) * h + sa[p] * row
            else:
                x = x + drift(tp, x) * h + apply_diffusion(sigma(tp, x), row)
            n += 1
            k += 1
            _guard(x, k, n * h, guard)
            if r < len(keep) and keep[r] == k:
                out[r] = x
                r += 1
    return Path((ns + keep) * h, out)


def reflection(z):
    """The reflection matrix I - 2 z z^T / |z|^2 (z != 0)."""
    z = np.asarray(z, dtype=float)
    return np.eye(z.shape[-1]) - 2.0 * np.einsum("...i,...j->...ij", z, z) / np.sum(z * z, axis=-1)[..., None, None]


def simulate_reflection_coupled(model, s, t, x0, y0, w, eps_couple=None, metric=None,
                                record_every=1, guard=NUMERICS["divergence_guard"]):
    """Run X with dW and Y with the reflected increment until they meet.

    Y uses ``(I - 2 z z^T/|z|^2) dW`` with z = X - Y taken before the step.
    The pair is declared coupled at the first step where ``|X - Y| <=
    eps_couple`` (default sqrt(h)); from then on Y is set equal to X.
    """
    if not isinstance(model, SdeModel) or not model.additive:
        raise UnsupportedModelError("reflection coupling is implemented for additive noise only")
    h = w.step
    eps = default_eps(h, eps_couple)
    P = _period_steps(model.period, h)
    ns, nt, i0, i1 = _window(w, s, t)
    x = _state(x0, w, model.dim)
    y = _state(y0, w, model.dim)
    single = not w.ensemble
    if single:
        x, y = x[None, :], y[None, :]
    n_paths = x.shape[0]
    coupled = np.linalg.norm(x - y, axis=-1) <= eps
    coupled_at = np.where(coupled, 0, -1)
    y = np.where(coupled[:, None], x, y)

    n_steps = nt - ns
    keep = _recorder(n_steps, record_every)
    xs = np.empty((len(keep), n_paths, model.dim))
    ys = np.empty_like(xs)
    xs[0], ys[0] = x, y
    r = 1
    sa = np.sqrt(model.alpha(np.arange(P) * h))
    drift = model.drift
    k = 0
    for i, dW in w.chunks(i0, i1):
        n = i + w.origin_index
        if single:
            dW = dW[:, None, :]
        for row in dW:
            p = n % P
            tp = p * h
            z = x - y
            zz = np.sum(z * z, axis=-1)
            proj = np.divide(np.sum(z * row, axis=-1), zz, out=np.zeros_like(zz), where=~coupled)
            xn = x + drift(tp, x) * h + sa[p] * row
            yn = y + drift(tp, y) * h + sa[p] * (row - 2.0 * z * proj[:, None])
            yn = np.where(coupled[:, None], xn, yn)
            newly = ~coupled & (np.linalg.norm(xn - yn, axis=-1) <= eps)
            if newly.any():
                yn = np.where(newly[:, None], xn, yn)
                coupled = coupled | newly
                coupled_at = np.where(newly, k + 1, coupled_at)
            x, y = xn, yn
            n += 1
            k += 1
            _guard(x, k, n * h, guard)
            _guard(y, k, n * h, guard)
            if r < len(keep) and keep[r] == k:
                xs[r], ys[r] = x, y
                r += 1
    zn = np.linalg.norm(xs - ys, axis=-1)
    phi_z = metric.phi(zn) if metric is not None else None
    if single:
        xs, ys, zn = xs[:, 0], ys[:, 0], zn[:, 0]
        phi_z = None if phi_z is None else phi_z[:, 0]
        coupled_at = None if coupled_at[0] < 0 else int(coupled_at[0])
    return CoupledRun((ns + keep) * h, xs, ys, coupled_at, zn, phi_z, eps, h)


@dataclass
class DelayPath:
    """Full discrete path of a functional SDE, including the initial window.

    ``values[j]`` is the state at time ``start - m*h + j*h``.
    """
    model: DelayModel
    start: float
    step: float
    m: int
    values: np.ndarray

    @property
    def end(self):
        return self.start + (self.values.shape[0] - 1 - self.m) * self.step

    @property
    def times(self):
        return self.start + self.step * (np.arange(self.values.shape[0]) - self.m)

    def _pos(self, t):
        k = as_multiple(t - self.start, self.step)
        if k is None or not 0 <= k <= self.values.shape[0] - 1 - self.m:
            raise AlignmentError(f"time {t!r} is not a grid time in [{self.start!r}, {self.end!r}]")
        return k

    def segment_at(self, t):
        k = self._pos(t)
        return SegmentState(t, self.step, self.values[k:k + self.m + 1].copy(),
                            self.model.norm_kind, self.model.alpha0)

    @property
    def final(self):
        return self.segment_at(self.end)

    def segments(self, times):
        return [self.segment_at(t) for t in times]

    def truncation_bound(self, t):
        """Weight at the history cut times the largest dropped |X| (infinite memory)."""
        if self.model.memory == "finite":
            return 0.0
        k = self._pos(t)
        dropped = self.values[:k]
        if dropped.shape[0] == 0:
            return 0.0
        sup = np.max(np.linalg.norm(dropped, axis=-1), axis=0)
        return np.exp(-self.model.alpha0 * self.model.window) * sup


def simulate_delay(model, s, t, xi, w, guard=NUMERICS["divergence_guard"]):
    """Euler-Maruyama for a functional SDE started from the segment ``xi`` at time s."""
    if not isinstance(model, DelayModel):
        raise UnsupportedModelError("simulate_delay expects a DelayModel")
    h = w.step
    P = _period_steps(model.period, h)
    m = model.window_steps(h)
    ns, nt, i0, i1 = _window(w, s, t)
    if xi.m != m or as_multiple(xi.step, h) != 1 or as_multiple(xi.anchor - s, h) != 0:
        raise AlignmentError(f"initial segment (anchor={xi.anchor}, step={xi.step}, m={xi.m}) "
                             f"does not match start {s!r}, step {h!r}, window {m}")
    x0 = _state(xi.current, w, model.dim)
    vals = np.array(xi.values, dtype=float)
    if w.ensemble and vals.ndim == 2:
        vals = np.repeat(vals[:, None, :], w.n_paths, axis=1)
    if vals.shape[1:] != x0.shape:
        raise AlignmentError(f"segment values of shape {vals.shape} do not match the noise")
    n_steps = nt - ns
    buf = np.empty((m + 1 + n_steps,) + x0.shape)
    buf[:m + 1] = vals
    drift, sigma = model.drift, model.sigma
    k = 0
    for i, dW in w.chunks(i0, i1):
        n = i + w.origin_index
        for row in dW:
            tp = (n % P) * h
            seg = buf[k:k + m + 1]
            x = seg[-1]
            dx = drift(tp, seg) * h
            if sigma is not None:
                dx = dx + apply_diffusion(sigma(tp, seg), row)
            buf[k + m + 1] = x + dx
            n += 1
            k += 1
            _guard(buf[k + m], k, n * h, guard)
    return DelayPath(model, ns * h, h, m, buf)


def simulate_infinite_delay(model, s, t, xi, w, guard=NUMERICS["divergence_guard"]):
    if model.memory != "infinite":
        raise UnsupportedModelError("model has finite memory; use simulate_delay")
    return simulate_delay(model, s, t, xi, w, guard)


@dataclass
class DelayCoupledRun:
    """Two delay solutions driven by the same noise and the norms of their difference."""
    x: DelayPath
    y: DelayPath
    times: np.ndarray
    diff_norms: np.ndarray   # model norm of X_t - Y_t at ``times`` (per path for ensembles)


def simulate_delay_coupled(model, s, t, xi, eta, w, record_every=1,
                           guard=NUMERICS["divergence_guard"]):
    """Synchronous coupling: both solutions use the same increments of ``w``."""
    px = simulate_delay(model, s, t, xi, w, guard)
    py = simulate_delay(model, s, t, eta, w, guard)
    n_steps = px.values.shape[0] - 1 - px.m
    keep = _recorder(n_steps, record_every)
    m = px.m
    norms = np.array([model.norm(px.values[k:k + m + 1] - py.values[k:k + m + 1], px.step)
                      for k in keep])
    return DelayCoupledRun(px, py, px.start + keep * px.step, norms)
