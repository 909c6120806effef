"""The concave comparison function used as a reflection-coupling metric.

For a drift that is dissipative only at long distance, with constants
(K1, K2, L), set ``gamma(v) = K1*v`` on ``[0, L]`` and ``-K2*v`` beyond, and

    phi'(r) = exp(-G(r)) * int_r^inf l * exp(G(l)) dl,   G(r) = int_0^r gamma,
    phi(r)  = int_0^r phi'(u) du.

Then ``phi'' + gamma*phi' = -r`` and ``C_* r <= phi(r) <= C^* r`` with
``C_* = inf phi'`` and ``C^* = sup phi'``.  :func:`build_phi` tabulates phi'
by quadrature and interpolates with cubic Hermite pieces whose slopes come
from differentiating the defining integral.
"""

import math

import numpy as np
from scipy import integrate, optimize

from .defaults import NUMERICS
from .errors import DomainError, NumericError

_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)


def gamma(v, K1, K2, L):
    """Piecewise-linear rate: K1*v on [0, L], -K2*v for v > L."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DomainError("gamma is defined for v >= 0 only")
    out = np.where(v <= L, K1 * v, -K2 * v)
    return float(out) if out.ndim == 0 else out


def gamma_integral(v, K1, K2, L):
    """G(v) = int_0^v gamma, closed form."""
    v = np.asarray(v, dtype=float)
    out = np.where(v <= L, 0.5 * K1 * v * v, 0.5 * K1 * L * L - 0.5 * K2 * (v * v - L * L))
    return float(out) if out.ndim == 0 else out


def _gauss(f, a, b, rule):
    x, w = rule
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return half * (f(nodes) @ w)


def _hermite(x, xk, yk, d0, d1):
    """Cubic Hermite evaluation with separate left/right slopes per cell."""
    i = np.clip(np.searchsorted(xk, x, side="right") - 1, 0, len(xk) - 2)
    h = xk[i + 1] - xk[i]
    s = (x - xk[i]) / h
    s2, s3 = s * s, s * s * s
    return ((2 * s3 - 3 * s2 + 1) * yk[i] + (s3 - 2 * s2 + s) * h * d0[i]
            + (-2 * s3 + 3 * s2) * yk[i + 1] + (s3 - s2) * h * d1[i])


class CouplingMetric:
    """Tabulated phi with its derivative and the sandwich constants.

    Attributes mirror the table: ``grid``, ``phi_values``,
    ``phi_prime_values``, plus ``C_star``, ``C_upper_star``, ``tail_slope``
    (= 1/K2) and ``r_max``.  Arrays are read-only.
    """

    def __init__(self, K1, K2, L, grid, phi_values, phi_prime_values, slopes_lo, slopes_hi,
                 C_star, C_upper_star):
        self.K1, self.K2, self.L = float(K1), float(K2), float(L)
        self.grid = grid
        self.phi_values = phi_values
        self.phi_prime_values = phi_prime_values
        # phi'' at the left/right node of each cell; differ only across r = L
        self._d2_lo = slopes_lo
        self._d2_hi = slopes_hi
        self.C_star = float(C_star)
        self.C_upper_star = float(C_upper_star)
        self.tail_slope = 1.0 / self.K2
        self.r_max = float(grid[-1])
        h = np.diff(grid)
        delta = np.diff(phi_values) / h
        a = phi_prime_values[:-1] / delta
        b = phi_prime_values[1:] / delta
        # Fritsch-Carlson: cubic pieces with a^2 + b^2 > 9 can overshoot
        self._linear_cells = (a * a + b * b) > 9.0
        self.monotone_repaired = bool(self._linear_cells.any())
        for arr in (grid, phi_values, phi_prime_values, slopes_lo, slopes_hi):
            arr.setflags(write=False)

    def __repr__(self):
        return (f"CouplingMetric(K1={self.K1}, K2={self.K2}, L={self.L}, "
                f"C_star={self.C_star:.10g}, C_upper_star={self.C_upper_star:.10g}, "
                f"r_max={self.r_max:.6g})")

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("phi is defined for r >= 0 only")
        g, y, d = self.grid, self.phi_values, self.phi_prime_values
        inside = np.minimum(r, self.r_max)
        out = _hermite(inside, g, y, d[:-1], d[1:])
        if self.monotone_repaired:
            i = np.clip(np.searchsorted(g, inside, side="right") - 1, 0, len(g) - 2)
            lin = y[i] + (inside - g[i]) * (y[i + 1] - y[i]) / (g[i + 1] - g[i])
            out = np.where(self._linear_cells[i], lin, out)
        out = np.where(r > self.r_max, y[-1] + self.tail_slope * (r - self.r_max), out)
        return float(out) if out.ndim == 0 else out

    def phi_prime(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("phi' is defined for r >= 0 only")
        out = _hermite(np.minimum(r, self.r_max), self.grid, self.phi_prime_values,
                       self._d2_lo, self._d2_hi)
        out = np.where(r > self.r_max, self.tail_slope, out)
        return float(out) if out.ndim == 0 else out

    __call__ = phi

    def gamma(self, v):
        return gamma(v, self.K1, self.K2, self.L)


def _phi_prime_table(K1, K2, L, grid, tail_mass):
    G = lambda x: gamma_integral(x, K1, K2, L)
    R = grid[-1]
    # beyond max(R, L) the integrand is l*exp(-K2*(l^2 - R^2)/2) up to a constant
    cut = math.sqrt(R * R + 2.0 * math.log(1.0 / tail_mass) / K2)
    cut = R + 2.0 * (cut - R)
    GR = G(R)
    tail, err = integrate.quad(lambda l: l * math.exp(G(l) - GR), R, cut,
                               epsabs=0.0, epsrel=1e-13, limit=200,
                               points=[L] if R < L < cut else None)
    if not math.isfinite(tail) or err > 1e-10 * max(1.0, abs(tail)):
        raise NumericError(f"tail quadrature failed: value={tail!r}, error estimate={err!r}")

    a, b = grid[:-1], grid[1:]
    Ga = G(a)
    f = lambda nodes: nodes * np.exp(G(nodes) - Ga[:, None])
    cell8 = _gauss(f, a, b, _GL8)
    cell16 = _gauss(f, a, b, _GL16)
    bad = np.abs(cell16 - cell8) > 1e-12 * np.maximum(1.0, np.abs(cell16))
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericError(f"cell quadrature did not converge on [{a[i]!r}, {b[i]!r}]: "
                           f"{cell8[i]!r} vs {cell16[i]!r}")
    decay = np.exp(G(b) - Ga)
    out = np.empty_like(grid)
    out[-1] = tail
    for i in range(len(grid) - 2, -1, -1):
        out[i] = decay[i] * out[i + 1] + cell16[i]
    return out


def build_phi(K1, K2, L, table_step=NUMERICS["phi_table_step"],
              tail_mass=NUMERICS["phi_tail_mass"], limit_tol=NUMERICS["phi_limit_tol"]):
    """Tabulate phi and phi' for the constants (K1, K2, L).

    The table edge ``r_max`` starts at ``max(2L, 4/sqrt(K2))`` and doubles
    until ``|phi'(r_max) - 1/K2| < limit_tol``.  ``L`` is always a table
    node because phi'' jumps there.
    """
    K1, K2, L = float(K1), float(K2), float(L)
    if not K2 > 0:
        raise DomainError(f"K2 must be positive, got {K2!r}")
    if K1 < 0 or L < 0:
        raise DomainError("K1 and L must be nonnegative")
    R = max(2.0 * L, 4.0 / math.sqrt(K2))
    for _ in range(20):
        nL = math.ceil(L / table_step) if L > 0 else 0
        nR = math.ceil((R - L) / table_step)
        grid = np.concatenate([np.linspace(0.0, L, nL + 1)[:-1] if nL else [],
                               np.linspace(L, R, nR + 1)])
        dphi = _phi_prime_table(K1, K2, L, grid, tail_mass)
        if abs(dphi[-1] - 1.0 / K2) < limit_tol:
            break
        R *= 2.0
    else:
        raise NumericError("phi' never approached 1/K2 at the table edge")

    # phi'' from differentiating the definition: -r - gamma(r) phi'(r)
    g_lo = np.where(grid <= L, K1 * grid, -K2 * grid)       # gamma approached from the left
    g_hi = np.where(grid < L, K1 * grid, -K2 * grid)        # ... and from the right
    if L == 0:
        g_hi = -K2 * grid
    d2_left_node = -grid[:-1] - g_hi[:-1] * dphi[:-1]
    d2_right_node = -grid[1:] - g_lo[1:] * dphi[1:]

    h = np.diff(grid)
    cells = 0.5 * h * (dphi[:-1] + dphi[1:]) + h * h * (d2_left_node - d2_right_node) / 12.0
    phi = np.concatenate([[0.0], np.cumsum(cells)])

    interp = lambda r: _hermite(np.asarray(r, dtype=float), grid, dphi, d2_left_node, d2_right_node)
    C_star = min(dphi.min(), 1.0 / K2)
    C_upper = max(dphi.max(), 1.0 / K2)
    for sign in (+1, -1):
        i = int(np.argmax(sign * dphi))
        if 0 < i < len(grid) - 1:
            res = optimize.minimize_scalar(lambda r: -sign * float(interp(r)),
                                           bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                                           options={"xatol": 1e-10})
            if sign > 0:
                C_upper = max(C_upper, -res.fun)
            else:
                C_star = min(C_star, res.fun)
    if not C_star > 0:
        raise NumericError(f"phi' table has nonpositive minimum {C_star!r}")
    return CouplingMetric(K1, K2, L, grid, phi, dphi, d2_left_node, d2_right_node,
                          C_star, C_upper)


def phi_eval(m, r):
    return m.phi(r)


def phi_prime_eval(m, r):
    return m.phi_prime(r)


def ode_residual(m, grid, h_fd=1e-4):
    """max |phi'' + gamma*phi' + r| over ``grid`` with phi'' by finite differences.

    Points within ``h_fd`` of the kink at r = L are skipped.  Near r = 0 a
    one-sided three-point difference replaces the central one.
    """
    r = np.asarray(grid, dtype=float).ravel()
    if m.L > 0:
        r = r[np.abs(r - m.L) > h_fd]
    if r.size == 0:
        return 0.0
    central = r >= h_fd
    d2 = np.empty_like(r)
    rc = r[central]
    d2[central] = (m.phi_prime(rc + h_fd) - m.phi_prime(rc - h_fd)) / (2 * h_fd)
    rf = r[~central]
    d2[~central] = (-3 * m.phi_prime(rf) + 4 * m.phi_prime(rf + h_fd)
                    - m.phi_prime(rf + 2 * h_fd)) / (2 * h_fd)
    res = np.abs(d2 + m.gamma(r) * m.phi_prime(r) + r)
    return float(res.max())
