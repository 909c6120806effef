"""Every numerical default used by rpslab, in one place.

Algorithms take these as keyword defaults; nothing below is re-hardcoded
elsewhere.  Config files may override any entry of ``NUMERICS`` and ``RUN``.
"""

import math

#: Values closer than this to an integer count as that integer when
#: counting whole periods or checking grid alignment.
INTEGER_GUARD = 1e-12

#: Optimal upper constant of the Burkholder-Davis-Gundy inequality for
#: continuous martingales (exponent 1).  Stored, not computed.
BDG_CHI = 1.30693

NUMERICS = {
    "step": 1e-3,              # Euler-Maruyama step h
    "eps_couple": None,        # None means sqrt(step)
    "truncation": 1e-8,        # delta: weight e^{-alpha0 H} allowed at the history cut
    "window_grid": 400,        # points per axis for the c_*/c^* and lambda-weight searches
    "sign_grid": 10_000,       # grid for sign-class validation and sup norms
    "phi_table_step": 1e-3,    # radial spacing of the phi table
    "phi_tail_mass": 1e-12,    # relative mass dropped when truncating the phi' tail integral
    "phi_limit_tol": 1e-6,     # |phi'(r_max) - 1/K2| required at the table edge
    "divergence_guard": 1e6,   # |state| beyond this aborts a simulation
}

RUN = {
    "seed": 0,
    "ensemble": 10_000,        # N
    "pullback_max": 64,        # cap on the pull-back depth K
    "pullback_target": 1e-4,   # choose K with (per-period factor)^K below this
    "anchor": 0.0,             # anchor time t
    "bootstrap": 1000,         # resamples for rate confidence intervals
    "probe_points": 20,        # probe times for moment probes
}

#: Quasi-random direction count for sliced Wasserstein in d > 1.
SLICED_DIRECTIONS = 64
#: Largest sample size solved exactly by assignment in d > 1.
EXACT_ASSIGNMENT_MAX = 256


def eps_couple(step, eps=None):
    """Coupling threshold; defaults to the one-step noise scale sqrt(h)."""
    return math.sqrt(step) if eps is None else float(eps)


def history_cut(alpha0, step, truncation=NUMERICS["truncation"]):
    """Smallest grid multiple H with exp(-alpha0 * H) <= truncation."""
    n = math.ceil(-math.log(truncation) / alpha0 / step - INTEGER_GUARD)
    return n * step
