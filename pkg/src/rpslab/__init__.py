"""Random periodic solutions of periodic SDEs and functional SDEs: a numerical lab."""

__version__ = "0.1.0"

from .rates import PeriodicRate
from .metric import CouplingMetric, build_phi, gamma
from .certificates import (Certificate, HHParams, RateTriple, bdg_chi, c_window_bounds,
                           check_corollary_EW, check_theorem3, lambda_weight, rate_theorem2,
                           verify_hh_margin)
from .noise import NoiseGrid, make_noise, shift_noise, ensemble_noise
from .models import SdeModel, DelayModel, SegmentState
from .engine import (simulate, simulate_reflection_coupled, simulate_delay,
                     simulate_infinite_delay, simulate_delay_coupled)
from .analysis import (pullback, empirical_w1, contraction_fit,
                       distributional_periodicity_test, pathwise_periodicity_test,
                       moment_probe)
