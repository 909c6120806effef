import math

import numpy as np
import pytest
from scipy import integrate as sint

from rpslab.errors import ArgumentOrderError, ConfigError
from rpslab.rates import PeriodicRate, guarded_floor, integrate, period_integral, sup_abs_one_period

SIN = PeriodicRate.trig(1.0, 0.0, [(1, 0.0, 1.0)])
STEP = PeriodicRate.piecewise(1.0, [0.0, 0.5], [1.0, -1.0])


def test_eval_constant_and_closed_forms():
    c = PeriodicRate.constant(-3.0)
    assert c(12.7) == -3.0
    assert SIN(-0.25) == pytest.approx(-1.0, abs=1e-15)
    assert STEP(1.75) == -1.0
    assert STEP(-0.25) == -1.0
    assert STEP(0.0) == 1.0


def test_eval_is_periodic_on_random_points():
    rng = np.random.default_rng(0)
    f = PeriodicRate.trig(2.0, 0.3, [(1, 0.5, -0.2), (3, 0.1, 0.4)])
    t = rng.uniform(-50, 50, 1000)
    assert np.allclose(f(t + 2.0), f(t), atol=1e-12)
    assert np.array_equal(STEP(t + 1.0), STEP(t))


def test_integrate_examples(golden):
    c = PeriodicRate.constant(2.5, 1.0)
    assert integrate(c, -1.3, 4.2) == pytest.approx(2.5 * 5.5, rel=1e-14)
    assert integrate(SIN, 0.0, 2.5) == pytest.approx(golden["integral_sin_0_2.5"], rel=1e-12)
    assert integrate(SIN, 3.7, 3.7) == 0.0


def test_integrate_rejects_reversed_interval():
    with pytest.raises(ArgumentOrderError):
        integrate(SIN, 1.0, 0.5)


def test_period_integral():
    assert period_integral(SIN) == 0.0
    assert period_integral(PeriodicRate.constant(1.5, 2.0)) == 3.0
    assert period_integral(STEP) == 0.0


def test_sup_abs_one_period():
    assert sup_abs_one_period(PeriodicRate.constant(-3.0)) == 3.0
    assert sup_abs_one_period(SIN) == pytest.approx(1.0, abs=1e-8)
    f = PeriodicRate.trig(1.0, 1.0, [(1, 0.0, 0.5)])
    assert sup_abs_one_period(f) == pytest.approx(1.5, abs=1e-8)
    assert sup_abs_one_period(PeriodicRate.piecewise(1.0, [0.0, 0.3], [0.5, -2.0])) == 2.0


def test_whole_periods_use_guarded_floor():
    assert guarded_floor(2.99999999999) == 2
    assert guarded_floor(3.0 - 1e-13) == 3
    assert guarded_floor(-1e-13) == 0
    f = PeriodicRate.trig(0.1, 1.0, [(1, 0.3, 0.0)])
    # 0.3 / 0.1 is 2.9999999999999996 in floating point
    assert integrate(f, 0.0, 0.3) == pytest.approx(0.3, rel=1e-13)


def test_piecewise_wraps_when_first_break_is_positive():
    f = PeriodicRate.piecewise(1.0, [0.25, 0.75], [2.0, -1.0])
    assert f(0.1) == -1.0 and f(0.5) == 2.0 and f(0.9) == -1.0
    assert f.period_integral() == pytest.approx(0.5 * 2.0 - 0.5)


def test_integrate_piecewise_against_quad():
    f = PeriodicRate.piecewise(1.0, [0.0, 0.2, 0.7], [1.0, -2.0, 0.5])
    ref = sint.quad(f, -1.1, 2.35, points=[-1 + x for x in (0, 0.2, 0.7, 1, 1.2, 1.7, 2, 2.2)],
                    limit=200)[0]
    assert integrate(f, -1.1, 2.35) == pytest.approx(ref, abs=1e-10)


def test_sign_class_validation():
    with pytest.raises(ConfigError):
        PeriodicRate.trig(1.0, 0.2, [(1, 0.0, 0.5)], sign_class="positive")
    with pytest.raises(ConfigError):
        PeriodicRate.piecewise(1.0, [0.0, 0.5], [0.0, 1.0], sign_class="positive")
    PeriodicRate.piecewise(1.0, [0.0, 0.5], [0.0, 1.0], sign_class="nonnegative")


def test_from_spec_round_trip_and_errors():
    spec = {"type": "trig", "period": 1.0, "const": 1.0, "terms": [[1, 0.0, 0.5]],
            "sign_class": "positive"}
    f = PeriodicRate.from_spec(spec)
    assert PeriodicRate.from_spec(f.to_spec()) == f
    with pytest.raises(ConfigError) as exc:
        PeriodicRate.from_spec({"type": "lambda", "period": 1.0}, "rates.lambda1")
    assert "rates.lambda1.type" in str(exc.value)
    with pytest.raises(ConfigError):
        PeriodicRate.from_spec(lambda t: t)


def test_values_are_immutable():
    with pytest.raises(AttributeError):
        SIN.period = 2.0


def test_arithmetic_keeps_exact_form():
    g = SIN + 2.0
    assert g.kind == "trig" and g.period_integral() == pytest.approx(2.0)
    h = STEP + PeriodicRate.constant(1.0)
    assert h(0.2) == 2.0 and h(0.6) == 0.0
    assert math.isclose(SIN.scaled(3.0)(0.25), 3.0)
