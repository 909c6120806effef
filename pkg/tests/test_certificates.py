import json
import math

import numpy as np
import pytest

from rpslab import presets
from rpslab.certificates import (Check, HHParams, RateTriple, bdg_chi, c_window_bounds,
                                 certify_reflection, certify_theorem2, check_corollary_EW,
                                 check_theorem3, lambda_weight, rate_theorem2,
                                 verify_delay_margins, verify_hh_margin)
from rpslab.errors import ConfigError, DomainError, PreconditionError
from rpslab.rates import PeriodicRate

SIN = PeriodicRate.trig(1.0, 0.0, [(1, 0.0, 1.0)])
CHI = 1.30693


def test_bdg_chi():
    assert bdg_chi() == 1.30693
    assert bdg_chi() ** 2 == pytest.approx(1.70807, abs=5e-5)
    assert bdg_chi() > 1


@pytest.mark.parametrize("c,r0", [(10.0, 0.01), (3.0, 0.2), (0.5, 1.7)])
def test_window_bounds_constant(c, r0):
    lo, hi = c_window_bounds(PeriodicRate.constant(-c), r0)
    assert lo == pytest.approx(-c * r0, abs=1e-12)
    assert hi == 0.0


def test_window_bounds_zero_and_errors():
    assert c_window_bounds(PeriodicRate.constant(0.0), 0.3) == (0.0, 0.0)
    with pytest.raises(DomainError):
        c_window_bounds(SIN, 0.0)


def test_window_bounds_match_bruteforce_oracle(golden):
    lo, hi = c_window_bounds(SIN, 0.25)
    assert lo == pytest.approx(golden["window_sin_r0_0.25"][0], abs=1e-4)
    assert hi == pytest.approx(golden["window_sin_r0_0.25"][1], abs=1e-4)
    mixed = PeriodicRate.trig(1.0, -1.0, [(1, 0.8, 0.0), (2, 0.0, 0.3)])
    lo, hi = c_window_bounds(mixed, 0.3)
    assert lo == pytest.approx(golden["window_mixed_r0_0.3"][0], abs=1e-4)
    assert hi == pytest.approx(golden["window_mixed_r0_0.3"][1], abs=1e-4)
    assert lo <= 0.0 <= hi


def test_rate_theorem2_examples():
    ell = rate_theorem2(RateTriple.constants(-10.0, 0.1, 0.1), 0.01)
    direct = -10 + 2 * math.exp(0.1) * (0.1 + 0.1 + 2 * 0.1 * CHI ** 2 * math.exp(0.1))
    assert ell == pytest.approx(direct, abs=1e-12)
    assert ell == pytest.approx(-8.723, abs=1e-3)
    assert rate_theorem2(RateTriple.constants(-1.0, 0.0, 0.0, period=2.0), 0.4) == pytest.approx(-2.0)
    assert rate_theorem2(RateTriple.constants(1.0, 0.0, 0.0), 0.4) == pytest.approx(1.0)


def test_corollary_EW_examples():
    ok, margin = check_corollary_EW(10, 0.1, 0.1, 0.01)
    assert ok and margin == pytest.approx(8.723, abs=1e-3)
    assert check_corollary_EW(1, 0, 0, 5.0) == (True, 1.0)
    ok, margin = check_corollary_EW(1, 1, 0, 0)
    assert not ok and margin == -1.0
    with pytest.raises(DomainError):
        check_corollary_EW(0.0, 0.1, 0.1, 0.01)


@pytest.mark.parametrize("l1,l2,l3,r0,tau", [(10, 0.1, 0.1, 0.01, 1.0), (2, 0.3, 0.05, 0.1, 2.0),
                                             (1, 1, 0, 0.5, 0.5)])
def test_constant_rates_reduce_to_EW(l1, l2, l3, r0, tau):
    ell = rate_theorem2(RateTriple.constants(-l1, l2, l3, tau), r0)
    ok, margin = check_corollary_EW(l1, l2, l3, r0)
    assert ell == pytest.approx(-tau * margin, abs=1e-10)
    assert (ell < 0) == ok


def test_lambda_weight_examples(golden):
    assert lambda_weight(PeriodicRate.constant(-1.0), 1.0) == 0.0
    assert lambda_weight(PeriodicRate.constant(-2.0), 1.0) == 0.0
    assert lambda_weight(SIN, 1.0) == pytest.approx(golden["weight_sin_alpha0_1"], abs=1e-4)
    with pytest.raises(PreconditionError):
        lambda_weight(PeriodicRate.constant(-3.0), 1.0)


def test_theorem3_certificates():
    cert = check_theorem3(RateTriple.constants(-1.0, 0.0, 0.0), 0.5)
    assert cert.check("BB1").passed and cert.check("BB1").margin == 0.0
    assert cert.check("Bstar").passed and cert.check("Bstar").margin == pytest.approx(-1.0)
    cert = check_theorem3(RateTriple.constants(-1.0, 2.0, 0.0), 1.0)
    assert cert.check("BB1").passed
    assert not cert.check("Bstar").passed and cert.check("Bstar").margin == pytest.approx(1.0)
    assert not cert.passed


def test_theorem3_J_preset():
    cert = check_theorem3(RateTriple.constants(-2.0, 0.2, 0.1), 1.0)
    assert cert.passed and cert.lambda_weight == 0.0
    assert 0.2 + (1 + 2 * CHI ** 2) * 0.1 == pytest.approx(0.642, abs=1e-3)
    assert cert.per_period_decay == pytest.approx(2 - 0.2 - (1 + 2 * CHI ** 2) * 0.1)


def test_rate_triple_validation():
    with pytest.raises(ConfigError):
        RateTriple(SIN, PeriodicRate.constant(0.1, 2.0), PeriodicRate.constant(0.1))
    with pytest.raises(ConfigError):
        RateTriple(SIN, SIN, PeriodicRate.constant(0.1))
    with pytest.raises(ConfigError):
        HHParams(1.0, 0.0, 1.0, PeriodicRate.constant(1.0))


def test_check_consistency_is_enforced():
    with pytest.raises(ValueError):
        Check("x", True, 1.0, "<0")


def test_hh_margin_examples():
    dw = presets.double_well()
    p = HHParams(1.0, 1.0, 2 * math.sqrt(2), dw.alpha)
    g = np.linspace(-4, 4, 64)
    assert verify_hh_margin(dw.drift, p, np.linspace(0, 1, 64), g, g) <= 0
    one = PeriodicRate.constant(1.0)
    ou = presets.ou()
    assert verify_hh_margin(ou.drift, HHParams(0, 1, 0, one), [0.0, 0.5], g, g) == 0.0
    anti = presets.anti_dissipative()
    assert verify_hh_margin(anti.drift, HHParams(0, 1, 0, one), [0.0], g, g) > 0


def test_reflection_certificate():
    dw = presets.double_well()
    cert = certify_reflection(HHParams(1.0, 1.0, 2 * math.sqrt(2), dw.alpha), drift=dw.drift)
    assert cert.passed
    assert cert.per_period_decay == pytest.approx(1.0 / (2 * math.e ** 4 - 1), rel=1e-9)


def test_certificate_json_is_deterministic():
    a = certify_theorem2(RateTriple.constants(-10, 0.1, 0.1), 0.01).to_json()
    b = certify_theorem2(RateTriple.constants(-10, 0.1, 0.1), 0.01).to_json()
    assert a == b
    d = json.loads(a)
    assert d["ell"] < 0 and d["per_period_decay"] == -d["ell"]
    assert d["checks"][0]["name"] == "WE" and d["checks"][0]["passed"]
    assert d["c_star"] == pytest.approx(-0.1) and d["c_upper_star"] == 0.0


def test_certificate_decay_positive_when_passing():
    for cert in (certify_theorem2(RateTriple.constants(-10, 0.1, 0.1), 0.01),
                 check_theorem3(RateTriple.constants(-2.0, 0.2, 0.1), 1.0)):
        assert cert.passed and cert.per_period_decay > 0


def test_delay_presets_respect_their_rates():
    fin = presets.linear_delay()
    b, s = verify_delay_margins(fin, RateTriple.constants(-10, 0.1, 0.1), 1e-3)
    assert b <= 0 and s <= 0
    inf = presets.infinite_delay()
    b, s = verify_delay_margins(inf, RateTriple.constants(-2, 0.2, 0.1), 1e-2, n_samples=40)
    assert b <= 0 and s <= 0
