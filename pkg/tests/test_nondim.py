import json
import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blebsim.nondim import (
    PhysicalParams,
    UnitError,
    group_ranges,
    nondimensionalize,
    round_sig,
)

BASE = PhysicalParams()


@pytest.fixture(scope="module")
def ranges():
    return group_ranges(BASE)


def test_reynolds_range(ranges):
    lo, hi = ranges["Re"]
    assert round_sig(lo) >= 1e-8 and round_sig(hi) <= 2e-7


def test_peclet_range():
    lo = nondimensionalize(replace(BASE, L=10.0)).Pe
    hi = nondimensionalize(replace(BASE, L=20.0)).Pe
    assert round_sig(lo) == pytest.approx(0.03) and round_sig(hi) == pytest.approx(0.07)


def test_epsilon_range():
    lo = nondimensionalize(replace(BASE, L=20.0)).epsilon
    hi = nondimensionalize(replace(BASE, L=10.0)).epsilon
    assert lo == pytest.approx(0.0015) and hi == pytest.approx(0.003)


def test_t_hat_range(ranges):
    assert ranges["T_hat"] == pytest.approx((0.75, 1.5))


def test_kinetic_constants():
    rep = nondimensionalize(BASE)
    assert rep.C1 == pytest.approx(49.5)
    assert rep.C2 == pytest.approx(0.105)
    assert rep.C3 == pytest.approx(4.5)
    for got, table in ((rep.C1, 50), (rep.C2, 0.1), (rep.C3, 5)):
        assert abs(got - table) / table <= 0.1 + 1e-12


def test_reduction_flags():
    rep = nondimensionalize(BASE)
    assert rep.reduction_flags["inertia_negligible"]["valid"]
    assert rep.reduction_flags["bulk_ezrin_uniform"]["valid"]
    fast = nondimensionalize(replace(BASE, mu=1.0))
    assert not fast.reduction_flags["bulk_ezrin_uniform"]["valid"]


@settings(max_examples=50)
@given(s=st.floats(0.01, 100.0))
def test_velocity_scaling_identities(s):
    a = nondimensionalize(BASE)
    b = nondimensionalize(replace(BASE, c_w=BASE.c_w * s))
    assert b.Re == pytest.approx(a.Re * s, rel=1e-12)
    assert b.Pe == pytest.approx(a.Pe * s, rel=1e-12)
    assert b.epsilon == pytest.approx(a.epsilon / s, rel=1e-12)
    assert b.C2 == pytest.approx(a.C2 / s, rel=1e-12)
    assert b.C3 == pytest.approx(a.C3 / s, rel=1e-12)
    assert b.C1 == a.C1


def test_unit_strings():
    p = PhysicalParams(L="15 um", dyn_viscosity="10 mPa*s", T_pol="2.5 min")
    assert p.L == pytest.approx(15.0)
    assert p.dyn_viscosity == pytest.approx(0.01)
    assert p.T_pol == pytest.approx(150.0)
    with pytest.raises(UnitError):
        PhysicalParams(L="15 s")
    with pytest.raises(UnitError):
        PhysicalParams(L="fifteen um")


@pytest.mark.parametrize("name", ["L", "rho", "nu", "gamma"])
def test_nonpositive_rejected(name):
    with pytest.raises(ValueError):
        PhysicalParams(**{name: 0.0})
    with pytest.raises(ValueError):
        PhysicalParams(**{name: math.inf})


def test_from_mapping_unknown_key():
    with pytest.raises(ValueError):
        PhysicalParams.from_mapping({"L": 10.0, "bogus": 1})


def test_report_serialization():
    rep = nondimensionalize(BASE)
    data = json.loads(rep.to_json())
    assert data["C1"] == pytest.approx(49.5)
    text = rep.to_text()
    assert "epsilon" in text and "inertia_negligible" in text
    assert all(math.isfinite(v) for k, v in data.items() if k != "reduction_flags")


def test_round_sig():
    assert round_sig(0.0345) == 0.03
    assert round_sig(1.49e-7) == 1e-7
    assert round_sig(0.0) == 0.0
