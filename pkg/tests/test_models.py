import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_cpc_spec
from cpcgarch.errors import NegativeVarianceForSqrt, NonFiniteState, NonStationary
from cpcgarch.fixtures import FIXTURES, get_fixture
from cpcgarch.models import (
    Family,
    Measure,
    ModelSpec,
    VolState,
    advance,
    hbar_closed_form,
    mean_system,
    return_step,
    risk_neutralize,
    stationary_moments,
    step,
    to_measure,
    validate,
)
from cpcgarch.simulate import SimConfig, simulate_paths


def test_period1_cpc_is_valid():
    spec = get_fixture("CPC-P1")
    rep = validate(spec)
    assert rep.ok
    s = spec.beta_tilde + spec.alpha * spec.gamma1**2
    assert s == pytest.approx(0.4315, abs=1e-3)


def test_zero_alpha_fails():
    rep = validate(get_fixture("CPC-P1").with_params(alpha=0.0))
    assert not rep.ok
    assert not rep.by_name("alpha_positive").passed


def test_persistence_equal_to_rho_is_a_positivity_failure():
    spec = get_fixture("CPC-P1")
    spec = spec.with_params(rho=spec.beta_tilde + spec.alpha * spec.gamma1**2)
    rep = validate(spec)
    check = rep.by_name("short_run_persistence_below_rho")
    assert not check.passed
    assert check.kind == "positivity"
    # stationarity is judged separately
    assert rep.by_name("rho_below_one").passed


def test_validate_never_raises_on_garbage():
    spec = ModelSpec("CPC", float("nan"), -1.0, 0.0, 2.0, 0.0, -1.0, 0.0, 3.0)
    rep = validate(spec)
    assert not rep.ok


def test_op_omega_sign_is_unconstrained():
    rep = validate(get_fixture("OP23"))
    assert rep.family is Family.OP
    assert all(c.name != "omega_nonnegative" for c in rep.checks)


@pytest.mark.parametrize("name", ["HN-CJOW08", "OP23"])
def test_nonstationary_fixtures_are_flagged(name):
    rep = validate(get_fixture(name))
    assert not rep.by_name("spectral_radius_below_one").passed


def test_hn_spec_rejects_long_run_fields():
    with pytest.raises(ValueError):
        ModelSpec("HN", 1e-6, 1e-6, 100.0, 0.8, 1.0, varphi=1e-6, gamma2=0.0, rho=0.9)
    with pytest.raises(ValueError):
        ModelSpec("CPC", 1e-6, 1e-6, 100.0, 0.8, 1.0)


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_dict_round_trip(name):
    spec = get_fixture(name)
    d = spec.to_dict()
    assert list(d) == ["family", "omega", "alpha", "gamma1", "beta_tilde", "varphi", "gamma2", "rho", "lambda"]
    assert ModelSpec.from_dict(d) == spec
    # risk-neutral specs serialize their physical parameters
    back = risk_neutralize(spec).to_dict()
    assert back["family"] == d["family"]
    for k in d:
        if k != "family":
            assert back[k] == pytest.approx(d[k], rel=1e-13, abs=1e-13)


def test_cpc_step_with_zero_news():
    spec = get_fixture("CPC-P1")
    h, q = 1.2e-4, 0.9e-4
    z = spec.gamma1 * math.sqrt(h)
    out = step(spec, Measure.PHYSICAL, VolState(h, q), z)
    q_next = spec.omega + spec.rho * q + spec.varphi * (spec.gamma1 * math.sqrt(h) - spec.gamma2 * math.sqrt(h)) ** 2
    h_next = q_next + spec.beta_tilde * (h - q) - spec.alpha * spec.gamma1**2 * q
    assert out.q == pytest.approx(q_next, rel=1e-14)
    assert out.h == pytest.approx(h_next, rel=1e-12)


def test_risk_neutral_step_uses_shifted_gammas():
    spec = get_fixture("CPC-P1")
    st_ = VolState(1e-4, 8e-5)
    rn = step(spec, Measure.RISK_NEUTRAL, st_, 0.3)
    shift = 0.5 + spec.lam
    manual = spec.with_params(gamma1=spec.gamma1 + shift, gamma2=spec.gamma2 + shift)
    ph = step(manual, Measure.PHYSICAL, st_, 0.3)
    assert rn == ph


def test_cjow_path_goes_negative_within_15_steps():
    spec = get_fixture("CJOW08")
    rng = np.random.default_rng(11)
    h0 = 0.05**2 / 252
    found = None
    for _ in range(200):
        zs = rng.standard_normal(15)
        state = VolState(h0, h0)
        for k, z in enumerate(zs):
            state = step(spec, Measure.PHYSICAL, state, z)
            if state.h < 0:
                found = (zs[: k + 1], state.h)
                break
        if found:
            break
    assert found is not None and found[1] < 0
    with pytest.raises(NegativeVarianceForSqrt):
        step(spec, Measure.PHYSICAL, VolState(found[1], 1e-5), 0.0)


def test_degenerate_hn_is_zero():
    spec = ModelSpec("HN", 0.0, 0.0, 150.0, 0.0, 1.0)
    for z in (-3.0, 0.0, 2.5):
        assert step(spec, Measure.PHYSICAL, VolState(1e-4), z).h == 0.0


def test_step_rejects_non_finite_state():
    spec = get_fixture("CPC-P1")
    with pytest.raises(NonFiniteState):
        step(spec, Measure.PHYSICAL, VolState(float("nan"), 1e-4), 0.0)
    with pytest.raises(NonFiniteState):
        step(spec, Measure.PHYSICAL, VolState(1e-4, float("inf")), 0.0)


def test_return_step_physical():
    spec = get_fixture("CJOW08")
    assert spec.lam == pytest.approx(2.092)
    assert return_step(spec, Measure.PHYSICAL, 1e-4, 0.0, 1e-5) == pytest.approx(1e-5 + 2.092e-4, rel=1e-12)
    assert return_step(spec, Measure.PHYSICAL, 0.0, 1.7, 1e-5) == 1e-5
    with pytest.raises(NegativeVarianceForSqrt):
        return_step(spec, Measure.PHYSICAL, -1e-6, 0.0, 0.0)


def test_risk_neutral_return_is_a_martingale():
    spec = get_fixture("CPC-P1")
    r, h = 1e-5, 2e-4
    z = np.random.default_rng(5).standard_normal(100_000)
    rets = np.array([return_step(spec, Measure.RISK_NEUTRAL, h, zi, r) for zi in z[:2000]])
    assert rets.mean() == pytest.approx(r - h / 2 + math.sqrt(h) * z[:2000].mean(), rel=1e-9)
    g = np.exp(r - 0.5 * h + math.sqrt(h) * z)
    assert abs(g.mean() - math.exp(r)) <= 3 * g.std(ddof=1) / math.sqrt(g.size)


def test_cjow_stationary_mean():
    m = stationary_moments(get_fixture("CJOW08"))
    assert m.mean_h == pytest.approx(7.892e-5, rel=1e-3)
    assert m.mean_q == pytest.approx(m.mean_h)
    assert m.hbar == 0.0


@pytest.mark.parametrize("name", ["CPC-P1", "CPC-P2", "OP-P1", "OP-P2", "CJOW-P1", "CCLT23"])
def test_hbar_closed_form_matches_linear_solve(name):
    m = stationary_moments(get_fixture(name))
    assert m.mean_h - m.mean_q == pytest.approx(m.hbar, rel=1e-9, abs=1e-18)


def test_op_and_cpc_offsets_differ_by_leverage_term():
    cpc = get_fixture("CPC-P1").with_params(omega=0.0)
    op = ModelSpec("OP", **{k: getattr(cpc, k) for k in ("omega", "alpha", "gamma1", "beta_tilde", "lam", "varphi", "gamma2", "rho")})
    a, b, g = cpc.alpha, cpc.beta_tilde, cpc.gamma1
    assert hbar_closed_form(op) == pytest.approx(a / (1 - b))
    assert hbar_closed_form(cpc) == pytest.approx(a / (1 - b - a * g * g))
    assert 1 / hbar_closed_form(op) - 1 / hbar_closed_form(cpc) == pytest.approx(g * g, rel=1e-9)


def test_cpc_offset_without_long_run_news():
    spec = get_fixture("CPC-P2").with_params(varphi=0.0)
    m = stationary_moments(spec)
    a, b, g = spec.alpha, spec.beta_tilde, spec.gamma1
    assert m.hbar == pytest.approx(a / (1 - b - a * g * g))
    assert m.mean_h - m.mean_q == pytest.approx(m.hbar, rel=1e-9)


def test_nonstationary_raises():
    with pytest.raises(NonStationary):
        stationary_moments(get_fixture("HN-CJOW08"))
    with pytest.raises(NonStationary):
        stationary_moments(get_fixture("CPC-P1").with_params(rho=1.0))


def test_risk_neutralize_examples():
    rn = risk_neutralize(get_fixture("CPC-P1"))
    assert rn.gamma1 == pytest.approx(141.241, abs=1e-3)
    assert rn.drift == -0.5
    same = risk_neutralize(get_fixture("CPC-P1").with_params(lam=-0.5))
    assert same.gamma1 == get_fixture("CPC-P1").gamma1
    assert same.gamma2 == get_fixture("CPC-P1").gamma2


def test_risk_neutralize_is_not_idempotent():
    spec = get_fixture("CPC-P1").with_params(lam=0.0)
    once = risk_neutralize(spec)
    twice = risk_neutralize(once.with_params(measure=Measure.PHYSICAL))
    assert twice.gamma1 != once.gamma1
    with pytest.raises(ValueError):
        risk_neutralize(once)
    back = to_measure(once, Measure.PHYSICAL)
    assert back.gamma1 == pytest.approx(spec.gamma1) and back.measure is Measure.PHYSICAL


def test_cpc_positivity_random_specs():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        spec = random_cpc_spec(rng)
        h = np.full(256, 1e-4 * rng.uniform(0.01, 10))
        q = h * rng.uniform(0.0, 1.0, size=h.size)
        for z in rng.standard_normal((300, h.size)):
            h, q = advance(spec, h, q, z)
            assert np.all(h > 0)


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    h=st.floats(1e-8, 1e-2),
    frac=st.floats(0.0, 1.0),
    z=st.floats(-8, 8),
)
def test_cpc_update_decomposes_into_nonnegative_terms(seed, h, frac, z):
    spec = random_cpc_spec(np.random.default_rng(seed))
    q = frac * h
    h_next, q_next = advance(spec, h, q, z)
    a, b, g, rho = spec.alpha, spec.beta_tilde, spec.gamma1, spec.rho
    s = b + a * g * g
    terms = [
        spec.omega,
        spec.varphi * (z - spec.gamma2 * math.sqrt(h)) ** 2,
        b * h,
        (rho - s) * q,
        a * (z - g * math.sqrt(h)) ** 2,
    ]
    assert all(t >= 0 for t in terms)
    assert h_next == pytest.approx(sum(terms), rel=1e-9, abs=1e-30)


def test_cjow_reduces_to_hn_form():
    cj = get_fixture("CJOW08").with_params(varphi=0.0, gamma2=0.0, rho=0.0)
    w, a, b, g = cj.omega, cj.alpha, cj.beta_tilde, cj.gamma1
    hn = ModelSpec("HN", w * (1 - b) - a, a, g, b - a * g * g, cj.lam)
    rng = np.random.default_rng(3)
    h = rng.uniform(1e-5, 1e-3, 500)
    z = rng.standard_normal(500)
    h_cj, q_cj = advance(cj, h, np.full(500, w), z)
    h_hn, _ = advance(hn, h, None, z)
    assert np.allclose(q_cj, w)
    assert np.allclose(h_cj, h_hn, rtol=1e-10, atol=1e-18)


@pytest.mark.parametrize("name", ["CPC-P1", "CPC-P2", "OP-P1", "HN-CCLT23"])
def test_simulated_means_match_stationary_moments(name):
    spec = get_fixture(name)
    m = stationary_moments(spec)
    state = VolState(m.mean_h, m.mean_q)
    ps = simulate_paths(spec, Measure.PHYSICAL, SimConfig(20_000, 200, seed=4, initial_state=state))
    assert (ps.death_step > 0).sum() == 0
    # started at the mean, E[h_t] = mean_h for every t
    h = ps.h[:, -1]
    assert abs(h.mean() - m.mean_h) <= 3 * h.std(ddof=1) / math.sqrt(h.size)
    if m.hbar is not None:
        d = ps.h[:, -1] - ps.q[:, -1]
        assert abs(d.mean() - m.hbar) <= 3 * d.std(ddof=1) / math.sqrt(d.size)


def test_mean_system_shapes():
    P, R = mean_system(get_fixture("HN-CCLT23"))
    assert P.shape == (1, 1) and R.shape == (1,)
    P, R = mean_system(get_fixture("CPC-P1"))
    assert P.shape == (2, 2) and R.shape == (2,)
