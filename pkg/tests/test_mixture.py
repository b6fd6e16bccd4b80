import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kaclab.mixture import (InvalidProfileError, build_mixture, check_cond2, g1m_hat,
                            lemma_residual, mixture_identity_residual, sample_component,
                            v_m_bound, v_m_eval, v_m_sup)
from kaclab.model import (Cauchy, DomainError, ExpPowerTail, LogPowerTail, ModelParams,
                          ParetoSymmetric, SlowLogTail, TailProfile)
from kaclab.stable import kolmogorov_distance

P1 = ModelParams(1.0)
PARETO = ParetoSymmetric(0.5)
PROFILE = TailProfile(1.0, 2.0, 0.5)

# 2 int_1^4 cos(xi x) x^(-3/2)/3 dx + 2 int_4^inf cos(xi x) (2/3) x^(-2) dx, mpmath 30 digits
G1_HAT = {0.1: 0.80165391059896567, 0.5: 0.22002390944178229, 1.0: -0.13052846933673451}
SI_PI = 1.8519370519824662


def _fixtures():
    return [
        (PARETO, PROFILE, 3), (PARETO, PROFILE, 5), (PARETO, PROFILE, 7),
        (ExpPowerTail(0.5), TailProfile(4.0, 2.0, 0.25), 2),
        (LogPowerTail(0.5), TailProfile(16.0, 4.0, lambda x: 0.25 / math.log(x)), 2),
        (SlowLogTail(1.0), TailProfile(math.e ** 2, 2.0, 0.5), 2),
    ]


@pytest.fixture(scope="module")
def mix4():
    return build_mixture(PARETO, PROFILE, 3, P1)


def test_pareto_constants(mix4):
    assert mix4.x_m == 4.0 and mix4.theta_m == 0.5
    assert mix4.K1 == pytest.approx(4 / 3, abs=1e-12)
    assert mix4.K2 == pytest.approx(4.0, abs=1e-12)
    assert mix4.a_m == pytest.approx(2 * math.pi / 3, abs=1e-12)
    assert mix4.a_m_quadrature() == pytest.approx(mix4.a_m, rel=1e-10)


def test_edge_values(mix4):
    # G1 puts K1 theta / (alpha x_m^alpha) = 1/6 beyond each edge
    assert mix4.G1(4.0) == pytest.approx(5 / 6, abs=1e-15)
    assert mix4.G1(np.nextafter(4.0, 0)) == pytest.approx(5 / 6, abs=1e-12)
    assert mix4.G1(-4.0 - 1e-12) == pytest.approx(1 / 6, abs=1e-12)


@pytest.mark.parametrize("case", range(6))
def test_identity_and_lemma_across_families(case):
    law, prof, m = _fixtures()[case]
    mix = build_mixture(law, prof, m, P1)
    x = np.concatenate([np.linspace(-5 * mix.x_m, 5 * mix.x_m, 2001), [mix.x_m, -mix.x_m]])
    assert mixture_identity_residual(mix, x) < 1e-12
    for xi in (0.1, 0.5, 1.0):
        assert lemma_residual(mix, xi) < 1e-6
    assert v_m_sup(mix) <= v_m_bound(mix)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-1e4, 1e4), dx=st.floats(0.0, 100.0))
def test_components_are_cdfs(mix4, x, dx):
    for G in (mix4.G1, mix4.G2):
        a, b = G(x), G(x + dx)
        assert -1e-15 <= a <= b + 1e-15 <= 1 + 2e-15
    F = float(PARETO.cdf(x))
    assert F == pytest.approx(mix4.G1(x) / mix4.K1 + mix4.G2(x) / mix4.K2, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(u=st.floats(1e-6, 1 - 1e-6))
def test_quantiles_invert(mix4, u):
    for G, Q in ((mix4.G1, mix4.G1_quantile), (mix4.G2, mix4.G2_quantile)):
        x = float(Q(np.array([u]))[0])
        assert G(x) >= u - 1e-9
        assert G(x - 1e-9 * max(1.0, abs(x))) <= u + 1e-9


@pytest.mark.parametrize("xi,v", sorted(G1_HAT.items()))
def test_g1m_hat_oracle(mix4, xi, v):
    assert g1m_hat(mix4, xi) == pytest.approx(v, abs=1e-13)
    assert v_m_eval(mix4, xi) == pytest.approx((1 - v) / xi - mix4.a_m, abs=1e-12)


def test_v_m_decreases_and_bound(mix4):
    vals = [abs(v_m_eval(mix4, 10.0 ** -k)) for k in range(1, 5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert v_m_bound(mix4) == pytest.approx(4.0 + (4 / 3) * SI_PI, abs=1e-12)


def test_mixed_sample_reproduces_law(mix4):
    em = sample_component(mix4, "mixed", 50_000, seed=2)
    assert kolmogorov_distance(em, PARETO.cdf) < 1.95 / math.sqrt(50_000)
    z = sample_component(mix4, "Z", 20_000, seed=3)
    assert z.count(np.nextafter(-4.0, 0), np.nextafter(4.0, 0)) == 0
    u = sample_component(mix4, "U", 20_000, seed=4)
    assert kolmogorov_distance(u, mix4.G1) < 1.95 / math.sqrt(20_000)
    with pytest.raises(ValueError):
        sample_component(mix4, "W", 10)


def test_degenerate_weight_one():
    # a pure x^-alpha tail with c = alpha puts all mass in G1
    mix = build_mixture(ParetoSymmetric(1.0), TailProfile(1.0, 2.0, 1.0), 3, P1)
    assert mix.inv_K1 == 1.0 and mix.K2 == math.inf
    with pytest.raises(DomainError):
        mix.G2(0.0)
    x = np.linspace(-50, 50, 1001)
    assert np.max(np.abs(mix.G1(x) - ParetoSymmetric(1.0).cdf(x))) < 1e-12
    # the same c on Cauchy breaks the monotonicity condition
    with pytest.raises(InvalidProfileError):
        build_mixture(Cauchy(), TailProfile(2.0, 2.0, 1.0), 1, P1)


def test_invalid_profiles():
    with pytest.raises(InvalidProfileError):
        build_mixture(PARETO, TailProfile(1.0, 2.0, 5.0), 3, P1)
    with pytest.raises(InvalidProfileError):
        build_mixture(PARETO, TailProfile(1.0, 2.0, 0.0), 3, P1)


def test_cond2_scan():
    assert check_cond2(PARETO, 0.5, 4.0, P1) is None
