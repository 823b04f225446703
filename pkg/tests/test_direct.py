import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from giscatter.direct import (SpectralPoint, SystemKind, asymptotics_check, cross_system_check,
                              evaluation_point_spread, integrate_jost, jost_relation_check, jost_table,
                              locate_bound_states, parity_check, scattering_coefficients,
                              transmission_denominator, wronskian_constancy)
from giscatter.potentials import Grid1D, gaussian_pair, single_soliton_pair, zero_pair
from giscatter.reflectionless import reflectionless_jost


@pytest.fixture(scope="module")
def gaussian():
    return gaussian_pair(Grid1D(-6, 6, 1201), amplitude=0.3)


@pytest.fixture(scope="module")
def soliton():
    return single_soliton_pair(Grid1D(-12, 12, 2401))


def scipy_scattering(amplitude, lam, xl=-8.0, xr=8.0):
    """T and R/zeta from phi integrated across the line with scipy's DOP853."""
    zeta = np.sqrt(complex(lam))

    def rhs(x, w):
        qr = (amplitude * np.exp(-x * x)) ** 2
        a, b = w
        q = r = amplitude * np.exp(-x * x)
        return [(-1j * lam - 0.5j * qr) * a + zeta * q * b, zeta * r * a + (1j * lam + 0.5j * qr) * b]

    sol = solve_ivp(rhs, (xl, xr), [np.exp(-1j * lam * xl), 0j], method="DOP853", rtol=1e-12, atol=1e-14)
    f1, f2 = sol.y[:, -1]
    T = 1 / (f1 * np.exp(1j * lam * xr))
    return T, T * f2 / zeta * np.exp(-1j * lam * xr)


def test_spectral_point_validation():
    sp = SpectralPoint.from_lambda(-4.0)
    assert sp.zeta == pytest.approx(2j)
    with pytest.raises(ValueError):
        SpectralPoint(4.0, -2.0)
    with pytest.raises(ValueError):
        SpectralPoint(4.0, 2.1)


def test_zero_potential_is_transparent():
    p = zero_pair(Grid1D(-4, 4, 81))
    lam = np.linspace(-3, 3, 13)
    sd = scattering_coefficients(SystemKind.GI, p, lam)
    assert np.allclose(sd.T, 1, atol=1e-14) and np.allclose(sd.Tbar, 1, atol=1e-14)
    for name in ("R", "Rbar", "L", "Lbar"):
        assert np.max(np.abs(getattr(sd, name))) < 1e-14
    tab = jost_table(SystemKind.GI, p, 1.3)
    x, lam0 = p.grid.x, 1.3**2
    assert np.allclose(tab.psi[1], np.exp(1j * lam0 * x)) and np.allclose(tab.psi[0], 0)
    assert np.allclose(tab.phi[0], np.exp(-1j * lam0 * x)) and np.allclose(tab.phi[1], 0)


def test_scattering_matches_scipy_oracle():
    p = gaussian_pair(Grid1D(-8, 8, 1601), amplitude=0.7)
    lam = np.array([-2.0, -0.5, 0.3, 1.0, 2.5])
    sd = scattering_coefficients(SystemKind.GI, p, lam)
    ref = np.array([scipy_scattering(0.7, l) for l in lam]).T
    assert np.max(np.abs(sd.T - ref[0])) < 1e-9
    assert np.max(np.abs(sd.R_over_zeta - ref[1])) < 1e-9
    assert np.max(np.abs(sd.L_over_zeta + sd.Rbar_over_zeta * sd.T / sd.Tbar)) < 1e-10


# scipy_scattering(0.3, lam, -6, 6) at rtol 1e-12, frozen
FROZEN_GAUSSIAN = {
    1.0: (0.9815910134182365 - 0.014239941619200282j, 0.19044336057086275 - 0.002762761984593312j),
    2.25: (0.9999857416509523 - 0.00292005277399265j, 0.0029806499170133747 - 8.703779159685652e-06j),
}


def test_frozen_gaussian_values(gaussian):
    lam = np.array(sorted(FROZEN_GAUSSIAN))
    sd = scattering_coefficients(SystemKind.GI, gaussian, lam)
    for k, l in enumerate(lam):
        T_ref, R_ref = FROZEN_GAUSSIAN[l]
        assert abs(sd.T[k] - T_ref) < 1e-10
        assert abs(sd.R_over_zeta[k] - R_ref) < 1e-10


def test_soliton_jost_matches_closed_form(soliton, single_pole):
    tab = jost_table(SystemKind.GI, soliton, 1.0)
    psi, psib = reflectionless_jost(single_pole, 1.0, soliton.grid.x)
    assert np.max(np.abs(tab.psi - psi)) < 1e-9
    assert np.max(np.abs(tab.psibar - psib)) < 1e-9
    one = integrate_jost(SystemKind.GI, soliton, 1.0, "psi")
    assert np.allclose(one, tab.psi, rtol=0, atol=1e-12)


def test_soliton_is_reflectionless(soliton):
    lam = np.linspace(-4, 4, 41)
    sd = scattering_coefficients(SystemKind.GI, soliton, lam)
    assert np.max(np.abs(sd.R)) < 1e-8
    assert np.max(np.abs(sd.T - (lam + 1j) / (lam - 1j))) < 1e-8


def test_transmission_denominator_vanishes_at_bound_state(soliton):
    a = transmission_denominator(soliton, np.array([1j, 0.5 + 1j]))
    assert abs(a[0]) < 1e-8
    # 1/T = (lam - i)/(lam + i) off the real axis as well
    assert abs(a[1] - 0.5 / (0.5 + 2j)) < 1e-8


def test_bound_state_search(soliton, gaussian):
    found = locate_bound_states(soliton)
    assert len(found) == 1 and abs(found[0][0] - 1j) < 1e-8 and found[0][1] == 1
    assert locate_bound_states(gaussian) == []


def test_identity_suite(gaussian):
    lam = np.linspace(-4, 4, 41)
    sd = scattering_coefficients(SystemKind.GI, gaussian, lam)
    assert sd.unitarity_residual() < 1e-10 and sd.left_right_residual() < 1e-10
    assert max(cross_system_check(gaussian, lam).values()) < 1e-9
    assert max(jost_relation_check(gaussian, 1.3).values()) < 1e-9
    assert max(wronskian_constancy(jost_table(SystemKind.GI, gaussian, 1.3)).values()) < 1e-9
    assert max(parity_check(SystemKind.GI, gaussian, 1.3).values()) < 1e-12
    assert evaluation_point_spread(SystemKind.GI, gaussian, lam, [-3.0, 0.0, 2.5]) < 1e-9


@pytest.mark.parametrize("kind", list(SystemKind))
def test_every_system_has_constant_wronskians(gaussian, kind):
    tab = jost_table(kind, gaussian, 1.7)
    assert max(wronskian_constancy(tab).values()) < 1e-9


@settings(max_examples=6, deadline=None)
@given(amp=st.floats(0.05, 0.8), width=st.floats(0.6, 1.4), lam=st.floats(-3, 3))
def test_unitarity_holds_for_gaussians(amp, width, lam):
    p = gaussian_pair(Grid1D(-9, 9, 1801), amplitude=amp, width=width)
    sd = scattering_coefficients(SystemKind.GI, p, np.array([lam, lam + 0.37]))
    assert sd.unitarity_residual() < 1e-8
    assert sd.left_right_residual() < 1e-8


@settings(max_examples=6, deadline=None)
@given(amp=st.floats(0.05, 0.6), zeta=st.floats(0.3, 2.0))
def test_parity_in_zeta(amp, zeta):
    p = gaussian_pair(Grid1D(-7, 7, 701), amplitude=amp)
    assert max(parity_check(SystemKind.GI, p, zeta).values()) < 1e-12


def test_asymptotic_report(gaussian):
    big = gaussian_pair(Grid1D(-6, 6, 1201), amplitude=1.0)
    rep = asymptotics_check(big)
    assert all(0.8 < d["order"] < 1.2 for d in rep["small"].values())
    assert all(abs(rep["large"][k]["slope"] + 1) < 0.1 for k in ("T", "Tbar"))
    assert all(rep["large"][k]["slope"] < -2.8 for k in ("R", "Rbar", "L", "Lbar"))
    # every Jost component follows its 1/lam expansion with an O(1/lam^2) remainder
    assert all(d["order"] > 1.8 for d in rep["jost"].values())
