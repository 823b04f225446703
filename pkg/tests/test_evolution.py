import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import scipy_potentials
from giscatter.direct import SystemKind, scattering_coefficients
from giscatter.evolution import evolve_data, evolve_triplets, gi_residual, gi_residual_at, soliton_snapshot
from giscatter.marchenko import recover_potentials, solve_marchenko_grid
from giscatter.potentials import Grid1D, gaussian_pair
from giscatter.reflectionless import SingularGammaError
from giscatter.triplets import TripletPair


@pytest.fixture(scope="module")
def gaussian_data():
    p = gaussian_pair(Grid1D(-8, 8, 1601), amplitude=0.3)
    return scattering_coefficients(SystemKind.GI, p, np.linspace(-12, 12, 481))


def test_single_pole_norming_constant_evolution(single_pole):
    tp = evolve_triplets(single_pole, 0.3)
    # C e^{4 i A^2 t} with A = i, C = 2
    assert tp.unbarred.C[0, 0] == pytest.approx(2 * np.exp(-1.2j), abs=1e-15)
    assert tp.barred.C[0, 0] == pytest.approx(2 * np.exp(1.2j), abs=1e-15)
    assert evolve_triplets(single_pole, 0.0) is single_pole


@settings(max_examples=20, deadline=None)
@given(t=st.floats(-1, 1), s=st.floats(-1, 1))
def test_triplet_evolution_is_a_flow(double_pole, t, s):
    a = evolve_triplets(evolve_triplets(double_pole, t), s)
    b = evolve_triplets(double_pole, t + s)
    assert np.allclose(a.unbarred.C, b.unbarred.C, rtol=1e-11, atol=1e-12)
    assert np.allclose(a.barred.C, b.barred.C, rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("t", [0.0, 0.2, 0.45])
def test_snapshots_match_scipy_route(double_pole, t):
    g = Grid1D(-2, 3, 11)
    p = soliton_snapshot(double_pole, t, g)
    q, r = scipy_potentials(double_pole, g.x, t)
    assert np.max(np.abs(p.q.values - q)) < 1e-9
    assert np.max(np.abs(p.r.values - r)) < 1e-9


def test_one_soliton_moves_without_changing_shape(single_pole):
    g = Grid1D(-6, 6, 1201)
    a = soliton_snapshot(single_pole, 0.0, g)
    b = soliton_snapshot(single_pole, 0.5, g)
    assert a.q.max_abs() == pytest.approx(b.q.max_abs(), rel=1e-3)
    # a bound state on the imaginary axis has zero velocity; only the phase rotates
    assert np.allclose(np.abs(a.q.values), np.abs(b.q.values), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(t=st.floats(-2, 2))
def test_reflection_phases_preserve_moduli(gaussian_data, t):
    ev = evolve_data(gaussian_data, t)
    assert np.allclose(np.abs(ev.R), np.abs(gaussian_data.R))
    assert np.allclose(ev.R * ev.Rbar, gaussian_data.R * gaussian_data.Rbar)
    assert np.allclose(ev.L * ev.Lbar, gaussian_data.L * gaussian_data.Lbar)
    assert ev.T is gaussian_data.T
    lam = gaussian_data.lambda_grid
    assert np.allclose(ev.R_over_zeta, gaussian_data.R_over_zeta * np.exp(4j * lam**2 * t))
    back = evolve_data(gaussian_data.__class__(**{**gaussian_data.__dict__, "R": ev.R, "Rbar": ev.Rbar,
                                                  "L": ev.L, "Lbar": ev.Lbar}), -t)
    assert np.allclose(back.R, gaussian_data.R)


def test_evolution_rejects_non_finite_time(gaussian_data):
    with pytest.raises(ValueError):
        evolve_data(gaussian_data, float("nan"))


def test_single_pole_residual_is_second_order(single_pole):
    g = Grid1D(-5, 5, 1001)
    full = gi_residual_at(single_pole, 0.25, g, delta=1e-3)["max"]
    half = gi_residual_at(single_pole, 0.25, g, delta=5e-4)["max"]
    assert full < 1e-4
    assert np.log2(full / half) == pytest.approx(2, abs=0.1)


@pytest.mark.parametrize("t", [0.0, 0.25])
def test_double_pole_residual_is_second_order(double_pole, t):
    g = Grid1D(-5, 5, 1001)
    full = gi_residual_at(double_pole, t, g, delta=1e-3)["max"]
    half = gi_residual_at(double_pole, t, g, delta=5e-4)["max"]
    assert np.log2(full / half) == pytest.approx(2, abs=0.2)


def test_fourth_order_space_stencils_are_not_enough(single_pole):
    g = Grid1D(-5, 5, 1001)
    assert gi_residual_at(single_pole, 0.0, g, x_accuracy=4)["max"] > 1e-4
    assert gi_residual_at(single_pole, 0.0, g, x_accuracy=8)["max"] < 1e-4


def test_evolved_marchenko_potential_solves_the_equation(gaussian_data):
    anchors = Grid1D(-2, 2, 81)
    delta = 1e-3
    snaps = []
    for t in (0.1 - delta, 0.1, 0.1 + delta):
        sols = solve_marchenko_grid(evolve_data(gaussian_data, t).kernel(1e-8), anchors, h=0.1,
                                    rule="gregory", tail_tol=1e-9)
        snaps.append(recover_potentials(sols, anchors).pair)
    assert gi_residual(snaps, delta)["max"] < 2e-5
    # running time backwards breaks the equation
    assert gi_residual(snaps[::-1], delta)["max"] > 1e-2


def test_snapshot_edge_cases(single_pole):
    g = Grid1D(-2, 2, 21)
    assert soliton_snapshot(TripletPair.empty(), 1.0, g).is_zero()
    with pytest.raises(ValueError):
        gi_residual([soliton_snapshot(single_pole, 0.0, g)] * 2, 1e-3)


def test_singular_gamma_carries_time(single_pole, monkeypatch):
    from giscatter import evolution

    def singular(tp, grid):
        raise SingularGammaError(-1.5, 1e13)

    monkeypatch.setattr(evolution, "reflectionless_potentials", singular)
    with pytest.raises(SingularGammaError) as info:
        soliton_snapshot(single_pole, 0.3, Grid1D(-3, 3, 7))
    assert info.value.t == 0.3 and info.value.x == -1.5 and "0.3" in str(info.value)


@pytest.mark.parametrize("t", [0.1, 0.3])
def test_transmission_is_time_invariant(single_pole, double_pole, t):
    lam = np.linspace(-4, 4, 41)
    g = Grid1D(-12, 12, 2401)
    for tp in (single_pole, double_pole):
        T0 = scattering_coefficients(SystemKind.GI, soliton_snapshot(tp, 0.0, g), lam).T
        Tt = scattering_coefficients(SystemKind.GI, soliton_snapshot(tp, t, g), lam).T
        assert np.max(np.abs(Tt - T0)) < 1e-5
        assert np.array_equal(np.linalg.eigvals(evolve_triplets(tp, t).unbarred.A),
                              np.linalg.eigvals(tp.unbarred.A))
