import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.linalg import solve_sylvester as scipy_sylvester

from giscatter.triplets import (BoundState, BoundStateSpec, MatrixTriplet, TripletError, TripletPair,
                                build_triplet, compute_M_pair, conjugate_spec, matrix_exponential,
                                solve_sylvester, spec_to_json, sylvester_residual, triplet_pair_from_json,
                                triplet_spec_from_json)

finite = st.floats(-1, 1, allow_nan=False)


def random_matrix(seed, n, scale):
    rng = np.random.default_rng(seed)
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), scale=st.sampled_from([1e-3, 0.1, 1.0, 4.0, 12.0]))
def test_matrix_exponential_matches_scipy(seed, n, scale):
    A = random_matrix(seed, n, scale)
    E = matrix_exponential(A)
    ref = expm(A)
    assert np.max(np.abs(E - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=finite, t=finite)
def test_matrix_exponential_group_law(seed, s, t):
    A = random_matrix(seed, 3, 1.0)
    lhs = matrix_exponential(A, s) @ matrix_exponential(A, t)
    assert np.allclose(lhs, matrix_exponential(A, s + t), rtol=1e-11, atol=1e-12)


def test_matrix_exponential_jordan_block():
    A = np.array([[1j, 1.0], [0, 1j]])
    t = 0.7
    exact = np.exp(1j * t) * np.array([[1, t], [0, 1]])
    assert np.allclose(matrix_exponential(A, t), exact, atol=1e-15)
    assert matrix_exponential(np.zeros((0, 0))).shape == (0, 0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 5), n=st.integers(1, 5))
def test_sylvester_matches_scipy(seed, m, n):
    rng = np.random.default_rng(seed)
    A = np.triu(random_matrix(seed, m, 1.0)) + 3j * np.eye(m)
    B = np.triu(random_matrix(seed + 1, n, 1.0)) + 3j * np.eye(n)
    Q = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    X = solve_sylvester(A, B, Q)
    assert np.allclose(X, scipy_sylvester(A, B, Q), rtol=1e-10, atol=1e-12)
    assert sylvester_residual(A, X, B, Q) < 1e-12


def test_sylvester_rejects_shared_spectrum():
    A = np.array([[1j]])
    with pytest.raises(TripletError):
        solve_sylvester(A, -A, np.ones((1, 1)))


def test_build_triplet_jordan_structure():
    spec = BoundStateSpec((BoundState(1j, 2, (3, 5)), BoundState(2j, 1, (7,))))
    tri = build_triplet(spec)
    assert np.array_equal(tri.A, np.array([[1j, 1, 0], [0, 1j, 0], [0, 0, 2j]]))
    assert np.array_equal(tri.B.ravel(), [0, 1, 1])
    assert np.array_equal(tri.C.ravel(), [5, 3, 7])
    conj = build_triplet(conjugate_spec(spec))
    assert conj.half_plane == "lower" and np.array_equal(conj.A, np.conj(tri.A))


@pytest.mark.parametrize("entries, half", [
    ((BoundState(-1j, 1, (1,)),), "upper"),
    ((BoundState(1j, 2, (1,)),), "upper"),
    ((BoundState(1j, 1, (0,)),), "upper"),
    ((BoundState(1j, 1, (1,)), BoundState(1j, 1, (2,))), "upper"),
    ((BoundState(1j, 1, (1,)),), "left"),
])
def test_bound_state_spec_validation(entries, half):
    with pytest.raises(TripletError):
        BoundStateSpec(entries, half)


def test_triplet_pair_requires_half_planes():
    up = build_triplet(BoundStateSpec((BoundState(1j, 1, (1,)),)))
    with pytest.raises(TripletError):
        TripletPair(up, up)
    with pytest.raises(TripletError):
        MatrixTriplet(np.array([[-1j]]), np.ones((1, 1)), np.ones((1, 1)), "upper")
    assert TripletPair.empty().is_empty


def test_M_pair_single_pole(single_pole):
    M, Mb = compute_M_pair(single_pole)
    # A M - M Abar = i B Cbar with A = i, Abar = -i, B = 1, Cbar = 2 gives 2i M = 2i
    assert M[0, 0] == pytest.approx(1.0)
    assert Mb[0, 0] == pytest.approx(1.0)


def test_json_round_trip_and_conjugate_default():
    spec = BoundStateSpec((BoundState(0.5 + 1j, 2, (1 - 1j, 2)), BoundState(-1 + 2j, 1, (3j,))))
    text = json.dumps(spec_to_json(spec))
    back = triplet_spec_from_json(text)
    assert back == spec
    tp = triplet_pair_from_json(text)
    assert np.array_equal(tp.barred.A, np.conj(tp.unbarred.A))
    assert np.array_equal(tp.barred.C, np.conj(tp.unbarred.C))
    lower = spec_to_json(conjugate_spec(spec))
    explicit = triplet_pair_from_json({"upper": spec_to_json(spec), "lower": lower})
    assert np.array_equal(explicit.barred.A, tp.barred.A)


@pytest.mark.parametrize("bad", [
    '[1, 2]',
    '{"bound_states": [{"lambda": [0, 1]}]}',
    '{"bound_states": [{"lambda": "i", "multiplicity": 1, "norm_constants": [1]}]}',
    '{"half_plane": "lower", "bound_states": []}',
])
def test_malformed_triplet_json(bad):
    with pytest.raises(TripletError):
        triplet_pair_from_json(bad)
