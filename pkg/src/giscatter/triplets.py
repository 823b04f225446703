"""Matrix-triplet encoding of bound states.

Each bound state (lambda_j, m_j, c_j0..c_j(m_j-1)) contributes an m_j x m_j
Jordan block to A, a block (0, ..., 0, 1)^T to B and the row
[c_j(m_j-1), ..., c_j1, c_j0] to C.  The unbarred triplet describes the
poles of T in the upper half plane, the barred one the poles of Tbar in the
lower half plane.

The constant matrices M (N x Nbar) and Mbar (Nbar x N) solve

    A M - M Abar = i B Cbar,        Abar Mbar - Mbar A = -i Bbar C,

equivalently M = int_0^inf e^{iAz} B Cbar e^{-iAbar z} dz and the barred
analogue.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.linalg import schur, solve_triangular

__all__ = [
    "TripletError", "BoundState", "BoundStateSpec", "MatrixTriplet", "TripletPair",
    "build_triplet", "compute_M_pair", "matrix_exponential", "solve_sylvester",
    "sylvester_residual", "triplet_pair_from_json", "triplet_spec_from_json",
    "spec_to_json", "conjugate_spec",
]


class TripletError(ValueError):
    """Invalid bound-state data or a singular triplet computation."""


@dataclass(frozen=True)
class BoundState:
    lam: complex
    multiplicity: int
    norm_constants: Tuple[complex, ...]  # c_{j0}, ..., c_{j(m-1)}


@dataclass(frozen=True)
class BoundStateSpec:
    entries: Tuple[BoundState, ...]
    half_plane: str = "upper"
    require_leading_nonzero: bool = True

    def __post_init__(self):
        if self.half_plane not in ("upper", "lower"):
            raise TripletError("half_plane must be 'upper' or 'lower'")
        object.__setattr__(self, "entries", tuple(self.entries))
        sign = 1.0 if self.half_plane == "upper" else -1.0
        seen: List[complex] = []
        for e in self.entries:
            lam = complex(e.lam)
            if int(e.multiplicity) != e.multiplicity or e.multiplicity < 1:
                raise TripletError(f"multiplicity of {lam} must be a positive integer")
            if len(e.norm_constants) != e.multiplicity:
                raise TripletError(
                    f"bound state {lam} has multiplicity {e.multiplicity} but "
                    f"{len(e.norm_constants)} normalization constants")
            if sign * lam.imag <= 0:
                raise TripletError(f"bound state {lam} is not in the {self.half_plane} half plane")
            if any(abs(lam - s) <= 1e-14 * max(1.0, abs(s)) for s in seen):
                raise TripletError(f"repeated bound state {lam}")
            if self.require_leading_nonzero and complex(e.norm_constants[-1]) == 0:
                raise TripletError(f"leading normalization constant of {lam} is zero")
            seen.append(lam)

    @property
    def size(self) -> int:
        return sum(e.multiplicity for e in self.entries)


@dataclass(frozen=True, eq=False)
class MatrixTriplet:
    """(A, B, C) with A square N x N, B N x 1, C 1 x N."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    half_plane: str = "upper"
    canonical: bool = True

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        n = A.shape[0] if A.ndim == 2 else -1
        if A.ndim != 2 or A.shape != (n, n):
            raise TripletError("A must be square")
        B = np.asarray(self.B, dtype=complex).reshape(n, 1)
        C = np.asarray(self.C, dtype=complex).reshape(1, n)
        for name, arr in (("A", A), ("B", B), ("C", C)):
            if not np.all(np.isfinite(arr)):
                raise TripletError(f"{name} has non-finite entries")
        if n:
            ev = np.linalg.eigvals(A)
            sign = 1.0 if self.half_plane == "upper" else -1.0
            if np.any(sign * ev.imag <= 0):
                raise TripletError(f"spectrum of A is not confined to the {self.half_plane} half plane")
        for name, arr in (("A", A), ("B", B), ("C", C)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @classmethod
    def empty(cls, half_plane: str = "upper") -> "MatrixTriplet":
        return cls(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), half_plane)

    def with_C(self, C: np.ndarray) -> "MatrixTriplet":
        return MatrixTriplet(self.A, self.B, C, self.half_plane, self.canonical)


@dataclass(frozen=True, eq=False)
class TripletPair:
    unbarred: MatrixTriplet
    barred: MatrixTriplet

    def __post_init__(self):
        if self.unbarred.half_plane != "upper" or self.barred.half_plane != "lower":
            raise TripletError("unbarred triplet must be upper, barred triplet lower")

    @classmethod
    def empty(cls) -> "TripletPair":
        return cls(MatrixTriplet.empty("upper"), MatrixTriplet.empty("lower"))

    @property
    def is_empty(self) -> bool:
        return self.unbarred.size == 0 and self.barred.size == 0


def build_triplet(spec: BoundStateSpec) -> MatrixTriplet:
    """Assemble the block-Jordan triplet of a bound-state specification."""
    n = spec.size
    A = np.zeros((n, n), dtype=complex)
    B = np.zeros((n, 1), dtype=complex)
    C = np.zeros((1, n), dtype=complex)
    k = 0
    for e in spec.entries:
        m = e.multiplicity
        A[k:k + m, k:k + m] = complex(e.lam) * np.eye(m) + np.eye(m, k=1)
        B[k + m - 1, 0] = 1.0
        C[0, k:k + m] = np.asarray(e.norm_constants, dtype=complex)[::-1]
        k += m
    return MatrixTriplet(A, B, C, spec.half_plane)


def conjugate_spec(spec: BoundStateSpec) -> BoundStateSpec:
    """Mirror a specification into the other half plane by complex conjugation."""
    other = "lower" if spec.half_plane == "upper" else "upper"
    entries = tuple(BoundState(np.conj(e.lam), e.multiplicity, tuple(np.conj(e.norm_constants)))
                    for e in spec.entries)
    return BoundStateSpec(entries, other, spec.require_leading_nonzero)


# ---------------------------------------------------------------------------
# matrix exponential: scaling and squaring with Pade approximants

_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}
# largest 1-norm for which the degree-m approximant meets unit roundoff
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1, 7: 9.504178996162932e-1,
          9: 2.097847961257068e0, 13: 5.371920351148152e0}


def _pade_uv(A: np.ndarray, m: int):
    b = _PADE[m]
    n = A.shape[-1]
    eye = np.broadcast_to(np.eye(n, dtype=complex), A.shape)
    A2 = A @ A
    if m < 13:
        powers = [eye, A2]
        for _ in range(2, m // 2 + 1):
            powers.append(powers[-1] @ A2)
        U = sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
        V = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
        return A @ U, V
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye
    return U, V


def matrix_exponential(A: np.ndarray, t=1.0) -> np.ndarray:
    """exp(A t) by scaling and squaring with a norm-selected Pade degree.

    ``t`` may be an array; the result then has shape ``t.shape + A.shape``
    and all exponentials are computed in one batched pass.
    """
    A = np.asarray(A, dtype=complex)
    t = np.asarray(t, dtype=complex)
    n = A.shape[-1]
    X = t[..., None, None] * A
    if n == 0 or X.size == 0:
        return np.zeros(X.shape, dtype=complex)
    norm = float(np.max(np.sum(np.abs(X), axis=-2)))
    s = 0
    for m in (3, 5, 7, 9):
        if norm <= _THETA[m]:
            break
    else:
        m = 13
        if norm > _THETA[13]:
            s = int(np.ceil(np.log2(norm / _THETA[13])))
        X = X / 2.0**s
    U, V = _pade_uv(X, m)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


# ---------------------------------------------------------------------------
# Sylvester equations

def solve_sylvester(A: np.ndarray, B: np.ndarray, Q: np.ndarray, rtol: float = 1e-13) -> np.ndarray:
    """Solve A X + X B = Q by complex Schur reduction and back substitution.

    Raises ``TripletError`` if the spectra of A and -B (nearly) intersect.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    m, n = A.shape[0], B.shape[0]
    if Q.shape != (m, n):
        raise TripletError("right-hand side has the wrong shape")
    if m == 0 or n == 0:
        return np.zeros((m, n), dtype=complex)
    TA, ZA = schur(A, output="complex")
    TB, ZB = schur(B, output="complex")
    F = ZA.conj().T @ Q @ ZB
    scale = max(np.max(np.abs(TA)), np.max(np.abs(TB)), 1e-300)
    gaps = np.abs(np.diag(TA)[:, None] + np.diag(TB)[None, :])
    if np.min(gaps) <= rtol * scale:
        raise TripletError("Sylvester operator is singular: spectra of A and -B overlap")
    Y = np.zeros((m, n), dtype=complex)
    eye = np.eye(m)
    for k in range(n):
        rhs = F[:, k] - Y[:, :k] @ TB[:k, k]
        Y[:, k] = solve_triangular(TA + TB[k, k] * eye, rhs)
    return ZA @ Y @ ZB.conj().T


def sylvester_residual(A, X, B, Q) -> float:
    """Relative residual of A X + X B = Q."""
    res = np.linalg.norm(A @ X + X @ B - Q) if X.size else 0.0
    scale = (np.linalg.norm(A) + np.linalg.norm(B)) * np.linalg.norm(X) + np.linalg.norm(Q)
    return float(res / scale) if scale else float(res)


def compute_M_pair(tp: TripletPair, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """M and Mbar from the two Sylvester equations; residuals checked against ``tol``."""
    A, B, C = tp.unbarred.A, tp.unbarred.B, tp.unbarred.C
    Ab, Bb, Cb = tp.barred.A, tp.barred.B, tp.barred.C
    M = solve_sylvester(A, -Ab, 1j * B @ Cb)
    Mb = solve_sylvester(Ab, -A, -1j * Bb @ C)
    for name, (X, lhs, rhs, q) in {
        "M": (M, A, -Ab, 1j * B @ Cb),
        "Mbar": (Mb, Ab, -A, -1j * Bb @ C),
    }.items():
        res = sylvester_residual(lhs, X, rhs, q)
        if res > tol:
            raise TripletError(f"Sylvester residual for {name} is {res:.3g}")
    return M, Mb


# ---------------------------------------------------------------------------
# JSON

def _cplx(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise TripletError(f"cannot read complex number from {v!r}")


def triplet_spec_from_json(obj, require_leading_nonzero: bool = True) -> BoundStateSpec:
    """Parse ``{"half_plane": ..., "bound_states": [...]}`` into a specification."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        half = obj.get("half_plane", "upper")
        entries = tuple(
            BoundState(_cplx(b["lambda"]), int(b["multiplicity"]),
                       tuple(_cplx(c) for c in b["norm_constants"]))
            for b in obj.get("bound_states", []))
    except (KeyError, TypeError, AttributeError) as exc:
        raise TripletError(f"malformed triplet JSON: {exc}") from None
    return BoundStateSpec(entries, half, require_leading_nonzero)


def triplet_pair_from_json(obj, require_leading_nonzero: bool = True) -> TripletPair:
    """Build a pair from JSON.

    Accepts either ``{"upper": spec, "lower": spec}`` or a single upper-plane
    spec, in which case the lower triplet is its complex conjugate (the
    r = conj(q) reduction).
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise TripletError("triplet JSON must be an object")
    if "upper" in obj or "lower" in obj:
        up = triplet_spec_from_json(obj.get("upper", {"half_plane": "upper"}), require_leading_nonzero)
        lo = triplet_spec_from_json(obj.get("lower", {"half_plane": "lower"}), require_leading_nonzero)
    else:
        up = triplet_spec_from_json(obj, require_leading_nonzero)
        if up.half_plane != "upper":
            raise TripletError("a single triplet spec must describe the upper half plane")
        lo = conjugate_spec(up)
    if up.half_plane != "upper" or lo.half_plane != "lower":
        raise TripletError("half_plane fields do not match the upper/lower slots")
    return TripletPair(build_triplet(up), build_triplet(lo))


def spec_to_json(spec: BoundStateSpec) -> dict:
    enc = lambda z: [float(np.real(z)), float(np.imag(z))]
    return {
        "half_plane": spec.half_plane,
        "bound_states": [
            {"lambda": enc(e.lam), "multiplicity": e.multiplicity,
             "norm_constants": [enc(c) for c in e.norm_constants]}
            for e in spec.entries
        ],
    }
