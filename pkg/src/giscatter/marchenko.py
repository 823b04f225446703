"""Marchenko inversion: kernels from scattering data, Nystrom solution, recovery.

The kernel functions are

    Omega(y)    = Rhat(y)    + C e^{iAy} B,
    Omegabar(y) = Rbarhat(y) + Cbar e^{-i Abar y} Bbar,

with Rhat, Rbarhat the Fourier transforms of R/zeta and Rbar/zeta.  For an
anchor x the uncoupled equations

    K1(y)    + Omegabar(x+y) + i int dz K1(z)    int ds Omega'(z+s)    Omegabar(s+y) = 0,
    Kbar2(y) + Omega(x+y)    - i int dz Kbar2(z) int ds Omegabar'(z+s) Omega(s+y)    = 0,

(all integrals over [x, inf)) are discretized on y = x + j h with composite
Simpson weights, or Gregory end-corrected trapezoidal weights for higher
accuracy at the same spacing.  Kbar1 and K2 then follow by quadrature:

    Kbar1(y) = i int dz K1(z) Omega'(z+y),   K2(y) = -i int dz Kbar2(z) Omegabar'(z+y).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import zgecon

from .numerics import cumulative, derivative, gregory_weights, integrate, simpson_weights
from .potentials import GaugeData, Grid1D, PotentialPair, SampledField
from .triplets import MatrixTriplet, TripletPair, matrix_exponential

__all__ = [
    "FourierTailError", "NystromError", "FourierReflection", "fourier_reflection",
    "MarchenkoKernel", "assemble_kernels", "MarchenkoSolution", "solve_marchenko",
    "solve_marchenko_grid", "RecoveredData", "recover_potentials", "reconstruct_jost",
]


class FourierTailError(ValueError):
    """The reflection samples have not decayed at the ends of the lambda grid."""


class NystromError(ArithmeticError):
    """The discretized Marchenko system is singular or badly conditioned."""

    def __init__(self, x: float, cond: float):
        super().__init__(f"Marchenko system singular at x = {x:.6g} (condition {cond:.3g})")
        self.x = x
        self.cond = cond


# ---------------------------------------------------------------------------
# Fourier part

_CHUNK = 1 << 20


class FourierReflection:
    """(1/2pi) int dlam f(lam) e^{s i lam y} by the trapezoidal rule on a uniform lam grid.

    For smooth, rapidly decaying f the trapezoidal rule is spectrally
    accurate; the result is periodic in y with period 2pi/dlam, so only
    |y| well below half that period is meaningful.
    """

    def __init__(self, lam: np.ndarray, values: np.ndarray, sign: int):
        lam = np.asarray(lam, dtype=float)
        values = np.asarray(values, dtype=complex)
        if lam.ndim != 1 or lam.shape != values.shape or lam.size < 2:
            raise ValueError("lambda grid and samples must be matching 1-D arrays")
        d = np.diff(lam)
        if np.any(d <= 0) or np.max(np.abs(d - d[0])) > 1e-9 * abs(d[0]):
            raise ValueError("lambda grid must be uniform and increasing")
        self.lam = lam
        self.values = values
        self.sign = sign
        w = np.full(lam.size, d[0])
        w[0] = w[-1] = 0.5 * d[0]
        self._wv = w * values / (2 * np.pi)

    @property
    def period(self) -> float:
        return 2 * np.pi / (self.lam[1] - self.lam[0])

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def _transform(self, y, weights) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.empty(flat.size, dtype=complex)
        step = max(1, _CHUNK // self.lam.size)
        for i in range(0, flat.size, step):
            ph = np.exp(self.sign * 1j * np.outer(flat[i:i + step], self.lam))
            out[i:i + step] = ph @ weights
        return out.reshape(y.shape)

    def __call__(self, y) -> np.ndarray:
        if self.is_zero:
            return np.zeros(np.shape(y), dtype=complex)
        return self._transform(y, self._wv)

    def derivative(self, y) -> np.ndarray:
        """d/dy through the lam-weighted transform (no numerical differentiation)."""
        if self.is_zero:
            return np.zeros(np.shape(y), dtype=complex)
        return self._transform(y, self.sign * 1j * self.lam * self._wv)

    def inverse(self, lam) -> np.ndarray:
        """Recover f at ``lam`` from samples of the transform on a y window (diagnostic)."""
        lam = np.asarray(lam, dtype=float)
        half = 0.5 * self.period
        n = 4 * self.lam.size + 1
        y = np.linspace(-half, half, n)
        hy = y[1] - y[0]
        vals = self(y)
        w = np.full(n, hy)
        w[0] = w[-1] = 0.5 * hy
        ph = np.exp(-self.sign * 1j * np.outer(lam, y))
        return ph @ (w * vals)


def fourier_reflection(lambda_grid, R_over_zeta, Rbar_over_zeta=None, tail_tol: float = 1e-8
                       ) -> Tuple[FourierReflection, FourierReflection]:
    """Transforms of R/zeta (with e^{i lam y}) and Rbar/zeta (with e^{-i lam y}).

    The samples may be arrays on ``lambda_grid`` or callables of lam.  The
    samples must have decayed at both ends of the grid to ``tail_tol``
    relative to their peak, otherwise FourierTailError is raised.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    out = []
    for vals, sign in ((R_over_zeta, 1), (Rbar_over_zeta, -1)):
        if vals is None:
            vals = np.zeros(lam.size)
        elif callable(vals):
            vals = vals(lam)
        vals = np.asarray(vals, dtype=complex)
        if vals.shape != lam.shape:
            raise ValueError("reflection samples do not match the lambda grid")
        peak = float(np.max(np.abs(vals), initial=0.0))
        edge = max(abs(vals[0]), abs(vals[-1])) if vals.size else 0.0
        if peak > 0 and edge > tail_tol * peak:
            raise FourierTailError(
                f"reflection samples have not decayed at the lambda-grid edge "
                f"(edge {edge:.3g}, peak {peak:.3g}, tolerance {tail_tol:.1g})")
        out.append(FourierReflection(lam, vals, sign))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# kernels

def _triplet_terms(t: MatrixTriplet, y: np.ndarray, sign: int) -> Tuple[np.ndarray, np.ndarray]:
    """C e^{s i A y} B and its y-derivative."""
    if t.size == 0:
        z = np.zeros(y.shape, dtype=complex)
        return z, z
    E = matrix_exponential(sign * 1j * t.A, y.ravel())
    EB = E @ t.B
    val = (t.C @ EB)[:, 0, 0]
    der = sign * 1j * (t.C @ t.A @ EB)[:, 0, 0]
    return val.reshape(y.shape), der.reshape(y.shape)


@dataclass(frozen=True, eq=False)
class MarchenkoKernel:
    """Omega, Omegabar and their derivatives, evaluable at any real argument."""

    Rhat: Optional[FourierReflection]
    Rbarhat: Optional[FourierReflection]
    triplets: TripletPair

    @property
    def has_fourier(self) -> bool:
        return any(f is not None and not f.is_zero for f in (self.Rhat, self.Rbarhat))

    @property
    def has_triplets(self) -> bool:
        return not self.triplets.is_empty

    def evaluate(self, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(Omega, Omega', Omegabar, Omegabar') at ``y``."""
        y = np.asarray(y, dtype=float)
        om, dom = _triplet_terms(self.triplets.unbarred, y, 1)
        omb, domb = _triplet_terms(self.triplets.barred, y, -1)
        if self.Rhat is not None and not self.Rhat.is_zero:
            om = om + self.Rhat(y)
            dom = dom + self.Rhat.derivative(y)
        if self.Rbarhat is not None and not self.Rbarhat.is_zero:
            omb = omb + self.Rbarhat(y)
            domb = domb + self.Rbarhat.derivative(y)
        return om, dom, omb, domb

    def Omega(self, y) -> np.ndarray:
        return self.evaluate(y)[0]

    def Omegabar(self, y) -> np.ndarray:
        return self.evaluate(y)[2]

    def decay_span(self, t0: float, tail_tol: float = 1e-12, step: float = 0.25,
                   max_span: float = 200.0, scale: Optional[float] = None) -> float:
        """Length L such that |Omega|, |Omegabar| stay below tail_tol * scale beyond t0 + L.

        ``scale`` defaults to the peak over [t0, t0 + max_span].  For the
        Fourier part the scan stops at half the aliasing period.
        """
        cap = max_span
        for f in (self.Rhat, self.Rbarhat):
            if f is not None and not f.is_zero:
                cap = min(cap, 0.45 * f.period - max(0.0, t0))
        if cap <= 0:
            raise ValueError("lambda grid too coarse for the requested y range")
        t = t0 + np.arange(0.0, cap + step, step)
        om, _, omb, _ = self.evaluate(t)
        mag = np.maximum(np.abs(om), np.abs(omb))
        peak = float(np.max(mag)) if scale is None else float(scale)
        if peak == 0:
            return 0.0
        above = np.nonzero(mag > tail_tol * peak)[0]
        if above.size == 0:
            return 2 * step
        last = t[above[-1]] - t0
        if above[-1] >= t.size - 2:
            warnings.warn(f"Marchenko kernel has not decayed to {tail_tol:.1g} within "
                          f"{cap:.3g} of t = {t0:.3g}; truncating", RuntimeWarning, stacklevel=3)
        return float(last + 2 * step)


def assemble_kernels(Rhat: Optional[FourierReflection], Rbarhat: Optional[FourierReflection],
                     tp: Optional[TripletPair] = None) -> MarchenkoKernel:
    """Sum of the Fourier and triplet contributions."""
    return MarchenkoKernel(Rhat, Rbarhat, tp if tp is not None else TripletPair.empty())


# ---------------------------------------------------------------------------
# Nystrom solution

@dataclass(frozen=True, eq=False)
class MarchenkoSolution:
    """Kernels K1, K2, K1bar, K2bar at one anchor x on the nodes y = x + j h."""

    x: float
    y: np.ndarray
    weights: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K1bar: np.ndarray
    K2bar: np.ndarray
    kernel: MarchenkoKernel
    cond: Tuple[float, float]

    @property
    def diagonal(self) -> Tuple[complex, complex, complex, complex]:
        return complex(self.K1[0]), complex(self.K2[0]), complex(self.K1bar[0]), complex(self.K2bar[0])

    def at(self, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(K1, K2, K1bar, K2bar) at arbitrary y through the Nystrom interpolant; zero for y < x."""
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        x, s, w = self.x, self.y, self.weights
        # Omega-type functions at s_k + y for all nodes and targets
        om, dom, omb, domb = self.kernel.evaluate(s[None, :] + flat[:, None])
        om0, _, omb0, _ = self.kernel.evaluate(x + flat)
        K1 = -omb0 - omb @ (w * self.K1bar)
        K2bar = -om0 - om @ (w * self.K2)
        K1bar = 1j * (dom @ (w * self.K1))
        K2 = -1j * (domb @ (w * self.K2bar))
        mask = flat < x - 1e-14
        res = []
        for arr in (K1, K2, K1bar, K2bar):
            arr = np.where(mask, 0.0, arr)
            res.append(arr.reshape(y.shape))
        return tuple(res)

    def residual(self, y) -> float:
        """Max residual of the coupled system at targets ``y`` >= x, relative to the kernel scale."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        K1, K2, K1b, K2b = self.at(y)
        x, s, w = self.x, self.y, self.weights
        om, dom, omb, domb = self.kernel.evaluate(s[None, :] + y[:, None])
        om0, _, omb0, _ = self.kernel.evaluate(x + y)
        r = [
            K1b - 1j * (dom @ (w * self.K1)),
            K1 + omb0 + omb @ (w * self.K1bar),
            K2b + om0 + om @ (w * self.K2),
            K2 + 1j * (domb @ (w * self.K2bar)),
        ]
        scale = max(1.0, float(max(np.max(np.abs(a)) for a in (self.K1, self.K2, self.K1bar, self.K2bar))))
        return float(max(np.max(np.abs(v)) for v in r) / scale)


def _solve_one(M: np.ndarray, rhs: np.ndarray, x: float, cond_cap: float) -> Tuple[np.ndarray, float]:
    lu, piv = lu_factor(M, check_finite=False)
    anorm = float(np.max(np.sum(np.abs(M), axis=0)))
    rcond, info = zgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not np.isfinite(cond) or cond > cond_cap:
        raise NystromError(x, cond)
    return lu_solve((lu, piv), rhs, trans=0, check_finite=False), float(cond)


def quadrature_weights(n: int, h: float, rule: str) -> np.ndarray:
    if rule == "simpson":
        return simpson_weights(n, h)
    if rule == "gregory":
        return gregory_weights(n, h)
    raise ValueError(f"unknown quadrature rule {rule!r}")


def solve_marchenko(kernel: MarchenkoKernel, x: float, h: float = 0.05, span: Optional[float] = None,
                    tail_tol: float = 1e-12, cond_cap: float = 1e10, rule: str = "simpson",
                    scale: Optional[float] = None) -> MarchenkoSolution:
    """Nystrom solution of the Marchenko system at anchor ``x``.

    The nodes are y = x + j h, j = 0..n-1 with n odd, covering ``span``
    (by default the distance beyond which the kernel stays below ``tail_tol``
    times ``scale``, itself defaulting to the kernel peak seen from x).
    ``rule`` selects composite Simpson (fourth order) or the trapezoidal
    rule with sixth-difference Gregory end corrections (eighth order).
    """
    if h <= 0:
        raise ValueError("node spacing must be positive")
    if span is None:
        span = kernel.decay_span(2 * x, tail_tol, scale=scale)
    n = max(15, int(np.ceil(span / h)) + 1)
    n += 1 - n % 2
    y = x + h * np.arange(n)
    w = quadrature_weights(n, h, rule)
    t = 2 * x + h * np.arange(2 * n - 1)
    om, dom, omb, domb = kernel.evaluate(t)
    idx = np.add.outer(np.arange(n), np.arange(n))
    eye = np.eye(n)
    if not np.any(om) and not np.any(omb):
        z = np.zeros(n, dtype=complex)
        return MarchenkoSolution(float(x), y, w, z, z.copy(), z.copy(), z.copy(), kernel, (1.0, 1.0))
    # K1 (I + i W P W Q) = -omb,  P = Omega'(z+s), Q = Omegabar(s+y)
    P = dom[idx]
    Q = omb[idx]
    G = (w[:, None] * P) @ (w[:, None] * Q)
    K1, c1 = _solve_one((eye + 1j * G).T, -omb[:n], x, cond_cap)
    Pb = domb[idx]
    Qb = om[idx]
    Gb = (w[:, None] * Pb) @ (w[:, None] * Qb)
    K2bar, c2 = _solve_one((eye - 1j * Gb).T, -om[:n], x, cond_cap)
    K1bar = 1j * ((w * K1) @ P)
    K2 = -1j * ((w * K2bar) @ Pb)
    return MarchenkoSolution(float(x), y, w, K1, K2, K1bar, K2bar, kernel, (c1, c2))


def solve_marchenko_grid(kernel: MarchenkoKernel, xs, h: Optional[float] = None,
                         **kw) -> List[MarchenkoSolution]:
    """Independent solves at every anchor in ``xs`` (a Grid1D or an array).

    Node spacing defaults to the grid spacing; the truncation scale is the
    kernel peak seen from the leftmost anchor, so anchors far to the right,
    where the kernels are tiny, get correspondingly short windows.
    """
    if isinstance(xs, Grid1D):
        step = xs.h if h is None else h
        xs = xs.x
    else:
        xs = np.asarray(xs, dtype=float)
        if h is None:
            raise ValueError("node spacing h is required for an array of anchors")
        step = h
    if "scale" not in kw and "span" not in kw:
        t0 = 2 * float(np.min(xs))
        t = t0 + np.arange(0.0, 2 * (np.max(xs) - np.min(xs)) + 1.0, 0.25)
        om, _, omb, _ = kernel.evaluate(t)
        kw["scale"] = float(max(np.max(np.abs(om)), np.max(np.abs(omb))))
    return [solve_marchenko(kernel, float(x), step, **kw) for x in xs]


# ---------------------------------------------------------------------------
# recovery

class RecoveredData(NamedTuple):
    pair: PotentialPair
    gauge: GaugeData
    report: dict


def recover_potentials(solutions: Sequence[MarchenkoSolution], grid: Optional[Grid1D] = None) -> RecoveredData:
    """q = -2 K1(x,x), r = -2 Kbar2(x,x), P = K1(x,x) Kbar2(x,x), E and mu from P.

    The anchors must form a uniform grid.  The report carries the diagonal
    identity K2(x,x) - Kbar1(x,x) = -(i/4) q r and the comparison of
    Kbar1(x,x) with the tail integrals of q r' and q^2 r^2.
    """
    xs = np.array([s.x for s in solutions])
    if grid is None:
        grid = Grid1D(float(xs[0]), float(xs[-1]), xs.size)
    if xs.size != grid.n or np.max(np.abs(xs - grid.x)) > 1e-9 * max(1.0, grid.h):
        raise ValueError("solutions do not match the grid")
    diag = np.array([s.diagonal for s in solutions])
    K1, K2, K1b, K2b = diag.T
    q, r = -2 * K1, -2 * K2b
    P = K1 * K2b
    h = grid.h
    E = np.exp(2j * cumulative(P, h))
    mu = complex(4 * integrate(P, h))
    dr = derivative(r, h)
    sigma = -0.5j * q * dr - 0.25 * q**2 * r**2
    pair = PotentialPair(SampledField(grid, q), SampledField(grid, r), check_decay=False)
    gauge = GaugeData(SampledField(grid, E), mu, SampledField(grid, sigma))
    tail = lambda f: cumulative(f[::-1], h)[::-1]
    predicted_K1b = -0.25j * tail(q * dr) - 0.125 * tail(q**2 * r**2)
    report = {
        "diagonal_identity": float(np.max(np.abs(K2 - K1b + 0.25j * q * r))),
        "K1bar_tail_identity": float(np.max(np.abs(K1b - predicted_K1b))),
        "max_condition": float(max(max(s.cond) for s in solutions)),
        "P_consistency": float(np.max(np.abs(P - q * r / 4))),
    }
    return RecoveredData(pair, gauge, report)


def reconstruct_jost(sol: Union[MarchenkoSolution, Sequence[MarchenkoSolution]], zeta: complex,
                     tol: float = 1e-6) -> Tuple[np.ndarray, np.ndarray]:
    """psi and psibar at the anchor(s) from the kernels by Simpson quadrature.

    A warning is issued when halving the resolution changes the result by
    more than ``tol``.
    """
    many = not isinstance(sol, MarchenkoSolution)
    sols = list(sol) if many else [sol]
    zeta = complex(zeta)
    lam = zeta * zeta
    psi = np.empty((2, len(sols)), dtype=complex)
    psib = np.empty((2, len(sols)), dtype=complex)
    worst = 0.0
    for i, s in enumerate(sols):
        ep, em = np.exp(1j * lam * s.y), np.exp(-1j * lam * s.y)
        ints = np.array([(s.weights * s.K1 * ep).sum(), (s.weights * s.K2 * ep).sum(),
                         (s.weights * s.K1bar * em).sum(), (s.weights * s.K2bar * em).sum()])
        n = s.y.size
        if n >= 5:
            m = (n - 1) // 2 + 1
            sl = slice(0, 2 * (m - 1) + 1, 2)
            w2 = simpson_weights(m, 2 * (s.y[1] - s.y[0]))
            coarse = np.array([(w2 * s.K1[sl] * ep[sl]).sum(), (w2 * s.K2[sl] * ep[sl]).sum(),
                               (w2 * s.K1bar[sl] * em[sl]).sum(), (w2 * s.K2bar[sl] * em[sl]).sum()])
            worst = max(worst, float(np.max(np.abs(coarse - ints))) / 15)
        psi[:, i] = zeta * ints[0], np.exp(1j * lam * s.x) + ints[1]
        psib[:, i] = np.exp(-1j * lam * s.x) + ints[2], zeta * ints[3]
    if worst > tol:
        warnings.warn(f"Jost quadrature error estimate {worst:.3g} exceeds {tol:.1g}",
                      RuntimeWarning, stacklevel=2)
    if not many:
        return psi[:, 0], psib[:, 0]
    return psi, psib
