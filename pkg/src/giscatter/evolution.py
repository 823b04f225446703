"""Time evolution of scattering data and checks against the evolution equations.

The potentials evolve by

    i q_t + q_xx + i q^2 r_x + (1/2) q^3 r^2 = 0,
    i r_t - r_xx + i q_x r^2 - (1/2) q^2 r^3 = 0,

under which T and Tbar are constant, R and Lbar pick up e^{4i lam^2 t},
Rbar and L pick up e^{-4i lam^2 t}, and the triplets change only through
C(t) = C e^{4iA^2 t}, Cbar(t) = Cbar e^{-4i Abar^2 t}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .direct import ScatteringData
from .marchenko import MarchenkoKernel, assemble_kernels, fourier_reflection
from .numerics import fd_derivative
from .potentials import Grid1D, PotentialPair, zero_pair
from .reflectionless import SingularGammaError, reflectionless_potentials
from .triplets import TripletPair, matrix_exponential

__all__ = ["EvolvedData", "evolve_triplets", "evolve_data", "soliton_snapshot", "gi_residual",
           "gi_residual_at"]


def evolve_triplets(tp: TripletPair, t: float) -> TripletPair:
    """Replace C by C e^{4iA^2 t} and Cbar by Cbar e^{-4i Abar^2 t}."""
    u, b = tp.unbarred, tp.barred
    if t == 0:
        return tp
    cu = u.C @ matrix_exponential(4j * u.A @ u.A, t) if u.size else u.C
    cb = b.C @ matrix_exponential(-4j * b.A @ b.A, t) if b.size else b.C
    return TripletPair(u.with_C(cu), b.with_C(cb))


@dataclass(frozen=True, eq=False)
class EvolvedData:
    """Scattering data at time t derived from data at t = 0."""

    base: ScatteringData
    t: float
    triplets: TripletPair
    R: np.ndarray
    Rbar: np.ndarray
    L: np.ndarray
    Lbar: np.ndarray
    R_over_zeta: Optional[np.ndarray]
    Rbar_over_zeta: Optional[np.ndarray]

    @property
    def lambda_grid(self) -> np.ndarray:
        return self.base.lambda_grid

    @property
    def T(self) -> np.ndarray:
        return self.base.T

    @property
    def Tbar(self) -> np.ndarray:
        return self.base.Tbar

    def kernel(self, tail_tol: float = 1e-8) -> MarchenkoKernel:
        """Marchenko kernels built from the evolved reflection data and triplets."""
        if self.R_over_zeta is None:
            raise ValueError("the Marchenko kernels need reflection data divided by zeta")
        Rh, Rbh = fourier_reflection(self.lambda_grid, self.R_over_zeta, self.Rbar_over_zeta, tail_tol)
        return assemble_kernels(Rh, Rbh, self.triplets)


def evolve_data(base: ScatteringData, t: float, triplets: Optional[TripletPair] = None) -> EvolvedData:
    """Apply the time factors to reflection coefficients and triplets."""
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    tp = triplets if triplets is not None else base.triplets
    tp = evolve_triplets(tp, t) if tp is not None else TripletPair.empty()
    lam = base.lambda_grid
    ph = np.exp(4j * lam**2 * t)
    div = None if base.R_over_zeta is None else (base.R_over_zeta * ph, base.Rbar_over_zeta / ph)
    return EvolvedData(base, t, tp, base.R * ph, base.Rbar / ph, base.L / ph, base.Lbar * ph,
                       *(div if div is not None else (None, None)))


def soliton_snapshot(tp: TripletPair, t: float, grid: Grid1D) -> PotentialPair:
    """Reflectionless potentials for the triplets evolved to time t."""
    if tp.is_empty:
        return zero_pair(grid)
    try:
        return reflectionless_potentials(evolve_triplets(tp, t), grid)
    except SingularGammaError as exc:
        raise SingularGammaError(exc.x, exc.cond, t) from None


def gi_residual(snapshots: Sequence[PotentialPair], delta: float, x_accuracy: int = 8) -> Dict[str, object]:
    """Residuals of the evolution equations from snapshots at t - delta, t, t + delta.

    Time derivatives are central differences (second order in delta); space
    derivatives use stencils of order ``x_accuracy``.  Returns max-norm
    residuals of both equations and the pointwise arrays.

    The default eighth-order space stencils keep the spatial error well
    below the temporal one at h = 1e-2 even for the narrow one-soliton
    profile, whose complex poles sit about 0.39 from the real axis; with
    fourth-order stencils the spatial error alone is about 2e-4 there.
    """
    if len(snapshots) != 3:
        raise ValueError("need snapshots at t - delta, t, t + delta")
    pm, p0, pp = snapshots
    g = p0.grid
    if pm.grid != g or pp.grid != g:
        raise ValueError("snapshots must share one grid")
    h = g.h
    q, r = p0.q.values, p0.r.values
    qt = (pp.q.values - pm.q.values) / (2 * delta)
    rt = (pp.r.values - pm.r.values) / (2 * delta)
    qx, rx = fd_derivative(q, h, 1, x_accuracy), fd_derivative(r, h, 1, x_accuracy)
    qxx, rxx = fd_derivative(q, h, 2, x_accuracy), fd_derivative(r, h, 2, x_accuracy)
    res_q = 1j * qt + qxx + 1j * q**2 * rx + 0.5 * q**3 * r**2
    res_r = 1j * rt - rxx + 1j * qx * r**2 - 0.5 * q**2 * r**3
    mq, mr = float(np.max(np.abs(res_q))), float(np.max(np.abs(res_r)))
    return {"q": mq, "r": mr, "max": max(mq, mr), "residual_q": res_q, "residual_r": res_r}


def gi_residual_at(tp: TripletPair, t: float, grid: Grid1D, delta: float = 1e-3,
                   x_accuracy: int = 8) -> Dict[str, object]:
    """gi_residual for the soliton snapshots of ``tp`` around time t."""
    snaps = [soliton_snapshot(tp, t + s * delta, grid) for s in (-1, 0, 1)]
    return gi_residual(snaps, delta, x_accuracy)
