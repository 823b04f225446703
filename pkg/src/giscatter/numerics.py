"""Low-level numerics shared by the scattering modules.

Quadrature on uniform grids, high-order finite differences and a batched
embedded Runge-Kutta integrator for 2x2 linear systems.
"""
from __future__ import annotations

from math import comb
from typing import Callable

import numpy as np
from numba import njit


class IntegrationError(RuntimeError):
    """Raised when the ODE integrator cannot proceed."""


# ---------------------------------------------------------------------------
# quadrature

def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``n`` uniformly spaced nodes.

    For an even node count the last three intervals use the 3/8 rule.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    w = np.zeros(n)
    if n == 2:
        w[:] = 0.5
        return w * h
    if n == 3:
        return np.array([1.0, 4.0, 1.0]) * h / 3.0
    m = n if n % 2 == 1 else n - 3
    if m >= 3:
        w[:m] = 2.0
        w[1:m:2] = 4.0
        w[0] = w[m - 1] = 1.0
        w[:m] /= 3.0
    if m != n:
        tail = np.array([1.0, 3.0, 3.0, 1.0]) * 3.0 / 8.0
        w[n - 4:] += tail
    return w * h


_GREGORY = (1 / 12, 1 / 24, 19 / 720, 3 / 160, 863 / 60480, 275 / 24192, 33953 / 3628800)


def gregory_weights(n: int, h: float, order: int = 6) -> np.ndarray:
    """Trapezoidal weights with Gregory end corrections through ``order``-th differences.

    Exact for polynomials of degree ``order + 1``; the error is O(h^(order+2))
    for smooth integrands.  Needs n >= 2 * (order + 1).
    """
    if not 1 <= order <= len(_GREGORY):
        raise ValueError(f"order must lie in 1..{len(_GREGORY)}")
    if n < 2 * (order + 1):
        raise ValueError("too few nodes for the requested Gregory order")
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    for k, g in enumerate(_GREGORY[:order], start=1):
        for j in range(k + 1):
            c = g * comb(k, j)
            w[j] -= (-1) ** k * c * (-1) ** (k - j)
            w[n - 1 - j] -= c * (-1) ** j
    return w * h


def integrate(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Simpson integral of uniformly sampled values along ``axis``."""
    values = np.asarray(values)
    w = simpson_weights(values.shape[axis], h)
    return np.tensordot(np.moveaxis(values, axis, -1), w, axes=([-1], [0]))


def cumulative(values: np.ndarray, h: float) -> np.ndarray:
    """Running integral from the first node, starting at zero.

    Trapezoid sums with the Euler-Maclaurin endpoint correction
    h^2/12 (f'(x_0) - f'(x_k)), the slopes taken from 4th-order differences.
    Works on the last axis; complex input is handled natively.
    """
    values = np.asarray(values)
    out = np.zeros(values.shape, dtype=np.result_type(values, float))
    out[..., 1:] = np.cumsum(0.5 * h * (values[..., 1:] + values[..., :-1]), axis=-1)
    if values.shape[-1] >= 5:
        slope = derivative(values, h)
        out += h**2 / 12.0 * (slope[..., :1] - slope)
    return out


def quadrature_error_estimate(values: np.ndarray, h: float) -> float:
    """Crude error estimate: Simpson at h against Simpson at 2h, divided by 15."""
    values = np.asarray(values)
    coarse = values[::2]
    if coarse.size < 3:
        return float("inf")
    fine_int = integrate(values[: 2 * (coarse.size - 1) + 1], h)
    coarse_int = integrate(coarse, 2 * h)
    return float(abs(fine_int - coarse_int) / 15.0)


# ---------------------------------------------------------------------------
# finite differences

_D1_INNER = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_EDGE = (
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
)
_D2_INNER = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_EDGE = (
    np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
    np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0,
)


def _apply_stencil(f: np.ndarray, inner, edges, sign: float) -> np.ndarray:
    n = f.shape[-1]
    if n < len(edges[0]):
        raise ValueError(f"need at least {len(edges[0])} samples for a 4th-order stencil")
    out = np.zeros(f.shape, dtype=np.result_type(f, float))
    out[..., 2:-2] = (inner[0] * f[..., :-4] + inner[1] * f[..., 1:-3] + inner[2] * f[..., 2:-2]
                      + inner[3] * f[..., 3:-1] + inner[4] * f[..., 4:])
    k = len(edges[0])
    for i, st in enumerate(edges):
        out[..., i] = f[..., :k] @ st
        # mirrored stencil; odd derivatives flip sign
        out[..., n - 1 - i] = sign * (f[..., ::-1][..., :k] @ st)
    return out


def derivative(f: np.ndarray, h: float) -> np.ndarray:
    """4th-order first derivative on a uniform grid (one-sided at the ends)."""
    return _apply_stencil(np.asarray(f), _D1_INNER, _D1_EDGE, -1.0) / h


def second_derivative(f: np.ndarray, h: float) -> np.ndarray:
    """4th-order second derivative on a uniform grid (one-sided at the ends)."""
    return _apply_stencil(np.asarray(f), _D2_INNER, _D2_EDGE, 1.0) / h**2


def fd_weights(offsets, m: int) -> np.ndarray:
    """Weights for the m-th derivative at 0 from samples at ``offsets`` (Fornberg's recursion)."""
    z = np.asarray(offsets, dtype=float)
    n = z.size
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1, c4 = 1.0, z[0]
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def fd_derivative(f: np.ndarray, h: float, m: int = 1, accuracy: int = 8) -> np.ndarray:
    """m-th derivative along the last axis with a central stencil of the given even accuracy.

    Near the ends the same number of points is used off-centre, so the
    formal order is kept everywhere.
    """
    if accuracy % 2 or accuracy < 2:
        raise ValueError("accuracy must be a positive even number")
    f = np.asarray(f)
    half = (2 * ((m + 1) // 2) - 1 + accuracy) // 2
    width = 2 * half + 1
    n = f.shape[-1]
    if n < width:
        raise ValueError(f"need at least {width} samples")
    inner = fd_weights(np.arange(-half, half + 1), m)
    out = np.zeros(f.shape, dtype=np.result_type(f, float))
    for k, c in enumerate(inner):
        out[..., half:n - half] += c * f[..., k:n - width + 1 + k]
    for i in range(half):
        w = fd_weights(np.arange(width) - i, m)
        out[..., i] = f[..., :width] @ w
        out[..., n - 1 - i] = f[..., n - width:] @ fd_weights(np.arange(width) - (width - 1 - i), m)
    return out / h**m


def fine_derivative(fn: Callable[[np.ndarray], np.ndarray], step: float = 2e-3) -> Callable:
    """Derivative of an analytic evaluator by an 8th-order central stencil."""
    coef = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    offsets = np.arange(-4, 5) * step

    def d(x):
        x = np.asarray(x, dtype=float)
        acc = 0.0
        for c, o in zip(coef, offsets):
            if c:
                acc = acc + c * fn(x + o)
        return acc / step

    return d


# ---------------------------------------------------------------------------
# piecewise polynomial tables on a uniform grid

class UniformTable:
    """Piecewise polynomial on a uniform grid, in the local power basis.

    ``coef[k, i]`` multiplies ``(x - x_i)**(K-1-k)`` on interval ``i`` (the
    scipy ``PPoly`` convention).
    """

    def __init__(self, x0: float, h: float, coef: np.ndarray):
        self.x0 = float(x0)
        self.h = float(h)
        self.coef = np.ascontiguousarray(coef, dtype=complex)

    @classmethod
    def from_ppoly(cls, pp) -> "UniformTable":
        return cls(pp.x[0], pp.x[1] - pp.x[0], pp.c)

    @classmethod
    def zeros(cls, x0: float, h: float, nint: int) -> "UniformTable":
        return cls(x0, h, np.zeros((1, nint), dtype=complex))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _table_eval_many(self.coef, self.x0, self.h, x.ravel()).reshape(x.shape)


@njit(cache=True)
def _table_eval(coef, x0, h, x):
    nint = coef.shape[1]
    i = int(np.floor((x - x0) / h))
    if i < 0:
        i = 0
    elif i > nint - 1:
        i = nint - 1
    t = x - (x0 + i * h)
    acc = coef[0, i]
    for k in range(1, coef.shape[0]):
        acc = acc * t + coef[k, i]
    return acc


@njit(cache=True)
def _table_eval_many(coef, x0, h, xs):
    out = np.empty(xs.size, dtype=np.complex128)
    for j in range(xs.size):
        out[j] = _table_eval(coef, x0, h, xs[j])
    return out


# ---------------------------------------------------------------------------
# batched Dormand-Prince 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@njit(cache=True)
def _dopri_core(dc, fc, gc, x0, hg, b, c, m11c, m22c, x_out, w0, rtol, atol, h0,
                a_tab, c_tab, e_tab):
    nb = b.size
    nout = x_out.size
    out = np.empty((nout, 2, nb), dtype=np.complex128)
    w = w0.copy()
    out[0] = w
    if nout == 1:
        return out, 0, x_out[0]
    direction = 1.0 if x_out[nout - 1] > x_out[0] else -1.0
    span = abs(x_out[nout - 1] - x_out[0])
    h = h0
    h_min = 1e-13 * max(span, 1.0)
    x = x_out[0]
    k = np.empty((7, 2, nb), dtype=np.complex128)
    y = np.empty((2, nb), dtype=np.complex128)
    for idx in range(1, nout):
        target = x_out[idx]
        while direction * (target - x) > 0.0:
            remaining = abs(target - x)
            if remaining <= h_min:
                # rounding left a sliver before the output node
                x = target
                break
            clipped = h >= remaining - h_min
            step = remaining if clipped else h
            if step < h_min:
                return out, 1, x
            ds = direction * step
            for s in range(7):
                xs = x + ds * c_tab[s]
                dv = _table_eval(dc, x0, hg, xs)
                fv = _table_eval(fc, x0, hg, xs)
                gv = _table_eval(gc, x0, hg, xs)
                for j in range(nb):
                    y0 = w[0, j]
                    y1 = w[1, j]
                    for q in range(s):
                        y0 += ds * a_tab[s, q] * k[q, 0, j]
                        y1 += ds * a_tab[s, q] * k[q, 1, j]
                    y[0, j] = y0
                    y[1, j] = y1
                    k[s, 0, j] = (m11c[j] + dv) * y0 + b[j] * fv * y1
                    k[s, 1, j] = c[j] * gv * y0 + (m22c[j] - dv) * y1
            err_norm = 0.0
            for j in range(nb):
                for comp in range(2):
                    e = 0j
                    for s in range(7):
                        e += e_tab[s] * k[s, comp, j]
                    sc = atol + rtol * max(abs(w[comp, j]), abs(y[comp, j]))
                    r = abs(ds * e) / sc
                    if r > err_norm or r != r:
                        err_norm = r
            if not np.isfinite(err_norm):
                return out, 2, x
            if err_norm <= 1.0:
                x = target if clipped else x + ds
                for j in range(nb):
                    w[0, j] = y[0, j]
                    w[1, j] = y[1, j]
                fac = 5.0 if err_norm == 0.0 else min(5.0, 0.9 * err_norm ** -0.2)
                if (not clipped) or fac < 1.0:
                    h = step * max(fac, 0.2)
            else:
                h = step * max(0.2, 0.9 * err_norm ** -0.2)
        out[idx] = w
    return out, 0, x


def dopri54(d: UniformTable, f: UniformTable, g: UniformTable,
            b: np.ndarray, c: np.ndarray, m11: np.ndarray, m22: np.ndarray,
            x_out: np.ndarray, w0: np.ndarray,
            rtol: float = 1e-10, atol: float = 1e-12, h0: float | None = None) -> np.ndarray:
    """Integrate a batch of 2x2 linear systems with adaptive Dormand-Prince 5(4).

    Member ``j`` of the batch obeys::

        w' = [[m11[j] + d(x),  b[j] f(x)],
              [c[j] g(x),      m22[j] - d(x)]] w

    with ``d``, ``f``, ``g`` tabulated scalar fields.  ``w0`` of shape
    ``(2, batch)`` is the state at ``x_out[0]``; ``x_out`` is strictly monotone
    in either direction.  The step size is shared across the batch and every
    output node is hit exactly.  Returns shape ``(len(x_out), 2, batch)``.
    """
    x_out = np.ascontiguousarray(x_out, dtype=float)
    as_c = lambda a: np.ascontiguousarray(np.broadcast_to(np.asarray(a, dtype=complex), np.shape(b)))
    b = np.ascontiguousarray(np.atleast_1d(np.asarray(b, dtype=complex)))
    c, m11, m22 = as_c(c), as_c(m11), as_c(m22)
    w0 = np.ascontiguousarray(np.asarray(w0, dtype=complex).reshape(2, b.size))
    span = abs(x_out[-1] - x_out[0]) if x_out.size > 1 else 1.0
    if h0 is None:
        rate = 1.0 + float(np.max(np.abs(m11 - m22), initial=0.0))
        h0 = min(span, 0.05 / rate)
    if not (d.h == f.h == g.h and d.x0 == f.x0 == g.x0):
        raise ValueError("coefficient tables must share one grid")
    out, status, where = _dopri_core(d.coef, f.coef, g.coef, d.x0, d.h, b, c, m11, m22,
                                     x_out, w0, float(rtol), float(atol), float(h0),
                                     _A, _C, _E)
    if status == 1:
        raise IntegrationError(f"step size underflow near x = {where:.6g}")
    if status == 2:
        raise IntegrationError(f"non-finite state near x = {where:.6g}")
    return out
