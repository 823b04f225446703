"""Potential pairs (q, r) on a truncated uniform grid and their gauge data.

A ``SampledField`` stores grid samples and, optionally, an analytic
evaluator.  When the evaluator is present it is used for off-grid values and
derivatives; otherwise a cubic spline of the samples is used.

The companion systems are reached through

* ``to_tilde_pair``: q~ = E^2 q, r~ = E^-2 r (the Kaup-Newell form),
* ``to_uv_pair``: u = q, v = -(i/2) r' - q r^2 / 4,
* ``to_ps_pair``: p = (i/2) q' - q^2 r / 4, s = r,

where E(x) = exp((i/2) int_{x_min}^x q r).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .numerics import (UniformTable, cumulative, derivative, fine_derivative,
                       integrate, quadrature_error_estimate)

__all__ = [
    "Grid1D", "SampledField", "PotentialPair", "GaugeData", "PotentialError",
    "GridTooCoarseError", "compute_gauge", "to_tilde_pair", "to_uv_pair",
    "to_ps_pair", "sigma_tilde", "zero_pair", "gaussian_pair", "single_soliton_pair",
    "pair_from_functions", "read_pair_csv", "write_pair_csv", "product_table",
]

DEFAULT_DECAY_THRESHOLD = 1e-10


class PotentialError(ValueError):
    """Invalid potential data."""


class GridTooCoarseError(PotentialError):
    """The grid cannot resolve the requested integral to tolerance."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``x_min = x_0 < ... < x_{n-1} = x_max``."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise PotentialError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise PotentialError("grid needs x_min < x_max")
        if int(self.n) != self.n or self.n < 3:
            raise PotentialError("grid needs at least 3 nodes")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)


def _quintic_hermite(x0: float, h: float, f, d1, d2) -> UniformTable:
    # local power-basis coefficients on each interval from value, slope, curvature
    f0, f1 = f[:-1], f[1:]
    p0, p1 = d1[:-1], d1[1:]
    s0, s1 = d2[:-1], d2[1:]
    a3 = (20 * (f1 - f0) - (8 * p1 + 12 * p0) * h - (3 * s0 - s1) * h**2) / (2 * h**3)
    a4 = (30 * (f0 - f1) + (14 * p1 + 16 * p0) * h + (3 * s0 - 2 * s1) * h**2) / (2 * h**4)
    a5 = (12 * (f1 - f0) - 6 * (p1 + p0) * h - (s0 - s1) * h**2) / (2 * h**5)
    coef = np.stack([a5, a4, a3, s0 / 2, p0, f0])
    return UniformTable(x0, h, coef)


def _fine_second_derivative(fn, step: float = 2e-3):
    coef = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
    offsets = np.arange(-4, 5) * step

    def d2(x):
        x = np.asarray(x, dtype=float)
        return sum(c * fn(x + o) for c, o in zip(coef, offsets)) / step**2

    return d2


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex samples of a function of x on ``grid``, with an optional evaluator."""

    grid: Grid1D
    values: np.ndarray
    closure: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tolerance: float = 1e-8

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise PotentialError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise PotentialError("field samples must be finite")
        object.__setattr__(self, "values", vals)
        if self.closure is not None:
            ref = np.asarray(self.closure(self.grid.x), dtype=complex)
            scale = max(1.0, float(np.max(np.abs(vals))))
            if np.max(np.abs(ref - vals)) > self.tolerance * scale:
                raise PotentialError("samples disagree with the analytic evaluator")

    @classmethod
    def from_closure(cls, grid: Grid1D, fn: Callable) -> "SampledField":
        return cls(grid, np.asarray(fn(grid.x), dtype=complex), fn)

    @classmethod
    def zeros(cls, grid: Grid1D) -> "SampledField":
        return cls(grid, np.zeros(grid.n, dtype=complex), lambda x: np.zeros(np.shape(x), dtype=complex))

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.grid.x, self.values)

    def __call__(self, x) -> np.ndarray:
        if self.closure is not None:
            return np.asarray(self.closure(np.asarray(x, dtype=float)), dtype=complex)
        return self._spline(x)

    @cached_property
    def hermite_data(self):
        """(values, first, second derivative) at the nodes, from the evaluator."""
        if self.closure is None:
            return None
        x = self.grid.x
        return (self.values, fine_derivative(self.closure)(x), _fine_second_derivative(self.closure)(x))

    @cached_property
    def table(self) -> UniformTable:
        """Piecewise polynomial used by the ODE integrator.

        Quintic Hermite when an evaluator is present, cubic spline otherwise.
        """
        g = self.grid
        if self.closure is None:
            return UniformTable.from_ppoly(self._spline)
        return _quintic_hermite(g.x_min, g.h, *self.hermite_data)

    def derivative(self) -> "SampledField":
        if self.closure is not None:
            return SampledField.from_closure(self.grid, fine_derivative(self.closure))
        return SampledField(self.grid, derivative(self.values, self.grid.h))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def product_table(a: SampledField, b: SampledField, scale: complex = 1.0) -> UniformTable:
    """Integrator table of scale * a * b, reusing the factors' derivative data."""
    g = a.grid
    if a.hermite_data is None or b.hermite_data is None:
        return UniformTable.from_ppoly(CubicSpline(g.x, scale * a.values * b.values))
    (f, f1, f2), (h, h1, h2) = a.hermite_data, b.hermite_data
    return _quintic_hermite(g.x_min, g.h, scale * f * h, scale * (f1 * h + f * h1),
                            scale * (f2 * h + 2 * f1 * h1 + f * h2))


def _combine(fn: Callable, *fields: SampledField) -> SampledField:
    grid = fields[0].grid
    values = fn(*(f.values for f in fields))
    if all(f.closure is not None for f in fields):
        closures = [f.closure for f in fields]
        return SampledField(grid, values, lambda x: fn(*(c(x) for c in closures)))
    return SampledField(grid, values)


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """The potentials q(x), r(x) on one grid, decaying at both ends."""

    q: SampledField
    r: SampledField
    decay_threshold: float = DEFAULT_DECAY_THRESHOLD
    check_decay: bool = True

    def __post_init__(self):
        if self.q.grid != self.r.grid:
            raise PotentialError("q and r must share one grid")
        if self.check_decay:
            scale = max(self.q.max_abs(), self.r.max_abs())
            if scale > 0:
                ends = np.abs([self.q.values[0], self.q.values[-1], self.r.values[0], self.r.values[-1]])
                if np.max(ends) > self.decay_threshold * scale:
                    raise PotentialError(
                        f"potentials do not decay at the grid ends (max end value {np.max(ends):.3g},"
                        f" threshold {self.decay_threshold * scale:.3g}); widen the grid")

    @property
    def grid(self) -> Grid1D:
        return self.q.grid

    def is_zero(self) -> bool:
        return not (np.any(self.q.values) or np.any(self.r.values))


@dataclass(frozen=True, eq=False)
class GaugeData:
    """E(x), mu and sigma(x) for a potential pair."""

    E: SampledField
    mu: complex
    sigma: SampledField
    quadrature_error: float = 0.0


def compute_gauge(p: PotentialPair, tol: float = 1e-8) -> GaugeData:
    """Gauge factor E, the constant mu = int q r, and sigma = -(i/2) q r' - q^2 r^2 / 4.

    Raises ``GridTooCoarseError`` when the Simpson error estimate for mu
    exceeds ``tol`` (relative to max(1, |mu|)).
    """
    g = p.grid
    qr = p.q.values * p.r.values
    mu = complex(integrate(qr, g.h))
    err = quadrature_error_estimate(qr, g.h)
    if err > tol * max(1.0, abs(mu)):
        raise GridTooCoarseError(f"quadrature error estimate {err:.3g} exceeds tolerance {tol:.3g}")
    phase = 0.5j * cumulative(qr, g.h)
    E_vals = np.exp(phase)
    if p.q.closure is not None and p.r.closure is not None:
        qr_fn = lambda x: p.q(x) * p.r(x)
        tab = _quintic_hermite(g.x_min, g.h, phase, 0.5j * qr, 0.5j * fine_derivative(qr_fn)(g.x))

        def E_fn(x):
            x = np.asarray(x, dtype=float)
            return np.exp(tab(np.clip(x, g.x_min, g.x_max)))

        E = SampledField(g, E_vals, E_fn)
    else:
        E = SampledField(g, E_vals)
    r_prime = p.r.derivative()
    sigma = _combine(lambda q, r, dr: -0.5j * q * dr - 0.25 * q**2 * r**2, p.q, p.r, r_prime)
    return GaugeData(E, mu, sigma, err)


def to_tilde_pair(p: PotentialPair, g: GaugeData) -> PotentialPair:
    """Kaup-Newell potentials q~ = E^2 q, r~ = E^-2 r."""
    qt = _combine(lambda e, q: e**2 * q, g.E, p.q)
    rt = _combine(lambda e, r: r / e**2, g.E, p.r)
    return PotentialPair(qt, rt, p.decay_threshold, check_decay=False)


def to_uv_pair(p: PotentialPair) -> PotentialPair:
    """AKNS potentials u = q, v = -(i/2) r' - q r^2 / 4."""
    v = _combine(lambda q, r, dr: -0.5j * dr - 0.25 * q * r**2, p.q, p.r, p.r.derivative())
    return PotentialPair(p.q, v, p.decay_threshold, check_decay=False)


def to_ps_pair(p: PotentialPair) -> PotentialPair:
    """AKNS potentials p = (i/2) q' - q^2 r / 4, s = r."""
    pp = _combine(lambda q, r, dq: 0.5j * dq - 0.25 * q**2 * r, p.q, p.r, p.q.derivative())
    return PotentialPair(pp, p.r, p.decay_threshold, check_decay=False)


def sigma_tilde(pt: PotentialPair) -> SampledField:
    """sigma written in the Kaup-Newell variables: -(i/2) q~ r~' + q~^2 r~^2 / 4."""
    return _combine(lambda q, r, dr: -0.5j * q * dr + 0.25 * q**2 * r**2,
                    pt.q, pt.r, pt.r.derivative())


# ---------------------------------------------------------------------------
# named potentials

def pair_from_functions(grid: Grid1D, q_fn: Callable, r_fn: Callable, **kw) -> PotentialPair:
    return PotentialPair(SampledField.from_closure(grid, q_fn), SampledField.from_closure(grid, r_fn), **kw)


def zero_pair(grid: Grid1D) -> PotentialPair:
    return PotentialPair(SampledField.zeros(grid), SampledField.zeros(grid))


def gaussian_pair(grid: Grid1D, amplitude: complex = 1.0, width: float = 1.0, center: float = 0.0,
                  r_amplitude: complex | None = None, **kw) -> PotentialPair:
    """q = a exp(-((x-c)/w)^2) and r = b exp(-((x-c)/w)^2), b defaulting to a."""
    b = amplitude if r_amplitude is None else r_amplitude
    shape = lambda x: np.exp(-(((np.asarray(x, dtype=float) - center) / width) ** 2))
    return pair_from_functions(grid, lambda x: amplitude * shape(x) + 0j, lambda x: b * shape(x) + 0j, **kw)


def single_soliton_pair(grid: Grid1D, **kw) -> PotentialPair:
    """q = 4 e^{2x} / (e^{4x} - i) and r = conj(q): one bound state at lambda = i."""

    def q(x):
        x = np.asarray(x, dtype=float)
        # written with e = e^{-2|x|} so neither tail overflows
        e = np.exp(-2 * np.abs(x))
        return np.where(x > 0, 4 * e / (1 - 1j * e**2), 4 * e / (e**2 - 1j))

    return pair_from_functions(grid, q, lambda x: np.conj(q(x)), **kw)


# ---------------------------------------------------------------------------
# CSV

CSV_HEADER = ("x", "re_q", "im_q", "re_r", "im_r")


def write_pair_csv(p: PotentialPair, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for x, q, r in zip(p.grid.x, p.q.values, p.r.values):
        w.writerow([f"{v:.17g}" for v in (x, q.real, q.imag, r.real, r.imag)])


def read_pair_csv(stream, **kw) -> PotentialPair:
    rows = list(csv.reader(stream))
    if not rows or tuple(h.strip() for h in rows[0]) != CSV_HEADER:
        raise PotentialError(f"CSV header must be {','.join(CSV_HEADER)}")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise PotentialError(f"bad CSV value: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 5 or data.shape[0] < 3:
        raise PotentialError("CSV needs at least 3 rows of 5 columns")
    x = data[:, 0]
    grid = Grid1D(float(x[0]), float(x[-1]), len(x))
    if np.max(np.abs(x - grid.x)) > 1e-9 * max(1.0, abs(grid.x_max - grid.x_min)):
        raise PotentialError("CSV x column must be uniformly spaced")
    q = SampledField(grid, data[:, 1] + 1j * data[:, 2])
    r = SampledField(grid, data[:, 3] + 1j * data[:, 4])
    return PotentialPair(q, r, **kw)
