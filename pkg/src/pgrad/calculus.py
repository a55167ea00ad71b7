"""Discrete calculus on periodic grid fields.

Two derivative schemes are available:

``spectral``
    Fourier multiplication by ``2 pi i m / T`` per axis. The Nyquist mode
    ``m = -N/2`` is mapped to zero so derivatives of real fields stay real.
``centered2``
    Second-order centred differences with periodic wraparound.

Quadrature is the rectangle rule on the periodic grid (exact for
trigonometric polynomials below the grid bandwidth), summed in a fixed
sequential order by :func:`pgrad.kernels.grid_sum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .domain import Field, GradientField

SCHEMES = ("spectral", "centered2")

#: slack of every inequality verdict, relative to max(1, rhs)
INEQUALITY_SLACK = 1e-12


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown derivative scheme {scheme!r}; expected one of {SCHEMES}")


def _axis_view(values, axis):
    """Reshape a C-ordered (grid..., rest...) array to (pre, N_axis, post)."""
    shape = values.shape
    pre = math.prod(shape[:axis])
    return values.reshape(pre, shape[axis], -1)


def _deriv_symbol(domain, axis):
    """i * 2 pi m / T along ``axis`` with the Nyquist entry zeroed."""
    N, T = domain.grid_sizes[axis], domain.periods[axis]
    m = domain.wavenumbers(axis)
    k = 2.0 * np.pi * m / T
    k[m == -(N // 2)] = 0.0
    shape = [1] * (domain.p + 1)
    shape[axis] = N
    return (1j * k).reshape(shape)


def _second_symbol(domain):
    """Symbol of sum_a D_a o D_a: -sum_a (2 pi m_a / T_a)^2, Nyquist contributions dropped."""
    sym = np.zeros(domain.shape)
    for a in range(domain.p):
        N, T = domain.grid_sizes[a], domain.periods[a]
        m = domain.wavenumbers(a)
        k2 = (2.0 * np.pi * m / T) ** 2
        k2[m == -(N // 2)] = 0.0
        shape = [1] * domain.p
        shape[a] = N
        sym = sym - k2.reshape(shape)
    return sym[..., None]


def _spectral_axis_derivatives(values, domain):
    axes = tuple(range(domain.p))
    c = np.fft.fftn(values, axes=axes)
    return [np.fft.ifftn(c * _deriv_symbol(domain, a), axes=axes).real for a in axes]


def _stencil(values, domain, axis, kind):
    N, T = domain.grid_sizes[axis], domain.periods[axis]
    view = _axis_view(np.ascontiguousarray(values), axis)
    if kind == "centered":
        out = kernels.centered_diff(view, N / (2.0 * T))
    elif kind == "forward":
        out = kernels.forward_diff(view, N / T)
    else:
        out = kernels.second_diff(view, (N / T) ** 2)
    return out.reshape(values.shape)


def partial_derivatives(field, scheme="spectral"):
    """All partial velocities ``du^i/dt^a`` as a :class:`GradientField`."""
    _check_scheme(scheme)
    d = field.domain
    if scheme == "spectral":
        parts = _spectral_axis_derivatives(field.values, d)
    else:
        parts = [_stencil(field.values, d, a, "centered") for a in range(d.p)]
    return GradientField(d, np.stack(parts, axis=-1))


def energy_derivatives(field, scheme="spectral"):
    """Difference operator used inside the Dirichlet energy.

    For ``spectral`` this is :func:`partial_derivatives`. For ``centered2`` it
    is the forward difference, whose summation-by-parts adjoint is exactly
    the 3-point Laplacian, so energy and Laplacian stay mutually consistent.
    """
    _check_scheme(scheme)
    if scheme == "spectral":
        return partial_derivatives(field, scheme)
    d = field.domain
    parts = [_stencil(field.values, d, a, "forward") for a in range(d.p)]
    return GradientField(d, np.stack(parts, axis=-1))


def laplacian_values(values, domain, scheme="spectral"):
    if scheme == "spectral":
        axes = tuple(range(domain.p))
        c = np.fft.fftn(values, axes=axes)
        return np.fft.ifftn(c * _second_symbol(domain), axes=axes).real
    out = _stencil(values, domain, 0, "second")
    for a in range(1, domain.p):
        out = out + _stencil(values, domain, a, "second")
    return out


def laplacian(field, scheme="spectral"):
    """Sum of second derivatives per component.

    The spectral symbol is the composition of the spectral first derivatives,
    so a Nyquist mode along an axis contributes nothing on that axis.
    """
    _check_scheme(scheme)
    return Field(field.domain, laplacian_values(field.values, field.domain, scheme))


# --- quadrature and norms -----------------------------------------------------


def integrate_values(values, domain):
    pts = np.asarray(values, dtype=float).reshape(domain.point_count(), -1)
    return kernels.grid_sum(pts) * domain.weight()


def integrate(field):
    """Rectangle-rule integral over the box, one entry per component."""
    return integrate_values(field.values, field.domain)


def mean_part(field):
    return integrate(field) / field.domain.volume()


def fluct_part(field):
    return Field(field.domain, field.values - mean_part(field))


def _sq_integral(values, domain):
    pts = np.asarray(values, dtype=float).reshape(domain.point_count(), -1)
    return float(kernels.grid_sum(kernels.row_sqnorm(pts)[:, None])[0]) * domain.weight()


def l2_norm(field):
    return math.sqrt(_sq_integral(field.values, field.domain))


def grad_l2_norm(gfield):
    return math.sqrt(_sq_integral(gfield.values, gfield.domain))


def h1_norm(field, scheme="spectral"):
    g = partial_derivatives(field, scheme)
    return math.sqrt(_sq_integral(field.values, field.domain) + _sq_integral(g.values, g.domain))


# --- inequalities -------------------------------------------------------------


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    constant_used: float
    holds: bool = dc_field(init=False)

    def __post_init__(self):
        ok = self.lhs <= self.rhs + INEQUALITY_SLACK * max(1.0, self.rhs)
        object.__setattr__(self, "holds", bool(ok))


def theorem2_check(field):
    """|integral of u| <= sqrt(n * volume) * ||u||_L2."""
    d = field.domain
    lhs = float(np.linalg.norm(integrate(field)))
    const = math.sqrt(d.n * d.volume())
    return InequalityReport(lhs, const * l2_norm(field), const)


def wirtinger_constant(domain):
    """sqrt(volume) * max_a T_a / (2 pi).

    Chains ||u - mean||_L2 <= (max T / 2 pi) ||du/dt||_L2 (smallest nonzero
    Laplacian eigenvalue of the box) with Cauchy-Schwarz in L1. Valid, not sharp.
    """
    return math.sqrt(domain.volume()) * max(domain.periods) / (2.0 * math.pi)


def wirtinger_check(field):
    """integral |u - mean| <= C1 * ||du/dt||_L2, spectral derivatives."""
    d = field.domain
    fl = fluct_part(field).points()
    lhs = float(kernels.grid_sum(np.sqrt(kernels.row_sqnorm(fl))[:, None])[0]) * d.weight()
    c1 = wirtinger_constant(d)
    return InequalityReport(lhs, c1 * grad_l2_norm(partial_derivatives(field)), c1)


# --- test-function family -----------------------------------------------------


@dataclass(frozen=True)
class TrigMode:
    """``cos`` or ``sin`` of ``2 pi k t_axis / T_axis`` times the unit vector e_comp."""


    axis: int
    comp: int
    k: int
    kind: str

    def profile(self, domain):
        """Values along ``axis`` and their exact derivative."""
        T = domain.periods[self.axis]
        t = domain.axis_coords(self.axis)
        w = 2.0 * np.pi * self.k / T
        if self.kind == "cos":
            return np.cos(w * t), -w * np.sin(w * t)
        return np.sin(w * t), w * np.cos(w * t)

    def h1_norm(self, domain):
        """Exact H1 norm of the continuous mode."""
        V = domain.volume()
        if self.k == 0:
            return math.sqrt(V)
        w = 2.0 * np.pi * self.k / domain.periods[self.axis]
        return math.sqrt(0.5 * V * (1.0 + w * w))


def mode_family(domain, max_mode):
    """Constants e_i plus cos/sin modes 1..max_mode per axis and component."""
    limit = min(domain.grid_sizes) // 2 - 1
    if not 0 <= max_mode <= limit:
        raise ValueError(f"max_mode must lie in [0, {limit}], got {max_mode}")
    modes = [TrigMode(0, i, 0, "cos") for i in range(domain.n)]
    for a in range(domain.p):
        for i in range(domain.n):
            for k in range(1, max_mode + 1):
                modes.append(TrigMode(a, i, k, "cos"))
                modes.append(TrigMode(a, i, k, "sin"))
    return modes


def _axis_marginals(values, domain):
    """For each axis a: sum of values over all other axes, shape (N_a, ...)."""
    out = []
    for a in range(domain.p):
        others = tuple(b for b in range(domain.p) if b != a)
        out.append(values.sum(axis=others) if others else values)
    return out


def weak_identity_check(u, v, max_mode):
    """Largest defect of the integration-by-parts identity over the test family.

    For every test mode f and axis a computes
    ``integral (u, df/dt_a) + integral (v_a, f)``; this vanishes for all f
    exactly when ``v`` is the weak differential of ``u`` (up to the truncation).
    """
    d = u.domain
    if v.domain != d:
        raise ValueError("field and one-form live on different domains")
    wt = d.weight()
    # df integrates to zero for every nonconstant mode, so the mean of u can be
    # removed first; this keeps a large mean from polluting the pairing
    um = _axis_marginals(u.values - u.points().mean(axis=0), d)
    vm = [_axis_marginals(v.components[a].values, d) for a in range(d.p)]
    worst = 0.0
    for mode in mode_family(d, max_mode):
        f, df = mode.profile(d)
        j, i = mode.axis, mode.comp
        for a in range(d.p):
            # f depends on t_j only: integrate the axis-j marginals
            term = float(vm[a][j][:, i] @ f) * wt
            if a == j:
                term += float(um[j][:, i] @ df) * wt
            worst = max(worst, abs(term))
    return worst


# --- one-forms and curves -----------------------------------------------------


@dataclass(frozen=True)
class OneForm:
    """Vector-valued 1-form ``v_a dt^a``; ``components[a]`` is the field v_a."""

    domain: object
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.domain.p:
            raise ValueError(f"one-form needs {self.domain.p} components")
        for c in self.components:
            if c.domain != self.domain:
                raise ValueError("one-form components must share the domain")

    @classmethod
    def from_gradient(cls, g):
        return cls(g.domain, tuple(g.axis(a) for a in range(g.domain.p)))

    @classmethod
    def zero(cls, domain):
        z = Field(domain, np.zeros(domain.field_shape))
        return cls(domain, (z,) * domain.p)


def differential(field, scheme="spectral"):
    """``du`` as a :class:`OneForm`."""
    return OneForm.from_gradient(partial_derivatives(field, scheme))


@dataclass(frozen=True)
class Curve:
    """Axis-aligned lattice path from O, winding ``windings[a]`` times round axis a.

    ``waypoints`` are unwrapped integer grid indices; the last one must equal
    ``windings[a] * N_a`` on every axis.
    """

    waypoints: tuple
    samples_per_segment: int
    windings: tuple

    def validate(self, domain):
        pts = [tuple(int(x) for x in w) for w in self.waypoints]
        if len(pts) < 2:
            raise ValueError("curve needs at least two waypoints")
        if any(len(w) != domain.p for w in pts):
            raise ValueError("waypoint dimension does not match the domain")
        if any(pts[0]):
            raise ValueError("curve must start at the origin")
        end = tuple(w * N for w, N in zip(self.windings, domain.grid_sizes))
        if pts[-1] != end:
            raise ValueError(f"curve ends at {pts[-1]}, expected {end}")
        for a, b in zip(pts, pts[1:]):
            if sum(x != y for x, y in zip(a, b)) != 1:
                raise ValueError(f"waypoints {a} -> {b} must differ on exactly one axis")
        if self.samples_per_segment < 1:
            raise ValueError("samples_per_segment must be positive")
        return pts


def make_curve(waypoints, samples_per_segment, windings=None):
    wp = tuple(tuple(int(x) for x in w) for w in waypoints)
    if windings is None:
        windings = (1,) * len(wp[0])
    return Curve(wp, int(samples_per_segment), tuple(int(w) for w in windings))


def random_curve(domain, seed=0, segments_per_axis=3, samples_per_segment=None, windings=None):
    """Random axis-aligned O -> T lattice path (excursions may go backwards)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    windings = tuple(windings) if windings is not None else (1,) * domain.p
    moves = []
    for a, N in enumerate(domain.grid_sizes):
        parts = rng.integers(-N, 2 * N, size=segments_per_axis - 1).tolist()
        parts.append(windings[a] * N - sum(parts))
        moves.extend((a, s) for s in parts if s != 0)
    rng.shuffle(moves)
    pos = [0] * domain.p
    pts = [tuple(pos)]
    for a, s in moves:
        pos[a] += s
        pts.append(tuple(pos))
    if samples_per_segment is None:
        samples_per_segment = 4 * max(domain.grid_sizes)
    return Curve(tuple(pts), int(samples_per_segment), windings)


def _line_interpolant(line, T, t):
    """Trigonometric interpolant of periodic samples ``line`` (N, n) at points ``t``."""
    N = line.shape[0]
    c = np.fft.fft(line, axis=0) / N
    m = np.fft.fftfreq(N, d=1.0 / N)
    phase = np.exp(2j * np.pi * np.outer(t, m) / T)
    return (phase @ c).real


def path_integral(form, curve):
    """Line integral of ``v_a dt^a`` along an axis-aligned lattice curve.

    Each segment is integrated with ``samples_per_segment`` Gauss-Legendre
    nodes applied to the trigonometric interpolant of ``v_a`` on the grid
    line the segment runs along.
    """
    d = form.domain
    pts = curve.validate(d)
    x, wq = np.polynomial.legendre.leggauss(curve.samples_per_segment)
    total = np.zeros(d.n)
    for start, stop in zip(pts, pts[1:]):
        a = next(i for i in range(d.p) if start[i] != stop[i])
        N, T = d.grid_sizes[a], d.periods[a]
        h = T / N
        idx = [s % Ns for s, Ns in zip(start, d.grid_sizes)]
        idx[a] = slice(None)
        line = form.components[a].values[tuple(idx)]
        t0, t1 = start[a] * h, stop[a] * h
        half, mid = 0.5 * (t1 - t0), 0.5 * (t1 + t0)
        vals = _line_interpolant(line, T, mid + half * x)
        total += half * (wq @ vals)
    return total
