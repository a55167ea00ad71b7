"""Judging a candidate field against the optimality system Delta u = grad F(t, u)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import calculus
from .action import gradient_values
from .domain import Field

DEFAULT_TOLERANCES = {"strong_l2": 1e-6, "weak_max": 1e-6, "trace_mismatch": 1e-8}


@dataclass(frozen=True)
class ResidualReport:
    strong_l2: float
    strong_sup: float
    weak_max: float
    trace_mismatch: float
    passes: bool

    def lines(self):
        return [
            f"strong_l2 = {self.strong_l2:.17g}",
            f"strong_sup = {self.strong_sup:.17g}",
            f"weak_max = {self.weak_max:.17g}",
            f"trace_mismatch = {self.trace_mismatch:.17g}",
            f"passes = {str(self.passes).lower()}",
        ]


def strong_residual(field, P, scheme="spectral"):
    """r = Laplacian(u) - grad F(t, u) and its (L2, sup) norms."""
    d = field.domain
    r = -gradient_values(field.values, d, P, scheme)
    rf = Field(d, r)
    return rf, {"strong_l2": calculus.l2_norm(rf), "strong_sup": float(np.max(np.abs(r)))}


def default_max_mode(domain):
    return max(0, min(domain.grid_sizes) // 4)


def weak_residual(field, P, max_mode=None, scheme="spectral"):
    """Largest normalised weak-form defect over the trigonometric test family.

    For each test mode v:
    ``|integral sum_a (du/dt_a, dv/dt_a) + (grad F, v)| / ||v||_H1``.
    Derivatives of ``u`` come from the energy operator of ``scheme``; the
    test-mode derivative is exact for ``spectral`` and the forward difference
    of the sampled mode for ``centered2``.
    """
    d = field.domain
    if max_mode is None:
        max_mode = default_max_mode(d)
    modes = calculus.mode_family(d, max_mode)
    du = calculus.energy_derivatives(field, scheme).values
    coords = d.coords().reshape(-1, d.p)
    gF = np.asarray(P.gradient(coords, field.points()), float).reshape(d.field_shape)
    gF_marg = calculus._axis_marginals(gF, d)
    du_marg = [calculus._axis_marginals(du[..., a], d)[a] for a in range(d.p)]
    wt = d.weight()
    worst = 0.0
    for mode in modes:
        f, df = mode.profile(d)
        if scheme == "centered2":
            N, T = d.grid_sizes[mode.axis], d.periods[mode.axis]
            df = (np.roll(f, -1) - f) * (N / T)
        j, i = mode.axis, mode.comp
        num = float(gF_marg[j][:, i] @ f) * wt
        if mode.k:
            num += float(du_marg[j][:, i] @ df) * wt
        worst = max(worst, abs(num) / mode.h1_norm(d))
    return worst


def _interpolant_at(coeffs, domain, points):
    """Trigonometric interpolant with coefficients ``coeffs`` (FFT order) at points (Q, p)."""
    out = np.empty((points.shape[0],) + coeffs.shape[domain.p:])
    for q, t in enumerate(points):
        c = coeffs
        for a in range(domain.p):
            m = domain.wavenumbers(a)
            ph = np.exp(2j * np.pi * m * t[a] / domain.periods[a])
            c = np.tensordot(ph, c, axes=(0, 0))
        out[q] = np.real(c)
    return out


def _face_points(domain, axis, oversample, at_upper):
    grids = []
    for a in range(domain.p):
        if a == axis:
            grids.append(np.array([domain.periods[a] if at_upper else 0.0]))
        else:
            grids.append((np.arange(oversample) + 0.5) * domain.periods[a] / oversample)
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=-1)


def jump_indicator(field):
    """Estimate of a hidden jump across the periodic faces.

    Along each axis a jump J in the underlying function leaves discrete
    Fourier coefficients with ``2 N sin(pi |m| / N) |c_m| = J`` for every m.
    The indicator takes, per grid line, the smallest such value over the
    upper band ``N/4 <= |m| < N/2`` (so isolated high modes do not trigger
    it), then the largest over lines, components and axes. Fields whose
    content lies below ``N/4`` read as roundoff. Axes with N < 8 have no
    separate upper band and are skipped.
    """
    d = field.domain
    worst = 0.0
    for a in range(d.p):
        N = d.grid_sizes[a]
        if N < 8:
            continue
        c = np.fft.fft(field.values, axis=a) / N
        m = np.arange(N // 4, N // 2)
        band = np.take(c, m, axis=a)
        shape = [1] * band.ndim
        shape[a] = -1
        est = 2.0 * N * np.sin(np.pi * m / N).reshape(shape) * np.abs(band)
        worst = max(worst, float(np.max(np.min(est, axis=a))))
    return worst


def periodicity_check(field, oversample=4):
    """Mismatch of u and du/dt across opposite faces, plus the jump indicator.

    The trigonometric interpolants of u and of its spectral derivatives are
    evaluated at ``oversample`` points per tangential axis on each face pair;
    for grid data this part is a roundoff-level identity. Data sampled from a
    non-periodic function is caught by :func:`jump_indicator`.
    """
    if oversample < 2:
        raise ValueError("oversample must be >= 2")
    d = field.domain
    axes = tuple(range(d.p))
    cu = np.fft.fftn(field.values, axes=axes) / d.point_count()
    grads = calculus.partial_derivatives(field).values
    cg = np.fft.fftn(grads, axes=axes) / d.point_count()
    trace = 0.0
    for a in range(d.p):
        lo = _face_points(d, a, oversample, False)
        hi = _face_points(d, a, oversample, True)
        for c in (cu, cg):
            trace = max(trace, float(np.max(np.abs(_interpolant_at(c, d, lo) - _interpolant_at(c, d, hi)))))
    return max(trace, jump_indicator(field))


def residual_report(field, P, scheme="spectral", max_mode=None, oversample=4, tolerances=None):
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    _, strong = strong_residual(field, P, scheme)
    weak = weak_residual(field, P, max_mode, scheme)
    trace = periodicity_check(field, oversample)
    ok = strong["strong_l2"] <= tol["strong_l2"] and weak <= tol["weak_max"] and trace <= tol["trace_mismatch"]
    if not all(math.isfinite(x) for x in (strong["strong_l2"], weak, trace)):
        ok = False
    return ResidualReport(strong["strong_l2"], strong["strong_sup"], weak, trace, bool(ok))
