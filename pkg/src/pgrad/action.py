"""The action functional, its gradient, and the coercivity lower bound.

    phi(u) = integral [ 1/2 |du/dt|^2 + F(t, u) ] dt

On the grid the kinetic part is the rectangle-rule sum of the squared energy
derivatives (:func:`pgrad.calculus.energy_derivatives`). Its exact gradient
is ``-Laplacian(u)`` with the matching discrete Laplacian, so

    G = -Laplacian(u) + grad_u F(t, u)

is the L2-representer of the first variation: ``dphi(u)[v] = integral (G, v)``.
The optimizer uses the raw parameter gradient ``w * G`` (``w`` the node
weight), returned as a plain array so the two conventions cannot be mixed up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import calculus, kernels
from .domain import Field


class ActionError(ArithmeticError):
    """Non-finite potential value while evaluating the action."""


@dataclass(frozen=True)
class ActionValue:
    total: float
    kinetic: float
    potential: float


def _sum(values, domain):
    return float(kernels.grid_sum(np.asarray(values, float).reshape(-1, 1))[0]) * domain.weight()


def _potential_values(P, domain, pts):
    coords = domain.coords().reshape(-1, domain.p)
    with np.errstate(over="ignore", invalid="ignore"):  # reported below
        F = np.asarray(P.value(coords, pts), float).reshape(-1)
    if not np.isfinite(F).all():
        k = int(np.argwhere(~np.isfinite(F))[0, 0])
        raise ActionError(f"non-finite potential at grid index {tuple(int(i) for i in np.unravel_index(k, domain.shape))}")
    return F


def action(field, P, scheme="spectral"):
    d = field.domain
    g = calculus.energy_derivatives(field, scheme)
    kinetic = 0.5 * calculus._sq_integral(g.values, d)
    potential = _sum(_potential_values(P, d, field.points()), d)
    return ActionValue(kinetic + potential, kinetic, potential)


def gradient_values(values, domain, P, scheme="spectral"):
    """-Laplacian(u) + grad F as an array shaped like ``values``."""
    coords = domain.coords().reshape(-1, domain.p)
    with np.errstate(over="ignore", invalid="ignore"):  # reported below
        gF = np.asarray(P.gradient(coords, values.reshape(-1, domain.n)), float)
        out = gF.reshape(values.shape) - calculus.laplacian_values(values, domain, scheme)
    if not np.isfinite(out).all():
        raise ActionError("non-finite gradient")
    return out


def action_gradient(field, P, scheme="spectral", raw=False):
    """L2-representer ``G`` of the first variation, as a :class:`Field`.

    With ``raw=True`` returns the parameter-space gradient ``w * G`` instead,
    flattened in storage order (a bare ``ndarray``, not a Field).
    """
    d = field.domain
    G = gradient_values(field.values, d, P, scheme)
    if raw:
        return G.reshape(-1) * d.weight()
    return Field(d, G)


def pairing(a, b):
    """Quadrature of (a, b) for two fields (or same-shaped arrays) on one domain."""
    d = a.domain
    av = a.values if isinstance(a, Field) else np.asarray(a)
    bv = b.values if isinstance(b, Field) else np.asarray(b)
    return _sum(np.sum((av * bv).reshape(d.point_count(), -1), axis=1), d)


class ActionDifference:
    """Evaluates ``phi(u + s d) - phi(u)`` for a fixed base point and direction.

    The kinetic part uses the exact expansion ``s <Du, Dd> + s^2/2 |Dd|^2`` and
    the potential part :meth:`Potential.diff`, so the result is accurate
    relative to the difference itself rather than to ``phi(u)``.
    """

    def __init__(self, values, direction, domain, P, scheme="spectral"):
        self.domain = domain
        self.P = P
        self.u = values.reshape(-1, domain.n)
        self.dvec = direction.reshape(-1, domain.n)
        self.coords = domain.coords().reshape(-1, domain.p)
        du = calculus.energy_derivatives(Field(domain, values), scheme).values
        dd = calculus.energy_derivatives(Field(domain, direction), scheme).values
        self.cross = _sum(np.sum((du * dd).reshape(domain.point_count(), -1), axis=1), domain)
        self.dd2 = calculus._sq_integral(dd, domain)

    def __call__(self, s):
        kin = s * self.cross + 0.5 * s * s * self.dd2
        dF = np.asarray(self.P.diff(self.coords, self.u, s * self.dvec), float).reshape(-1)
        if not np.isfinite(dF).all():
            raise ActionError("non-finite potential difference")
        return kin + _sum(dF, self.domain)


def fd_gradient_check(field, P, scheme="spectral", trials=3, seed=0, gradient=None):
    """Largest relative gap between central differences of phi and (G, v).

    Directions ``v`` are random with unit L2 norm; the step is
    ``1e-5 * (1 + ||u||_H1)``. ``gradient`` overrides the representer under
    test (callable ``field -> Field``), for auditing alternative gradients.
    """
    d = field.domain
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    G = gradient(field) if gradient is not None else action_gradient(field, P, scheme)
    h = 1e-5 * (1.0 + calculus.h1_norm(field))
    worst = 0.0
    for _ in range(trials):
        v = rng.standard_normal(d.field_shape)
        v /= math.sqrt(calculus._sq_integral(v, d))
        vf = Field(d, v)
        fd = (action(field + h * vf, P, scheme).total - action(field - h * vf, P, scheme).total) / (2 * h)
        an = pairing(G, vf)
        denom = max(abs(an), abs(fd), 1e-12)
        worst = max(worst, abs(fd - an) / denom)
    return worst


def coercivity_lower_bound(field, P):
    """1/2 ||du/dt||^2 + integral F(t, mean u) dt - g0 C1 ||du/dt||.

    ``g0`` is the largest |claimed_bound| over grid nodes and ``C1`` the
    Wirtinger constant of the box. Spectral derivatives throughout.
    """
    if P.claimed_bound is None:
        raise ValueError("coercivity_lower_bound needs a potential with a claimed bound")
    d = field.domain
    coords = d.coords().reshape(-1, d.p)
    g0 = float(np.max(np.abs(np.asarray(P.claimed_bound(coords), float))))
    gn = calculus.grad_l2_norm(calculus.partial_derivatives(field))
    ubar = np.broadcast_to(calculus.mean_part(field), (d.point_count(), d.n))
    Fbar = _sum(_potential_values(P, d, ubar), d)
    return 0.5 * gn * gn + Fbar - g0 * calculus.wirtinger_constant(d) * gn
