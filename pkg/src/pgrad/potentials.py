"""Potentials F(t, u) and sampling falsifiers for their structural hypotheses.

A :class:`Potential` works on batches: ``t`` has shape ``(..., p)`` and ``u``
shape ``(..., n)``; values come back with shape ``(...)`` and gradients with
shape ``(..., n)``.

The checkers draw deterministic samples from a seeded generator. They can
only falsify: a ``pass`` verdict means no violation was found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .domain import Field


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    value: Callable
    gradient: Callable
    claimed_bound: Optional[Callable] = None
    difference: Optional[Callable] = None
    name: str = "user"
    params: dict = dc_field(default_factory=dict)

    def eval(self, t, u):
        """F(t, u) at a single point."""
        return float(np.asarray(self.value(np.asarray(t, float), np.asarray(u, float))))

    def grad(self, t, u):
        """grad_u F(t, u) at a single point."""
        return np.asarray(self.gradient(np.asarray(t, float), np.asarray(u, float)), float)

    def diff(self, t, u, d):
        """F(t, u + d) - F(t, u); cancellation-free for builtins."""
        if self.difference is not None:
            return self.difference(t, u, d)
        return self.value(t, u + d) - self.value(t, u)

    def with_bound(self, bound):
        """Copy with ``claimed_bound`` replaced (constant or callable g(t))."""
        return Potential(
            self.value, self.gradient, _as_bound(bound), self.difference, self.name, self.params
        )


def _as_bound(bound):
    if bound is None or callable(bound):
        return bound
    c = float(bound)
    if c < 0:
        raise PotentialError("claimed bound must be nonnegative")
    return lambda t: np.full(np.shape(t)[:-1], c)


# --- forcings -----------------------------------------------------------------


def mode_forcing(amplitude, periods, mode=1, axis=0, kind="cos"):
    """t -> amplitude * cos|sin(2 pi mode t_axis / T_axis); amplitude is a vector in R^n."""
    amp = np.atleast_1d(np.asarray(amplitude, dtype=float))
    T = float(periods[axis])
    trig = {"cos": np.cos, "sin": np.sin}[kind]

    def forcing(t):
        t = np.asarray(t, dtype=float)
        return trig(2.0 * np.pi * mode * t[..., axis] / T)[..., None] * amp

    return forcing


def grid_forcing(field):
    """Forcing given by a field on the grid, looked up at the nearest node."""
    vals = field.values

    def forcing(t):
        return vals[field.domain.node_of(t)]

    return forcing


def _as_forcing(obj, n):
    if obj is None:
        return None
    if isinstance(obj, Field):
        if obj.domain.n != n:
            raise PotentialError(f"forcing field has n={obj.domain.n}, expected {n}")
        return grid_forcing(obj)
    if callable(obj):
        return obj
    c = np.broadcast_to(np.asarray(obj, dtype=float), (n,)).copy()
    return lambda t: np.broadcast_to(c, np.shape(t)[:-1] + (n,))


def _flat(t, u, forcing):
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)
    n = u.shape[-1]
    U = u.reshape(-1, n)
    if forcing is None:
        H = np.zeros_like(U)
    else:
        H = np.broadcast_to(np.asarray(forcing(t), dtype=float), u.shape).reshape(-1, n)
    return U, H, u.shape[:-1]


def _forcing_norm(forcing, n):
    if forcing is None:
        return lambda t: np.zeros(np.shape(t)[:-1])
    return lambda t: np.linalg.norm(np.broadcast_to(forcing(t), np.shape(t)[:-1] + (n,)), axis=-1)


# --- builtins -----------------------------------------------------------------

BUILTINS = ("zero", "linear_forcing", "quadratic", "pseudo_huber", "cosine")


def builtin(name, params=None, n=1):
    """Construct a builtin potential.

    ``zero``            F = 0
    ``linear_forcing``  F = (c(t), u)                         params: forcing
    ``quadratic``       F = kappa/2 |u|^2                     params: kappa
    ``pseudo_huber``    F = kappa (sqrt(1+|u|^2) - 1) + (h, u)  params: kappa, forcing
    ``cosine``          F = A sum_i (1 - cos u_i) + (h, u)      params: amplitude, forcing

    ``forcing`` may be a callable ``t -> R^n`` (batched), a constant vector or
    a :class:`~pgrad.domain.Field`. ``n`` is the codomain dimension; it sizes
    constant forcings and the cosine bound ``A sqrt(n) + |h|``. Every builtin
    accepts ``bound`` to override the claimed bound on |grad F|.
    """
    params = dict(params or {})
    if name not in BUILTINS:
        raise PotentialError(f"unknown potential {name!r}; expected one of {BUILTINS}")
    bound_override = params.pop("bound", None)
    known = {
        "zero": set(),
        "linear_forcing": {"forcing"},
        "quadratic": {"kappa"},
        "pseudo_huber": {"kappa", "forcing"},
        "cosine": {"amplitude", "forcing"},
    }[name]
    extra = set(params) - known
    if extra:
        raise PotentialError(f"{name}: unknown parameter(s) {sorted(extra)}")
    nn = int(n)
    forcing = _as_forcing(params.get("forcing"), nn)
    if name == "linear_forcing" and forcing is None:
        raise PotentialError("linear_forcing needs a 'forcing'")

    if name == "zero":
        pot = Potential(
            lambda t, u: np.zeros(np.shape(u)[:-1]),
            lambda t, u: np.zeros(np.shape(u)),
            lambda t: np.zeros(np.shape(t)[:-1]),
            lambda t, u, d: np.zeros(np.shape(u)[:-1]),
            name,
            params,
        )
    elif name == "linear_forcing":

        def value(t, u):
            U, H, shp = _flat(t, u, forcing)
            return np.einsum("ki,ki->k", U, H).reshape(shp)

        def gradient(t, u):
            U, H, shp = _flat(t, u, forcing)
            return H.reshape(shp + (U.shape[1],)).copy()

        def difference(t, u, d):
            D, H, shp = _flat(t, d, forcing)
            return np.einsum("ki,ki->k", D, H).reshape(shp)

        pot = Potential(value, gradient, _forcing_norm(forcing, nn), difference, name, params)
    elif name == "quadratic":
        kappa = float(params.get("kappa", 1.0))
        if not kappa > 0:
            raise PotentialError("quadratic: kappa must be positive")

        def value(t, u):
            u = np.asarray(u, float)
            return 0.5 * kappa * kernels.row_sqnorm(u.reshape(-1, u.shape[-1])).reshape(u.shape[:-1])

        def gradient(t, u):
            return kappa * np.asarray(u, float)

        def difference(t, u, d):
            u, d = np.asarray(u, float), np.asarray(d, float)
            # |u+d|^2 - |u|^2 = (2u + d, d)
            return 0.5 * kappa * np.sum((2.0 * u + d) * d, axis=-1)

        pot = Potential(value, gradient, None, difference, name, params)
    else:
        if name == "pseudo_huber":
            coef = float(params.get("kappa", 1.0))
            if not coef > 0:
                raise PotentialError("pseudo_huber: kappa must be positive")
            kern, kdiff = kernels.pseudo_huber, kernels.pseudo_huber_diff
            scale = coef
        else:
            coef = float(params.get("amplitude", 1.0))
            if not coef >= 0:
                raise PotentialError("cosine: amplitude must be nonnegative")
            kern, kdiff = kernels.cosine, kernels.cosine_diff
            scale = coef * math.sqrt(nn)

        def value(t, u):
            U, H, shp = _flat(t, u, forcing)
            return kern(U, H, coef)[0].reshape(shp)

        def gradient(t, u):
            U, H, shp = _flat(t, u, forcing)
            return kern(U, H, coef)[1].reshape(shp + (U.shape[1],))

        def difference(t, u, d):
            U, H, shp = _flat(t, u, forcing)
            D = np.asarray(d, float).reshape(U.shape)
            return kdiff(U, D, H, coef).reshape(shp)

        hnorm = _forcing_norm(forcing, nn)
        pot = Potential(value, gradient, lambda t: scale + hnorm(t), difference, name, params)

    if bound_override is not None:
        pot = pot.with_bound(bound_override)
    return pot


def user_potential(value, gradient, claimed_bound=None, vectorized=True, name="user"):
    """Wrap user callables. Pointwise callables are looped over batches."""
    if vectorized:
        return Potential(value, gradient, _as_bound(claimed_bound), None, name)

    def v(t, u):
        t, u = np.asarray(t, float), np.asarray(u, float)
        T, U = t.reshape(-1, t.shape[-1]), u.reshape(-1, u.shape[-1])
        return np.array([value(a, b) for a, b in zip(T, U)]).reshape(u.shape[:-1])

    def g(t, u):
        t, u = np.asarray(t, float), np.asarray(u, float)
        T, U = t.reshape(-1, t.shape[-1]), u.reshape(-1, u.shape[-1])
        return np.array([gradient(a, b) for a, b in zip(T, U)]).reshape(u.shape)

    bound = claimed_bound
    if callable(bound):
        def bound(t, _b=claimed_bound):  # noqa: E306
            t = np.asarray(t, float)
            return np.array([_b(a) for a in t.reshape(-1, t.shape[-1])]).reshape(t.shape[:-1])

    return Potential(v, g, _as_bound(bound), None, name)


# --- hypothesis reports -------------------------------------------------------

PROPERTIES = ("grad_fd_consistency", "bounded_gradient", "linear_growth", "coercivity_probe")


@dataclass(frozen=True)
class HypothesisReport:
    checked_property: str
    samples: int
    worst_violation: float
    witness: Optional[tuple]
    verdict: str
    details: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in ("pass", "fail", "inconclusive"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == "fail" and self.witness is None:
            raise ValueError("a failing report needs a witness")

    def lines(self):
        out = [
            f"property = {self.checked_property}",
            f"verdict = {self.verdict}",
            f"samples = {self.samples}",
            f"worst_violation = {self.worst_violation:.17g}",
        ]
        if self.witness is not None:
            t, u = self.witness
            out.append("witness_t = " + " ".join(f"{x:.17g}" for x in np.ravel(t)))
            out.append("witness_u = " + " ".join(f"{x:.17g}" for x in np.ravel(u)))
        for k, v in self.details.items():
            out.append(f"{k} = {v:.17g}" if isinstance(v, float) else f"{k} = {v}")
        return out


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _sample_t(domain, rng, count):
    idx = [rng.integers(0, N, size=count) for N in domain.grid_sizes]
    return np.stack([i * (T / N) for i, T, N in zip(idx, domain.periods, domain.grid_sizes)], axis=-1)


def _sample_ball(rng, count, n, radius):
    e = rng.standard_normal((count, n))
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / n)
    return e * r[:, None]


def _sample_sphere(rng, count, n, radius):
    e = rng.standard_normal((count, n))
    return radius * e / np.linalg.norm(e, axis=1, keepdims=True)


def fd_check_potential_grad(P, domain, sample_count=200, radius=10.0, seed=0, tol=1e-5):
    """Central differences of ``P.value`` against ``P.gradient``.

    Step ``1e-5 * max(1, |u|)`` per coordinate. The error of a sample is
    ``|fd - grad| / max(|grad|, |fd|, floor)``; the floor sits far above the
    differencing roundoff so exact stationary points do not read as failures.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = _rng(seed)
    n = domain.n
    t = _sample_t(domain, rng, sample_count)
    u = _sample_ball(rng, sample_count, n, radius)
    g = np.asarray(P.gradient(t, u), float)
    F = np.asarray(P.value(t, u), float)
    unorm = np.linalg.norm(u, axis=1)
    h = 1e-5 * np.maximum(1.0, unorm)
    fd = np.empty_like(u)
    for i in range(n):
        step = np.zeros_like(u)
        step[:, i] = h
        fd[:, i] = (P.value(t, u + step) - P.value(t, u - step)) / (2.0 * h)
    err = np.linalg.norm(fd - g, axis=1)
    floor = 1e-6 * np.maximum(1.0, np.abs(F)) / np.maximum(1.0, unorm)
    denom = np.maximum.reduce([np.linalg.norm(g, axis=1), np.linalg.norm(fd, axis=1), floor])
    rel = err / denom
    k = int(np.argmax(rel))
    worst = float(rel[k])
    verdict = "pass" if worst <= tol else "fail"
    return HypothesisReport(
        "grad_fd_consistency", sample_count, worst, (t[k], u[k]), verdict, {"tolerance": tol}
    )


def bounded_grad_check(P, domain, sample_count=500, radius=10.0, seed=0):
    """|grad_u F(t, u)| <= g(t) for t on grid nodes and u uniform in a ball."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if P.claimed_bound is None:
        return HypothesisReport("bounded_gradient", 0, float("nan"), None, "inconclusive",
                                {"reason": "no claimed bound"})
    rng = _rng(seed)
    t = _sample_t(domain, rng, sample_count)
    u = _sample_ball(rng, sample_count, domain.n, radius)
    gn = np.linalg.norm(np.asarray(P.gradient(t, u), float), axis=1)
    bound = np.asarray(P.claimed_bound(t), float)
    margin = gn - bound
    k = int(np.argmax(margin))
    bad = gn > bound * (1.0 + 1e-12)
    verdict = "fail" if bad.any() else "pass"
    if bad.any():
        k = int(np.argmax(np.where(bad, margin, -np.inf)))
    return HypothesisReport(
        "bounded_gradient", sample_count, float(margin[k]), (t[k], u[k]), verdict,
        {"g0": float(np.max(bound)), "max_grad_norm": float(np.max(gn))},
    )


def _affine_majorant(s, y, s_max):
    """Smallest-area affine a(s) = M s + a0 (M, a0 >= 0) with a(s_j) >= y_j on [0, s_max]."""
    res = linprog(
        c=[0.5 * s_max, 1.0],
        A_ub=np.column_stack([-s, -np.ones_like(s)]),
        b_ub=-y,
        bounds=[(0, None), (0, None)],
        method="highs",
    )
    if not res.success:
        return math.inf, math.inf
    M, a0 = res.x
    # LP tolerances may leave a hair of infeasibility; lift a0 to cover it
    a0 = max(a0, float(np.max(y - M * s)))
    return float(M), float(a0)


def growth_check(P, domain, b=None, sample_count=500, radius=10.0, seed=0, ratio_limit=2.5):
    """Fit a(s) = M s + a0 with |F| <= a(|u|) b(t) and |grad F| <= a(|u|) b(t).

    Superlinear growth is flagged by doubling the radius: the largest
    normalised value on the shell |u| = R over that on |u| = R/2 exceeds
    ``ratio_limit`` (an affine majorant keeps the ratio at most 2).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = _rng(seed)
    n = domain.n
    bfun = (lambda t: np.ones(np.shape(t)[:-1])) if b is None else b

    def normalised(t, u):
        F = np.abs(np.asarray(P.value(t, u), float))
        G = np.linalg.norm(np.asarray(P.gradient(t, u), float), axis=1)
        bt = np.asarray(bfun(t), float)
        if np.any(bt <= 0):
            raise ValueError("b must be positive on the box")
        return np.maximum(F, G) / bt

    t = _sample_t(domain, rng, sample_count)
    u = _sample_ball(rng, sample_count, n, radius)
    shells = []
    for r in (radius / 4.0, radius / 2.0, radius):
        ts = _sample_t(domain, rng, sample_count // 4 + 1)
        us = _sample_sphere(rng, ts.shape[0], n, r)
        shells.append((ts, us, normalised(ts, us)))
    t_all = np.concatenate([t] + [s[0] for s in shells])
    u_all = np.concatenate([u] + [s[1] for s in shells])
    y_all = np.concatenate([normalised(t, u)] + [s[2] for s in shells])
    s_all = np.linalg.norm(u_all, axis=1)

    top_half, top = float(np.max(shells[1][2])), float(np.max(shells[2][2]))
    ratio = top / top_half if top_half > 0 else (math.inf if top > 0 else 1.0)
    M, a0 = _affine_majorant(s_all, y_all, radius)
    details = {"slope_M": M, "intercept_a0": a0, "doubling_ratio": ratio}
    if ratio > ratio_limit or not math.isfinite(M):
        k = int(np.argmax(shells[2][2]))
        return HypothesisReport("linear_growth", len(y_all), ratio, (shells[2][0][k], shells[2][1][k]),
                                "fail", details)
    k = int(np.argmax(y_all - (M * s_all + a0)))
    return HypothesisReport("linear_growth", len(y_all), float(y_all[k] - (M * s_all[k] + a0)),
                            (t_all[k], u_all[k]), "pass", details)


def coercivity_probe(P, domain, direction_count=8, radii=(0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0),
                     seed=0, trend_tol=0.05):
    """Probe integral F(t, r e) dt -> infinity along random unit directions e.

    Per direction: ``fail`` if the integral does not grow from the first to the
    last radius or any increment drops below ``-trend_tol`` times the largest
    one; ``pass`` if the last increment is within ``trend_tol`` of the largest;
    otherwise ``inconclusive``. The worst direction decides the verdict.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing with at least 3 values")
    rng = _rng(seed)
    n = domain.n
    coords = domain.coords().reshape(-1, domain.p)
    w = domain.weight()
    dirs = _sample_sphere(rng, direction_count, n, 1.0)
    verdicts, totals = [], []
    fail_witness = None
    curves = []
    for e in dirs:
        I = np.empty(radii.size)
        for j, r in enumerate(radii):
            u = np.broadcast_to(r * e, (coords.shape[0], n))
            I[j] = float(kernels.grid_sum(np.asarray(P.value(coords, u), float)[:, None])[0]) * w
        curves.append(I)
        inc = np.diff(I)
        total = I[-1] - I[0]
        scale = float(np.max(np.abs(inc))) or 1.0
        totals.append(total)
        if total <= 0 or np.any(inc < -trend_tol * scale):
            verdicts.append("fail")
            if fail_witness is None:
                j = int(np.argmin(inc)) + 1 if np.any(inc < 0) else radii.size - 1
                fail_witness = (coords[0], radii[j] * e)
        elif inc[-1] >= (1.0 - trend_tol) * float(np.max(inc)):
            verdicts.append("pass")
        else:
            verdicts.append("inconclusive")
    if "fail" in verdicts:
        verdict = "fail"
    elif all(v == "pass" for v in verdicts):
        verdict = "pass"
    else:
        verdict = "inconclusive"
    k = int(np.argmin(totals))
    witness = fail_witness if verdict == "fail" else (coords[0], radii[-1] * dirs[k])
    return HypothesisReport(
        "coercivity_probe", direction_count * radii.size, float(-totals[k]), witness, verdict,
        {"min_increase": float(totals[k]), "radii": " ".join(f"{r:g}" for r in radii)},
    )
