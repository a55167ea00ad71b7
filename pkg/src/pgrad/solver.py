"""Minimizing sequences for the action: gradient descent and L-BFGS with Armijo backtracking."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import calculus
from .action import ActionDifference, ActionError, action, gradient_values
from .domain import Field

log = logging.getLogger(__name__)

METHODS = ("gradient_descent", "lbfgs")
STOP_REASONS = ("converged", "max_iters", "line_search_failed", "numerical_failure")


@dataclass(frozen=True)
class SolveOptions:
    method: str = "lbfgs"
    max_iters: int = 10_000
    grad_tol: Optional[float] = None  # None: 1e-8 * (1 + |phi(u0)|)
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    lbfgs_memory: int = 10
    pin_mean: bool = False
    scheme: str = "spectral"
    max_backtracks: int = 60

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.scheme not in calculus.SCHEMES:
            raise ValueError(f"scheme must be one of {calculus.SCHEMES}, got {self.scheme!r}")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 0 or self.lbfgs_memory < 1 or self.max_backtracks < 1:
            raise ValueError("max_iters, lbfgs_memory and max_backtracks must be positive")


@dataclass
class SolveReport:
    """Record of a minimizing sequence.

    ``iterates_phi[0]`` is evaluated directly; later entries add the accepted
    decrease ``decreases[k]`` computed in cancellation-free form, so the list
    is non-increasing exactly as stored. ``final_phi`` is a fresh direct
    evaluation at ``final_field``.
    """

    iterates_phi: list
    grad_norms: list
    final_field: Field
    converged: bool
    iterations: int
    stop_reason: str
    grad_tol: float
    final_phi: float = math.nan
    steps: list = dc_field(default_factory=list)
    slopes: list = dc_field(default_factory=list)
    decreases: list = dc_field(default_factory=list)

    def lines(self):
        return [
            f"converged = {str(self.converged).lower()}",
            f"stop_reason = {self.stop_reason}",
            f"iterations = {self.iterations}",
            f"grad_tol = {self.grad_tol:.17g}",
            f"phi_initial = {self.iterates_phi[0]:.17g}",
            f"phi_final = {self.final_phi:.17g}",
            f"grad_norm_initial = {self.grad_norms[0]:.17g}",
            f"grad_norm_final = {self.grad_norms[-1]:.17g}",
        ]


def _project_mean(arr):
    """Remove the per-component grid mean of a (P, n) array."""
    return arr - arr.mean(axis=0)


def _two_loop(g, S, Y):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append((rho, a))
    s, y = S[-1], Y[-1]
    q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(S, Y), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def minimize(initial, P, opts=None):
    """Drive the action downhill from ``initial``.

    With ``pin_mean`` the search directions are projected onto mean-zero
    fields and the mean is reset to the initial one after each step, which
    removes the constant null direction of the kinetic term.
    """
    opts = opts or SolveOptions()
    d = initial.domain
    n = d.n
    w = d.weight()
    x = np.array(initial.values, dtype=float).reshape(-1, n)
    mean0 = calculus.mean_part(initial)

    def grad_rep(xv):
        G = gradient_values(xv.reshape(d.field_shape), d, P, opts.scheme).reshape(-1, n)
        return _project_mean(G) if opts.pin_mean else G

    try:
        phi = action(initial, P, opts.scheme).total
        G = grad_rep(x)
        gnorm = float(np.max(np.abs(G)))
    except ActionError as exc:
        log.warning("numerical failure at the initial field: %s", exc)
        phi = gnorm = math.nan
    tol = opts.grad_tol if opts.grad_tol is not None else 1e-8 * (1.0 + abs(phi))
    rep = SolveReport([phi], [gnorm], initial, False, 0, "max_iters", tol, final_phi=phi)
    if not (math.isfinite(phi) and math.isfinite(gnorm)):
        rep.stop_reason = "numerical_failure"
        return rep

    S, Y = [], []
    for it in range(opts.max_iters + 1):
        if gnorm <= tol:
            rep.converged, rep.stop_reason = True, "converged"
            break
        if it == opts.max_iters:
            break
        g = w * G.reshape(-1)
        if opts.method == "lbfgs" and S:
            dvec = _two_loop(g, S, Y)
        else:
            dvec = -g
        if opts.pin_mean:
            dvec = _project_mean(dvec.reshape(-1, n)).reshape(-1)
        slope = float(np.dot(g, dvec))
        if not slope < 0:
            S.clear(), Y.clear()
            dvec, slope = -g, -float(np.dot(g, g))

        try:
            diff = ActionDifference(x.reshape(d.field_shape), dvec.reshape(d.field_shape), d, P, opts.scheme)
            s = 1.0
            for _ in range(opts.max_backtracks):
                delta = diff(s)
                if not math.isfinite(delta):
                    raise ActionError("non-finite action difference")
                if delta <= opts.armijo_c * s * slope:
                    break
                s *= opts.backtrack_factor
            else:
                rep.stop_reason = "line_search_failed"
                break
            x_new = x + s * dvec.reshape(-1, n)
            if opts.pin_mean:
                x_new = x_new - (x_new.mean(axis=0) - mean0)
            G_new = grad_rep(x_new)
        except ActionError as exc:
            log.warning("numerical failure at iteration %d: %s", it, exc)
            rep.stop_reason = "numerical_failure"
            break

        sk = (x_new - x).reshape(-1)
        yk = w * (G_new - G).reshape(-1)
        sy = float(np.dot(sk, yk))
        if sy > 1e-12 * np.linalg.norm(sk) * np.linalg.norm(yk):
            S.append(sk)
            Y.append(yk)
            if len(S) > opts.lbfgs_memory:
                S.pop(0), Y.pop(0)
        else:
            S.clear(), Y.clear()

        x, G = x_new, G_new
        phi = phi + delta
        gnorm = float(np.max(np.abs(G)))
        rep.iterates_phi.append(phi)
        rep.grad_norms.append(gnorm)
        rep.steps.append(s)
        rep.slopes.append(slope)
        rep.decreases.append(delta)
        rep.iterations = it + 1
        if log.isEnabledFor(logging.DEBUG) and (it % 100 == 0):
            log.debug("iter %d phi %.12g |G| %.3e step %.3g", it, phi, gnorm, s)

    rep.final_field = Field(d, x.reshape(d.field_shape))
    rep.final_phi = action(rep.final_field, P, opts.scheme).total
    log.info("solve stopped: %s after %d iterations, |G| = %.3e", rep.stop_reason, rep.iterations, gnorm)
    return rep
