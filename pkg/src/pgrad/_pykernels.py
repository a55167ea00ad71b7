"""Pure numpy kernels. Reference implementation and fallback for ``_ckernels``.

Every routine here has a compiled twin with the same signature. Stencils and
reductions evaluate in the same operation order as the compiled loops, so the
two backends agree bitwise on those; transcendental kernels agree to a few ulp.
"""

import numpy as np


def grid_sum(a):
    """Column sums of a (P, n) array, accumulated strictly in row order."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1])
    return np.add.accumulate(a, axis=0)[-1].copy()


def row_sqnorm(a):
    """Per-row sum of squares of a (P, n) array, summed left to right."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    s = a[:, 0] * a[:, 0]
    for i in range(1, a.shape[1]):
        s = s + a[:, i] * a[:, i]
    return s


def centered_diff(a, scale):
    """(a[:, k+1, :] - a[:, k-1, :]) * scale on a (pre, N, post) array, periodic in k."""
    return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) * scale


def forward_diff(a, scale):
    """(a[:, k+1, :] - a[:, k, :]) * scale, periodic in k."""
    return (np.roll(a, -1, axis=1) - a) * scale


def second_diff(a, scale):
    """(a[:, k+1, :] - 2 a[:, k, :] + a[:, k-1, :]) * scale, periodic in k."""
    return (np.roll(a, -1, axis=1) - 2.0 * a + np.roll(a, 1, axis=1)) * scale


def pseudo_huber(u, h, kappa):
    """Values and gradients of kappa*(sqrt(1+|u|^2)-1) + (h, u) for rows of u."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    root = np.sqrt(1.0 + row_sqnorm(u))
    lin = u[:, 0] * h[:, 0]
    for i in range(1, u.shape[1]):
        lin = lin + u[:, i] * h[:, i]
    value = kappa * (root - 1.0) + lin
    grad = kappa * (u / root[:, None]) + h
    return value, grad


def pseudo_huber_diff(u, d, h, kappa):
    """F(u + d) - F(u) for the pseudo-Huber family without cancellation."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    v = u + d
    r0 = np.sqrt(1.0 + row_sqnorm(u))
    r1 = np.sqrt(1.0 + row_sqnorm(v))
    # |v|^2 - |u|^2 = (v + u, d)
    num = (v[:, 0] + u[:, 0]) * d[:, 0]
    lin = h[:, 0] * d[:, 0]
    for i in range(1, u.shape[1]):
        num = num + (v[:, i] + u[:, i]) * d[:, i]
        lin = lin + h[:, i] * d[:, i]
    return kappa * (num / (r1 + r0)) + lin


def cosine(u, h, amp):
    """Values and gradients of amp*sum(1 - cos u_i) + (h, u) for rows of u."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    c = 1.0 - np.cos(u)
    acc = c[:, 0]
    lin = u[:, 0] * h[:, 0]
    for i in range(1, u.shape[1]):
        acc = acc + c[:, i]
        lin = lin + u[:, i] * h[:, i]
    value = amp * acc + lin
    grad = amp * np.sin(u) + h
    return value, grad


def cosine_diff(u, d, h, amp):
    """F(u + d) - F(u) for the cosine family, via cos a - cos b = 2 sin((a+b)/2) sin((b-a)/2)."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    t = 2.0 * np.sin(u + 0.5 * d) * np.sin(0.5 * d)
    acc = t[:, 0]
    lin = h[:, 0] * d[:, 0]
    for i in range(1, u.shape[1]):
        acc = acc + t[:, i]
        lin = lin + h[:, i] * d[:, i]
    return amp * acc + lin
