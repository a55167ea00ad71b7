"""Periodic box, uniform grid, discrete fields and their Fourier representation.

Grid node ``k = (k1, ..., kp)`` sits at ``t_a = k_a * T_a / N_a``. The face
``t_a = T_a`` is not stored; periodicity identifies it with ``t_a = 0``.

Field values are held as arrays of shape ``grid_sizes + (n,)``; flattened in C
order this is the grid-major, component-innermost layout used on disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DomainError(ValueError):
    """Invalid domain parameters."""


class FieldError(ValueError):
    """Invalid or non-finite field data."""


@dataclass(frozen=True)
class TorusDomain:
    p: int
    n: int
    periods: tuple
    grid_sizes: tuple

    def __post_init__(self):
        if self.p < 1:
            raise DomainError(f"p must be >= 1, got {self.p}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if len(self.periods) != self.p:
            raise DomainError(f"periods has {len(self.periods)} entries, expected p={self.p}")
        if len(self.grid_sizes) != self.p:
            raise DomainError(f"grid_sizes has {len(self.grid_sizes)} entries, expected p={self.p}")
        for a, T in enumerate(self.periods):
            if not (math.isfinite(T) and T > 0):
                raise DomainError(f"non-positive period T{a + 1} = {T}")
        for a, N in enumerate(self.grid_sizes):
            if N < 4 or N % 2:
                raise DomainError(f"grid size N{a + 1} = {N} must be even and >= 4")

    @property
    def shape(self):
        return tuple(self.grid_sizes)

    @property
    def field_shape(self):
        return tuple(self.grid_sizes) + (self.n,)

    def volume(self):
        return math.prod(self.periods)

    def point_count(self):
        return math.prod(self.grid_sizes)

    def spacing(self):
        return tuple(T / N for T, N in zip(self.periods, self.grid_sizes))

    def weight(self):
        """Quadrature weight of one grid node."""
        return self.volume() / self.point_count()

    def axis_coords(self, axis):
        N, T = self.grid_sizes[axis], self.periods[axis]
        return np.arange(N) * (T / N)

    def coords(self):
        """Node coordinates, shape ``grid_sizes + (p,)``."""
        axes = [self.axis_coords(a) for a in range(self.p)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def wavenumbers(self, axis):
        """Integer frequencies on ``axis`` in FFT order; Nyquist appears as -N/2."""
        N = self.grid_sizes[axis]
        return np.fft.fftfreq(N, d=1.0 / N)

    def node_of(self, t):
        """Multi-index of the grid node nearest to coordinate ``t`` (wrapped)."""
        t = np.asarray(t, dtype=float)
        idx = []
        for a in range(self.p):
            N, T = self.grid_sizes[a], self.periods[a]
            idx.append(np.rint(t[..., a] * N / T).astype(np.int64) % N)
        return tuple(idx)


def make_domain(p, n, periods, grid_sizes):
    """Validated, immutable :class:`TorusDomain`."""
    periods = tuple(float(T) for T in np.atleast_1d(periods))
    sizes = []
    for N in np.atleast_1d(grid_sizes):
        if int(N) != N:
            raise DomainError(f"grid size {N} is not an integer")
        sizes.append(int(N))
    return TorusDomain(int(p), int(n), periods, tuple(sizes))


class Field:
    """A map from the grid to R^n. Values are read-only after construction."""

    __slots__ = ("domain", "values")

    def __init__(self, domain, values):
        arr = np.array(values, dtype=np.float64)
        if arr.size != domain.point_count() * domain.n:
            raise FieldError(
                f"field has {arr.size} values, expected {domain.point_count() * domain.n}"
            )
        arr = arr.reshape(domain.field_shape)
        bad = ~np.isfinite(arr)
        if bad.any():
            loc = tuple(int(i) for i in np.argwhere(bad)[0])
            raise FieldError(f"non-finite value at grid index {loc[:-1]}, component {loc[-1]}")
        arr.flags.writeable = False
        self.domain = domain
        self.values = arr

    @property
    def flat(self):
        """Values in storage order, length ``point_count * n``."""
        return self.values.reshape(-1)

    def points(self):
        """Values as a ``(point_count, n)`` array."""
        return self.values.reshape(-1, self.domain.n)

    def __add__(self, other):
        return Field(self.domain, self.values + _vals(other))

    def __sub__(self, other):
        return Field(self.domain, self.values - _vals(other))

    def __mul__(self, c):
        return Field(self.domain, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.domain, -self.values)

    def __repr__(self):
        return f"Field(p={self.domain.p}, n={self.domain.n}, shape={self.domain.shape})"


def _vals(x):
    return x.values if isinstance(x, Field) else x


class GradientField:
    """Partial velocities ``du^i/dt^a``; values shape ``grid_sizes + (n, p)``."""

    __slots__ = ("domain", "values")

    def __init__(self, domain, values):
        arr = np.array(values, dtype=np.float64).reshape(domain.field_shape + (domain.p,))
        if not np.isfinite(arr).all():
            raise FieldError("non-finite gradient value")
        arr.flags.writeable = False
        self.domain = domain
        self.values = arr

    def axis(self, a):
        """Field of the derivatives along axis ``a`` (0-based)."""
        return Field(self.domain, self.values[..., a])


def zeros(domain):
    return Field(domain, np.zeros(domain.field_shape))


def constant(domain, c):
    c = np.broadcast_to(np.asarray(c, dtype=float), (domain.n,))
    return Field(domain, np.broadcast_to(c, domain.field_shape))


def sample_field(domain, sampler):
    """Evaluate ``sampler(t) -> R^n`` at every node.

    ``sampler`` is called once per node with a length-``p`` coordinate vector.
    Non-periodic samplers are accepted; :func:`pgrad.verify.periodicity_check`
    is the detector for them.
    """
    t = domain.coords().reshape(-1, domain.p)
    out = np.empty((t.shape[0], domain.n))
    for k, tk in enumerate(t):
        out[k] = np.broadcast_to(np.asarray(sampler(tk), dtype=float), (domain.n,))
    if not np.isfinite(out).all():
        k = int(np.argwhere(~np.isfinite(out))[0, 0])
        raise FieldError(f"sampler returned a non-finite value at t = {t[k].tolist()}")
    return Field(domain, out)


def random_field(domain, seed=0, amplitude=1.0, max_mode=None, mean=None):
    """Band-limited random field.

    Keeps Fourier modes with ``|m_a| <= max_mode`` on every axis (default
    ``N_a/2 - 1``, i.e. everything but the Nyquist modes) and scales the
    result to unit RMS times ``amplitude``. ``seed`` may also be a
    ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    raw = rng.standard_normal(domain.field_shape)
    axes = tuple(range(domain.p))
    c = np.fft.fftn(raw, axes=axes)
    mask = np.ones(domain.shape, dtype=bool)
    for a in range(domain.p):
        lim = domain.grid_sizes[a] // 2 - 1 if max_mode is None else max_mode
        m = np.abs(domain.wavenumbers(a)) <= lim
        shape = [1] * domain.p
        shape[a] = -1
        mask = mask & m.reshape(shape)
    c = c * mask[..., None]
    u = np.fft.ifftn(c, axes=axes).real
    rms = math.sqrt(float(np.mean(u * u))) or 1.0
    u = u * (amplitude / rms)
    if mean is not None:
        u = u - u.reshape(-1, domain.n).mean(axis=0) + np.asarray(mean, dtype=float)
    return Field(domain, u)


@dataclass(frozen=True)
class SpectralCoefficients:
    """DFT coefficients per component, stored in FFT order.

    ``data[k]`` holds ``coeff(m)`` with ``m_a = wavenumbers(a)[k_a]``;
    ``coeff(m) = (1/P) sum_k u(k) exp(-2 pi i sum_a m_a k_a / N_a)``.
    """

    domain: TorusDomain
    data: np.ndarray

    def coeff(self, m):
        """Coefficient vector (length n) at integer frequency multi-index ``m``."""
        idx = tuple(int(mi) % N for mi, N in zip(m, self.domain.grid_sizes))
        return self.data[idx]


def to_spectral(field):
    d = field.domain
    data = np.fft.fftn(field.values, axes=tuple(range(d.p))) / d.point_count()
    return SpectralCoefficients(d, data)


def hermitian_defect(coeffs):
    """max |coeff(-m) - conj(coeff(m))| over frequencies whose negation is in range."""
    d = coeffs.domain
    c = coeffs.data
    refl = c
    for a in range(d.p):
        refl = np.roll(np.flip(refl, axis=a), 1, axis=a)
    mask = np.ones(d.shape, dtype=bool)
    for a in range(d.p):
        nyq = d.wavenumbers(a) == -(d.grid_sizes[a] // 2)
        shape = [1] * d.p
        shape[a] = -1
        mask = mask & ~nyq.reshape(shape)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(refl - np.conj(c))[mask]))


def from_spectral(coeffs, tol=1e-10):
    """Inverse of :func:`to_spectral`; rejects coefficients of a non-real field."""
    d = coeffs.domain
    scale = max(1.0, float(np.max(np.abs(coeffs.data))))
    defect = hermitian_defect(coeffs)
    if defect > tol * scale:
        raise FieldError(f"coefficients violate Hermitian symmetry (defect {defect:.3e})")
    u = np.fft.ifftn(coeffs.data * d.point_count(), axes=tuple(range(d.p)))
    return Field(d, u.real)


# --- PGF v1 text format --------------------------------------------------------

PGF_MAGIC = "PGF 1"


def write_pgf(field, path):
    """Write ``field`` in PGF v1 (17 significant digits, grid-major order)."""
    d = field.domain
    lines = [
        PGF_MAGIC,
        f"{d.p} {d.n}",
        "T: " + " ".join(f"{T:.17g}" for T in d.periods),
        "N: " + " ".join(str(N) for N in d.grid_sizes),
    ]
    for row in field.points():
        lines.append(" ".join(f"{x:.17g}" for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgf(path):
    """Parse a PGF v1 file into a :class:`Field`.

    Raises :class:`FieldError` (with the offending line number) on any
    malformed or non-finite entry.
    """
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != PGF_MAGIC:
        raise FieldError(f"{path}: missing 'PGF 1' header")
    try:
        p, n = (int(x) for x in text[1].split())
        tag_t, *ts = text[2].split()
        tag_n, *ns = text[3].split()
    except (ValueError, IndexError) as exc:
        raise FieldError(f"{path}: malformed header ({exc})") from None
    if tag_t != "T:" or tag_n != "N:":
        raise FieldError(f"{path}: expected 'T:' and 'N:' header lines")
    try:
        domain = make_domain(p, n, [float(x) for x in ts], [int(x) for x in ns])
    except (ValueError, DomainError) as exc:
        raise FieldError(f"{path}: {exc}") from None
    P = domain.point_count()
    body = [ln for ln in text[4:] if ln.strip()]
    if len(body) != P:
        raise FieldError(f"{path}: expected {P} value lines, found {len(body)}")
    out = np.empty((P, n))
    for k, line in enumerate(body):
        parts = line.split()
        if len(parts) != n:
            raise FieldError(f"{path}: line {k + 5}: expected {n} values, found {len(parts)}")
        try:
            out[k] = [float(x) for x in parts]
        except ValueError:
            raise FieldError(f"{path}: line {k + 5}: unparsable value") from None
        if not np.isfinite(out[k]).all():
            idx = np.unravel_index(k, domain.shape)
            raise FieldError(
                f"{path}: line {k + 5}: non-finite value at grid index {tuple(int(i) for i in idx)}"
            )
    return Field(domain, out)
