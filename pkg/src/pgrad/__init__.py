"""Variational solver for periodic Poisson-gradient systems  Delta u = grad_u F(t, u).

Fields live on a uniform grid over the box [0, T1] x ... x [0, Tp] with
periodic identification; solutions are found by minimizing the action
phi(u) = integral 1/2 |du/dt|^2 + F(t, u) dt.
"""

from .domain import (
    DomainError,
    Field,
    FieldError,
    GradientField,
    SpectralCoefficients,
    TorusDomain,
    from_spectral,
    make_domain,
    random_field,
    read_pgf,
    sample_field,
    to_spectral,
    write_pgf,
)
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "Field",
    "FieldError",
    "GradientField",
    "KERNEL_BACKEND",
    "SpectralCoefficients",
    "TorusDomain",
    "from_spectral",
    "make_domain",
    "random_field",
    "read_pgf",
    "sample_field",
    "to_spectral",
    "write_pgf",
]
