import os
import subprocess
import sys

import numpy as np
import pytest

from pgrad import kernels

py = kernels.backend_module("python")
try:
    cy = kernels.backend_module("cython")
except ImportError:  # pragma: no cover - extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def data(seed=0, P=257, n=3):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((P, n)), rng.standard_normal((P, n)), rng.standard_normal((P, n))


def test_python_reference_values():
    a = np.array([[1.0, 2.0], [3.0, -4.0]])
    assert py.grid_sum(a).tolist() == [4.0, -2.0]
    assert py.row_sqnorm(a).tolist() == [5.0, 25.0]
    line = np.arange(5.0).reshape(1, 5, 1) ** 2
    assert py.second_diff(line, 1.0).ravel().tolist() == [17.0, 2.0, 2.0, 2.0, -23.0]
    assert py.forward_diff(line, 1.0).ravel().tolist() == [1.0, 3.0, 5.0, 7.0, -16.0]
    assert py.centered_diff(line, 0.5).ravel().tolist() == [-7.5, 2.0, 4.0, 6.0, -4.5]


def test_grid_sum_is_sequential():
    # 1 + 1e-16 + ... in row order rounds back to 1 each time
    a = np.array([[1.0]] + [[1e-16]] * 10)
    assert py.grid_sum(a)[0] == 1.0
    if cy is not None:
        assert cy.grid_sum(a)[0] == 1.0


@needs_ext
@pytest.mark.parametrize("name", ["grid_sum", "row_sqnorm"])
def test_reductions_bitwise(name):
    u, _, _ = data()
    assert np.array_equal(getattr(py, name)(u), getattr(cy, name)(u))


@needs_ext
@pytest.mark.parametrize("name", ["centered_diff", "forward_diff", "second_diff"])
def test_stencils_bitwise(name):
    a = np.random.default_rng(1).standard_normal((3, 10, 4))
    assert np.array_equal(getattr(py, name)(a, 2.7), getattr(cy, name)(a, 2.7))


@needs_ext
@pytest.mark.parametrize("name", ["pseudo_huber", "cosine"])
def test_potential_kernels_agree(name):
    u, _, h = data(2)
    vp, gp = getattr(py, name)(u, h, 1.3)
    vc, gc = getattr(cy, name)(u, h, 1.3)
    assert np.allclose(vp, vc, rtol=1e-15, atol=1e-15)
    assert np.allclose(gp, gc, rtol=1e-15, atol=1e-15)


@needs_ext
@pytest.mark.parametrize("name", ["pseudo_huber_diff", "cosine_diff"])
def test_difference_kernels_agree(name):
    u, d, h = data(3)
    assert np.allclose(getattr(py, name)(u, d, h, 0.8), getattr(cy, name)(u, d, h, 0.8), rtol=1e-15, atol=1e-15)


@needs_ext
def test_read_only_inputs_accepted():
    u, _, h = data(4)
    u.flags.writeable = False
    h.flags.writeable = False
    cy.pseudo_huber(u, h, 1.0)
    cy.grid_sum(u)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")


def _run_action(backend):
    code = (
        "from pgrad import kernels, domain as D, potentials as Pm, action as A;"
        "d = D.make_domain(2, 2, (1.0, 2.0), (16, 16));"
        "u = D.random_field(d, seed=5);"
        "P = Pm.builtin('pseudo_huber', {'kappa': 1.0, 'forcing': [0.2, 0.1]}, n=2);"
        "print(kernels.BACKEND, repr(A.action(u, P, 'centered2').total))"
    )
    env = dict(os.environ, PGRAD_KERNELS=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_environment_forces_python_backend():
    name, _ = _run_action("python")
    assert name == "python"


@needs_ext
def test_backends_give_identical_action():
    py_name, py_val = _run_action("python")
    cy_name, cy_val = _run_action("auto")
    assert (py_name, cy_name) == ("python", "cython")
    assert float(py_val) == pytest.approx(float(cy_val), rel=1e-15)
