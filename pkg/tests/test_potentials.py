import math

import numpy as np
import pytest

from pgrad import domain as D
from pgrad import potentials as Pm

DOM1 = D.make_domain(1, 1, (1.0,), (16,))
DOM2 = D.make_domain(2, 2, (1.0, 2.0), (8, 8))


def test_zero_potential():
    P = Pm.builtin("zero")
    assert P.eval([0.3], [4.0]) == 0.0
    assert not P.grad([0.3], [4.0]).any()


def test_pseudo_huber_closed_forms():
    P = Pm.builtin("pseudo_huber", {"kappa": 1.0}, n=2)
    assert P.eval([0.1], [0.0, 0.0]) == 0.0
    assert not P.grad([0.1], [0.0, 0.0]).any()
    assert P.eval([0.7], [3.0, 4.0]) == pytest.approx(math.sqrt(26) - 1, rel=1e-15)
    g = P.grad([0.7], [3.0, 4.0])
    assert np.linalg.norm(g) == pytest.approx(5 / math.sqrt(26), rel=1e-15)
    assert np.linalg.norm(g) == pytest.approx(0.9806, abs=1e-4)


def test_builtin_values_with_forcing():
    h = Pm.mode_forcing([0.5], (2.0,), mode=1)
    P = Pm.builtin("pseudo_huber", {"kappa": 2.0, "forcing": h})
    t, u = np.array([0.5]), np.array([1.5])
    assert P.eval(t, u) == pytest.approx(2 * (math.sqrt(1 + 2.25) - 1) + 0.5 * math.cos(math.pi * 0.5) * 1.5)
    Q = Pm.builtin("cosine", {"amplitude": 2.0, "forcing": [0.1, -0.2]}, n=2)
    assert Q.eval([0.0], [1.0, 2.0]) == pytest.approx(2 * (2 - math.cos(1) - math.cos(2)) + 0.1 - 0.4)
    assert Q.grad([0.0], [1.0, 2.0]) == pytest.approx([2 * math.sin(1) + 0.1, 2 * math.sin(2) - 0.2])
    L = Pm.builtin("linear_forcing", {"forcing": [1.0, 2.0]}, n=2)
    assert L.eval([0.0], [3.0, -1.0]) == pytest.approx(1.0)
    q = Pm.builtin("quadratic", {"kappa": 3.0})
    assert q.eval([0.0], [2.0]) == pytest.approx(6.0)


@pytest.mark.parametrize("name, params", [
    ("quadratic", {"kappa": 1.3}),
    ("pseudo_huber", {"kappa": 0.7, "forcing": [0.2, -0.1]}),
    ("cosine", {"amplitude": 1.5, "forcing": [0.3, 0.0]}),
    ("linear_forcing", {"forcing": [0.3, -2.0]}),
])
def test_difference_is_cancellation_free(name, params):
    P = Pm.builtin(name, params, n=2)
    rng = np.random.default_rng(0)
    t = rng.random((50, 1))
    u = 1e3 * rng.standard_normal((50, 2))
    d = 1e-9 * rng.standard_normal((50, 2))
    got = P.diff(t, u, d)
    # first-order oracle: F(u + d) - F(u) = grad F . d + O(|d|^2)
    ref = np.sum(P.gradient(t, u) * d, axis=1)
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-6


def test_bad_params():
    with pytest.raises(Pm.PotentialError, match="unknown potential"):
        Pm.builtin("quartic")
    with pytest.raises(Pm.PotentialError, match="unknown parameter"):
        Pm.builtin("quadratic", {"amplitude": 1.0})
    with pytest.raises(Pm.PotentialError, match="forcing"):
        Pm.builtin("linear_forcing")
    with pytest.raises(Pm.PotentialError, match="kappa"):
        Pm.builtin("pseudo_huber", {"kappa": 0.0})


def test_fd_check_reports():
    q = Pm.fd_check_potential_grad(Pm.builtin("quadratic", {"kappa": 1.0}), DOM1)
    assert q.verdict == "pass" and q.worst_violation <= 1e-9
    ph = Pm.fd_check_potential_grad(Pm.builtin("pseudo_huber", {"kappa": 1.0, "forcing": [0.3, 0.1]}, n=2), DOM2)
    assert ph.verdict == "pass" and ph.worst_violation <= 1e-6
    good = Pm.builtin("pseudo_huber", {"kappa": 1.0})
    wrong = Pm.user_potential(good.value, lambda t, u: 2 * good.gradient(t, u))
    w = Pm.fd_check_potential_grad(wrong, DOM1)
    assert w.verdict == "fail" and w.witness is not None and w.worst_violation > 0.4


def test_bounded_grad_reports():
    ph = Pm.builtin("pseudo_huber", {"kappa": 1.0, "bound": 1.0}, n=2)
    for radius in (1.0, 100.0, 1e6):
        assert Pm.bounded_grad_check(ph, DOM2, radius=radius).verdict == "pass"
    q = Pm.builtin("quadratic", {"kappa": 1.0, "bound": 10.0})
    r = Pm.bounded_grad_check(q, DOM1, radius=100.0)
    assert r.verdict == "fail" and np.linalg.norm(r.witness[1]) > 10
    c = Pm.builtin("cosine", {"amplitude": 2.0, "bound": 2.0})
    assert Pm.bounded_grad_check(c, DOM1, radius=100.0).verdict == "pass"
    none = Pm.bounded_grad_check(Pm.builtin("quadratic"), DOM1)
    assert none.verdict == "inconclusive"


def test_builtin_claimed_bounds():
    c = Pm.builtin("cosine", {"amplitude": 1.0, "forcing": [0.3, 0.4]}, n=2)
    assert float(c.claimed_bound(np.zeros((1, 1)))[0]) == pytest.approx(math.sqrt(2) + 0.5)
    assert Pm.bounded_grad_check(c, DOM2, radius=50.0).verdict == "pass"


def test_growth_fits():
    lin = Pm.builtin("linear_forcing", {"forcing": Pm.mode_forcing([1.0], (1.0,))})
    r = Pm.growth_check(lin, DOM1)
    assert r.verdict == "pass"
    # |F| = |c||u| but |grad F| = |c| at u = 0, so the tightest majorant is |u| + 1
    assert r.details["slope_M"] == pytest.approx(1.0, rel=0.1)
    assert r.details["intercept_a0"] == pytest.approx(1.0, rel=0.1)
    ph = Pm.growth_check(Pm.builtin("pseudo_huber", {"kappa": 1.0}), DOM1)
    assert ph.verdict == "pass"
    assert ph.details["slope_M"] <= 1 + 1e-9 and ph.details["intercept_a0"] <= 1 + 1e-9
    quartic = Pm.user_potential(lambda t, u: np.sum(u ** 2, -1) ** 2, lambda t, u: 4 * np.sum(u ** 2, -1)[..., None] * u)
    r4 = Pm.growth_check(quartic, DOM1)
    assert r4.verdict == "fail" and r4.worst_violation == pytest.approx(16.0, rel=1e-9)


def test_coercivity_probe_cases():
    ph = Pm.coercivity_probe(Pm.builtin("pseudo_huber", {"kappa": 1.0}), DOM1)
    assert ph.verdict == "pass"
    rep = Pm.coercivity_probe(Pm.builtin("pseudo_huber", {"kappa": 1.0}), DOM1, radii=(0, 5, 10))
    assert rep.details["min_increase"] == pytest.approx(math.sqrt(101) - 1, rel=1e-12)
    assert rep.details["min_increase"] == pytest.approx(9.05, abs=5e-3)
    cos = Pm.coercivity_probe(Pm.builtin("cosine", {"amplitude": 1.0}), DOM2)
    assert cos.verdict == "fail" and cos.witness is not None
    assert Pm.coercivity_probe(Pm.builtin("quadratic"), DOM2).verdict == "pass"
    lin = Pm.coercivity_probe(Pm.builtin("linear_forcing", {"forcing": Pm.mode_forcing([1.0], (1.0,))}), DOM1)
    assert lin.verdict == "fail"


def test_checks_are_deterministic():
    P = Pm.builtin("cosine", {"amplitude": 1.0}, n=2)
    a = Pm.growth_check(P, DOM2, seed=3)
    b = Pm.growth_check(P, DOM2, seed=3)
    assert a.lines() == b.lines()
    assert Pm.coercivity_probe(P, DOM2, seed=1).lines() == Pm.coercivity_probe(P, DOM2, seed=1).lines()


def test_report_needs_witness_on_fail():
    with pytest.raises(ValueError):
        Pm.HypothesisReport("x", 1, 1.0, None, "fail")
    with pytest.raises(ValueError):
        Pm.HypothesisReport("x", 1, 1.0, None, "maybe")


def test_pointwise_user_potential_and_grid_forcing():
    h = D.sample_field(DOM1, lambda t: math.cos(2 * math.pi * t[0]))
    P = Pm.builtin("linear_forcing", {"forcing": h})
    t = DOM1.coords().reshape(-1, 1)
    g = P.gradient(t, np.zeros((16, 1)))
    assert np.array_equal(g, h.points())
    U = Pm.user_potential(lambda t, u: float(u @ u), lambda t, u: 2 * u, claimed_bound=None, vectorized=False)
    assert U.value(np.zeros((3, 1)), np.ones((3, 2))).tolist() == [2.0, 2.0, 2.0]
