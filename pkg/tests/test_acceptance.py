"""Acceptance suite: nine end-to-end criteria at their stated tolerances.

Each test records one ``ACCEPTANCE <k> PASS|FAIL`` line with the measured
figures, then asserts; the lines are printed in the terminal summary.
Run ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import math
import shutil
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import newton_pseudo_huber, spectral_division
from pgrad import action as A
from pgrad import calculus as C
from pgrad import cli
from pgrad import domain as D
from pgrad import potentials as Pm
from pgrad import solver as S
from pgrad import verify as V

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def report(k, ok, text):
    line = f"ACCEPTANCE {k} {'PASS' if ok else 'FAIL'}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def four_potentials(d, rng):
    h = Pm.mode_forcing(rng.uniform(-0.5, 0.5, d.n), d.periods, mode=int(rng.integers(1, 3)),
                        axis=int(rng.integers(0, d.p)))
    return [
        Pm.builtin("quadratic", {"kappa": float(rng.uniform(0.5, 2.0))}, n=d.n),
        Pm.builtin("pseudo_huber", {"kappa": float(rng.uniform(0.5, 2.0)), "forcing": h}, n=d.n),
        Pm.builtin("cosine", {"amplitude": float(rng.uniform(0.5, 2.0)), "forcing": h}, n=d.n),
        Pm.builtin("linear_forcing", {"forcing": h}, n=d.n),
    ]


# --- 1 ------------------------------------------------------------------------


def test_1_gradient_formula_audit():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    grids = {1: (32,), 2: (32, 32), 3: (32, 32, 32)}
    worst, count = 0.0, 0
    for p, sizes in grids.items():
        for k in range(50):
            n = 1 + k % 2
            d = D.make_domain(p, n, tuple(rng.uniform(0.5, 2.0, p)), sizes)
            u = D.random_field(d, seed=rng, amplitude=float(rng.uniform(0.1, 3.0)))
            for P in four_potentials(d, rng):
                worst = max(worst, A.fd_gradient_check(u, P, "spectral", trials=1, seed=rng))
                count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed <= 60
    assert report(1, ok, f"worst relative fd gap {worst:.2e} <= 1e-6 over {count} checks, {elapsed:.1f} s <= 60 s")


# --- 2, 3 and 7 share their solver runs ---------------------------------------


def run_linear(p):
    d = D.make_domain(p, 1, (1.0,) * p, (64,) * p)
    P = Pm.builtin("linear_forcing", {"forcing": Pm.mode_forcing([1.0], d.periods)})
    u0 = D.random_field(d, seed=20 + p, amplitude=0.3, mean=[0.7])
    t0 = time.perf_counter()
    rep = S.minimize(u0, P, S.SolveOptions(pin_mean=True, grad_tol=1e-10))
    return d, P, u0, rep, time.perf_counter() - t0


def run_pseudo_huber():
    d = D.make_domain(2, 1, (1.0, 1.0), (64, 64))
    P = Pm.builtin("pseudo_huber", {"kappa": 1.0, "forcing": Pm.mode_forcing([0.5], d.periods)})
    t0 = time.perf_counter()
    rep = S.minimize(D.zeros(d), P, S.SolveOptions(grad_tol=1e-8, max_iters=10_000))
    return d, P, rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def runs():
    return {"linear": {p: run_linear(p) for p in (1, 2)}, "pseudo_huber": run_pseudo_huber()}


def test_2_exact_linear_recovery(runs):
    lines, ok, elapsed = [], True, 0.0
    for p in (1, 2):
        d, P, u0, rep, dt = runs["linear"][p]
        elapsed += dt
        forcing = np.cos(2 * math.pi * d.coords()[..., 0])
        exact = spectral_division(forcing, d.shape, d.periods) + C.mean_part(u0)[0]
        err = float(np.max(np.abs(rep.final_field.values[..., 0] - exact)))
        closed = -np.cos(2 * math.pi * d.coords()[..., 0]) / (4 * math.pi ** 2) + C.mean_part(u0)[0]
        err_closed = float(np.max(np.abs(exact - closed)))
        res = V.strong_residual(rep.final_field, P)[1]["strong_l2"]
        ok = ok and rep.converged and err <= 1e-8 and res <= 1e-8 and err_closed <= 1e-12
        lines.append(f"p={p}: sup err {err:.1e}, strong {res:.1e}")
    ok = ok and elapsed <= 5
    assert report(2, ok, "; ".join(lines) + f" (<= 1e-8), solves {elapsed:.2f} s <= 5 s")


def test_3_coercive_bounded_solve(runs):
    d, P, rep, elapsed = runs["pseudo_huber"]
    h = 0.5 * np.cos(2 * math.pi * d.coords()[..., 0]).reshape(-1)
    u_ref, _ = newton_pseudo_huber(d.shape, d.periods, h, kappa=1.0)
    gap = float(np.max(np.abs(rep.final_field.values.reshape(-1) - u_ref)))
    res = V.strong_residual(rep.final_field, P)[1]["strong_l2"]
    ok = rep.converged and rep.iterations <= 10_000 and res <= 1e-6 and gap <= 1e-6 and elapsed <= 30
    ok = ok and rep.final_phi <= A.action(D.zeros(d), P).total
    assert report(3, ok, f"{rep.iterations} iterations, strong {res:.1e} <= 1e-6, Newton gap {gap:.1e} <= 1e-6, "
                         f"solve {elapsed:.2f} s <= 30 s")


# --- 4 ------------------------------------------------------------------------


def random_domain(rng, n=None):
    p = int(rng.integers(1, 4))
    sizes = tuple(int(rng.choice([4, 6, 8, 12, 16])) for _ in range(p))
    return D.make_domain(p, int(n or rng.integers(1, 3)), tuple(rng.uniform(0.1, 5.0, p)), sizes)


def test_4_inequality_suites():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    bad_t2 = bad_w = 0
    for k in range(1000):
        d = random_domain(rng)
        if k % 2:
            u = D.Field(d, rng.standard_normal(d.field_shape) * rng.uniform(0.01, 100) + rng.normal(0, 3, d.n))
        else:
            u = D.random_field(d, seed=rng, amplitude=float(rng.uniform(0.01, 100)), mean=rng.normal(0, 3, d.n))
        bad_t2 += not C.theorem2_check(u).holds
        bad_w += not C.wirtinger_check(D.random_field(d, seed=rng, amplitude=float(rng.uniform(0.01, 100)),
                                                      mean=rng.normal(0, 3, d.n))).holds
    worst_eq = 0.0
    for p in (1, 2, 3):
        d = D.make_domain(p, 1, tuple(rng.uniform(0.1, 5.0, p)), (8,) * p)
        for c in (1.0, -2.5, 1e3):
            r = C.theorem2_check(D.constant(d, c))
            worst_eq = max(worst_eq, abs(r.lhs - r.rhs) / r.rhs)
    elapsed = time.perf_counter() - t0
    ok = bad_t2 == 0 and bad_w == 0 and worst_eq <= 1e-12 and elapsed <= 30
    assert report(4, ok, f"mean-bound violations {bad_t2}/1000, Wirtinger violations {bad_w}/1000, "
                         f"equality gap {worst_eq:.1e} <= 1e-12, {elapsed:.1f} s <= 30 s")


# --- 5 ------------------------------------------------------------------------


def test_5_coercivity_chain():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    violations, tightest = 0, math.inf
    for _ in range(1000):
        d = random_domain(rng)
        kappa = float(rng.uniform(0.1, 3.0))
        amp = rng.uniform(-1.0, 1.0, d.n)
        P = Pm.builtin("pseudo_huber", {"kappa": kappa, "forcing": Pm.mode_forcing(amp, d.periods)}, n=d.n)
        P = P.with_bound(kappa + float(np.linalg.norm(amp)))
        u = D.random_field(d, seed=rng, amplitude=float(10 ** rng.uniform(-2, 2)), mean=rng.normal(0, 10, d.n))
        phi, B = A.action(u, P).total, A.coercivity_lower_bound(u, P)
        violations += phi < B
        tightest = min(tightest, phi - B)
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed <= 30
    assert report(5, ok, f"violations {violations}/1000 (smallest margin {tightest:.2e}), {elapsed:.1f} s <= 30 s")


# --- 6 ------------------------------------------------------------------------


def test_6_weak_calculus_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst_weak = worst_path = 0.0
    for _ in range(100):
        d = random_domain(rng)
        u = D.random_field(d, seed=rng, max_mode=min(d.grid_sizes) // 4, mean=rng.normal(0, 3, d.n))
        worst_weak = max(worst_weak, C.weak_identity_check(u, C.differential(u), min(d.grid_sizes) // 2 - 1))
    for _ in range(100):
        d = random_domain(rng)
        u = D.random_field(d, seed=rng)
        curve = C.random_curve(d, seed=rng)
        worst_path = max(worst_path, float(np.max(np.abs(C.path_integral(C.differential(u), curve)))))
    elapsed = time.perf_counter() - t0
    ok = worst_weak <= 1e-10 and worst_path <= 1e-8 and elapsed <= 30
    assert report(6, ok, f"weak identity {worst_weak:.1e} <= 1e-10, closed-path integral {worst_path:.1e} <= 1e-8, "
                         f"{elapsed:.1f} s <= 30 s")


# --- 7 ------------------------------------------------------------------------


def test_7_solver_contract(runs):
    logs = [r[3] for r in runs["linear"].values()] + [runs["pseudo_huber"][2]]
    monotone = all(all(b <= a for a, b in zip(r.iterates_phi, r.iterates_phi[1:])) for r in logs)
    mean_gap = max(float(np.max(np.abs(C.mean_part(r[3].final_field) - C.mean_part(r[2]))))
                   for r in runs["linear"].values())
    same = True
    for p, (_, _, _, rep, _) in runs["linear"].items():
        again = run_linear(p)[3]
        same = same and again.iterates_phi == rep.iterates_phi
        same = same and np.array_equal(again.final_field.values, rep.final_field.values)
    again = run_pseudo_huber()[2]
    ref = runs["pseudo_huber"][2]
    same = same and again.iterates_phi == ref.iterates_phi and np.array_equal(again.final_field.values,
                                                                              ref.final_field.values)
    ok = monotone and mean_gap <= 1e-12 and same
    assert report(7, ok, f"phi non-increasing in {len(logs)} runs: {monotone}; pinned mean drift {mean_gap:.1e} "
                         f"<= 1e-12; bit-identical reruns: {same}")


# --- 8 ------------------------------------------------------------------------


def falsifier_runs(seed):
    d = D.make_domain(2, 2, (1.0, 1.0), (16, 16))
    out = []
    for bound in (0.1, 1.0, 10.0, 100.0, 1e4):
        q = Pm.builtin("quadratic", {"kappa": 1.0, "bound": bound}, n=2)
        out.append(Pm.bounded_grad_check(q, d, radius=10 * bound, seed=seed))
    out.append(Pm.coercivity_probe(Pm.builtin("cosine", {"amplitude": 1.0}, n=2), d, seed=seed))
    out.append(Pm.coercivity_probe(Pm.builtin("pseudo_huber", {"kappa": 1.0}, n=2), d, seed=seed))
    out.append(Pm.coercivity_probe(Pm.builtin("quadratic", {"kappa": 1.0}, n=2), d, seed=seed))
    return out


def test_8_hypothesis_falsifiers():
    first = falsifier_runs(8)
    verdicts = [r.verdict for r in first]
    expected = ["fail"] * 5 + ["fail", "pass", "pass"]
    deterministic = [r.lines() for r in first] == [r.lines() for r in falsifier_runs(8)]
    ok = verdicts == expected and deterministic
    assert report(8, ok, f"verdicts {verdicts} expected {expected}; deterministic: {deterministic}")


# --- 9 ------------------------------------------------------------------------

EXPECTED_EXITS = {
    # config: (solve, check, diagnose of the solve output)
    "linear_forcing": (0, 1, 0),
    "pseudo_huber": (0, 0, 0),
    "cosine": (0, 1, 0),
}


def test_9_cli_round_trip(tmp_path):
    got, worst_rel = {}, 0.0
    for name in EXPECTED_EXITS:
        cfg = tmp_path / f"{name}.ini"
        shutil.copy(CONFIGS / f"{name}.ini", cfg)
        solve = cli.cmd_solve(cfg)
        check = cli.cmd_check(cfg)
        out = tmp_path / f"{name}_out"
        diag = cli.cmd_diagnose(out / "field.pgf", cfg, out / "diagnose.txt")
        got[name] = (solve, check, diag)
        kv = dict(line.split(" = ", 1) for line in (out / "solve_report.txt").read_text().splitlines())
        dk = dict(line.split(" = ", 1) for line in (out / "diagnose.txt").read_text().splitlines())
        phi_s, phi_d = float(kv["phi_final"]), float(dk["phi"])
        worst_rel = max(worst_rel, abs(phi_s - phi_d) / max(abs(phi_s), 1e-300))
    shutil.copy(CONFIGS / "odd_grid.ini", tmp_path / "odd_grid.ini")
    odd = cli.cmd_solve(tmp_path / "odd_grid.ini")
    ok = got == EXPECTED_EXITS and worst_rel <= 1e-12 and odd == 2
    assert report(9, ok, f"exit codes {got} (expected {EXPECTED_EXITS}), odd grid -> {odd}; "
                         f"phi round-trip gap {worst_rel:.1e} <= 1e-12")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
