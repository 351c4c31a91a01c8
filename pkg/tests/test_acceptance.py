"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated at the end of the pytest run.
"""
import time

import numpy as np

import oracles as orc
from binest import likelihood as lk
from binest import markov_oracle as mo
from binest import experiments as ex
from binest.dynamics import GaussianStd, NetworkParams, bnp_canonicalize

VA = {"A": [[0.87, 0.13], [0.62, 0.38]], "c": [0.5, 0.1]}
VA_PARAMS = NetworkParams(VA["A"], VA["c"])
SENS = {"A": [[0.44, 0.12, 0.36, 0.3], [0.147, 0.215, 0.344, 0.294], [0, 0, 1, 0],
              [0.09, 0.178, 0.446, 0.286]],
        "c": [0.13, 0.28, 0.08, 0.24]}
SCHEDULE = {"a": 15.0, "beta": 0.0, "gamma": 100.0}


def _config(tmp_path, **kw):
    doc = {"params": VA, "schedule": SCHEDULE, "output_dir": str(tmp_path)}
    doc.update(kw)
    return ex.ExperimentConfig.from_dict(doc)


def _rel_close(a, b, rtol, atol=0.0):
    return bool(np.all(np.abs(a - b) <= rtol * np.abs(b) + atol))


def test_c01_gradient(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        theta = rng.uniform(-3, 3, (n, n + 1))
        s_new, s_old = rng.integers(0, 2, n), rng.integers(0, 2, n)
        K = lk.score(theta, lk.PairSample(s_new, s_old)).reshape(n, n + 1)
        for i in range(n):
            ref = orc.grad_log_g(theta[i, :n], theta[i, n], s_old, s_new[i])
            rel = np.max(np.abs(K[i] - ref) / np.maximum(np.abs(ref), 1e-300))
            worst = max(worst, float(np.where(np.abs(ref) > 0, rel, 0).max()))
            ok &= _rel_close(K[i], ref, 1e-6)
    dt = time.perf_counter() - t0
    ok &= dt < 10
    acceptance(1, ok, f"score vs high-precision differences, 1000 draws, worst rel {worst:.1e}, {dt:.1f}s")
    assert ok


def test_c02_hessian(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    ok = True
    worst_eig = -np.inf
    for _ in range(100):
        n = int(rng.integers(1, 4))
        a, c = rng.uniform(-3, 3, n), rng.uniform(-3, 3)
        s_new, s_old = rng.integers(0, 2, n), rng.integers(0, 2, n)
        H = lk.hessian_row(lk.ThetaRow(a, c), lk.PairSample(s_new, s_old), 0)
        ok &= _rel_close(H, orc.hess_log_g(a, c, s_old, s_new[0]), 1e-5)
        worst_eig = max(worst_eig, float(np.max(np.linalg.eigvalsh(H))))
    ok &= worst_eig <= 1e-12
    dt = time.perf_counter() - t0
    ok &= dt < 10
    acceptance(2, ok, f"Hessian vs differences, 100 draws, max eigenvalue {worst_eig:.1e}, {dt:.1f}s")
    assert ok


def test_c03_stationary_point(acceptance):
    t0 = time.perf_counter()
    o = mo.build(VA_PARAMS, GaussianStd())
    score = np.max(np.abs(mo.expected_score(VA_PARAMS, o)))
    eig = float(np.max(np.linalg.eigvalsh(mo.expected_hessian(VA_PARAMS, o))))
    best = mo.exact_objective(VA_PARAMS, o)
    rng = np.random.default_rng(103)
    probes = VA_PARAMS.theta + rng.normal(scale=0.5, size=(10_000, 6))
    top = max(mo.exact_objective(t, o) for t in probes)
    dt = time.perf_counter() - t0
    ok = score <= 1e-10 and eig <= -1e-6 and top < best and dt < 30
    acceptance(3, ok, f"|E score|_inf {score:.1e}, max eig {eig:.3g}, "
                      f"objective {best:.6f} > best probe {top:.6f}, {dt:.1f}s")
    assert ok


def test_c04_augmented_chain(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    worst = 0.0
    for n in (2, 3):
        for _ in range(5):
            p = NetworkParams(rng.uniform(-2, 2, (n, n)), rng.uniform(-1, 1, n))
            o = mo.build(p, GaussianStd())
            worst = max(worst, float(np.max(np.abs(mo.augmented_conditional(o) - o.P))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 5
    acceptance(4, ok, f"conditional of pi_tilde vs P, n=2,3, max diff {worst:.1e}, {dt:.2f}s")
    assert ok


def test_c05_positive_transitions(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(105)
    smallest = 1.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        p = NetworkParams(rng.uniform(-3, 3, (n, n)), rng.uniform(-3, 3, n))
        smallest = min(smallest, float(mo.transition_matrix(p, GaussianStd()).min()))
    dt = time.perf_counter() - t0
    ok = smallest > 0 and dt < 5
    acceptance(5, ok, f"100 random systems, n<=4, smallest entry {smallest:.2e}, {dt:.2f}s")
    assert ok


def test_c06_scale_invariance(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 4))
        p = NetworkParams(rng.uniform(-2, 2, (n, n)), rng.uniform(-2, 2, n))
        worst = max(worst, mo.verify_scale_invariance(p, rng.uniform(0.1, 5.0, n)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 5
    acceptance(6, ok, f"50 positive rescalings, n<=3, max |P - P_scaled| {worst:.1e}, {dt:.2f}s")
    assert ok


def test_c07_discrete_counterexample(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(107)
    worst = 0.0
    distinct = True
    for _ in range(20):
        n = int(rng.integers(2, 4))
        A = rng.uniform(-2, 2, (n, n))
        params, model = bnp_canonicalize(A, float(rng.uniform(0.01, 0.45)))
        hat = mo.discrete_counterexample(params, model)
        distinct &= not np.array_equal(hat.A, params.A)
        diff = mo.transition_matrix(hat, model, "pm1") - mo.transition_matrix(params, model, "pm1")
        worst = max(worst, float(np.max(np.abs(diff))))
    dt = time.perf_counter() - t0
    ok = distinct and worst <= 1e-12 and dt < 5
    acceptance(7, ok, f"20 instances, n<=3, A_hat != A, max |P_A - P_hat| {worst:.1e}, {dt:.2f}s")
    assert ok


def test_c08_consistency(acceptance, tmp_path):
    t0 = time.perf_counter()
    T = 200_000
    res = ex.run_consistency(_config(tmp_path, experiment="consistency", trials=200, horizon=T,
                                     seed=8, record={"points": 40}))
    mean, std = res.mean[-1], res.std[-1]
    inside = np.abs(mean - res.truth) <= 3 * std
    med = float(np.median(res.final_errors))
    dt = time.perf_counter() - t0
    ok = bool(np.all(inside)) and med <= 0.1
    acceptance(8, ok, f"N=200, T=2e5: all coordinates within 3 std: {bool(np.all(inside))}, "
                      f"median final error {med:.4f}, {dt:.0f}s")
    assert ok


def test_c09_rate(acceptance, tmp_path):
    t0 = time.perf_counter()
    res = ex.run_rate(_config(tmp_path, experiment="rate", trials=200, horizon=100_000, seed=9,
                              sweep={"path": "params.c.0", "values": [0.5, 2.0]},
                              record={"points": 60}))
    slope = res.slopes["params.c.0=0.5"]
    med = res.terminal_median()
    above = bool(med[1] > med[0] and res.mse[1, -1] > res.mse[0, -1])
    dt = time.perf_counter() - t0
    ok = -1.3 <= slope <= -0.7 and above
    acceptance(9, ok, f"slope (c_1=0.5) {slope:.3f}; terminal median sq. error c_1=2 {med[1]:.2e} "
                      f"vs c_1=0.5 {med[0]:.2e}, {dt:.0f}s")
    assert ok


def test_c10_truncations_stop(acceptance, tmp_path):
    t0 = time.perf_counter()
    T = 200_000
    res = ex.run_consistency(_config(tmp_path, experiment="consistency", trials=20, horizon=T,
                                     seed=10, truncation={"m0": 10.0, "growth": 2.0},
                                     record={"at": [T // 2, T]}))
    sig = res.trajectory.sigma
    # sigma never decreases, so equal values at T/2 and T mean it is constant in between
    constant = bool(np.all(sig[0] == sig[1]))
    dt = time.perf_counter() - t0
    acceptance(10, constant, f"20 trials, sigma at T/2 equals sigma at T in every trial "
                             f"(max sigma {int(sig.max())}), {dt:.0f}s")
    assert constant


def test_c11_boolean_network(acceptance, tmp_path):
    t0 = time.perf_counter()
    med = {}
    for T in (500, 5000):
        res = ex.run_bn_recovery(ex.ExperimentConfig.from_dict(
            {"experiment": "bn", "trials": 20, "horizon": T, "seed": 11, "eta": 0.05,
             "schedule": SCHEDULE, "output_dir": str(tmp_path / f"T{T}")}))
        med[T] = res.median_f1
    dt = time.perf_counter() - t0
    ok = med[500] >= 0.6 and med[5000] > med[500]
    acceptance(11, ok, f"yeast topology, 20 seeds: median F1 {med[500]:.3f} at T=500, "
                       f"{med[5000]:.3f} at T=5000, {dt:.1f}s")
    assert ok


def test_c12_sensitivity(acceptance, tmp_path):
    t0 = time.perf_counter()
    parts = []
    ok = True
    for path in ("model.zeta", "scenario.tau"):
        res = ex.run_sensitivity(ex.ExperimentConfig.from_dict(
            {"experiment": "sensitivity", "params": SENS, "schedule": SCHEDULE, "trials": 50,
             "horizon": 100_000, "seed": 12, "output_dir": str(tmp_path / path),
             "sweep": {"path": path, "values": [0.0, 0.05, 0.1, 0.2]}, "record": {"points": 30}}))
        med = res.terminal_median()
        mono = bool(np.all(np.diff(med) >= 0))
        base = float(res.mse[0, -1])
        ok &= mono and base <= 0.05
        parts.append(f"{path.split('.')[1]} medians {np.array2string(med, precision=4)} "
                     f"monotone={mono}, base MSE {base:.4f}")
    dt = time.perf_counter() - t0
    acceptance(12, ok, "; ".join(parts) + f", {dt:.0f}s")
    assert ok
