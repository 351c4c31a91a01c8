import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as orc
from binest import markov_oracle as mo
from binest.dynamics import (Discrete3, GaussianStd, NetworkParams, Occasional, Scenario,
                             bnp_canonicalize, state_vectors)
from binest.errors import (CapacityError, ConvergenceError, ParameterError, PreconditionError,
                           UnsupportedModelError)

VA = NetworkParams([[0.87, 0.13], [0.62, 0.38]], [0.5, 0.1])


def _zero(n):
    return NetworkParams(np.zeros((n, n)), np.zeros(n))


# ---------------------------------------------------------------- rows and matrices

@pytest.mark.parametrize("n", [1, 2, 4])
def test_row_of_independent_fair_bits(n):
    row = mo.transition_row(_zero(n), GaussianStd(), np.zeros(n))
    assert np.allclose(row, 2.0 ** -n, rtol=0, atol=1e-15)


def test_row_single_agent():
    row = mo.transition_row(NetworkParams([[1.0]], [0.5]), GaussianStd(), [1])
    up = float(1 - orc.Phi(-0.5))
    assert row[1] == pytest.approx(up, rel=1e-14)
    assert row[0] == pytest.approx(1 - up, rel=1e-13)


def test_row_discrete_entries_are_products_of_two_levels():
    A = np.array([[0.0, 1.0, -2.0], [1.0, 0.0, 1.0], [-1.0, 1.0, 0.0]])
    eta = 0.07
    params, model = bnp_canonicalize(A, eta)
    levels = {round(np.prod(c), 15) for c in itertools.product([eta, 1 - eta], repeat=3)}
    for s in state_vectors(3):
        row = mo.transition_row(params, model, s)
        assert row.sum() == pytest.approx(1.0, abs=1e-12)
        assert {round(v, 15) for v in row} <= levels


def test_row_capacity_and_model_errors():
    with pytest.raises(CapacityError):
        mo.transition_row(_zero(21), GaussianStd(), np.zeros(21))
    with pytest.raises(UnsupportedModelError):
        mo.transition_row(VA, GaussianStd(), [0, 1], scenario=Scenario(p=0.5))
    row = mo.transition_row(VA, Occasional(0.3), [0, 1])
    assert row.sum() == pytest.approx(1.0, abs=1e-12)


def test_row_of_occasional_model():
    # D' = 0 w.p. zeta, so P{D' >= t} = zeta 1[t <= 0] + (1 - zeta) (1 - Phi(t))
    p = NetworkParams([[1.0]], [0.5])
    row = mo.transition_row(p, Occasional(0.3), [1])
    assert row[1] == pytest.approx(0.3 + 0.7 * float(1 - orc.Phi(-0.5)), rel=1e-14)


def test_build_capacity():
    with pytest.raises(CapacityError):
        mo.build(_zero(13), GaussianStd())


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.data())
def test_random_matrices_are_stochastic_and_positive(n, data):
    vals = data.draw(st.lists(st.floats(-3, 3), min_size=n * (n + 1), max_size=n * (n + 1)))
    P = mo.transition_matrix(NetworkParams.from_theta(np.array(vals)), GaussianStd())
    assert np.all(np.abs(P.sum(axis=1) - 1) <= 1e-12)
    assert np.all(P > 0)


# ---------------------------------------------------------------- stationary laws

def test_uniform_stationary_law():
    o = mo.build(_zero(2), GaussianStd())
    assert np.allclose(o.pi, 0.25, rtol=0, atol=1e-15)


def test_reference_system_oracle():
    o = mo.build(VA, GaussianStd())
    assert np.all(o.pi > 0)
    assert o.residual <= 1e-12
    assert np.abs(o.pi @ o.P - o.pi).sum() <= 1e-10
    assert o.pi_tilde.sum() == pytest.approx(1.0, abs=1e-10)


def test_stationary_law_unique_from_random_starts():
    P = mo.transition_matrix(VA, GaussianStd())
    rng = np.random.default_rng(0)
    a, _ = mo.stationary(P, init=rng.random(4))
    b, _ = mo.stationary(P, init=rng.random(4))
    assert np.max(np.abs(a - b)) <= 1e-10


def test_stationary_reports_non_convergence():
    flip = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ConvergenceError) as exc:
        mo.stationary(flip, init=np.array([0.9, 0.1]), max_iter=1000)
    assert exc.value.residual == pytest.approx(1.6)


@pytest.mark.parametrize("n", [2, 3])
def test_augmented_conditional_equals_transition_rows(n):
    rng = np.random.default_rng(n)
    p = NetworkParams(rng.uniform(-2, 2, (n, n)), rng.uniform(-1, 1, n))
    o = mo.build(p, GaussianStd())
    cond = mo.augmented_conditional(o)
    assert np.max(np.abs(cond - o.P)) <= 1e-10
    # index convention: entry idx(new) + 2^n idx(old)
    old, new = 1, 2 ** n - 1
    assert o.pi_tilde[new + 2 ** n * old] == pytest.approx(o.pi[old] * o.P[old, new], rel=1e-14)


def test_oracle_csv_export(tmp_path):
    o = mo.build(VA, GaussianStd())
    o.to_csv(tmp_path / "P.csv", tmp_path / "pi.csv")
    P = np.loadtxt(tmp_path / "P.csv", delimiter=",", skiprows=1)[:, 1:]
    pi = np.loadtxt(tmp_path / "pi.csv", delimiter=",", skiprows=1)[:, 1]
    assert np.array_equal(P, o.P) and np.array_equal(pi, o.pi)


# ---------------------------------------------------------------- identifiability

def test_scale_identity():
    assert mo.verify_scale_invariance(VA, [1.0, 1.0]) == 0.0


def test_scale_positive():
    assert mo.verify_scale_invariance(VA, [2.0, 0.5]) <= 1e-10


def test_scale_negative_differs():
    p = NetworkParams([[0.8]], [0.3])
    assert mo.verify_scale_invariance(p, [-1.5]) > 1e-3


def test_scale_zero_rejected():
    with pytest.raises(ParameterError):
        mo.verify_scale_invariance(VA, [0.0, 1.0])


def test_counterexample_swap_network():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    params, model = bnp_canonicalize(A, 0.1)
    hat = mo.discrete_counterexample(params, model)
    assert not np.array_equal(hat.A, A)
    diff = mo.transition_matrix(hat, model, "pm1") - mo.transition_matrix(params, model, "pm1")
    assert np.max(np.abs(diff)) <= 1e-12


def test_counterexample_in_01_states():
    A = np.array([[0.0, 1.5], [-0.7, 0.0]])
    params, model = bnp_canonicalize(A, 0.1)
    hat = mo.discrete_counterexample(params, model, convention="01")
    diff = mo.transition_matrix(hat, model) - mo.transition_matrix(params, model)
    assert not np.array_equal(hat.A, A) and np.max(np.abs(diff)) <= 1e-12


def test_counterexample_needs_discrete_model():
    with pytest.raises(UnsupportedModelError):
        mo.discrete_counterexample(VA, GaussianStd())


def test_counterexample_needs_off_diagonal_entries():
    params, model = bnp_canonicalize(np.array([[0.0, 1.0], [0.0, 2.0]]), 0.1)
    with pytest.raises(PreconditionError):
        mo.discrete_counterexample(params, model)


# ---------------------------------------------------------------- objective

def test_objective_fair_bit():
    o = mo.build(_zero(1), GaussianStd())
    assert mo.exact_objective(_zero(1), o) == pytest.approx(np.log(0.5), rel=1e-14)


def test_objective_maximized_at_truth():
    o = mo.build(VA, GaussianStd())
    best = mo.exact_objective(VA, o)
    rng = np.random.default_rng(1)
    probes = VA.theta + rng.normal(scale=0.5, size=(10_000, 6))
    vals = np.array([mo.exact_objective(t, o) for t in probes])
    assert np.all(vals < best)


def test_objective_gradient_vanishes_at_truth():
    o = mo.build(VA, GaussianStd())
    h = 1e-5
    grad = []
    for j in range(6):
        e = np.zeros(6)
        e[j] = h
        grad.append((mo.exact_objective(VA.theta + e, o) - mo.exact_objective(VA.theta - e, o)) / (2 * h))
    assert np.max(np.abs(grad)) <= 1e-6
    assert np.allclose(grad, mo.expected_score(VA, o), atol=1e-8)


def test_objective_strictly_concave_on_segments():
    o = mo.build(VA, GaussianStd())
    rng = np.random.default_rng(4)
    for _ in range(50):
        u = VA.theta + rng.normal(scale=1.5, size=6)
        v = VA.theta + rng.normal(scale=1.5, size=6)
        mid = mo.exact_objective((u + v) / 2, o)
        avg = (mo.exact_objective(u, o) + mo.exact_objective(v, o)) / 2
        assert mid >= avg
        if np.linalg.norm(u - v) >= 1e-3:
            assert mid > avg


def test_objective_minus_infinity_sentinel():
    params, model = bnp_canonicalize(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.1)
    o = mo.build(params, model)
    far = np.array([0.0, 0.0, 1e200, 0.0, 0.0, 1e200])
    assert mo.exact_objective(far, o) == -np.inf


def test_expected_hessian_matches_difference_of_expected_score():
    o = mo.build(VA, GaussianStd())
    theta = VA.theta + 0.3
    H = mo.expected_hessian(theta, o)
    h = 1e-6
    num = np.column_stack([(mo.expected_score(theta + h * e, o) - mo.expected_score(theta - h * e, o)) / (2 * h)
                           for e in np.eye(6)])
    assert np.allclose(H, num, atol=1e-7)
