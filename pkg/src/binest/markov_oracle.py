"""Exact analysis of the observation chain by enumerating all 2^n states.

State vectors map to integers by little-endian bit packing: s -> sum_i s_i 2^i
(0-based i). A pair (s_new, s_old) of the augmented chain maps to
index(s_new) + 2^n index(s_old), so ``pi_tilde.reshape(2^n, 2^n)[old, new]``
is the joint stationary law of (S_{k-1}, S_k).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from . import likelihood as lk
from .dynamics import (Discrete3, DisturbanceModel, GaussianStd, NetworkParams, Scenario,
                       ScaledGaussian, state_vectors)
from .errors import (CapacityError, ConvergenceError, ParameterError, PreconditionError,
                     UnsupportedModelError)

MAX_ROW_N = 20
MAX_BUILD_N = 12


def _tails(params: NetworkParams, model: DisturbanceModel, states: np.ndarray):
    """(P{S_{k+1,i} = 1 | S_k = s}, P{S_{k+1,i} = 0 | S_k = s}) for every row s of ``states``."""
    if not isinstance(model, DisturbanceModel) or not model.exact_tails:
        raise UnsupportedModelError(f"model {type(model).__name__} has no exact tail probabilities")
    model.check_dim(params.n)
    thr = params.c[None, :] - states @ params.A.T
    return model.tail(thr), model.cotail(thr)


def _rows_from_tails(tails) -> np.ndarray:
    up, down = tails
    n = up.shape[-1]
    bits = state_vectors(n, "01")
    # P(s -> u) = prod_i t_i^{u_i} (1 - t_i)^{1 - u_i}
    P = np.ones((up.shape[0], 2 ** n))
    for i in range(n):
        P *= np.where(bits[None, :, i] == 1, up[:, i:i + 1], down[:, i:i + 1])
    return P


def transition_row(params: NetworkParams, model: DisturbanceModel, s,
                   scenario: Scenario | None = None, convention: str = "01") -> np.ndarray:
    """Distribution of S_{k+1} given S_k = s, indexed by little-endian state index."""
    if params.n > MAX_ROW_N:
        raise CapacityError(f"transition rows need n <= {MAX_ROW_N}, got {params.n}")
    if scenario is not None and not scenario.canonical:
        raise UnsupportedModelError("scenario perturbations have no exact transition law here")
    s = np.asarray(s, dtype=float).reshape(1, -1)
    if s.shape[1] != params.n:
        raise ParameterError(f"state must have length {params.n}")
    return _rows_from_tails(_tails(params, model, s))[0]


def transition_matrix(params: NetworkParams, model: DisturbanceModel,
                      convention: str = "01") -> np.ndarray:
    """Full 2^n x 2^n transition matrix; row = current state, column = next state."""
    if params.n > MAX_BUILD_N:
        raise CapacityError(f"full transition matrices need n <= {MAX_BUILD_N}, got {params.n}")
    return _rows_from_tails(_tails(params, model, state_vectors(params.n, convention)))


def stationary(P: np.ndarray, tol: float = 1e-12, max_iter: int = 1_000_000,
               init: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Power iteration pi <- pi P until ||pi P - pi||_1 <= tol.

    Returns (pi, residual). Raises ConvergenceError carrying the last residual.
    """
    m = P.shape[0]
    pi = np.full(m, 1.0 / m) if init is None else np.asarray(init, dtype=float) / np.sum(init)
    resid = np.inf
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        resid = float(np.abs(nxt - pi).sum())
        pi = nxt
        if resid <= tol:
            resid = float(np.abs(pi @ P - pi).sum())
            if resid <= tol:
                return pi, resid
    raise ConvergenceError(f"power iteration stalled at residual {resid:.3e}", residual=resid)


@dataclass(frozen=True, eq=False)
class ChainOracle:
    """Transition matrix, stationary law and augmented stationary law of {S_k}."""

    n: int
    P: np.ndarray
    pi: np.ndarray
    pi_tilde: np.ndarray
    residual: float
    convention: str = "01"

    @property
    def joint(self) -> np.ndarray:
        """pi_tilde as a (2^n, 2^n) array indexed [old, new]."""
        return self.pi_tilde.reshape(2 ** self.n, 2 ** self.n)

    def to_csv(self, path_P, path_pi) -> None:
        with open(path_P, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["from"] + [f"to_{j}" for j in range(self.P.shape[1])])
            for i, row in enumerate(self.P):
                w.writerow([i] + [repr(float(v)) for v in row])
        with open(path_pi, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["state", "pi"])
            for i, v in enumerate(self.pi):
                w.writerow([i, repr(float(v))])


def build(params: NetworkParams, model: DisturbanceModel, convention: str = "01",
          tol: float = 1e-12, max_iter: int = 1_000_000) -> ChainOracle:
    P = transition_matrix(params, model, convention)
    pi, resid = stationary(P, tol=tol, max_iter=max_iter)
    # pi_tilde(new, old) = pi(old) P(old, new), flattened with old as the slow axis
    pi_tilde = (pi[:, None] * P).ravel()
    return ChainOracle(params.n, P, pi, pi_tilde, resid, convention)


def augmented_conditional(oracle: ChainOracle) -> np.ndarray:
    """P{first block = new | second block = old} recomputed from pi_tilde, indexed [old, new]."""
    J = oracle.joint
    return J / J.sum(axis=1, keepdims=True)


# --------------------------------------------------------------------------
# identifiability constructions
# --------------------------------------------------------------------------

def verify_scale_invariance(params: NetworkParams, b) -> float:
    """Max |P - P_scaled| for the system rescaled by B = diag(b).

    The scaled system has A/b_i, c/b_i and disturbance N(0, b_i^-2). For
    positive b the two transition matrices agree; a negative b_i flips the
    direction of the quantizer inequality and the raw difference is reported
    as is.
    """
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size != params.n:
        raise ParameterError(f"b must have length {params.n}")
    if np.any(b == 0) or not np.all(np.isfinite(b)):
        raise ParameterError("scaling entries must be finite and nonzero")
    P = transition_matrix(params, GaussianStd())
    scaled = NetworkParams(params.A / b[:, None], params.c / b)
    P_scaled = transition_matrix(scaled, ScaledGaussian(1.0 / np.abs(b)))
    return float(np.max(np.abs(P - P_scaled)))


def discrete_counterexample(params: NetworkParams, model: Discrete3, convention: str = "pm1",
                            eps_max: float = 0.1, eps_min: float = 1e-9,
                            tol: float = 1e-12) -> NetworkParams:
    """A different adjacency matrix with the same transition matrix under 3-point noise.

    Adds +-eps to a single entry of A, halving eps from ``eps_max`` until no
    indicator 1[d_m >= c_i - A_i s] changes over the finite state set. Off-diagonal
    nonzero entries are tried first.
    """
    if not isinstance(model, Discrete3):
        raise UnsupportedModelError("the counterexample construction needs a Discrete3 model")
    A = params.A
    n = params.n
    off = ~np.eye(n, dtype=bool)
    if not np.all(np.any((A != 0) & off, axis=1)):
        raise PreconditionError("every row of A needs a nonzero off-diagonal entry")
    P = transition_matrix(params, model, convention)
    candidates = [(i, j) for i in range(n) for j in range(n) if j != i and A[i, j] != 0]
    candidates += [(i, j) for i in range(n) for j in range(n) if (i, j) not in candidates]
    for i, j in candidates:
        for sign in (1.0, -1.0):
            eps = eps_max
            while eps >= eps_min:
                A_hat = A.copy()
                A_hat[i, j] += sign * eps
                hat = NetworkParams(A_hat, params.c)
                if np.max(np.abs(transition_matrix(hat, model, convention) - P)) <= tol:
                    return hat
                eps /= 2.0
    raise ConvergenceError("no admissible perturbation found")


# --------------------------------------------------------------------------
# stationary objective
# --------------------------------------------------------------------------

def _new_marginals(oracle: ChainOracle) -> tuple[np.ndarray, np.ndarray]:
    """(q1, q0): q1[old, i] = pi_tilde-mass of {S_old = old, S_new_i = 1}."""
    bits = state_vectors(oracle.n, "01")
    J = oracle.joint
    q1 = J @ bits
    q0 = J.sum(axis=1, keepdims=True) - q1
    return q1, q0


def _check_oracle(oracle: ChainOracle):
    if oracle.convention != "01":
        raise ParameterError("the likelihood is defined for {0,1} states")
    if not np.all(np.isfinite(oracle.pi_tilde)):
        raise ParameterError("oracle has non-finite entries")


def exact_objective(theta, oracle: ChainOracle) -> float:
    """E sum_i log g_i(S_tilde | theta) under the stationary augmented law."""
    _check_oracle(oracle)
    blocks = lk._as_blocks(theta)
    old = state_vectors(oracle.n, "01")
    q1, q0 = _new_marginals(oracle)
    ones = np.ones_like(old)
    lg1 = lk.log_g_terms(blocks[None], old, ones)
    lg0 = lk.log_g_terms(blocks[None], old, 1 - ones)
    with np.errstate(invalid="ignore"):
        terms = np.where(q1 > 0, q1 * lg1, 0.0) + np.where(q0 > 0, q0 * lg0, 0.0)
    value = float(terms.sum())
    if not np.isfinite(value):
        return -np.inf
    return value


def expected_score(theta, oracle: ChainOracle) -> np.ndarray:
    """E K(theta, S_tilde) under the stationary augmented law, ordered like theta."""
    _check_oracle(oracle)
    blocks = lk._as_blocks(theta)
    old = state_vectors(oracle.n, "01")
    q1, q0 = _new_marginals(oracle)
    ones = np.ones_like(old)
    k1 = lk.score_blocks(blocks[None], old, ones)
    k0 = lk.score_blocks(blocks[None], old, 1 - ones)
    return (np.einsum("si,sij->ij", q1, k1) + np.einsum("si,sij->ij", q0, k0)).ravel()


def expected_hessian(theta, oracle: ChainOracle) -> np.ndarray:
    """Block-diagonal E Hessian of sum_i log g_i, shape (n(n+1), n(n+1))."""
    _check_oracle(oracle)
    blocks = lk._as_blocks(theta)
    n = oracle.n
    old = state_vectors(n, "01")
    q1, q0 = _new_marginals(oracle)
    ones = np.ones_like(old)
    w = q1 * lk.hessian_weights(blocks[None], old, ones) + q0 * lk.hessian_weights(blocks[None], old, 1 - ones)
    v = np.hstack([old, -np.ones((old.shape[0], 1))])
    H = np.zeros((n * (n + 1), n * (n + 1)))
    for i in range(n):
        sl = slice(i * (n + 1), (i + 1) * (n + 1))
        H[sl, sl] = -np.einsum("s,sj,sk->jk", w[:, i], v, v)
    return H
