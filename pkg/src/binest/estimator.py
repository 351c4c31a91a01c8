"""Recursive maximum-likelihood estimation of (A, c) from binary observations.

The estimate moves along the per-transition score,

    theta_k = theta_{k-1} + a_k K(theta_{k-1}, (S_k, S_{k-1})),   k = 1, 2, ...

with a_k = a / (k^{1 - beta} + gamma). The truncated variant resets theta to
the zero vector and enlarges the admissible ball whenever a candidate leaves
the current ball of radius M_sigma.

Everything operates on a batch of independent trajectories at once; the
single-trajectory functions are the batch of size one.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from . import likelihood as lk
from .dynamics import NetworkParams, ObservationSequence
from .errors import ConvergenceError, NumericError, ParameterError


@dataclass(frozen=True)
class StepSchedule:
    """a_k = a / (k^{1 - beta} + gamma)."""

    a: float = 15.0
    beta: float = 0.0
    gamma: float = 100.0

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError(f"step gain a must be positive, got {self.a}")
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if not (0.0 <= self.beta < 1.0 / 3.0):
            raise ParameterError(f"beta must lie in [0, 1/3), got {self.beta}")

    def __call__(self, k):
        return step_size(self, k)

    def to_dict(self):
        return {"a": self.a, "beta": self.beta, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d):
        d = d or {}
        return cls(d.get("a", 15.0), d.get("beta", 0.0), d.get("gamma", 100.0))


def step_size(schedule: StepSchedule, k):
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 1):
        raise ParameterError("step index must be >= 1")
    out = schedule.a / (k_arr ** (1.0 - schedule.beta) + schedule.gamma)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TruncationBounds:
    """Radii M_j = m0 * growth^j of the expanding admissible balls."""

    m0: float = 10.0
    growth: float = 2.0

    def __post_init__(self):
        if not self.m0 > 0 or not self.growth > 1:
            raise ParameterError("need m0 > 0 and growth > 1")

    def bound(self, j):
        return self.m0 * self.growth ** np.asarray(j, dtype=float)

    def to_dict(self):
        return {"m0": self.m0, "growth": self.growth}


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """Current estimate, number of updates performed and truncation count."""

    theta: np.ndarray
    k: int = 0
    sigma: int = 0
    bounds: TruncationBounds | None = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).ravel()
        object.__setattr__(self, "theta", theta)

    @property
    def n(self):
        return int(round((np.sqrt(1 + 4 * self.theta.size) - 1) / 2))

    @property
    def params(self) -> NetworkParams:
        return NetworkParams.from_theta(self.theta)


def _candidate(state: EstimatorState, pair: lk.PairSample, schedule: StepSchedule):
    k = state.k + 1
    K = lk.score(state.theta, pair)
    cand = state.theta + step_size(schedule, k) * K
    if not np.all(np.isfinite(cand)):
        raise NumericError(f"non-finite iterate at step {k}")
    return k, cand


def sa_update(state: EstimatorState, pair: lk.PairSample, schedule: StepSchedule) -> EstimatorState:
    """One plain update using step a_{k+1}, where k = ``state.k``."""
    k, cand = _candidate(state, pair, schedule)
    return replace(state, theta=cand, k=k)


def sa_update_truncated(state: EstimatorState, pair: lk.PairSample,
                        schedule: StepSchedule) -> EstimatorState:
    """One update with expanding truncations."""
    bounds = state.bounds or TruncationBounds()
    k, cand = _candidate(state, pair, schedule)
    if np.linalg.norm(cand) <= bounds.bound(state.sigma):
        return replace(state, theta=cand, k=k, bounds=bounds)
    return replace(state, theta=np.zeros_like(cand), k=k, sigma=state.sigma + 1, bounds=bounds)


# --------------------------------------------------------------------------
# batch driver
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Recorded iterates. ``theta`` is (R, N, d) for a batch, (R, d) for a single run."""

    k: np.ndarray
    theta: np.ndarray
    sigma: np.ndarray
    err: np.ndarray | None = None

    def to_csv(self, path) -> None:
        if self.theta.ndim != 2:
            raise ParameterError("CSV export is per trajectory")
        d = self.theta.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            head = ["k"] + [f"theta_{j + 1}" for j in range(d)]
            if self.err is not None:
                head.append("err")
            w.writerow(head + ["sigma"])
            for r, k in enumerate(self.k):
                row = [int(k)] + [repr(float(v)) for v in self.theta[r]]
                if self.err is not None:
                    row.append(repr(float(self.err[r])))
                w.writerow(row + [int(self.sigma[r])])


@dataclass
class BatchSA:
    """Lock-step recursion for N trajectories sharing a step schedule."""

    blocks: np.ndarray                      # (N, n, n+1)
    schedule: StepSchedule
    bounds: TruncationBounds | None = None
    k: int = 0
    sigma: np.ndarray = field(default=None)

    def __post_init__(self):
        self.blocks = np.array(self.blocks, dtype=float)
        if self.sigma is None:
            self.sigma = np.zeros(self.blocks.shape[0], dtype=np.int64)

    @property
    def theta(self) -> np.ndarray:
        return self.blocks.reshape(self.blocks.shape[0], -1)

    def consume(self, s_prev: np.ndarray, s_block: np.ndarray, record_at=()) -> list:
        """Run updates on transitions s_prev -> s_block[:, 0] -> s_block[:, 1] ...

        Returns [(k, theta copy, sigma copy)] for every k in ``record_at`` reached.
        """
        blocks = self.blocks
        n = blocks.shape[1]
        s_old = np.asarray(s_prev, dtype=float)
        b = s_block.shape[1]
        ks = np.arange(self.k + 1, self.k + b + 1)
        steps = step_size(self.schedule, ks)
        want = set(int(r) for r in record_at)
        recs = []
        for j in range(b):
            s_new = s_block[:, j].astype(float)
            z = (1.0 - 2.0 * s_new) * (blocks[:, :, n] - np.einsum("tij,tj->ti", blocks[:, :, :n], s_old))
            w = steps[j] * (2.0 * s_new - 1.0) * lk.mills(z)
            blocks[:, :, :n] += w[:, :, None] * s_old[:, None, :]
            blocks[:, :, n] -= w
            if self.bounds is not None:
                norms = np.sqrt(np.einsum("tij,tij->t", blocks, blocks))
                out = norms > self.bounds.bound(self.sigma)
                if np.any(out):
                    blocks[out] = 0.0
                    self.sigma[out] += 1
            s_old = s_new
            if ks[j] in want:
                recs.append((int(ks[j]), self.theta.copy(), self.sigma.copy()))
        self.k += b
        if not np.all(np.isfinite(blocks)):
            raise NumericError(f"non-finite iterate by step {self.k}")
        return recs


def _init_blocks(theta0, n: int, N: int) -> np.ndarray:
    if theta0 is None:
        return np.zeros((N, n, n + 1))
    theta0 = np.asarray(theta0.theta if hasattr(theta0, "theta") else theta0, dtype=float)
    if theta0.size != n * (n + 1):
        raise ParameterError(f"theta0 must have n(n+1) = {n * (n + 1)} entries")
    return np.repeat(theta0.reshape(1, n, n + 1), N, axis=0)


def record_grid(T: int, every: int | None = None, points: int | None = None) -> np.ndarray:
    """Steps to record: multiples of ``every`` or ~``points`` log-spaced values; T always included."""
    if every is not None:
        if every < 1:
            raise ParameterError("record_every must be >= 1")
        ks = np.arange(every, T + 1, every)
    else:
        ks = np.unique(np.round(np.logspace(0, np.log10(T), points or 60)).astype(np.int64))
    return np.unique(np.append(ks, T))


def run_batch(state_blocks: Iterable[np.ndarray], s0: np.ndarray, n: int, theta0=None,
              schedule: StepSchedule | None = None, truncation: TruncationBounds | None = None,
              record_at=(), reference=None) -> Trajectory:
    """Drive N recursions with (N, b, n) blocks of successive states following ``s0``."""
    s0 = np.atleast_2d(np.asarray(s0))
    sa = BatchSA(_init_blocks(theta0, n, s0.shape[0]), schedule or StepSchedule(), truncation)
    recs = []
    s_prev = s0
    for blk in state_blocks:
        recs += sa.consume(s_prev, blk, record_at)
        s_prev = blk[:, -1]
    if not recs:
        recs = [(sa.k, sa.theta.copy(), sa.sigma.copy())]
    ks = np.array([r[0] for r in recs])
    thetas = np.stack([r[1] for r in recs])
    sigmas = np.stack([r[2] for r in recs])
    err = None
    if reference is not None:
        ref = np.asarray(reference.theta if hasattr(reference, "theta") else reference, dtype=float)
        err = np.linalg.norm(thetas - ref.ravel(), axis=-1)
    return Trajectory(ks, thetas, sigmas, err)


def run_online(seq: ObservationSequence, theta0=None, schedule: StepSchedule | None = None,
               truncation: TruncationBounds | bool | None = None, record_every: int = 1,
               reference=None, block: int = 4096) -> Trajectory:
    """Run the recursion over a stored sequence, recording every ``record_every`` steps."""
    if len(seq) < 2:
        raise ParameterError("need at least one transition")
    if truncation is True:
        truncation = TruncationBounds()
    elif truncation is False:
        truncation = None
    states = seq.states
    T = seq.T
    ks = record_grid(T, every=record_every)
    blocks = (states[None, 1 + i:1 + min(i + block, T)] for i in range(0, T, block))
    tr = run_batch(blocks, states[:1], seq.n, theta0, schedule, truncation, ks, reference)
    return Trajectory(tr.k, tr.theta[:, 0], tr.sigma[:, 0],
                      None if tr.err is None else tr.err[:, 0])


def mse(thetas, truth) -> np.ndarray:
    """(1/N) sum_trials ||theta - truth||^2 along the trial axis (second to last)."""
    thetas = np.asarray(thetas, dtype=float)
    truth = np.asarray(truth.theta if hasattr(truth, "theta") else truth, dtype=float).ravel()
    return np.mean(np.sum((thetas - truth) ** 2, axis=-1), axis=-1)


# --------------------------------------------------------------------------
# batch maximum likelihood
# --------------------------------------------------------------------------

def _row_objective(theta_i, V, n1, n0):
    x = V @ theta_i                      # V rows are (-s, 1): x = c - a.s
    return float(np.sum(n1 * lk.log_cdf(-x)) + np.sum(n0 * lk.log_cdf(x)))


def _row_grad_hess(theta_i, V, n1, n0):
    x = V @ theta_i
    # d/dtheta of log Phi(-x) is mills(-x) (s, -1) = -mills(-x) V-row
    gw = -n1 * lk.mills(-x) + n0 * lk.mills(x)
    hw = n1 * lk.g_big(-x) + n0 * lk.g_big(x)
    grad = V.T @ gw
    hess = -(V.T * hw) @ V
    return grad, hess


def batch_mle(seq: ObservationSequence, theta0=None, tol: float = 1e-8,
              max_iter: int = 200) -> np.ndarray:
    """Maximizer of the log-likelihood by damped Newton iterations.

    The log-likelihood separates over agents and is concave, so each row
    (A_i, c_i) is solved on its own from counts over distinct previous states.
    Stops when the full gradient norm is <= ``tol``.
    """
    if len(seq) < 2:
        raise ParameterError("need at least one transition")
    n = seq.n
    s_new, s_old = seq.pairs()
    patterns, inverse = np.unique(s_old, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    V = np.hstack([-patterns.astype(float), np.ones((patterns.shape[0], 1))])
    theta = _init_blocks(theta0, n, 1)[0]
    row_tol = tol / np.sqrt(n)
    grad_sq = 0.0
    for i in range(n):
        n1 = np.bincount(inverse, weights=s_new[:, i].astype(float), minlength=len(patterns))
        n0 = np.bincount(inverse, minlength=len(patterns)) - n1
        th = theta[i].copy()
        f = _row_objective(th, V, n1, n0)
        for _ in range(max_iter):
            grad, hess = _row_grad_hess(th, V, n1, n0)
            gnorm = np.linalg.norm(grad)
            if gnorm <= row_tol:
                break
            try:
                d = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                d = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            t = 1.0
            while t > 1e-12:
                cand = th + t * d
                f_new = _row_objective(cand, V, n1, n0)
                if f_new >= f or np.linalg.norm(_row_grad_hess(cand, V, n1, n0)[0]) < gnorm:
                    break
                t *= 0.5
            th, f = cand, f_new
        grad, _ = _row_grad_hess(th, V, n1, n0)
        grad_sq += float(grad @ grad)
        theta[i] = th
    gnorm = float(np.sqrt(grad_sq))
    if gnorm > tol:
        raise ConvergenceError(f"Newton iterations stopped with gradient norm {gnorm:.3e}",
                               residual=gnorm)
    return theta.ravel()


def round_integer_weights(theta, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-integer (A, c), halves rounded away from zero."""
    theta = np.asarray(theta.theta if hasattr(theta, "theta") else theta, dtype=float).ravel()
    if n is None:
        n = int(round((np.sqrt(1 + 4 * theta.size) - 1) / 2))
    M = theta.reshape(n, n + 1)
    R = (np.sign(M) * np.floor(np.abs(M) + 0.5)).astype(np.int64)
    return R[:, :n], R[:, n]
