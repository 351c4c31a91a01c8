"""Probit transition likelihood of the binary network model.

For a transition s_old -> s_new and agent i let x = c_i - A_i s_old. Under
standard Gaussian disturbances

    g_i = (1 - Phi(x))^{s_new_i} * Phi(x)^{1 - s_new_i} = Phi(z),
    z   = (1 - 2 s_new_i) x,

so every quantity below is a function of the signed argument ``z``:

    d log g_i / d(A_i, c_i)   = (2 s_new_i - 1) * mills(z) * (s_old, -1)
    d2 log g_i / d(A_i, c_i)2 = -G(z) * v v^T,  v = (s_old, -1)

with mills(z) = phi(z) / Phi(z) and G(z) = z mills(z) + mills(z)^2.
Everything is evaluated from ``log_ndtr`` so that deep tails do not
underflow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import ParameterError

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _finite_input(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise ParameterError("NaN argument")
    return x


def phi(x):
    """Standard normal density."""
    x = _finite_input(x)
    return np.exp(-0.5 * x * x - _LOG_SQRT_2PI)


def cdf(x):
    """Standard normal distribution function."""
    return ndtr(_finite_input(x))


def log_cdf(x):
    """log Phi(x); asymptotic expansion in the lower tail, never -inf for |x| <= 40."""
    return log_ndtr(_finite_input(x))


def mills(x):
    """phi(x) / Phi(x), computed in log space."""
    x = _finite_input(x)
    return np.exp(-0.5 * x * x - _LOG_SQRT_2PI - log_ndtr(x))


def _x_plus_mills(x):
    """x + mills(x) without the cancellation that plain addition suffers for x << 0.

    For x <= -5 uses the continued fraction
    x + mills(x) = 1 / (y + 2 / (y + 3 / (y + ...))), y = -x,
    truncated at 40 terms (converged to rounding from y = 5 on).
    """
    x = np.asarray(x, dtype=float)
    out = x + mills(x)
    low = x <= -5.0
    if np.any(low):
        y = -x[low]
        t = y.copy()
        for k in range(40, 1, -1):
            t = y + k / t
        out = np.array(out, dtype=float)
        out[low] = 1.0 / t
    return out


def g_big(x):
    """G(x) = (x phi Phi + phi^2) / Phi^2, the probit curvature weight.

    Decreases from 1 (x -> -inf) to 0 (x -> +inf). For x above ~38.6 the value
    is below the smallest float64 and rounds to 0; use :func:`log_g_big` there.
    """
    return mills(x) * _x_plus_mills(x)


def log_g_big(x):
    """log G(x), finite wherever mills(x) is representable in log space."""
    x = _finite_input(x)
    log_m = -0.5 * x * x - _LOG_SQRT_2PI - log_ndtr(x)
    return log_m + np.log(_x_plus_mills(x))

# --------------------------------------------------------------------------
# vectorized kernels over (..., n, n+1) parameter blocks
# --------------------------------------------------------------------------

def signed_argument(blocks, s_old, s_new):
    """z[..., i] = (1 - 2 s_new_i) (c_i - A_i s_old)."""
    blocks = np.asarray(blocks, dtype=float)
    n = blocks.shape[-2]
    s_old = np.asarray(s_old, dtype=float)
    x = blocks[..., n] - np.einsum("...ij,...j->...i", blocks[..., :n], s_old)
    return (1.0 - 2.0 * np.asarray(s_new, dtype=float)) * x


def log_g_terms(blocks, s_old, s_new):
    """log g_i for every agent, shape (..., n)."""
    return log_ndtr(signed_argument(blocks, s_old, s_new))


def score_blocks(blocks, s_old, s_new):
    """Gradient of sum_i log g_i w.r.t. each block row (A_i, c_i); shape (..., n, n+1)."""
    s_new = np.asarray(s_new, dtype=float)
    s_old = np.asarray(s_old, dtype=float)
    w = (2.0 * s_new - 1.0) * mills(signed_argument(blocks, s_old, s_new))
    n = w.shape[-1]
    grad = np.empty(w.shape + (n + 1,), dtype=float)
    grad[..., :n] = w[..., :, None] * s_old[..., None, :]
    grad[..., n] = -w
    return grad


def hessian_weights(blocks, s_old, s_new):
    """G(z_i) for every agent; the per-agent Hessian is -G(z_i) v v^T."""
    return g_big(signed_argument(blocks, s_old, s_new))


# --------------------------------------------------------------------------
# single-sample interface
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ThetaRow:
    """Parameters (A_i, c_i) of one agent."""

    a: np.ndarray
    c: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(a)) and np.isfinite(self.c)):
            raise ParameterError("row parameters must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", float(self.c))

    @property
    def vector(self):
        return np.append(self.a, self.c)


@dataclass(frozen=True, eq=False)
class PairSample:
    """Consecutive observations (S_k, S_{k-1})."""

    s_new: np.ndarray
    s_old: np.ndarray

    def __post_init__(self):
        s_new = np.asarray(self.s_new).reshape(-1)
        s_old = np.asarray(self.s_old).reshape(-1)
        if s_new.shape != s_old.shape:
            raise ParameterError("s_new and s_old must have equal length")
        for s in (s_new, s_old):
            if not np.all((s == 0) | (s == 1)):
                raise ParameterError("pair entries must be binary")
        object.__setattr__(self, "s_new", s_new.astype(float))
        object.__setattr__(self, "s_old", s_old.astype(float))


def _row_z(row: ThetaRow, pair: PairSample, i: int) -> float:
    x = row.c - row.a @ pair.s_old
    return (1.0 - 2.0 * pair.s_new[i]) * x


def g(row: ThetaRow, pair: PairSample, i: int) -> float:
    """Probability that agent i moves to ``pair.s_new[i]`` given ``pair.s_old``."""
    return float(ndtr(_row_z(row, pair, i)))


def log_g(row: ThetaRow, pair: PairSample, i: int) -> float:
    return float(log_ndtr(_row_z(row, pair, i)))


def score_row(row: ThetaRow, pair: PairSample, i: int) -> np.ndarray:
    """Gradient of log g_i w.r.t. (a_1..a_n, c); length n+1."""
    w = (2.0 * pair.s_new[i] - 1.0) * float(mills(_row_z(row, pair, i)))
    return np.append(w * pair.s_old, -w)


def hessian_row(row: ThetaRow, pair: PairSample, i: int) -> np.ndarray:
    """Hessian of log g_i w.r.t. (a_1..a_n, c): -G(z) v v^T with v = (s_old, -1)."""
    v = np.append(pair.s_old, -1.0)
    return -float(g_big(_row_z(row, pair, i))) * np.outer(v, v)


def score(theta, pair: PairSample) -> np.ndarray:
    """Stacked per-agent scores, ordered like ``NetworkParams.theta``."""
    blocks = _as_blocks(theta)
    return score_blocks(blocks, pair.s_old, pair.s_new).ravel()


def log_likelihood(theta, seq) -> float:
    """sum_{k=1..T} sum_i log g_i(S_k, S_{k-1}); the initial-state term is omitted."""
    if len(seq) < 2:
        raise ParameterError("need at least one transition")
    s_new, s_old = seq.pairs()
    return float(np.sum(log_g_terms(_as_blocks(theta)[None], s_old, s_new)))


def _as_blocks(theta) -> np.ndarray:
    if hasattr(theta, "blocks"):
        return theta.blocks
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 2:
        return theta
    n = int(round((np.sqrt(1 + 4 * theta.size) - 1) / 2))
    return theta.reshape(n, n + 1)
