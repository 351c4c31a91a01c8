"""Binary-output networked dynamics.

The observed process is

    Y_{k+1} = A S_k + D_k,    S_k = 1[Y_k >= c]   (entry-wise)

with states ``S_k`` in {0,1}^n. The inner state ``Y`` is never stored: it is
sampled implicitly when simulating and integrated out when computing
transition probabilities (see :mod:`binest.markov_oracle`).

States are stored as ``uint8`` arrays in the {0,1} convention. Systems written
in the {1,-1} convention are converted at the boundary with :func:`pm_to_01`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import ParameterError, ParseError

MAX_ENUM_N = 20


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NetworkParams:
    """Weighted adjacency ``A`` (row i = influences on agent i) and thresholds ``c``."""

    A: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        c = np.array(self.c, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ParameterError(f"A must be a non-empty square matrix, got shape {A.shape}")
        if c.shape != (A.shape[0],):
            raise ParameterError(f"c must have length {A.shape[0]}, got {c.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise ParameterError("A and c must be finite")
        A.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def theta(self) -> np.ndarray:
        """vec((A c)): per-agent blocks (a_i1..a_in, c_i), concatenated."""
        return np.hstack([self.A, self.c[:, None]]).ravel()

    @property
    def blocks(self) -> np.ndarray:
        """(n, n+1) matrix whose row i is (A_i, c_i)."""
        return np.hstack([self.A, self.c[:, None]])

    @classmethod
    def from_theta(cls, theta, n: int | None = None) -> "NetworkParams":
        theta = np.asarray(theta, dtype=float).ravel()
        if n is None:
            n = int(round((math.sqrt(1 + 4 * theta.size) - 1) / 2))
        if theta.size != n * (n + 1):
            raise ParameterError(f"theta of length {theta.size} does not match n={n}")
        M = theta.reshape(n, n + 1)
        return cls(M[:, :n], M[:, n])

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "c": self.c.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkParams":
        try:
            return cls(d["A"], d["c"])
        except KeyError as exc:
            raise ParameterError(f"params document missing key {exc}") from None


# --------------------------------------------------------------------------
# random streams
# --------------------------------------------------------------------------

@dataclass
class TrialStreams:
    """Independent generators for each random ingredient of one trajectory.

    Keeping the ingredients on separate streams means that switching a
    perturbation on or off (e.g. ``zeta = 0``) never shifts the draws of the
    others.
    """

    noise: np.random.Generator
    occasional: np.random.Generator
    update: np.random.Generator
    link: np.random.Generator

    @classmethod
    def shared(cls, rng: np.random.Generator) -> "TrialStreams":
        return cls(rng, rng, rng, rng)


def trial_streams(seed: int, trial: int = 0) -> TrialStreams:
    """Streams for trial ``trial`` of an experiment seeded with ``seed``.

    Derived by spawning from ``SeedSequence(seed, spawn_key=(trial,))``, so
    they depend only on (seed, trial) and not on how trials are scheduled.
    """
    if seed < 0 or trial < 0:
        raise ParameterError("seed and trial must be nonnegative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial),))
    return TrialStreams(*(np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(4)))


# --------------------------------------------------------------------------
# disturbance laws
# --------------------------------------------------------------------------

class DisturbanceModel:
    """Law of the per-agent disturbances D_{k,i} (i.i.d. over k and i)."""

    kind = "abstract"
    exact_tails = True

    def tail(self, thr) -> np.ndarray:
        """P{D_i >= thr_i}, broadcasting along the last axis (agents)."""
        raise NotImplementedError

    def cotail(self, thr) -> np.ndarray:
        """P{D_i < thr_i}, evaluated without cancellation where the law allows."""
        return 1.0 - self.tail(thr)

    def sample(self, streams: TrialStreams, shape) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def check_dim(self, n: int) -> None:
        pass


@dataclass(frozen=True)
class GaussianStd(DisturbanceModel):
    """D_{k,i} ~ N(0, 1)."""

    kind = "gaussian"

    def tail(self, thr):
        return ndtr(-np.asarray(thr, dtype=float))

    def cotail(self, thr):
        return ndtr(np.asarray(thr, dtype=float))

    def sample(self, streams, shape):
        return streams.noise.standard_normal(shape)

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class ScaledGaussian(DisturbanceModel):
    """D_{k,i} ~ N(0, scale_i^2); arises from rescaling a standard system."""

    scale: np.ndarray
    kind = "scaled_gaussian"

    def __post_init__(self):
        scale = np.array(self.scale, dtype=float).reshape(-1)
        if np.any(~np.isfinite(scale)) or np.any(scale <= 0):
            raise ParameterError("scale entries must be finite and positive")
        object.__setattr__(self, "scale", scale)

    def tail(self, thr):
        return ndtr(-np.asarray(thr, dtype=float) / self.scale)

    def cotail(self, thr):
        return ndtr(np.asarray(thr, dtype=float) / self.scale)

    def sample(self, streams, shape):
        return self.scale * streams.noise.standard_normal(shape)

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale.tolist()}

    def check_dim(self, n):
        if self.scale.size != n:
            raise ParameterError(f"scale has length {self.scale.size}, expected {n}")


@dataclass(frozen=True, eq=False)
class Discrete3(DisturbanceModel):
    """D_{k,i} equals d1_i, d2_i, d3_i with probabilities eta, 1 - 2 eta, eta."""

    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    eta: float
    kind = "discrete3"

    def __post_init__(self):
        d1, d2, d3 = (np.array(v, dtype=float).reshape(-1) for v in (self.d1, self.d2, self.d3))
        if not (d1.shape == d2.shape == d3.shape):
            raise ParameterError("d1, d2, d3 must have equal length")
        if not (0.0 < self.eta < 0.5):
            raise ParameterError(f"eta must lie in (0, 1/2), got {self.eta}")
        for v in (d1, d2, d3):
            if not np.all(np.isfinite(v)):
                raise ParameterError("support points must be finite")
        object.__setattr__(self, "d1", d1)
        object.__setattr__(self, "d2", d2)
        object.__setattr__(self, "d3", d3)
        object.__setattr__(self, "eta", float(self.eta))

    def tail(self, thr):
        thr = np.asarray(thr, dtype=float)
        e = self.eta
        return (e * (self.d1 >= thr) + (1.0 - 2.0 * e) * (self.d2 >= thr)
                + e * (self.d3 >= thr))

    def sample(self, streams, shape):
        u = streams.noise.random(shape)
        e = self.eta
        return np.where(u < e, self.d1, np.where(u < 1.0 - e, self.d2, self.d3))

    def to_dict(self):
        return {"kind": self.kind, "d1": self.d1.tolist(), "d2": self.d2.tolist(),
                "d3": self.d3.tolist(), "eta": self.eta}

    def check_dim(self, n):
        if self.d1.size != n:
            raise ParameterError(f"support vectors have length {self.d1.size}, expected {n}")


@dataclass(frozen=True)
class Occasional(DisturbanceModel):
    """D'_{k,i} = 0 with probability zeta, otherwise a draw from ``inner``."""

    zeta: float
    inner: DisturbanceModel = field(default_factory=GaussianStd)
    kind = "occasional"

    def __post_init__(self):
        if not (0.0 <= self.zeta < 1.0):
            raise ParameterError(f"zeta must lie in [0, 1), got {self.zeta}")
        object.__setattr__(self, "zeta", float(self.zeta))

    @property
    def exact_tails(self):
        return self.inner.exact_tails

    def tail(self, thr):
        thr = np.asarray(thr, dtype=float)
        return self.zeta * (thr <= 0.0) + (1.0 - self.zeta) * self.inner.tail(thr)

    def cotail(self, thr):
        thr = np.asarray(thr, dtype=float)
        return self.zeta * (thr > 0.0) + (1.0 - self.zeta) * self.inner.cotail(thr)

    def sample(self, streams, shape):
        d = self.inner.sample(streams, shape)
        if self.zeta > 0.0:
            d = np.where(streams.occasional.random(shape) < self.zeta, 0.0, d)
        return d

    def to_dict(self):
        return {"kind": self.kind, "zeta": self.zeta, "inner": self.inner.to_dict()}

    def check_dim(self, n):
        self.inner.check_dim(n)


def model_from_dict(d: dict) -> DisturbanceModel:
    kind = d.get("kind")
    try:
        if kind == "gaussian":
            return GaussianStd()
        if kind == "scaled_gaussian":
            return ScaledGaussian(d["scale"])
        if kind == "discrete3":
            return Discrete3(d["d1"], d["d2"], d["d3"], d["eta"])
        if kind == "occasional":
            return Occasional(d["zeta"], model_from_dict(d.get("inner", {"kind": "gaussian"})))
    except KeyError as exc:
        raise ParameterError(f"model document of kind {kind!r} missing key {exc}") from None
    raise ParameterError(f"unknown disturbance kind {kind!r}")


# --------------------------------------------------------------------------
# scenario
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Unmodeled perturbations of the canonical dynamics.

    ``p`` is the probability that an agent updates its output at a step
    (non-updating agents hold their previous output); ``tau`` is the
    probability that a link a_ij is dropped for one step.
    """

    p: float = 1.0
    tau: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ParameterError(f"update probability p must lie in (0, 1], got {self.p}")
        if not (0.0 <= self.tau < 1.0):
            raise ParameterError(f"link failure probability tau must lie in [0, 1), got {self.tau}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def canonical(self) -> bool:
        return self.p == 1.0 and self.tau == 0.0

    def to_dict(self):
        return {"p": self.p, "tau": self.tau}

    @classmethod
    def from_dict(cls, d: dict | None) -> "Scenario":
        d = d or {}
        return cls(d.get("p", 1.0), d.get("tau", 0.0))


# --------------------------------------------------------------------------
# observation sequences
# --------------------------------------------------------------------------

@dataclass
class ObservationSequence:
    """States S_0..S_T as a (T+1, n) uint8 array plus generation metadata."""

    states: np.ndarray
    seed: int | None = None
    params_id: str | None = None
    scenario: Scenario = field(default_factory=Scenario)

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ParameterError("states must be a non-empty (T+1, n) array")
        if not np.all((states == 0) | (states == 1)):
            raise ParameterError("states must be binary")
        self.states = states.astype(np.uint8)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    def __len__(self):
        return self.states.shape[0]

    def pairs(self):
        """(s_new, s_old) arrays for k = 1..T."""
        return self.states[1:], self.states[:-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k"] + [f"s_{i + 1}" for i in range(self.n)])
            for k, row in enumerate(self.states):
                w.writerow([k, *row.tolist()])

    @classmethod
    def from_csv(cls, path) -> "ObservationSequence":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ParseError("empty file", path=path)
        header = [h.strip() for h in rows[0]]
        n = len(header) - 1
        if n < 1 or header[0] != "k" or header[1:] != [f"s_{i + 1}" for i in range(n)]:
            raise ParseError(f"expected header k,s_1..s_n, got {','.join(header)}", line=1, path=path)
        states = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != n + 1:
                raise ParseError(f"expected {n + 1} fields, got {len(row)}", line=lineno, path=path)
            vals = [v.strip() for v in row[1:]]
            bad = [v for v in vals if v not in ("0", "1")]
            if bad:
                raise ParseError(f"non-binary entry {bad[0]!r}", line=lineno, path=path)
            states.append([int(v) for v in vals])
        if not states:
            raise ParseError("no data rows", path=path)
        return cls(np.array(states, dtype=np.uint8))


# --------------------------------------------------------------------------
# state conventions
# --------------------------------------------------------------------------

def state_vectors(n: int, convention: str = "01") -> np.ndarray:
    """All 2^n states as rows; row m has bit i equal to (m >> i) & 1.

    In the "pm1" convention bit 0 maps to -1.
    """
    if n > MAX_ENUM_N:
        from .errors import CapacityError
        raise CapacityError(f"cannot enumerate 2^{n} states (limit n <= {MAX_ENUM_N})")
    m = np.arange(2 ** n)[:, None]
    bits = ((m >> np.arange(n)[None, :]) & 1).astype(float)
    if convention == "01":
        return bits
    if convention == "pm1":
        return 2.0 * bits - 1.0
    raise ParameterError(f"unknown state convention {convention!r}")


def state_index(s) -> int:
    """Little-endian index of a binary (or +-1) state vector."""
    s = np.asarray(s)
    bits = (s > 0).astype(np.int64)
    return int(np.sum(bits << np.arange(bits.size)))


def to_pm(s) -> np.ndarray:
    return 2 * np.asarray(s, dtype=float) - 1


def to_01(sbar) -> np.ndarray:
    return ((np.asarray(sbar, dtype=float) + 1) / 2).astype(np.uint8)


def pm_to_01(params: NetworkParams) -> NetworkParams:
    """Rewrite a {1,-1} system as a {0,1} system with the same disturbance.

    With sbar = 2s - 1, ``A sbar + D >= cbar`` is ``2A s + D >= cbar + A 1``.
    The factor 2 is kept on A instead of halving D so that the disturbance
    law carries over unchanged.
    """
    return NetworkParams(2.0 * params.A, params.c + params.A.sum(axis=1))


def bnp_canonicalize(adjacency, eta: float) -> tuple[NetworkParams, Discrete3]:
    """Boolean network with perturbation as a threshold system with 3-point noise.

    Agent i outputs f(A_i sbar) with probability 1 - eta and its negation
    otherwise, f(x) = 1 iff x >= 0. Returns the {1,-1}-convention system
    (A, cbar = 0) with support points cbar - |A_i|_1 - 1, cbar, cbar + |A_i|_1,
    which straddle every reachable cbar - A_i sbar.

    Read as a {0,1} system, the same parameters give the rule
    S_{k+1,i} = 1[A_i S_k >= 0] flipped with probability eta.
    """
    if not (0.0 < eta < 0.5):
        raise ParameterError(f"eta must lie in (0, 1/2), got {eta}")
    A = np.array(adjacency, dtype=float)
    params = NetworkParams(A, np.zeros(A.shape[0]))
    l1 = np.abs(A).sum(axis=1)
    cbar = params.c
    return params, Discrete3(cbar - l1 - 1.0, cbar.copy(), cbar + l1, eta)


def choice_canonicalize(h, A) -> NetworkParams:
    """Binary-choice social interaction model in the {1,-1} convention.

    The choice probability 1 - F(-2 h_i - 4 A_i sbar) matches a threshold
    system with cbar_i = -h_i / 2 and disturbance (eps(1) - eps(-1)) / 4,
    whose law the caller supplies.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    return NetworkParams(A, -0.5 * h)


def validate_discrete3(params: NetworkParams, model: Discrete3,
                       convention: str = "pm1", check_pivot: bool = True) -> bool:
    """Check that the 3-point law separates every reachable threshold.

    Requires d1_i < c_i - A_i s <= d3_i for all states s of the convention.
    With ``check_pivot`` the middle point must sit at the pivot: c_i for
    "pm1" systems and c_i - A_i 1 / 2 for "01" systems.
    """
    if not isinstance(model, Discrete3):
        from .errors import UnsupportedModelError
        raise UnsupportedModelError("validate_discrete3 needs a Discrete3 model")
    model.check_dim(params.n)
    thr = params.c[None, :] - state_vectors(params.n, convention) @ params.A.T
    if np.any(model.d1[None, :] >= thr):
        i = int(np.argwhere(model.d1[None, :] >= thr)[0, 1])
        raise ParameterError(f"d1[{i}] is not below every threshold c_i - A_i s")
    if np.any(model.d3[None, :] < thr):
        i = int(np.argwhere(model.d3[None, :] < thr)[0, 1])
        raise ParameterError(f"d3[{i}] is below some threshold c_i - A_i s")
    if check_pivot:
        pivot = params.c if convention == "pm1" else params.c - 0.5 * params.A.sum(axis=1)
        if not np.allclose(model.d2, pivot, rtol=0, atol=1e-12):
            raise ParameterError("d2 does not sit at the pivot threshold")
    return True


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------

def _check_state(s, n) -> np.ndarray:
    s = np.asarray(s)
    if s.shape[-1] != n or not np.all((s == 0) | (s == 1)):
        raise ParameterError(f"state must be a binary vector of length {n}")
    return s


def step(params: NetworkParams, model: DisturbanceModel, scenario: Scenario, s,
         rng: np.random.Generator) -> np.ndarray:
    """One transition S_k -> S_{k+1} drawn with ``rng``."""
    s = _check_state(s, params.n).astype(float)
    states = _advance_block(params, model, scenario, s[None, :], 1, [TrialStreams.shared(rng)])
    return states[0, 0]


def _advance_block(params, model, scenario, s, b, streams):
    """Advance N trajectories (rows of ``s``) by ``b`` steps.

    Returns a (N, b, n) uint8 array of the new states. ``s`` is updated in place.
    """
    N, n = s.shape
    A, c = params.A, params.c
    D = np.stack([model.sample(st, (b, n)) for st in streams])
    upd = link = None
    if scenario.p < 1.0:
        upd = np.stack([st.update.random((b, n)) < scenario.p for st in streams])
    if scenario.tau > 0.0:
        link = np.stack([st.link.random((b, n, n)) >= scenario.tau for st in streams])
    out = np.empty((N, b, n), dtype=np.uint8)
    for j in range(b):
        if link is None:
            y = s @ A.T
        else:
            y = np.einsum("tij,tj->ti", A * link[:, j], s)
        new = (y + D[:, j] >= c).astype(float)
        if upd is not None:
            new = np.where(upd[:, j], new, s)
        s[...] = new
        out[:, j] = new
    return out


def simulate_blocks(params: NetworkParams, model: DisturbanceModel, scenario: Scenario,
                    s0, horizon: int, streams: Sequence[TrialStreams],
                    block: int = 1024) -> Iterator[np.ndarray]:
    """Simulate N trajectories in lock-step, yielding (N, b, n) blocks of S_1..S_T.

    Trial t draws only from ``streams[t]``, so each trajectory is identical to
    the one produced by :func:`simulate` with the same streams.
    """
    if horizon < 1:
        raise ParameterError("horizon must be >= 1")
    model.check_dim(params.n)
    s = np.array(s0, dtype=float)
    if s.ndim == 1:
        s = np.repeat(s[None, :], len(streams), axis=0)
    _check_state(s, params.n)
    if s.shape[0] != len(streams):
        raise ParameterError("need one stream set per trajectory")
    done = 0
    while done < horizon:
        b = min(block, horizon - done)
        yield _advance_block(params, model, scenario, s, b, streams)
        done += b


def simulate(params: NetworkParams, model: DisturbanceModel, scenario: Scenario, s0,
             horizon: int, seed: int, trial: int = 0,
             params_id: str | None = None) -> ObservationSequence:
    """Trajectory S_0..S_horizon for trial ``trial`` of experiment ``seed``."""
    s0 = _check_state(s0, params.n).astype(np.uint8)
    blocks = list(simulate_blocks(params, model, scenario, s0[None, :], horizon,
                                  [trial_streams(seed, trial)]))
    states = np.concatenate([s0[None, :]] + [b[0] for b in blocks])
    return ObservationSequence(states, seed=seed, params_id=params_id, scenario=scenario)
