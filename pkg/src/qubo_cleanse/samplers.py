"""QUBO samplers: simulated annealing, simulated quantum annealing, random, exhaustive.

Every sampler minimizes ``q^T U q`` for an upper-triangular ``U`` and returns
a :class:`SampleBatch`. Reads are seeded independently from the batch seed,
so read ``m`` of a batch does not depend on how many other reads were taken.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .surrogate import qubo_energy

__all__ = [
    "SampleBatch",
    "SamplerConfig",
    "SAMPLER_KINDS",
    "EXHAUSTIVE_MAX_N",
    "sa_beta_range",
    "sa_read",
    "sqa_read",
    "sample",
    "batch_energies",
    "brute_force_minimum",
]

SAMPLER_KINDS = ("sa", "sqa", "random", "exhaustive", "external")
EXHAUSTIVE_MAX_N = 24


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings.

    ``beta_range`` overrides the SA inverse-temperature endpoints derived from
    ``U``; ``gamma_range`` overrides the SQA transverse-field endpoints, whose
    start defaults to ``10 * max|U|``. ``kind="external"`` reserves a slot for
    hardware samplers and is not implemented.
    """

    kind: str = "sa"
    num_reads: int = 512
    num_sweeps: int = 1000
    seed: int = 0
    trotter_slices: int = 4
    beta_range: tuple[float, float] | None = None
    gamma_range: tuple[float | None, float] = (None, 1e-8)

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; choose from {SAMPLER_KINDS}")
        if self.num_reads < 1:
            raise ValueError("num_reads must be at least 1")
        if self.kind in ("sa", "sqa") and self.num_sweeps < 1:
            raise ValueError("num_sweeps must be at least 1")
        if self.kind == "sqa" and self.trotter_slices < 2:
            raise ValueError("trotter_slices must be at least 2")


@dataclass(frozen=True)
class SampleBatch:
    samples: np.ndarray  # (M, n) uint8
    energies: np.ndarray  # (M,) float64, excludes the surrogate constant
    sampling_time: float
    info: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return self.samples.shape[0]


def batch_energies(U, samples) -> np.ndarray:
    """``q^T U q`` for every row of ``samples``."""
    S = np.asarray(samples, dtype=float)
    return np.einsum("mi,ij,mj->m", S, np.asarray(U, dtype=float), S)


# --------------------------------------------------------------------------
# schedule helpers
# --------------------------------------------------------------------------

def _split_qubo(U):
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("QUBO matrix must be square")
    if not np.all(np.isfinite(U)):
        raise ValueError("QUBO matrix must be finite")
    upper = np.triu(U)
    diag = np.ascontiguousarray(np.diag(upper).copy())
    off = upper - np.diag(diag)
    W = np.ascontiguousarray(off + off.T)
    return diag, W


def sa_beta_range(U) -> tuple[float, float]:
    """Default ``(beta_hot, beta_cold)`` for simulated annealing.

    ``beta_hot = ln 2 / dE_max`` accepts the largest possible uphill flip with
    probability one half; ``beta_cold = ln(100 n) / dE_min`` makes the smallest
    nonzero flip cost rare across all ``n`` variables. ``dE_max`` bounds a
    single-flip change by the largest absolute row sum; ``dE_min`` is the
    smallest nonzero coefficient magnitude.
    """
    diag, W = _split_qubo(U)
    n = diag.shape[0]
    bound = np.abs(diag) + np.abs(W).sum(axis=1)
    de_max = float(bound.max()) if n else 0.0
    mags = np.concatenate([np.abs(diag), np.abs(W[np.triu_indices(n, 1)])])
    mags = mags[mags > 0]
    if de_max == 0.0 or mags.size == 0:
        return 1.0, 1.0
    de_min = float(mags.min())
    hot = math.log(2.0) / de_max
    cold = math.log(100.0 * n) / de_min
    return hot, max(cold, hot)


def _read_seeds(seed: int, num_reads: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed)
    return ss.generate_state(num_reads, dtype=np.uint32).astype(np.int64)


def _stream_seed(rng_stream) -> int:
    if isinstance(rng_stream, np.random.Generator):
        return int(rng_stream.integers(0, 2**32 - 1))
    return int(np.random.SeedSequence(int(rng_stream)).generate_state(1, dtype=np.uint32)[0])


# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------

# exp(-30) ~ 1e-13: treat as a certain rejection without drawing
_REJECT_EXPONENT = 30.0


@nb.njit(cache=True)
def _sa_one(diag, W, betas, seed):
    np.random.seed(seed)
    n = diag.shape[0]
    state = np.empty(n, dtype=np.uint8)
    for i in range(n):
        state[i] = 1 if np.random.random() < 0.5 else 0
    field = np.zeros(n)
    for i in range(n):
        if state[i]:
            for j in range(n):
                field[j] += W[j, i]
    energy = 0.0
    for i in range(n):
        if state[i]:
            energy += diag[i] + 0.5 * field[i]
    for s in range(betas.shape[0]):
        beta = betas[s]
        for i in range(n):
            if state[i]:
                delta = -(diag[i] + field[i])
            else:
                delta = diag[i] + field[i]
            accept = delta <= 0.0
            if not accept:
                x = beta * delta
                if x < _REJECT_EXPONENT:
                    accept = np.random.random() < math.exp(-x)
            if accept:
                energy += delta
                if state[i]:
                    state[i] = 0
                    for j in range(n):
                        field[j] -= W[j, i]
                else:
                    state[i] = 1
                    for j in range(n):
                        field[j] += W[j, i]
    return state, energy


@nb.njit(cache=True)
def _sa_batch(diag, W, betas, seeds):
    m = seeds.shape[0]
    n = diag.shape[0]
    out = np.empty((m, n), dtype=np.uint8)
    energies = np.empty(m)
    for r in range(m):
        state, e = _sa_one(diag, W, betas, seeds[r])
        out[r] = state
        energies[r] = e
    return out, energies


@nb.njit(cache=True)
def _sqa_one(h, J, beta, gammas, slices, seed):
    """Path-integral Monte Carlo on the Ising form ``sum h s + sum_{i<j} J s s``.

    ``J`` is symmetric with zero diagonal and holds each coupling once per
    ordered pair, so a spin's local field is ``h_i + sum_j J_ij s_j``.
    """
    np.random.seed(seed)
    n = h.shape[0]
    P = slices
    spins = np.empty((P, n), dtype=np.int8)
    for k in range(P):
        for i in range(n):
            spins[k, i] = 1 if np.random.random() < 0.5 else -1
    fields = np.empty((P, n))
    for k in range(P):
        for i in range(n):
            f = h[i]
            for j in range(n):
                f += J[i, j] * spins[k, j]
            fields[k, i] = f
    bp = beta / P
    for s in range(gammas.shape[0]):
        t = math.tanh(bp * gammas[s])
        # inter-slice ferromagnetic coupling; tanh underflow means fully locked
        jperp = -0.5 * math.log(t) if t > 0.0 else 1e300
        for k in range(P):
            up = (k + 1) % P
            dn = (k - 1 + P) % P
            for i in range(n):
                si = spins[k, i]
                d_cl = -2.0 * si * fields[k, i]
                d_q = 2.0 * jperp * si * (spins[up, i] + spins[dn, i])
                d = bp * d_cl + d_q
                accept = d <= 0.0
                if not accept and d < _REJECT_EXPONENT:
                    accept = np.random.random() < math.exp(-d)
                if accept:
                    spins[k, i] = -si
                    for j in range(n):
                        fields[k, j] -= 2.0 * si * J[j, i]
    return spins


def _ising_from_qubo(diag, W):
    # q = (1 + s) / 2
    h = 0.5 * diag + 0.25 * W.sum(axis=1)
    J = 0.25 * W
    return np.ascontiguousarray(h), np.ascontiguousarray(J)


def _best_slice(spins, U):
    states = ((spins + 1) // 2).astype(np.uint8)
    e = batch_energies(U, states)
    k = int(np.argmin(e))
    return states[k], float(e[k])


# --------------------------------------------------------------------------
# single reads
# --------------------------------------------------------------------------

def sa_read(U, num_sweeps: int = 1000, rng_stream=0, beta_range=None):
    """One simulated-annealing read.

    Single-flip Metropolis sweeps over all variables in index order, with a
    geometric inverse-temperature schedule from ``beta_range`` (default
    :func:`sa_beta_range`). The energy is tracked incrementally.

    Returns
    -------
    state : ndarray of uint8
    energy : float
    """
    diag, W = _split_qubo(U)
    hot, cold = beta_range if beta_range is not None else sa_beta_range(U)
    betas = np.geomspace(hot, cold, num_sweeps)
    state, energy = _sa_one(diag, W, betas, _stream_seed(rng_stream))
    return state, float(energy)


def _gamma_schedule(U, num_sweeps, gamma_range):
    start, stop = gamma_range
    if start is None:
        start = 10.0 * float(np.max(np.abs(U))) if np.size(U) else 1.0
        start = start if start > 0 else 1.0
    return np.linspace(start, stop, num_sweeps)


def sqa_read(U, num_sweeps: int = 1000, trotter_slices: int = 4, rng_stream=0,
             beta=None, gamma_range=(None, 1e-8)):
    """One simulated-quantum-annealing read.

    The transverse field decreases linearly over the sweeps at fixed inverse
    temperature (default: the cold end of :func:`sa_beta_range`). The replica
    with the lowest classical energy is returned.
    """
    if trotter_slices < 2:
        raise ValueError("trotter_slices must be at least 2")
    U = np.asarray(U, dtype=float)
    diag, W = _split_qubo(U)
    h, J = _ising_from_qubo(diag, W)
    beta = sa_beta_range(U)[1] if beta is None else beta
    gammas = _gamma_schedule(U, num_sweeps, gamma_range)
    spins = _sqa_one(h, J, float(beta), gammas, int(trotter_slices), _stream_seed(rng_stream))
    return _best_slice(spins, U)


# --------------------------------------------------------------------------
# batch sampling
# --------------------------------------------------------------------------

def _all_states(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def brute_force_minimum(U) -> tuple[np.ndarray, float]:
    """Exact ground state by enumeration (lowest index on ties)."""
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive search limited to n <= {EXHAUSTIVE_MAX_N}")
    states = _all_states(n)
    e = batch_energies(U, states)
    k = int(np.argmin(e))
    return states[k], float(e[k])


def sample(U, config: SamplerConfig) -> SampleBatch:
    """Draw ``config.num_reads`` samples from the QUBO ``U``.

    The exhaustive kind returns the ``min(num_reads, 2**n)`` lowest-energy
    states, ties ordered by the integer whose bit ``i`` is ``q_i``.
    """
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    M = config.num_reads
    info: dict = {"kind": config.kind}
    start = time.perf_counter()
    if config.kind == "sa":
        diag, W = _split_qubo(U)
        hot, cold = config.beta_range if config.beta_range is not None else sa_beta_range(U)
        betas = np.geomspace(hot, cold, config.num_sweeps)
        samples, _ = _sa_batch(diag, W, betas, _read_seeds(config.seed, M))
        info["beta_range"] = (hot, cold)
    elif config.kind == "sqa":
        diag, W = _split_qubo(U)
        h, J = _ising_from_qubo(diag, W)
        beta = sa_beta_range(U)[1]
        gammas = _gamma_schedule(U, config.num_sweeps, config.gamma_range)
        samples = np.empty((M, n), dtype=np.uint8)
        for r, s in enumerate(_read_seeds(config.seed, M)):
            spins = _sqa_one(h, J, beta, gammas, config.trotter_slices, s)
            samples[r] = _best_slice(spins, U)[0]
        info["beta"] = beta
        info["gamma_range"] = (float(gammas[0]), float(gammas[-1]))
    elif config.kind == "random":
        rng = np.random.default_rng(config.seed)
        samples = rng.integers(0, 2, size=(M, n), dtype=np.uint8)
    elif config.kind == "exhaustive":
        if n > EXHAUSTIVE_MAX_N:
            raise ValueError(f"exhaustive sampler limited to n <= {EXHAUSTIVE_MAX_N}, got {n}")
        states = _all_states(n)
        order = np.argsort(batch_energies(U, states), kind="stable")
        samples = states[order[:M]]
    else:
        raise NotImplementedError("external hardware samplers are not available")
    elapsed = time.perf_counter() - start
    energies = batch_energies(U, samples)
    return SampleBatch(samples, energies, elapsed, info)
