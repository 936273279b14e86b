"""Simulated-annealing sampler for QUBO problems plus an exhaustive oracle.

Energies use the binary convention E(x) = x^T Q x over x in {0,1}^n with a
symmetric Q whose diagonal carries the linear terms.  Each read is an
independent single-flip Metropolis chain swept over the variables in index
order under a geometric temperature schedule; all reads advance in lockstep
so the whole call is one vectorized walk, deterministic for a given
(qubo, schedule, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UsageError

BRUTE_FORCE_MAX_SIZE = 20


@dataclass(frozen=True)
class Qubo:
    """Symmetric coefficient matrix of a binary quadratic objective."""

    coefficients: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.coefficients, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise UsageError(f"QUBO matrix must be square, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise UsageError("QUBO matrix entries must be finite")
        if not np.allclose(q, q.T, atol=1e-12, rtol=0.0):
            raise UsageError("QUBO matrix must be symmetric")
        object.__setattr__(self, "coefficients", q)

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling from initial to final temperature over full sweeps."""

    initial_temperature: float = 2.0
    final_temperature: float = 0.05
    sweeps: int = 200
    num_reads: int = 25

    def __post_init__(self) -> None:
        if self.initial_temperature <= 0 or self.final_temperature <= 0:
            raise ConfigurationError("temperatures must be positive")
        if self.final_temperature > self.initial_temperature:
            raise ConfigurationError("final temperature must not exceed the initial one")
        if self.sweeps < 1:
            raise ConfigurationError("sweeps must be at least 1")
        if self.num_reads < 1:
            raise ConfigurationError("num_reads must be at least 1")

    def temperatures(self) -> np.ndarray:
        ratio = self.final_temperature / self.initial_temperature
        k = np.arange(self.sweeps)
        return self.initial_temperature * ratio ** (k / self.sweeps)


@dataclass(frozen=True)
class Sample:
    bits: tuple[int, ...]
    energy: float


def qubo_energy(qubo: Qubo, bits) -> float:
    """x^T Q x = sum_i Q_ii x_i + 2 sum_{i<j} Q_ij x_i x_j for binary x."""
    x = np.asarray(bits, dtype=np.float64)
    if x.shape != (qubo.size,):
        raise UsageError(f"expected {qubo.size} bits, got shape {x.shape}")
    return float(x @ qubo.coefficients @ x)


def simulated_annealing(qubo: Qubo, schedule: AnnealSchedule, seed: int) -> list[Sample]:
    """num_reads Metropolis chains over the geometric temperature ladder.

    Flipping bit i changes the energy by (1 - 2 x_i) * f_i where
    f_i = Q_ii + 2 sum_{j != i} Q_ij x_j; the local fields f are maintained
    incrementally so each flip costs O(size).
    """
    if qubo.size < 1:
        raise UsageError("QUBO must have at least one variable")
    q = qubo.coefficients
    n = qubo.size
    reads = schedule.num_reads
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))

    x = rng.integers(0, 2, size=(reads, n)).astype(np.float64)
    # f[r, i] = Q_ii + 2 * sum_{j != i} Q_ij x[r, j]
    off = q - np.diag(np.diag(q))
    fields = np.diag(q)[np.newaxis, :] + 2.0 * x @ off.T

    for temp in schedule.temperatures():
        u = rng.random(size=(n, reads))
        for i in range(n):
            delta = (1.0 - 2.0 * x[:, i]) * fields[:, i]
            # exp only on positive deltas to avoid overflow on wild QUBOs
            accept = delta <= 0.0
            hot = ~accept
            if np.any(hot):
                accept[hot] = u[i, hot] < np.exp(-delta[hot] / temp)
            if np.any(accept):
                step = 1.0 - 2.0 * x[accept, i]  # +1 for 0->1, -1 for 1->0
                x[accept, i] += step
                fields[accept] += 2.0 * step[:, np.newaxis] * off[i][np.newaxis, :]

    samples = []
    for r in range(reads):
        bits = tuple(int(b) for b in x[r])
        samples.append(Sample(bits, qubo_energy(qubo, x[r])))
    return samples


def brute_force_minimum(qubo: Qubo) -> Sample:
    """Exhaustive global minimum; ties resolve to the lexicographically
    smallest bit vector (bit 0 most significant). Test oracle, size <= 20."""
    n = qubo.size
    if n > BRUTE_FORCE_MAX_SIZE:
        raise UsageError(
            f"brute_force_minimum enumerates at most {BRUTE_FORCE_MAX_SIZE} variables"
        )
    shifts = n - 1 - np.arange(n)
    best_energy = np.inf
    best_index = 0
    chunk = 1 << 16
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        bits = ((idx[:, np.newaxis] >> shifts) & 1).astype(np.float64)
        energies = np.einsum("ki,ij,kj->k", bits, qubo.coefficients, bits)
        pos = int(np.argmin(energies))
        if energies[pos] < best_energy:
            best_energy = float(energies[pos])
            best_index = int(idx[pos])
    bits = tuple(int((best_index >> s) & 1) for s in shifts)
    return Sample(bits, qubo_energy(qubo, bits))
