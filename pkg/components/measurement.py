"""Uplink pilot transmission through the adaptive selecting network.

The combiner is a Q x N matrix of 1-bit phase shifter settings, +-1/sqrt(Q).
Q pilot instants are split into M blocks of K instants; in block m the BS
combines with the K-row slab W_m and decorrelates users with the pilot matrix.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Union

import numpy as np
from scipy.linalg import hadamard

from components.channel import BeamspaceChannel, DimensionError, complex_normal


class NoiseMode(str, Enum):
    FAITHFUL = "Faithful"
    WHITE_NOISE = "WhiteNoise"


@dataclass
class PilotMatrix:
    matrix: np.ndarray

    @property
    def num_users(self) -> int:
        return self.matrix.shape[0]


@dataclass
class Combiner:
    matrix: np.ndarray

    @property
    def Q(self) -> int:
        return self.matrix.shape[0]

    @property
    def N(self) -> int:
        return self.matrix.shape[1]

    def column(self, n: int) -> np.ndarray:
        """Column w_n for a 1-based beam index."""
        return self.matrix[:, n - 1]

    def block(self, m: int, K: int) -> np.ndarray:
        """K-row slab W_m used in block m (0-based)."""
        return self.matrix[m * K:(m + 1) * K, :]


@dataclass
class MeasurementSet:
    per_user: List[np.ndarray]
    noise_variance: float
    mode: NoiseMode

    @property
    def Q(self) -> int:
        return self.per_user[0].shape[0] if self.per_user else 0


def as_matrix(W: Union[Combiner, np.ndarray]) -> np.ndarray:
    """Accept a Combiner or a raw measurement matrix."""
    return W.matrix if isinstance(W, Combiner) else np.asarray(W)


def _bit_reversed(K: int) -> np.ndarray:
    bits = K.bit_length() - 1
    return np.array([int(format(i, f"0{bits}b")[::-1], 2) if bits else 0 for i in range(K)])


def generate_pilot_matrix(K: int) -> PilotMatrix:
    """K orthonormal pilot sequences.

    Powers of two use the Sylvester Hadamard matrix with rows in bit-reversed
    order (this reproduces the K = 4 example exactly); other K fall back to
    the unitary DFT matrix.
    """
    if K < 1:
        raise ValueError(f"number of users must be >= 1, got {K}")
    if K & (K - 1) == 0:
        matrix = hadamard(K)[_bit_reversed(K)] / np.sqrt(K)
        return PilotMatrix(matrix=matrix.astype(float))
    r = np.arange(K)
    matrix = np.exp(-2j * np.pi * np.outer(r, r) / K) / np.sqrt(K)
    return PilotMatrix(matrix=matrix)


def generate_combiner(Q: int, N: int, rng: np.random.Generator) -> Combiner:
    """Bernoulli combiner with i.i.d. equiprobable +-1/sqrt(Q) entries."""
    if Q < 1 or N < 1:
        raise ValueError(f"combiner dimensions must be positive, got {Q}x{N}")
    signs = rng.integers(0, 2, size=(Q, N)) * 2 - 1
    return Combiner(matrix=signs / np.sqrt(Q))


def hadamard_combiner(N: int) -> Combiner:
    """Square +-1/sqrt(N) combiner with orthogonal columns (mu = 0)."""
    if N < 1 or N & (N - 1):
        raise ValueError(f"Hadamard combiner needs N a power of two, got {N}")
    return Combiner(matrix=hadamard(N) / np.sqrt(N))


def mutual_coherence(W: Union[Combiner, np.ndarray]) -> float:
    """Largest |w_i^H w_j| over distinct columns."""
    matrix = as_matrix(W)
    if matrix.shape[1] < 2:
        raise ValueError("mutual coherence needs at least two columns")
    gram = np.abs(matrix.conj().T @ matrix)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())


def simulate_uplink(Hb: List[BeamspaceChannel], W: Combiner, sigma2_ul: float,
                    mode: NoiseMode, rng: np.random.Generator,
                    pilots: PilotMatrix = None) -> MeasurementSet:
    """Produce the stacked measurement vector z_k of every user."""
    K = len(Hb)
    if K == 0:
        raise ValueError("at least one user channel is required")
    if sigma2_ul < 0:
        raise ValueError(f"noise variance must be non-negative, got {sigma2_ul}")
    combiner = W if isinstance(W, Combiner) else Combiner(matrix=np.asarray(W))
    matrix = combiner.matrix
    Q, N = matrix.shape
    if any(h.num_beams != N for h in Hb):
        raise DimensionError(f"combiner has {N} columns but a channel has a different size")
    if Q % K:
        raise DimensionError(f"Q = {Q} is not a multiple of K = {K}")
    mode = NoiseMode(mode)
    H = np.column_stack([h.vector for h in Hb])
    Z = matrix @ H

    if sigma2_ul > 0 and mode == NoiseMode.WHITE_NOISE:
        Z = Z + complex_normal(rng, sigma2_ul, (Q, K))
    elif sigma2_ul > 0:
        pilots = pilots or generate_pilot_matrix(K)
        if pilots.num_users != K:
            raise DimensionError(f"pilot matrix is for {pilots.num_users} users, got {K}")
        psi_h = pilots.matrix.conj().T
        # Z_m = W_m (H Psi + N_m) Psi^H = W_m H + W_m N_m Psi^H since Psi Psi^H = I
        noise = []
        for m in range(Q // K):
            N_m = complex_normal(rng, sigma2_ul, (N, K))
            noise.append(combiner.block(m, K) @ N_m @ psi_h)
        Z = Z + np.vstack(noise)
    return MeasurementSet(per_user=[Z[:, k].copy() for k in range(K)], noise_variance=sigma2_ul, mode=mode)
