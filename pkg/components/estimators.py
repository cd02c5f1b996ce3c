"""Beamspace channel estimators: support detection (SD), OMP and SMD.

All estimators return a ChannelEstimate whose vector is zero outside its
support. Beam indices in SupportSet are 1-based.
"""

from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np
from scipy import linalg

from components.channel import BeamspaceChannel, complex_normal
from components.measurement import Combiner, as_matrix


# smallest / largest singular value below this makes an LS system singular
RCOND = 1e-10


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when a least-squares subproblem is rank deficient."""


@dataclass(frozen=True)
class SupportSet:
    indices: Tuple[int, ...]
    N: int

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError(f"duplicate beam indices in support {self.indices}")
        bad = [n for n in self.indices if not 1 <= n <= self.N]
        if bad:
            raise ValueError(f"beam indices {bad} outside 1..{self.N}")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, n) -> bool:
        return n in self.indices

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64) - 1

    def union(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(tuple(sorted(set(self.indices) | set(other.indices))), self.N)


@dataclass
class ChannelEstimate:
    vector: np.ndarray
    support: SupportSet
    per_component_peaks: List[int] = field(default_factory=list)
    component_supports: List[SupportSet] = field(default_factory=list)


def least_squares(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve min ||A x - b|| via SVD-based LAPACK, rejecting ill-posed systems."""
    rows, cols = A.shape
    if cols == 0:
        return np.zeros(0, dtype=complex)
    if cols > rows:
        raise SingularSystemError(f"{cols} unknowns but only {rows} measurements")
    x, _, _, s = linalg.lstsq(A, b, lapack_driver="gelsd")
    if s.size == 0 or s.max() == 0 or s.min() <= RCOND * s.max():
        raise SingularSystemError(
            f"LS system is singular (sigma_min / sigma_max = {s.min() / max(s.max(), 1e-300):.3e})")
    return x


def detect_support(n_star: int, V: int, N: int) -> SupportSet:
    """Contiguous window of V beams around the peak, wrapped modulo N.

    Even V: n* - V/2 .. n* + (V-2)/2. Odd V: n* - (V-1)/2 .. n* + (V-1)/2.
    """
    if not 1 <= n_star <= N:
        raise ValueError(f"peak index {n_star} outside 1..{N}")
    if V < 1:
        raise ValueError(f"V must be >= 1, got {V}")
    if V > N:
        raise ValueError(f"V = {V} exceeds the number of beams N = {N}")
    start = n_star - V // 2 if V % 2 == 0 else n_star - (V - 1) // 2
    return SupportSet(tuple((start + j - 1) % N + 1 for j in range(V)), N)


def peak_statistic(z: np.ndarray, W: Union[Combiner, np.ndarray]) -> np.ndarray:
    """|w_n^H z| for every column n."""
    matrix = as_matrix(W)
    return np.abs(matrix.conj().T @ z)


def detect_peak(z: np.ndarray, W: Union[Combiner, np.ndarray]) -> int:
    """1-based argmax of the peak statistic; the lowest index wins ties."""
    return int(np.argmax(peak_statistic(z, W))) + 1


def sd_estimate(z: np.ndarray, W: Union[Combiner, np.ndarray], L: int, V: int) -> ChannelEstimate:
    """Support-detection estimate of one user's beamspace channel.

    Each of the L + 1 components is handled in turn: locate the peak beam,
    take the V-beam window around it, LS-fit the window and remove its
    contribution from the residual. The output is a single LS fit of the
    original measurements on the union of all windows.
    """
    matrix = as_matrix(W)
    Q, N = matrix.shape
    if L < 0:
        raise ValueError(f"L must be >= 0, got {L}")
    if V * (L + 1) > N:
        raise ValueError(f"V(L+1) = {V * (L + 1)} exceeds N = {N}")
    z = np.asarray(z, dtype=complex)
    if z.shape != (Q,):
        raise ValueError(f"measurement vector has shape {z.shape}, expected ({Q},)")

    residual = z.copy()
    peaks = []
    windows = []
    for _ in range(L + 1):
        n_star = detect_peak(residual, matrix)
        window = detect_support(n_star, V, N)
        cols = window.zero_based()
        f = least_squares(matrix[:, cols], residual)
        residual = residual - matrix[:, cols] @ f
        peaks.append(n_star)
        windows.append(window)

    total = windows[0]
    for window in windows[1:]:
        total = total.union(window)
    if len(total) > Q:
        raise SingularSystemError(f"support of size {len(total)} exceeds Q = {Q}")
    cols = total.zero_based()
    vector = np.zeros(N, dtype=complex)
    vector[cols] = least_squares(matrix[:, cols], z)
    return ChannelEstimate(vector=vector, support=total, per_component_peaks=peaks, component_supports=windows)


def omp_estimate(z: np.ndarray, W: Union[Combiner, np.ndarray], sparsity: int) -> ChannelEstimate:
    """Textbook orthogonal matching pursuit run for a fixed number of atoms."""
    matrix = as_matrix(W)
    Q, N = matrix.shape
    if sparsity < 0:
        raise ValueError(f"sparsity must be >= 0, got {sparsity}")
    if sparsity > Q:
        raise ValueError(f"sparsity {sparsity} exceeds Q = {Q}")
    z = np.asarray(z, dtype=complex)
    vector = np.zeros(N, dtype=complex)
    selected: List[int] = []
    residual = z.copy()
    coef = np.zeros(0, dtype=complex)
    for _ in range(sparsity):
        stat = peak_statistic(residual, matrix)
        stat[selected] = -1.0
        selected.append(int(np.argmax(stat)))
        coef = least_squares(matrix[:, selected], z)
        residual = z - matrix[:, selected] @ coef
    vector[selected] = coef
    support = SupportSet(tuple(sorted(n + 1 for n in selected)), N)
    return ChannelEstimate(vector=vector, support=support, per_component_peaks=[n + 1 for n in selected])


def smd_estimate(Hb: BeamspaceChannel, sigma2_ul: float, keep: int, rng: np.random.Generator) -> ChannelEstimate:
    """Sparsity-mask detection: scan every beam once and keep the strongest.

    Uses one pilot instant per beam (Q = N); y_n = h_n + CN(0, sigma2).
    """
    N = Hb.num_beams
    if not 1 <= keep <= N:
        raise ValueError(f"keep must be in 1..{N}, got {keep}")
    if sigma2_ul < 0:
        raise ValueError(f"noise variance must be non-negative, got {sigma2_ul}")
    observed = Hb.vector.astype(complex)
    if sigma2_ul > 0:
        observed = observed + complex_normal(rng, sigma2_ul, N)
    mask = np.sort(np.argsort(-np.abs(observed), kind="stable")[:keep])
    vector = np.zeros(N, dtype=complex)
    vector[mask] = observed[mask]
    return ChannelEstimate(vector=vector, support=SupportSet(tuple(int(n) + 1 for n in mask), N))


def perfect_estimate(Hb: BeamspaceChannel) -> ChannelEstimate:
    """Genie estimate: the true beamspace channel on its full support."""
    N = Hb.num_beams
    nonzero = np.flatnonzero(Hb.vector)
    return ChannelEstimate(vector=Hb.vector.copy(), support=SupportSet(tuple(int(n) + 1 for n in nonzero), N))


def nmse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """||estimate - truth||^2 / ||truth||^2."""
    truth = np.asarray(truth)
    power = float(np.vdot(truth, truth).real)
    if power <= 0:
        raise ValueError("NMSE is undefined for a zero-norm reference channel")
    err = np.asarray(estimate) - truth
    return float(np.vdot(err, err).real) / power
