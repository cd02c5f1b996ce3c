"""Interference-aware beam selection, reduced zero-forcing and downlink sum-rate."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Union

import numpy as np

from components.channel import BeamspaceChannel
from components.estimators import ChannelEstimate, SingularSystemError


class BeamSelectionError(ValueError):
    """Raised when the estimates cannot supply N_RF distinct beams."""


class UserClass(str, Enum):
    NIU = "NIU"
    IU = "IU"


@dataclass
class BeamSelection:
    beams: List[int]
    per_user_flag: List[UserClass]
    user_beams: List[int] = field(default_factory=list)

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.beams, dtype=np.int64) - 1


@dataclass
class PrecodingResult:
    precoder: np.ndarray
    power_budget: float


ChannelLike = Union[np.ndarray, BeamspaceChannel, ChannelEstimate]


def channel_matrix(channels: Sequence[ChannelLike]) -> np.ndarray:
    """Stack per-user beamspace vectors into an N x K matrix."""
    return np.column_stack([np.asarray(getattr(c, "vector", c)) for c in channels])


def reduced_channel(H: np.ndarray, beams: Sequence[int]) -> np.ndarray:
    """Rows of H for the 1-based beam set."""
    return H[np.asarray(beams, dtype=np.int64) - 1, :]


def zf_precoder(H_r: np.ndarray, rho: float) -> PrecodingResult:
    """Zero-forcing precoder H_r (H_r^H H_r)^-1 scaled to tr(P P^H) = rho."""
    if rho <= 0:
        raise ValueError(f"power budget must be positive, got {rho}")
    H_r = np.asarray(H_r, dtype=complex)
    if H_r.shape[0] < H_r.shape[1]:
        raise SingularSystemError(f"{H_r.shape[0]} beams cannot separate {H_r.shape[1]} users")
    s = np.linalg.svd(H_r, compute_uv=False)
    if s.min() < 1e-10 * s.max():
        raise SingularSystemError("reduced channel is rank deficient")
    gram = H_r.conj().T @ H_r
    P = np.linalg.solve(gram.T, H_r.T).T
    P = P * np.sqrt(rho / np.real(np.trace(P @ P.conj().T)))
    return PrecodingResult(precoder=P, power_budget=rho)


def sum_rate(H_true_reduced: np.ndarray, P: Union[PrecodingResult, np.ndarray], sigma2_dl: float) -> float:
    """Shannon sum-rate with per-user SINR |h_k^H p_k|^2 / (sum_j!=k |h_k^H p_j|^2 + sigma2)."""
    if sigma2_dl <= 0:
        raise ValueError(f"downlink noise power must be positive, got {sigma2_dl}")
    precoder = P.precoder if isinstance(P, PrecodingResult) else np.asarray(P)
    H = np.asarray(H_true_reduced)
    if H.shape != precoder.shape:
        raise ValueError(f"channel {H.shape} and precoder {precoder.shape} do not agree")
    gains = np.abs(H.conj().T @ precoder) ** 2
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return float(np.sum(np.log2(1 + signal / (interference + sigma2_dl))))


def _greedy_metric(E: np.ndarray, beams: List[int], users: List[int], rho: float, sigma2_dl: float) -> float:
    H_r = E[np.asarray(beams) - 1][:, users]
    return sum_rate(H_r, zf_precoder(H_r, rho), sigma2_dl)


def ia_beam_select(H_est: Sequence[ChannelLike], N_RF: int, rho: float = 1.0,
                   sigma2_dl: float = 0.01) -> BeamSelection:
    """Interference-aware beam selection on estimated beamspace channels.

    A user whose strongest beam is not the strongest beam of any other user is
    a non-interference user (NIU) and keeps that beam. Interference users
    (IU) are then served one at a time, strongest first: each picks the free
    beam that maximizes the ZF sum-rate of the users served so far.
    """
    E = channel_matrix(H_est)
    N, K = E.shape
    if N_RF != K:
        raise ValueError(f"IA beam selection needs N_RF = K, got N_RF = {N_RF}, K = {K}")
    power = np.abs(E) ** 2
    if np.any(power.sum(axis=0) == 0):
        raise BeamSelectionError("every user needs a nonzero channel estimate")
    active = np.flatnonzero(power.sum(axis=1) > 0) + 1
    if active.size < N_RF:
        raise BeamSelectionError(f"only {active.size} beams carry energy, {N_RF} are needed")

    top = [int(np.argmax(power[:, k])) + 1 for k in range(K)]
    flags = [UserClass.NIU if top.count(top[k]) == 1 else UserClass.IU for k in range(K)]
    assigned: Dict[int, int] = {k: top[k] for k in range(K) if flags[k] == UserClass.NIU}

    interference_users = sorted((k for k in range(K) if flags[k] == UserClass.IU),
                                key=lambda k: -power[top[k] - 1, k])
    for u in interference_users:
        taken = set(assigned.values())
        candidates = [b for b in range(1, N + 1) if b not in taken and power[b - 1, u] > 0]
        if not candidates:
            candidates = [int(b) for b in active if b not in taken]
        served = sorted(list(assigned) + [u])
        best_beam, best_rate = None, -np.inf
        for b in candidates:
            beams = [assigned[s] if s != u else b for s in served]
            try:
                rate = _greedy_metric(E, beams, served, rho, sigma2_dl)
            except SingularSystemError:
                continue
            if rate > best_rate:
                best_beam, best_rate = b, rate
        if best_beam is None:
            best_beam = max(candidates, key=lambda b: (power[b - 1, u], -b))
        assigned[u] = best_beam

    user_beams = [assigned[k] for k in range(K)]
    return BeamSelection(beams=sorted(user_beams), per_user_flag=flags, user_beams=user_beams)
