"""Closed-form bounds for support detection and the statistics they are checked against.

Covers the V-strongest power ratio bound, the peak-detection amplitude
threshold with its constants eta and kappa, the detection probability bound,
and the asymptotic orthogonality of beamspace channel components.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np

from components.channel import offgrid_component


@dataclass
class ThresholdResult:
    status: str
    value: Optional[float]
    denominator: float

    @property
    def is_vacuous(self) -> bool:
        return self.status == "vacuous"


@dataclass
class BoundReport:
    N: int
    V: int
    alpha: float
    mu: float
    values: Dict[str, Optional[float]] = field(default_factory=dict)
    threshold_status: str = "not evaluated"

    def to_dict(self) -> Dict:
        return asdict(self)


def _check_n(N: int, minimum: int = 2):
    if N < minimum:
        raise ValueError(f"N must be >= {minimum}, got {N}")


def power_ratio_lower_bound(N: int, V: int) -> float:
    """(2/N^2) sum_{i=1}^{V/2} 1 / sin^2((2i - 1) pi / 2N); V must be even."""
    if V % 2:
        raise ValueError(f"the power ratio bound is stated for even V, got V = {V}")
    if not 2 <= V <= N:
        raise ValueError(f"V must satisfy 2 <= V <= N, got V = {V}, N = {N}")
    i = np.arange(1, V // 2 + 1)
    return float(2.0 / N ** 2 * np.sum(1.0 / np.sin((2 * i - 1) * np.pi / (2 * N)) ** 2))


def empirical_power_ratio(c: np.ndarray, V: int) -> float:
    """Share of ||c||^2 held by the V largest-magnitude entries."""
    power = np.abs(np.asarray(c)) ** 2
    total = power.sum()
    if total <= 0:
        raise ValueError("power ratio is undefined for a zero vector")
    if not 1 <= V <= power.size:
        raise ValueError(f"V must be in 1..{power.size}, got {V}")
    strongest = np.sort(power)[::-1][:V]
    return float(strongest.sum() / total)


def worst_case_power_ratio(N: int, V: int) -> float:
    """Power ratio of a component sitting half a beam away from the grid."""
    return empirical_power_ratio(offgrid_component(N, N // 2, 1.0 / (2 * N)), V)


def eta(N: int) -> float:
    """Leakage-sum constant: (sum_n |1/sin((2n-1)pi/2N)| - |1/sin(pi/2N)|) / |1/sin(pi/2N)|."""
    _check_n(N)
    n = np.arange(1, N + 1)
    terms = np.abs(1.0 / np.sin((2 * n - 1) * np.pi / (2 * N)))
    first = abs(1.0 / math.sin(math.pi / (2 * N)))
    return float((terms.sum() - first) / first)


def kappa(N: int) -> float:
    """Neighbour ratio |sin(pi/2N) / sin(3pi/2N)|."""
    _check_n(N)
    return abs(math.sin(math.pi / (2 * N)) / math.sin(3 * math.pi / (2 * N)))


def noise_threshold_delta(sigma2_ul: float, alpha: float, N: int) -> float:
    """delta = sqrt(2 sigma^2 (1 + alpha) ln N)."""
    _check_n(N)
    return math.sqrt(2 * sigma2_ul * (1 + alpha) * math.log(N))


def amplitude_threshold(sigma2_ul: float, alpha: float, mu: float, N: int) -> ThresholdResult:
    """Smallest strongest-beam amplitude for which the detection bound applies.

    sqrt(8 sigma^2 (1 + alpha) ln N) / ((1 - mu)(1 - kappa) - 2 mu eta). A
    non-positive denominator means no amplitude qualifies for this mu; the
    result then carries status "vacuous" and no value.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if sigma2_ul < 0:
        raise ValueError(f"noise variance must be non-negative, got {sigma2_ul}")
    _check_n(N)
    denominator = (1 - mu) * (1 - kappa(N)) - 2 * mu * eta(N)
    if denominator <= 0:
        return ThresholdResult(status="vacuous", value=None, denominator=denominator)
    value = math.sqrt(8 * sigma2_ul * (1 + alpha) * math.log(N)) / denominator
    return ThresholdResult(status="ok", value=value, denominator=denominator)


def detection_probability_lower_bound(N: int, alpha: float) -> float:
    """(1 - 1 / (N^(alpha+1) sqrt(pi (1 + alpha) ln N)))^N."""
    _check_n(N)
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    deficit = 1.0 / (N ** (alpha + 1) * math.sqrt(math.pi * (1 + alpha) * math.log(N)))
    return math.exp(N * math.log1p(-deficit))


def orthogonality_defect(c_i: np.ndarray, c_j: np.ndarray) -> float:
    """|c_i^H c_j| / (||c_i|| ||c_j||)."""
    norm_i = np.linalg.norm(c_i)
    norm_j = np.linalg.norm(c_j)
    if norm_i == 0 or norm_j == 0:
        raise ValueError("orthogonality defect is undefined for a zero vector")
    return float(abs(np.vdot(c_i, c_j)) / (norm_i * norm_j))


def sd_complexity(L: int, V: int, Q: int, N: int, support_size: int) -> Dict[str, int]:
    """Operation counts of the SD estimator's dominant terms."""
    terms = {
        'component_ls': L * V ** 2 * Q,
        'correlation_and_removal': L * N * Q,
        'final_ls': support_size ** 2 * Q,
    }
    terms['total'] = sum(terms.values())
    return terms


def bound_report(N: int, V: int, alpha: float, mu: float = 0.0,
                 sigma2_ul: Optional[float] = None) -> BoundReport:
    """Collect every bound for one (N, V, alpha, mu) operating point."""
    values: Dict[str, Optional[float]] = {
        'power_ratio_lb': power_ratio_lower_bound(N, V) if V % 2 == 0 else None,
        'eta': eta(N),
        'kappa': kappa(N),
        'prob_lb': detection_probability_lower_bound(N, alpha),
    }
    report = BoundReport(N=N, V=V, alpha=alpha, mu=mu, values=values)
    if sigma2_ul is not None:
        threshold = amplitude_threshold(sigma2_ul, alpha, mu, N)
        values['amplitude_threshold'] = threshold.value
        values['delta'] = noise_threshold_delta(sigma2_ul, alpha, N)
        report.threshold_status = threshold.status
    return report
