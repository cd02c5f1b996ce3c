"""Spatial and beamspace channel models for a lens-antenna-array ULA.

Directions are normalized spatial directions psi = (d / lambda) sin(theta) with
half-wavelength spacing, so psi lives in [-0.5, 0.5). Beam indices are 1-based
on the public surface and 0-based in array storage.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List

import numpy as np


SINGULAR_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when vector and matrix sizes do not agree."""


class PathKind(str, Enum):
    LOS = "LoS"
    NLOS = "NLoS"


@dataclass(frozen=True)
class PathComponent:
    gain: complex
    spatial_direction: float
    kind: PathKind = PathKind.NLOS

    def __post_init__(self):
        if not -0.5 <= self.spatial_direction < 0.5:
            raise ValueError(f"spatial direction {self.spatial_direction} outside [-0.5, 0.5)")


@dataclass
class SpatialChannel:
    paths: List[PathComponent]
    vector: np.ndarray
    num_antennas: int

    @property
    def num_nlos(self) -> int:
        """Number of NLoS paths (L_k)."""
        return len(self.paths) - 1

    def component_vectors(self) -> List[np.ndarray]:
        """Spatial components c_i = beta_i * a(psi_i)."""
        return [p.gain * steering_vector(p.spatial_direction, self.num_antennas) for p in self.paths]


@dataclass
class BeamspaceTransform:
    matrix: np.ndarray
    grid_directions: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass
class BeamspaceChannel:
    vector: np.ndarray
    components: List[np.ndarray] = field(default_factory=list)

    @property
    def num_beams(self) -> int:
        return self.vector.shape[0]

    def strongest_beam(self) -> int:
        """1-based index of the largest-magnitude beam (lowest index on ties)."""
        return int(np.argmax(np.abs(self.vector))) + 1


@dataclass
class ChannelGenConfig:
    num_antennas: int = 256
    num_nlos: int = 2
    los_gain_var: float = 1.0
    nlos_gain_var: float = 10 ** -0.5
    direction_low: float = -0.5
    direction_high: float = 0.5

    def validate(self):
        if self.num_antennas < 1:
            raise ValueError(f"num_antennas must be >= 1, got {self.num_antennas}")
        if self.num_nlos < 0:
            raise ValueError(f"num_nlos must be >= 0, got {self.num_nlos}")
        if self.los_gain_var < 0 or self.nlos_gain_var < 0:
            raise ValueError("gain variances must be non-negative")


def _check_size(N: int):
    if N < 1:
        raise ValueError(f"number of antennas must be >= 1, got {N}")


def array_index_set(N: int) -> np.ndarray:
    """Symmetric index set {p - (N-1)/2, p = 0..N-1}."""
    _check_size(N)
    return np.arange(N) - (N - 1) / 2


def grid_directions(N: int) -> np.ndarray:
    """Lens grid directions (1/N)(n - (N+1)/2) for n = 1..N."""
    _check_size(N)
    return (np.arange(1, N + 1) - (N + 1) / 2) / N


def steering_vector(psi: float, N: int) -> np.ndarray:
    """Unit-norm ULA steering vector a(psi)."""
    m = array_index_set(N)
    return np.exp(-2j * np.pi * psi * m) / np.sqrt(N)


def dirichlet_kernel(x, N: int):
    """sin(N pi x) / (N sin(pi x)) with the analytic limit at integer x.

    At x integer the value is (-1)^(x (N - 1)). Accepts scalars or arrays.
    """
    _check_size(N)
    x = np.asarray(x, dtype=float)
    den = N * np.sin(np.pi * x)
    singular = np.abs(np.sin(np.pi * x)) < SINGULAR_TOL
    safe_den = np.where(singular, 1.0, den)
    value = np.sin(N * np.pi * x) / safe_den
    nearest = np.rint(x).astype(np.int64)
    limit = np.where((nearest * (N - 1)) % 2 == 0, 1.0, -1.0)
    value = np.where(singular, limit, value)
    if value.ndim == 0:
        return float(value)
    return value


def complex_normal(rng: np.random.Generator, variance: float, size=None):
    """CN(0, variance): independent real and imaginary parts of variance/2."""
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def assemble_channel(paths: List[PathComponent], N: int) -> SpatialChannel:
    """Build h = sqrt(N/(L+1)) sum_i beta_i a(psi_i) from an explicit path list."""
    _check_size(N)
    if not paths:
        raise ValueError("a channel needs at least the LoS path")
    if paths[0].kind != PathKind.LOS or any(p.kind == PathKind.LOS for p in paths[1:]):
        raise ValueError("exactly one LoS path is required, at index 0")
    scale = np.sqrt(N / len(paths))
    vector = np.zeros(N, dtype=complex)
    for path in paths:
        vector += path.gain * steering_vector(path.spatial_direction, N)
    return SpatialChannel(paths=list(paths), vector=scale * vector, num_antennas=N)


def generate_spatial_channel(cfg: ChannelGenConfig, rng: np.random.Generator) -> SpatialChannel:
    """Draw one Saleh-Valenzuela channel: one LoS path plus cfg.num_nlos NLoS paths."""
    cfg.validate()
    paths = []
    for i in range(cfg.num_nlos + 1):
        variance = cfg.los_gain_var if i == 0 else cfg.nlos_gain_var
        gain = complex(complex_normal(rng, variance))
        psi = float(rng.uniform(cfg.direction_low, cfg.direction_high))
        paths.append(PathComponent(gain, psi, PathKind.LOS if i == 0 else PathKind.NLOS))
    return assemble_channel(paths, cfg.num_antennas)


def generate_user_channels(cfg: ChannelGenConfig, K: int, rng: np.random.Generator) -> List[SpatialChannel]:
    """K independent user channels drawn from the same generator."""
    return [generate_spatial_channel(cfg, rng) for _ in range(K)]


def build_beamspace_transform(N: int) -> BeamspaceTransform:
    """Spatial DFT realized by the lens: row n is a(psi_bar_n)^H."""
    directions = grid_directions(N)
    m = array_index_set(N)
    matrix = np.exp(2j * np.pi * np.outer(directions, m)) / np.sqrt(N)
    return BeamspaceTransform(matrix=matrix, grid_directions=directions)


def to_beamspace(h: SpatialChannel, T: BeamspaceTransform) -> BeamspaceChannel:
    """Map a spatial channel and each of its components through U."""
    if h.vector.shape[0] != T.size or h.num_antennas != T.size:
        raise DimensionError(f"channel has {h.vector.shape[0]} antennas, transform is {T.size}x{T.size}")
    components = [T.matrix @ c for c in h.component_vectors()]
    return BeamspaceChannel(vector=T.matrix @ h.vector, components=components)


def component_closed_form(gain: complex, psi: float, N: int) -> np.ndarray:
    """Beamspace component beta * Upsilon(psi_bar_n - psi) for all n."""
    return gain * dirichlet_kernel(grid_directions(N) - psi, N)


def offgrid_component(N: int, grid_index: int, offset: float, gain: complex = 1.0) -> np.ndarray:
    """Closed-form component for psi = psi_bar[grid_index] + offset (1-based index)."""
    if not 1 <= grid_index <= N:
        raise ValueError(f"grid index {grid_index} outside 1..{N}")
    psi = grid_directions(N)[grid_index - 1] + offset
    return component_closed_form(gain, psi, N)
