"""Monte Carlo sweeps for NMSE, downlink sum-rate and peak detection.

Every trial draws from its own generator seeded by (seed, sweep index, trial
index), so a table does not depend on execution order or thread count.
"""

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from components.analysis import amplitude_threshold, detection_probability_lower_bound, kappa
from components.beam_selection import (BeamSelectionError, channel_matrix, ia_beam_select,
                                       reduced_channel, sum_rate, zf_precoder)
from components.channel import (BeamspaceTransform, ChannelGenConfig, build_beamspace_transform,
                                generate_user_channels, to_beamspace)
from components.estimators import (ChannelEstimate, detect_peak, nmse, omp_estimate, perfect_estimate,
                                   sd_estimate, smd_estimate)
from components.measurement import (Combiner, NoiseMode, generate_combiner, hadamard_combiner,
                                    mutual_coherence, simulate_uplink)


RESULT_COLUMNS = ('experiment', 'estimator', 'sweep_param', 'sweep_value', 'metric',
                  'mean', 'stderr', 'trials', 'failures', 'seed', 'config_hash')

ESTIMATORS = ('SD', 'OMP', 'SMD', 'PerfectCSI')

# roughly half of all LoS draws qualify for the detection study
MAX_DETECTION_DRAWS = 100

SATURATION_RATIO = 0.1


class ConfigError(ValueError):
    """Raised for an experiment configuration that cannot be run."""


class ExperimentKind(str, Enum):
    NMSE_VS_SNR = "NmseVsSnr"
    NMSE_VS_Q = "NmseVsQ"
    SUM_RATE_VS_DL_SNR = "SumRateVsDlSnr"
    PEAK_DETECTION = "PeakDetection"


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def snr_to_noise_variance(snr_db: float, power: float = 1.0) -> float:
    """Noise variance giving power / sigma^2 = snr (pilot power normalized to 1)."""
    return power / db_to_linear(snr_db)


@dataclass
class ExperimentConfig:
    experiment: str = ExperimentKind.NMSE_VS_SNR.value
    N: int = 256
    K: int = 16
    N_RF: int = 16
    L: int = 2
    V: int = 8
    Q: Union[int, List[int]] = 96
    snr_ul_db: List[float] = field(default_factory=lambda: [float(s) for s in range(-10, 31, 5)])
    snr_dl_db: List[float] = field(default_factory=lambda: [float(s) for s in range(0, 41, 5)])
    trials: int = 500
    seed: int = 2017
    estimators: List[str] = field(default_factory=lambda: ['SD', 'OMP', 'SMD'])
    noise_mode: str = NoiseMode.FAITHFUL.value
    rho: float = 1.0
    selection_snr_db: float = 20.0
    omp_sparsity: Optional[int] = None
    smd_keep: Optional[int] = None
    alpha: float = 1.0
    los_gain_var: float = 1.0
    nlos_gain_var: float = 10 ** -0.5

    def q_values(self) -> List[int]:
        return [int(q) for q in self.Q] if isinstance(self.Q, (list, tuple)) else [int(self.Q)]

    @property
    def kind(self) -> ExperimentKind:
        return ExperimentKind(self.experiment)

    @property
    def sparsity(self) -> int:
        return self.omp_sparsity if self.omp_sparsity is not None else self.V * (self.L + 1)

    @property
    def keep(self) -> int:
        return self.smd_keep if self.smd_keep is not None else self.V * (self.L + 1)

    def channel_config(self, num_nlos: Optional[int] = None) -> ChannelGenConfig:
        return ChannelGenConfig(num_antennas=self.N, num_nlos=self.L if num_nlos is None else num_nlos,
                                los_gain_var=self.los_gain_var, nlos_gain_var=self.nlos_gain_var)

    def to_dict(self) -> Dict:
        return asdict(self)

    def config_hash(self) -> str:
        """Stable digest of everything except the seed."""
        payload = self.to_dict()
        payload.pop('seed')
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def validate(self) -> "ExperimentConfig":
        """Raise ConfigError on the first violated constraint."""
        try:
            kind = self.kind
        except ValueError:
            raise ConfigError(f"unknown experiment '{self.experiment}'")
        for name in ('N', 'K', 'N_RF', 'V', 'trials'):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.L < 0:
            raise ConfigError(f"L must be >= 0, got {self.L}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.V * (self.L + 1) > self.N:
            raise ConfigError(f"V(L+1) = {self.V * (self.L + 1)} exceeds N = {self.N}")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ConfigError(f"unknown estimators {unknown}; choose from {list(ESTIMATORS)}")
        try:
            NoiseMode(self.noise_mode)
        except ValueError:
            raise ConfigError(f"unknown noise mode '{self.noise_mode}'")
        if not self.snr_ul_db:
            raise ConfigError("snr_ul_db grid is empty")
        if self.rho <= 0:
            raise ConfigError(f"rho must be positive, got {self.rho}")

        if kind == ExperimentKind.PEAK_DETECTION:
            if self.N & (self.N - 1):
                raise ConfigError(f"peak detection uses a Hadamard combiner; N = {self.N} is not a power of two")
            if self.alpha <= 0:
                raise ConfigError(f"alpha must be positive, got {self.alpha}")
            return self

        q_values = self.q_values()
        if not q_values:
            raise ConfigError("Q grid is empty")
        if any(e in ('SD', 'OMP') for e in self.estimators):
            for q in q_values:
                if q < 1 or q % self.K:
                    raise ConfigError(f"Q = {q} must be a positive multiple of K = {self.K}")
            if 'OMP' in self.estimators and self.sparsity > min(q_values):
                raise ConfigError(f"OMP sparsity {self.sparsity} exceeds Q = {min(q_values)}")
        if not 1 <= self.keep <= self.N:
            raise ConfigError(f"SMD keep must be in 1..{self.N}, got {self.keep}")
        if kind == ExperimentKind.SUM_RATE_VS_DL_SNR:
            if self.N_RF != self.K:
                raise ConfigError(f"sum-rate runs need N_RF = K, got N_RF = {self.N_RF}, K = {self.K}")
            if not self.snr_dl_db:
                raise ConfigError("snr_dl_db grid is empty")
        return self


@dataclass
class ResultRow:
    experiment: str
    estimator: str
    sweep_param: str
    sweep_value: float
    metric: str
    mean: float
    stderr: float
    trials: int
    failures: int
    seed: int
    config_hash: str

    def to_dict(self) -> Dict:
        return {column: getattr(self, column) for column in RESULT_COLUMNS}


@dataclass
class ResultTable:
    rows: List[ResultRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def append(self, row: ResultRow):
        self.rows.append(row)

    def select(self, estimator: Optional[str] = None, metric: Optional[str] = None) -> List[ResultRow]:
        """Rows filtered by estimator and/or metric, in table order."""
        return [r for r in self.rows
                if (estimator is None or r.estimator == estimator) and (metric is None or r.metric == metric)]

    def to_records(self) -> List[Dict]:
        return [row.to_dict() for row in self.rows]


def trial_rng(seed: int, sweep_index: int, trial: int) -> np.random.Generator:
    """Independent generator for one (sweep point, trial) pair."""
    return np.random.default_rng(np.random.SeedSequence([seed, sweep_index, trial]))


def aggregate(samples: Sequence[Optional[float]]) -> Tuple[float, float, int, int]:
    """Mean, standard error, successful count and failure count; None marks a failure."""
    values = np.array([s for s in samples if s is not None], dtype=float)
    failures = len(samples) - values.size
    if values.size == 0:
        return math.nan, math.nan, 0, failures
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), stderr, int(values.size), failures


def flattening_ratio(rows: Sequence[ResultRow]) -> float:
    """Slope over the last two sweep points divided by the slope over the first two.

    A sum-rate curve counts as saturated when this is below SATURATION_RATIO.
    """
    points = sorted((r.sweep_value, r.mean) for r in rows)
    if len(points) < 3:
        raise ValueError("the flattening ratio needs at least three sweep points")
    (x0, y0), (x1, y1) = points[0], points[1]
    (xa, ya), (xb, yb) = points[-2], points[-1]
    low = (y1 - y0) / (x1 - x0)
    if low <= 0:
        return math.nan
    return ((yb - ya) / (xb - xa)) / low


class ExperimentRunner:
    def __init__(self, cfg: ExperimentConfig, threads: int = 1, progress: bool = False, log_manager=None,
                 run_name: Optional[str] = None):
        self.cfg = cfg.validate()
        self.threads = max(1, int(threads))
        self.progress = progress
        self.log_manager = log_manager
        self.run_name = run_name or cfg.experiment
        self.config_hash = cfg.config_hash()
        self._transform: Optional[BeamspaceTransform] = None

    @property
    def transform(self) -> BeamspaceTransform:
        if self._transform is None:
            self._transform = build_beamspace_transform(self.cfg.N)
        return self._transform

    def _row(self, estimator: str, sweep_param: str, sweep_value: float, metric: str,
             samples: Sequence[Optional[float]]) -> ResultRow:
        mean, stderr, n, failures = aggregate(samples)
        return ResultRow(experiment=self.cfg.experiment, estimator=estimator, sweep_param=sweep_param,
                         sweep_value=float(sweep_value), metric=metric, mean=mean, stderr=stderr,
                         trials=n, failures=failures, seed=int(self.cfg.seed), config_hash=self.config_hash)

    def _run_trials(self, sweep_index: int, trial_fn: Callable[[np.random.Generator], Dict],
                    label: str) -> List[Dict]:
        """Run every trial of one sweep point; results are indexed by trial."""
        seed = self.cfg.seed

        def work(trial: int) -> Dict:
            return trial_fn(trial_rng(seed, sweep_index, trial))

        trials = range(self.cfg.trials)
        bar = dict(total=self.cfg.trials, desc=label, disable=not self.progress, leave=False)
        if self.threads == 1:
            return [work(t) for t in tqdm(trials, **bar)]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(tqdm(pool.map(work, trials), **bar))

    def _log_point(self, label: str, results: List[Dict]):
        timings: Dict[str, float] = {}
        for result in results:
            for name, seconds in result.get('timing', {}).items():
                timings[name] = timings.get(name, 0.0) + seconds
        logging.info(f"{self.run_name}: finished {label}")
        if self.log_manager is not None:
            self.log_manager.log_point(self.run_name, label)
            for name, seconds in timings.items():
                self.log_manager.log_timing(self.run_name, name, label, seconds, self.cfg.trials)

    def _log_failures(self, label: str, estimator: str, failures: int):
        if not failures:
            return
        logging.warning(f"{self.run_name}: {estimator} failed in {failures} trials at {label}")
        if self.log_manager is not None:
            self.log_manager.log_failure(self.run_name, f"{estimator} failed in {failures} trials at {label}")

    def estimate_user(self, name: str, z: Optional[np.ndarray], W: Optional[Combiner],
                      truth, sigma2_ul: float, rng: np.random.Generator) -> ChannelEstimate:
        """Dispatch one user's estimate to the named estimator."""
        cfg = self.cfg
        if name == 'SD':
            return sd_estimate(z, W, cfg.L, cfg.V)
        if name == 'OMP':
            return omp_estimate(z, W, cfg.sparsity)
        if name == 'SMD':
            return smd_estimate(truth, sigma2_ul, cfg.keep, rng)
        if name == 'PerfectCSI':
            return perfect_estimate(truth)
        raise ConfigError(f"unknown estimator '{name}'")

    def _estimate_all(self, Q: int, sigma2_ul: float, rng: np.random.Generator):
        """Draw users and measurements once, then run every configured estimator on them."""
        cfg = self.cfg
        spatial = generate_user_channels(cfg.channel_config(), cfg.K, rng)
        Hb = [to_beamspace(h, self.transform) for h in spatial]
        W, measurements = None, None
        if any(e in ('SD', 'OMP') for e in cfg.estimators):
            W = generate_combiner(Q, cfg.N, rng)
            measurements = simulate_uplink(Hb, W, sigma2_ul, NoiseMode(cfg.noise_mode), rng)
        estimates: Dict[str, Optional[List[ChannelEstimate]]] = {}
        timing: Dict[str, float] = {}
        for name in cfg.estimators:
            start = time.perf_counter()
            try:
                estimates[name] = [
                    self.estimate_user(name, measurements.per_user[k] if measurements else None, W,
                                       Hb[k], sigma2_ul, rng)
                    for k in range(cfg.K)
                ]
            except np.linalg.LinAlgError:
                estimates[name] = None
            timing[name] = time.perf_counter() - start
        return Hb, estimates, timing

    def _nmse_trial(self, Q: int, sigma2_ul: float, rng: np.random.Generator) -> Dict:
        Hb, estimates, timing = self._estimate_all(Q, sigma2_ul, rng)
        values = {}
        for name, per_user in estimates.items():
            if per_user is None:
                values[name] = None
                continue
            values[name] = float(np.mean([nmse(e.vector, h.vector) for e, h in zip(per_user, Hb)]))
        return {'values': values, 'timing': timing}

    def run_nmse_sweep(self) -> ResultTable:
        """NMSE against uplink SNR (at the first Q) or against Q (at the first SNR)."""
        cfg = self.cfg
        if cfg.kind == ExperimentKind.NMSE_VS_SNR:
            points = [(cfg.q_values()[0], snr, snr) for snr in cfg.snr_ul_db]
            sweep_param = 'snr_ul_db'
        elif cfg.kind == ExperimentKind.NMSE_VS_Q:
            points = [(q, cfg.snr_ul_db[0], q) for q in cfg.q_values()]
            sweep_param = 'Q'
        else:
            raise ConfigError(f"run_nmse_sweep cannot run experiment '{cfg.experiment}'")
        if self.log_manager is not None:
            self.log_manager.log_sweep_start(self.run_name, cfg.experiment, len(points), cfg.trials)

        table = ResultTable()
        for index, (Q, snr, value) in enumerate(points):
            label = f"{sweep_param}={value:g}"
            sigma2 = snr_to_noise_variance(snr)
            results = self._run_trials(index, lambda rng: self._nmse_trial(Q, sigma2, rng), label)
            for name in cfg.estimators:
                row = self._row(name, sweep_param, value, 'nmse', [r['values'][name] for r in results])
                self._log_failures(label, name, row.failures)
                table.append(row)
            self._log_point(label, results)
        return table

    def _sumrate_trial(self, sigma2_ul: float, rng: np.random.Generator) -> Dict:
        cfg = self.cfg
        Hb, estimates, timing = self._estimate_all(cfg.q_values()[0], sigma2_ul, rng)
        H = channel_matrix(Hb)
        sigma2_sel = snr_to_noise_variance(cfg.selection_snr_db, cfg.rho)
        values = {}
        for name, per_user in estimates.items():
            if per_user is None:
                values[name] = None
                continue
            try:
                selection = ia_beam_select(per_user, cfg.N_RF, cfg.rho, sigma2_sel)
                E = channel_matrix(per_user)
                precoder = zf_precoder(reduced_channel(E, selection.beams), cfg.rho)
                H_r = reduced_channel(H, selection.beams)
                values[name] = [sum_rate(H_r, precoder, snr_to_noise_variance(snr, cfg.rho))
                                for snr in cfg.snr_dl_db]
            except (np.linalg.LinAlgError, BeamSelectionError):
                values[name] = None
        return {'values': values, 'timing': timing}

    def run_sumrate_sweep(self) -> ResultTable:
        """IA beam selection + ZF sum-rate against downlink SNR, per uplink SNR."""
        cfg = self.cfg
        if cfg.kind != ExperimentKind.SUM_RATE_VS_DL_SNR:
            raise ConfigError(f"run_sumrate_sweep cannot run experiment '{cfg.experiment}'")
        if self.log_manager is not None:
            self.log_manager.log_sweep_start(self.run_name, cfg.experiment, len(cfg.snr_ul_db), cfg.trials)

        table = ResultTable()
        tagged = len(cfg.snr_ul_db) > 1
        for index, snr_ul in enumerate(cfg.snr_ul_db):
            label = f"snr_ul_db={snr_ul:g}"
            sigma2 = snr_to_noise_variance(snr_ul)
            results = self._run_trials(index, lambda rng: self._sumrate_trial(sigma2, rng), label)
            for name in cfg.estimators:
                estimator = f"{name}@{snr_ul:g}dB" if tagged else name
                per_trial = [r['values'][name] for r in results]
                curve = []
                for j, snr_dl in enumerate(cfg.snr_dl_db):
                    samples = [None if v is None else v[j] for v in per_trial]
                    curve.append(self._row(estimator, 'snr_dl_db', snr_dl, 'sum_rate', samples))
                for row in curve:
                    table.append(row)
                if len(curve) >= 3:
                    ratio = flattening_ratio(curve)
                    logging.info(f"{self.run_name}: {estimator} flattening ratio {ratio:.3f}"
                                 f" ({'saturated' if ratio < SATURATION_RATIO else 'still rising'})")
                self._log_failures(label, estimator, sum(v is None for v in per_trial))
            self._log_point(label, results)
        return table

    def _detection_trial(self, W: Combiner, denominator: float, rng: np.random.Generator) -> Dict:
        """One qualifying LoS draw; draws whose second beam exceeds kappa times the first are redrawn."""
        cfg = self.cfg
        limit = kappa(cfg.N)
        for rejected in range(MAX_DETECTION_DRAWS):
            spatial = generate_user_channels(cfg.channel_config(num_nlos=0), 1, rng)
            Hb = to_beamspace(spatial[0], self.transform)
            magnitudes = np.sort(np.abs(Hb.vector))[::-1]
            if magnitudes[1] <= limit * magnitudes[0]:
                break
        else:
            return {'values': {'SD': None}, 'rejected': MAX_DETECTION_DRAWS}
        # noise level at which the strongest beam meets the amplitude threshold with equality
        sigma2 = (magnitudes[0] * denominator) ** 2 / (8 * (1 + cfg.alpha) * math.log(cfg.N))
        measurements = simulate_uplink([Hb], W, sigma2, NoiseMode.WHITE_NOISE, rng)
        hit = detect_peak(measurements.per_user[0], W) == Hb.strongest_beam()
        return {'values': {'SD': float(hit)}, 'rejected': rejected}

    def run_detection_study(self) -> ResultTable:
        """Empirical peak-detection frequency next to its closed-form lower bound."""
        cfg = self.cfg
        if cfg.kind != ExperimentKind.PEAK_DETECTION:
            raise ConfigError(f"run_detection_study cannot run experiment '{cfg.experiment}'")
        W = hadamard_combiner(cfg.N)
        threshold = amplitude_threshold(1.0, cfg.alpha, mutual_coherence(W), cfg.N)
        if threshold.is_vacuous:
            raise ConfigError(f"amplitude threshold is vacuous for N = {cfg.N}")
        if self.log_manager is not None:
            self.log_manager.log_sweep_start(self.run_name, cfg.experiment, 1, cfg.trials)

        label = f"alpha={cfg.alpha:g}"
        results = self._run_trials(0, lambda rng: self._detection_trial(W, threshold.denominator, rng), label)
        table = ResultTable()
        table.append(self._row('SD', 'alpha', cfg.alpha, 'detection_rate', [r['values']['SD'] for r in results]))
        bound = detection_probability_lower_bound(cfg.N, cfg.alpha)
        table.append(self._row('SD', 'alpha', cfg.alpha, 'detection_bound', [bound]))
        rejected = sum(r['rejected'] for r in results)
        logging.info(f"{self.run_name}: redrew {rejected} channels outside the kappa premise")
        if self.log_manager is not None:
            self.log_manager.log_info(self.run_name, f"redrew {rejected} channels outside the kappa premise")
        self._log_failures(label, 'SD', table.rows[0].failures)
        self._log_point(label, results)
        return table

    def run(self) -> ResultTable:
        """Dispatch on the configured experiment kind."""
        kind = self.cfg.kind
        logging.info(f"{self.run_name}: starting {kind.value} with {self.cfg.trials} trials")
        if kind in (ExperimentKind.NMSE_VS_SNR, ExperimentKind.NMSE_VS_Q):
            return self.run_nmse_sweep()
        if kind == ExperimentKind.SUM_RATE_VS_DL_SNR:
            return self.run_sumrate_sweep()
        return self.run_detection_study()


def run_nmse_sweep(cfg: ExperimentConfig, **kwargs) -> ResultTable:
    return ExperimentRunner(cfg, **kwargs).run_nmse_sweep()


def run_sumrate_sweep(cfg: ExperimentConfig, **kwargs) -> ResultTable:
    return ExperimentRunner(cfg, **kwargs).run_sumrate_sweep()


def run_detection_study(cfg: ExperimentConfig, **kwargs) -> ResultTable:
    return ExperimentRunner(cfg, **kwargs).run_detection_study()


def run_experiment(cfg: ExperimentConfig, **kwargs) -> ResultTable:
    return ExperimentRunner(cfg, **kwargs).run()
