"""Scenario generation from a radio layout and the three desk studies.

Cells are regular hexagons of a given circumradius with base stations on
the x axis at the edge-sharing spacing (sqrt(3) times the radius apart;
the hexagons have vertical side edges and their topmost point one radius
above the center). Users are dropped uniformly over their hexagon by
rejection sampling. Link gains follow the macro path-loss model
  PL_dB(d) = intercept + slope * log10(d_km)
with distances clamped below at a minimum separation, converted to linear
power gains; gains are identical across sub-carriers of a link unless the
off-by-default i.i.d. exponential fading hook is enabled. Noise power is
the configured spectral density integrated over one sub-carrier
bandwidth.

The three studies are: the empirical CDF of the pairwise decodability
statistic, mean sum rate versus per-carrier power cap for the solver and
both baselines, and solver runtime versus epsilon. All are deterministic
given the configured seed; Monte Carlo trials use independent
per-trial streams spawned as (seed, trial index).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import Scenario, ScenarioError
from .oracle import baseline_full_power, baseline_greedy
from .polyblock import solve

__all__ = [
    "RadioConfig",
    "generate_scenario",
    "scenario_with_caps",
    "CdfResult",
    "cdf_experiment",
    "SweepRecord",
    "SweepRow",
    "SweepResult",
    "power_sweep",
    "BenchRecord",
    "BenchRow",
    "BenchResult",
    "runtime_bench",
    "wilson_interval",
    "write_cdf_csv",
    "write_sweep_csv",
    "write_bench_csv",
]

_CONFIG_KEYS = {
    "num_cells",
    "users_per_cell",
    "num_subcarriers",
    "sic_limit",
    "cell_radius_m",
    "bandwidth_hz",
    "noise_density_dbm_hz",
    "pathloss_intercept_db",
    "pathloss_slope_db",
    "subcarrier_cap_w",
    "cell_cap_w",
    "min_distance_m",
    "fading",
    "seed",
}


@dataclass(frozen=True)
class RadioConfig:
    """Layout, propagation and budget parameters for scenario generation."""

    num_cells: int = 2
    users_per_cell: int = 3
    num_subcarriers: int = 1
    sic_limit: int = 2
    cell_radius_m: float = 100.0
    bandwidth_hz: float = 1e6
    noise_density_dbm_hz: float = -174.0
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db: float = 37.6
    subcarrier_cap_w: float = 4e-7
    cell_cap_w: float | None = None
    min_distance_m: float = 1.0
    fading: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.num_cells < 1 or self.users_per_cell < 1 or self.num_subcarriers < 1:
            raise ScenarioError("cell, user and sub-carrier counts must be positive")
        if self.sic_limit < 1:
            raise ScenarioError("sic_limit must be positive")
        if not (self.cell_radius_m > 0 and self.bandwidth_hz > 0):
            raise ScenarioError("cell radius and bandwidth must be positive")
        if self.subcarrier_cap_w < 0:
            raise ScenarioError("subcarrier_cap_w must be non-negative")
        if self.cell_cap_w is not None and self.cell_cap_w < 0:
            raise ScenarioError("cell_cap_w must be non-negative")
        if self.min_distance_m <= 0:
            raise ScenarioError("min_distance_m must be positive")

    @property
    def noise_power_w(self) -> float:
        dbm = self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)
        return 10.0 ** ((dbm - 30.0) / 10.0)

    @property
    def effective_cell_cap_w(self) -> float:
        if self.cell_cap_w is not None:
            return self.cell_cap_w
        return self.num_subcarriers * self.subcarrier_cap_w

    def to_json_dict(self) -> dict:
        return {k: getattr(self, k) for k in sorted(_CONFIG_KEYS)}

    @classmethod
    def from_json_dict(cls, data: dict) -> "RadioConfig":
        if not isinstance(data, dict):
            raise ScenarioError("radio config must be a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ScenarioError(f"unknown radio config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RadioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid radio config JSON: {exc}") from exc
        return cls.from_json_dict(data)


def _bs_positions(cfg: RadioConfig) -> np.ndarray:
    x = np.arange(cfg.num_cells) * math.sqrt(3.0) * cfg.cell_radius_m
    return np.stack([x, np.zeros(cfg.num_cells)], axis=1)


def _sample_hexagon(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    """Uniform points in the hexagon |x| <= sqrt(3)R/2, |y| <= R - |x|/sqrt(3)."""
    half_w = math.sqrt(3.0) * radius / 2.0
    out = np.empty((count, 2))
    filled = 0
    while filled < count:
        need = count - filled
        m = max(8, int(1.6 * need))
        x = rng.uniform(-half_w, half_w, size=m)
        y = rng.uniform(-radius, radius, size=m)
        keep = np.abs(y) <= radius - np.abs(x) / math.sqrt(3.0)
        take = min(int(keep.sum()), need)
        out[filled : filled + take] = np.stack([x[keep][:take], y[keep][:take]], axis=1)
        filled += take
    return out


def _gain_from_distance(cfg: RadioConfig, d_m: np.ndarray) -> np.ndarray:
    d_km = np.maximum(d_m, cfg.min_distance_m) / 1000.0
    pl_db = cfg.pathloss_intercept_db + cfg.pathloss_slope_db * np.log10(d_km)
    return 10.0 ** (-pl_db / 10.0)


def generate_scenario(cfg: RadioConfig, seed=None) -> Scenario:
    """Drop users and build a Scenario; seed overrides the config's seed."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    K, M, L = cfg.num_cells, cfg.users_per_cell, cfg.num_subcarriers
    bs = _bs_positions(cfg)
    users = np.concatenate(
        [bs[k] + _sample_hexagon(rng, M, cfg.cell_radius_m) for k in range(K)]
    )
    d = np.linalg.norm(users[None, :, :] - bs[:, None, :], axis=2)
    gains = np.repeat(_gain_from_distance(cfg, d)[:, :, None], L, axis=2)
    if cfg.fading:
        gains = gains * rng.exponential(1.0, size=gains.shape)
    meta = {
        "seed": cfg.seed if seed is None else (list(seed) if isinstance(seed, (list, tuple)) else seed),
        "radio": cfg.to_json_dict(),
        "bs_xy": bs.tolist(),
        "user_xy": users.tolist(),
    }
    return Scenario(
        num_cells=K,
        num_subcarriers=L,
        users_per_cell=(M,) * K,
        sic_limit=cfg.sic_limit,
        gains=gains,
        noise_power=cfg.noise_power_w,
        subcarrier_cap=np.full((K, L), cfg.subcarrier_cap_w),
        cell_cap=np.full(K, cfg.effective_cell_cap_w),
        meta=meta,
    )


def scenario_with_caps(s: Scenario, subcarrier_cap_w: float, cell_cap_w: float | None = None) -> Scenario:
    """Same gains and layout, different power budgets."""
    if cell_cap_w is None:
        cell_cap_w = s.num_subcarriers * subcarrier_cap_w
    meta = dict(s.meta)
    meta["cap_override_w"] = subcarrier_cap_w
    return Scenario(
        num_cells=s.num_cells,
        num_subcarriers=s.num_subcarriers,
        users_per_cell=s.users_per_cell,
        sic_limit=s.sic_limit,
        gains=s.gains,
        noise_power=s.noise_power,
        subcarrier_cap=np.full((s.num_cells, s.num_subcarriers), subcarrier_cap_w),
        cell_cap=np.full(s.num_cells, cell_cap_w),
        weights=s.weights,
        meta=meta,
    )


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if n <= 0:
        raise ValueError("need at least one observation")
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half


@dataclass(frozen=True, eq=False)
class CdfResult:
    """Pooled decodability statistics over many independent drops.

    values holds the sorted pairwise gain-product statistic pooled over
    every (cell, sub-carrier, interfering cell, gain-ordered user pair);
    cdf the empirical distribution at those points. p_nonneg estimates the
    probability that this statistic is non-negative (decoding order valid
    for every power choice whatsoever), with a 95% Wilson interval.

    p_margin_nonneg estimates the probability that the full decodability
    margin stays non-negative at the configured caps: the noise term is
    included and every interferer transmits at whatever power in [0, cap]
    hurts most. This is the operative condition for the gain-based
    decoding order at the configured power budget; the product statistic
    is its infinite-power limit.
    """

    values: np.ndarray
    cdf: np.ndarray
    p_nonneg: float
    ci_low: float
    ci_high: float
    p_margin_nonneg: float
    margin_ci_low: float
    margin_ci_high: float
    cap_w: float
    num_scenarios: int
    num_values: int
    num_margins: int

    def summary_dict(self) -> dict:
        return {
            "num_scenarios": self.num_scenarios,
            "num_values": self.num_values,
            "p_nonneg": self.p_nonneg,
            "ci95_low": self.ci_low,
            "ci95_high": self.ci_high,
            "num_margins": self.num_margins,
            "p_margin_nonneg": self.p_margin_nonneg,
            "margin_ci95_low": self.margin_ci_low,
            "margin_ci95_high": self.margin_ci_high,
            "cap_w": self.cap_w,
        }


def cdf_experiment(cfg: RadioConfig, samples: int) -> CdfResult:
    """Empirical CDF of the pairwise decodability statistic.

    For the gain-ordered pair (weak, strong) of a cell on one sub-carrier
    and an interfering base station j, the statistic is
      g_strong * g_j_to_weak  -  g_weak * g_j_to_strong;
    it is non-negative exactly when no power choice of cell j can break
    the pair's decoding, so its mass at or above zero measures how often
    the decoding order is unconditionally safe. The result also carries
    the probability that the full margin (noise term included, every
    interferer at its most harmful power within the cap) is non-negative,
    the operative decodability condition at the configured budget.
    Positions are drawn in bulk for all drops at once from the config
    seed.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(cfg.seed)
    K, M, L = cfg.num_cells, cfg.users_per_cell, cfg.num_subcarriers
    if K < 2:
        raise ScenarioError("the decodability statistic needs at least two cells")
    bs = _bs_positions(cfg)
    users = np.empty((samples, K, M, 2))
    for k in range(K):
        users[:, k] = (bs[k] + _sample_hexagon(rng, samples * M, cfg.cell_radius_m)).reshape(
            samples, M, 2
        )
    # gains[s, j, k, u]: BS j to user u of cell k
    d = np.linalg.norm(users[:, None, :, :, :] - bs[None, :, None, None, :], axis=4)
    base = _gain_from_distance(cfg, d)
    if cfg.fading:
        g = base[..., None] * rng.exponential(1.0, size=base.shape + (L,))
    else:
        g = base[..., None]

    cap = cfg.subcarrier_cap_w
    noise = cfg.noise_power_w
    chunks = []
    margin_chunks = []
    n_l = L if cfg.fading else 1
    for k in range(K):
        own = g[:, k, k, :, :]
        for u in range(M):
            for v in range(u + 1, M):
                ou, ov = own[:, u, :], own[:, v, :]
                u_weak = ou <= ov  # ties keep the lower index as weak
                weak_own = np.where(u_weak, ou, ov)
                strong_own = np.where(u_weak, ov, ou)
                worst = (strong_own - weak_own) * noise
                for j in range(K):
                    if j == k:
                        continue
                    cu, cv = g[:, j, k, u, :], g[:, j, k, v, :]
                    weak_cross = np.where(u_weak, cu, cv)
                    strong_cross = np.where(u_weak, cv, cu)
                    stat = strong_own * weak_cross - weak_own * strong_cross
                    chunks.append(stat[:, :n_l].reshape(-1))
                    worst = worst + np.minimum(stat, 0.0) * cap
                margin_chunks.append(worst[:, :n_l].reshape(-1))
    pooled = np.concatenate(chunks)
    margins = np.concatenate(margin_chunks)
    if not cfg.fading and L > 1:
        pooled = np.tile(pooled, L)
        margins = np.tile(margins, L)
    values = np.sort(pooled)
    m = values.shape[0]
    cdf = np.arange(1, m + 1) / m
    nonneg = int(np.count_nonzero(values >= 0.0))
    lo, hi = wilson_interval(nonneg, m)
    mm = margins.shape[0]
    m_nonneg = int(np.count_nonzero(margins >= 0.0))
    mlo, mhi = wilson_interval(m_nonneg, mm)
    return CdfResult(
        values=values,
        cdf=cdf,
        p_nonneg=nonneg / m,
        ci_low=lo,
        ci_high=hi,
        p_margin_nonneg=m_nonneg / mm,
        margin_ci_low=mlo,
        margin_ci_high=mhi,
        cap_w=cap,
        num_scenarios=samples,
        num_values=m,
        num_margins=mm,
    )


class SweepRecord(NamedTuple):
    cap_w: float
    epsilon: float
    algo: str
    trial: int
    sum_rate_nats: float


class SweepRow(NamedTuple):
    cap_w: float
    epsilon: float
    algo: str
    mean_sum_rate_nats: float
    mean_sum_rate_bits: float
    trials: int


@dataclass(frozen=True, eq=False)
class SweepResult:
    records: tuple[SweepRecord, ...]
    rows: tuple[SweepRow, ...]


def _sweep_trial(cfg: RadioConfig, caps, epsilons, trial: int) -> list[SweepRecord]:
    base = generate_scenario(cfg, seed=[cfg.seed, trial])
    records = []
    for cap in caps:
        sc = scenario_with_caps(base, cap)
        full = baseline_full_power(sc)
        greedy = baseline_greedy(sc)
        for eps in epsilons:
            pb = solve(sc, eps)
            records.append(SweepRecord(cap, eps, "polyblock", trial, pb.sum_rate_nats))
            records.append(SweepRecord(cap, eps, "full-power", trial, full.sum_rate_nats))
            records.append(SweepRecord(cap, eps, "greedy", trial, greedy.sum_rate_nats))
    return records


def power_sweep(cfg: RadioConfig, caps, epsilons, trials: int, threads: int = 1) -> SweepResult:
    """Mean sum rate per (cap, epsilon, algorithm) over seeded trials.

    The user drop of a trial is shared across all caps and epsilons, so
    per-trial comparisons across columns are paired.
    """
    caps = [float(c) for c in caps]
    epsilons = [float(e) for e in epsilons]
    if not caps or not epsilons or trials < 1:
        raise ValueError("need caps, epsilons and at least one trial")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(lambda t: _sweep_trial(cfg, caps, epsilons, t), range(trials)))
    else:
        per_trial = [_sweep_trial(cfg, caps, epsilons, t) for t in range(trials)]
    records = tuple(rec for batch in per_trial for rec in batch)

    rows = []
    for cap in caps:
        for eps in epsilons:
            for algo in ("polyblock", "full-power", "greedy"):
                vals = [r.sum_rate_nats for r in records if r.cap_w == cap and r.epsilon == eps and r.algo == algo]
                mean = float(np.mean(vals))
                rows.append(SweepRow(cap, eps, algo, mean, mean / math.log(2.0), len(vals)))
    return SweepResult(records=records, rows=tuple(rows))


class BenchRecord(NamedTuple):
    epsilon: float
    algo: str
    trial: int
    ms: float
    iterations: int


class BenchRow(NamedTuple):
    epsilon: float
    algo: str
    mean_ms: float
    std_ms: float
    mean_iters: float


@dataclass(frozen=True, eq=False)
class BenchResult:
    records: tuple[BenchRecord, ...]
    rows: tuple[BenchRow, ...]


def _bench_trial(cfg: RadioConfig, epsilons, trial: int) -> list[BenchRecord]:
    s = generate_scenario(cfg, seed=[cfg.seed, trial])
    records = []
    full = baseline_full_power(s)
    greedy = baseline_greedy(s)
    for eps in epsilons:
        pb = solve(s, eps, collect_trace=False)
        records.append(BenchRecord(eps, "polyblock", trial, pb.wall_time_s * 1e3, pb.iterations))
        records.append(BenchRecord(eps, "full-power", trial, full.wall_time_s * 1e3, full.iterations))
        records.append(BenchRecord(eps, "greedy", trial, greedy.wall_time_s * 1e3, greedy.iterations))
    return records


def runtime_bench(cfg: RadioConfig, epsilons, trials: int, threads: int = 1) -> BenchResult:
    """Wall time and iteration statistics per (epsilon, algorithm)."""
    epsilons = [float(e) for e in epsilons]
    if not epsilons or trials < 1:
        raise ValueError("need epsilons and at least one trial")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(lambda t: _bench_trial(cfg, epsilons, t), range(trials)))
    else:
        per_trial = [_bench_trial(cfg, epsilons, t) for t in range(trials)]
    records = tuple(rec for batch in per_trial for rec in batch)

    rows = []
    for eps in epsilons:
        for algo in ("polyblock", "full-power", "greedy"):
            ms = [r.ms for r in records if r.epsilon == eps and r.algo == algo]
            iters = [r.iterations for r in records if r.epsilon == eps and r.algo == algo]
            std = float(np.std(ms, ddof=1)) if len(ms) > 1 else 0.0
            rows.append(BenchRow(eps, algo, float(np.mean(ms)), std, float(np.mean(iters))))
    return BenchResult(records=records, rows=tuple(rows))


def write_cdf_csv(result: CdfResult, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("value,cdf\n")
        for v, c in zip(result.values, result.cdf):
            fh.write(f"{v:.12g},{c:.12g}\n")


def write_sweep_csv(result: SweepResult, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("cap_w,epsilon,algo,mean_sum_rate_nats,mean_sum_rate_bits,trials\n")
        for r in result.rows:
            fh.write(
                f"{r.cap_w:.12g},{r.epsilon:.12g},{r.algo},"
                f"{r.mean_sum_rate_nats:.12g},{r.mean_sum_rate_bits:.12g},{r.trials}\n"
            )


def write_bench_csv(result: BenchResult, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epsilon,algo,mean_ms,std_ms,mean_iters\n")
        for r in result.rows:
            fh.write(
                f"{r.epsilon:.12g},{r.algo},{r.mean_ms:.12g},{r.std_ms:.12g},{r.mean_iters:.12g}\n"
            )
