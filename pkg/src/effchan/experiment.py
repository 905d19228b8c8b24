"""Ergodic sum-rate Monte Carlo over fading blocks.

One trial = one fading block: draw every user's M x N channel, quantize with
that block's codebooks, zero-force on the reported directions, and evaluate
the true SINRs.  A matching perfect-knowledge benchmark (independent M-user
single-antenna draw) runs on the same trial index so the reported gap is a
paired comparison.

Determinism contract: every random draw comes from an RngStream keyed by
(seed, trial, user, purpose), so results depend only on the config seed and
are byte-identical for any worker count.  Trials are aggregated in index
order for the same reason.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .formulas import ScalingInputs, bits_required
from .linalg import (
    PURPOSE_BENCHMARK,
    PURPOSE_CHANNEL,
    PURPOSE_CODEBOOK,
    PURPOSE_FIXED_CODEBOOK,
    IllConditionedError,
    RngStream,
    complex_normal,
)
from .precoding import perfect_csit_rate, sinr, sum_rate, zfbf_vectors
from .quantize import MAX_CODEBOOK_BITS, Codebook, generate_codebook, quantize_effective
from .stats import mean_ci

CODEBOOK_POLICIES = ("per_block", "fixed")


@dataclass(frozen=True)
class BitsRule:
    """How many feedback bits each user spends per block.

    Either a fixed bit count, or the gap-target scaling rule which picks
    B = ceil(bits_required) at each SNR grid point (clamped to at least one
    bit, since a codebook needs two entries).
    """

    kind: str
    bits: int | None = None
    target_gap: float | None = None

    def __post_init__(self):
        if self.kind == "fixed":
            if self.bits is None or not 1 <= self.bits <= MAX_CODEBOOK_BITS:
                raise ValueError(f"fixed bits must be in [1, {MAX_CODEBOOK_BITS}], got {self.bits}")
        elif self.kind == "scaling":
            if self.target_gap is None or self.target_gap <= 0:
                raise ValueError(f"scaling rule needs a positive target gap, got {self.target_gap}")
        else:
            raise ValueError(f"unknown bits rule kind {self.kind!r}")

    @classmethod
    def fixed(cls, bits: int) -> "BitsRule":
        return cls(kind="fixed", bits=bits)

    @classmethod
    def scaling(cls, target_gap: float) -> "BitsRule":
        return cls(kind="scaling", target_gap=target_gap)

    def resolve(self, m: int, n: int, snr_db: float) -> int:
        """Integer bit count for one grid point (may raise InfeasibleTargetError)."""
        if self.kind == "fixed":
            return int(self.bits)
        exact = bits_required(ScalingInputs(m=m, n=n, p_db=snr_db, target_gap=self.target_gap))
        bits = max(1, math.ceil(exact))
        if bits > MAX_CODEBOOK_BITS:
            raise ValueError(
                f"scaling rule needs {bits} bits at {snr_db} dB (N={n}), "
                f"beyond the {MAX_CODEBOOK_BITS}-bit codebook limit")
        return bits


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one sweep cell: geometry, grid, bits, trials, seed.

    The number of users always equals the number of transmit antennas M.
    """

    m: int
    n: int
    snr_db_grid: tuple
    bits_rule: BitsRule
    trials: int
    seed: int
    codebook_policy: str = "per_block"

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"need at least 2 transmit antennas, got M={self.m}")
        if not 1 <= self.n <= self.m:
            raise ValueError(f"need 1 <= N <= M, got N={self.n} with M={self.m}")
        if len(self.snr_db_grid) == 0:
            raise ValueError("SNR grid is empty")
        if self.trials < 1:
            raise ValueError(f"need at least 1 trial, got {self.trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.codebook_policy not in CODEBOOK_POLICIES:
            raise ValueError(
                f"codebook policy must be one of {CODEBOOK_POLICIES}, got {self.codebook_policy!r}")

    @property
    def users(self) -> int:
        return self.m


@dataclass(frozen=True)
class TrialRecord:
    """One fading block's outcome; dropped trials carry zero rates."""

    sinrs: np.ndarray
    rate_fb: float
    rate_zf: float
    dropped: bool


@dataclass(frozen=True)
class GridPointResult:
    """Aggregated rates at one (SNR, N) grid point; ci fields are half-widths."""

    snr_db: float
    n_rx: int
    bits: int
    rate_fb_mean: float
    rate_fb_ci: float
    rate_zf_mean: float
    rate_zf_ci: float
    gap: float
    dropped: int
    trials: int


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    points: list
    warnings: list


def run_trial(config: ExperimentConfig, power: float, bits: int, stream: RngStream,
              codebooks: list[Codebook] | None = None) -> TrialRecord:
    """Simulate one fading block at linear power ``power`` with B = bits.

    ``stream`` identifies the block: it must carry the config seed and the
    trial index.  ``codebooks`` overrides per-user codebook generation (used
    by the fixed-codebook policy and by tests that plant codebook entries).
    """
    users = config.users
    results = []
    for u in range(users):
        chan_gen = stream.derive(user=u, purpose=PURPOSE_CHANNEL).generator()
        h = complex_normal(chan_gen, (config.m, config.n))
        if codebooks is not None:
            cb = codebooks[u]
        else:
            cb = generate_codebook(stream.derive(user=u, purpose=PURPOSE_CODEBOOK),
                                   bits, config.m)
        results.append(quantize_effective(h, cb))

    bench_cols = [
        complex_normal(stream.derive(user=u, purpose=PURPOSE_BENCHMARK).generator(), config.m)
        for u in range(users)
    ]
    bench = np.stack(bench_cols, axis=1)

    try:
        beams = zfbf_vectors(np.stack([r.q_hat for r in results], axis=1))
        sinrs = np.array([sinr(results[i].h_eff, beams, i, power) for i in range(users)])
        rate_fb = sum_rate(sinrs)
        rate_zf = perfect_csit_rate(bench, power)
    except IllConditionedError:
        return TrialRecord(sinrs=np.zeros(users), rate_fb=0.0, rate_zf=0.0, dropped=True)
    return TrialRecord(sinrs=sinrs, rate_fb=rate_fb, rate_zf=rate_zf, dropped=False)


def _fixed_codebooks(config: ExperimentConfig, bits: int) -> list[Codebook] | None:
    if config.codebook_policy != "fixed":
        return None
    return [
        generate_codebook(RngStream(config.seed, 0, u, PURPOSE_FIXED_CODEBOOK), bits, config.m)
        for u in range(config.users)
    ]


def _run_chunk(config: ExperimentConfig, power: float, bits: int,
               start: int, stop: int, codebooks) -> list[TrialRecord]:
    return [
        run_trial(config, power, bits, RngStream(config.seed, trial), codebooks)
        for trial in range(start, stop)
    ]


def _point_records(config: ExperimentConfig, power: float, bits: int,
                   threads: int) -> list[TrialRecord]:
    codebooks = _fixed_codebooks(config, bits)
    if threads <= 1 or config.trials < 2 * threads:
        return _run_chunk(config, power, bits, 0, config.trials, codebooks)
    # contiguous chunks, merged in trial order: the worker count never
    # changes which records exist or the order they are reduced in
    bounds = np.linspace(0, config.trials, threads + 1).astype(int)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_run_chunk, config, power, bits, int(lo), int(hi), codebooks)
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        chunks = [f.result() for f in futures]
    return [record for chunk in chunks for record in chunk]


def _aggregate(config: ExperimentConfig, snr_db: float, bits: int,
               records: list[TrialRecord], warnings: list) -> GridPointResult:
    kept = [r for r in records if not r.dropped]
    dropped = len(records) - len(kept)
    if dropped > 0.01 * len(records):
        warnings.append(
            f"snr_db={snr_db:g} n_rx={config.n}: dropped {dropped}/{len(records)} trials")
    if not kept:
        warnings.append(f"snr_db={snr_db:g} n_rx={config.n}: all trials dropped")
        nan = float("nan")
        return GridPointResult(snr_db, config.n, bits, nan, nan, nan, nan, nan,
                               dropped, len(records))
    fb_mean, fb_ci = mean_ci(np.array([r.rate_fb for r in kept]))
    zf_mean, zf_ci = mean_ci(np.array([r.rate_zf for r in kept]))
    return GridPointResult(
        snr_db=snr_db,
        n_rx=config.n,
        bits=bits,
        rate_fb_mean=fb_mean,
        rate_fb_ci=fb_ci,
        rate_zf_mean=zf_mean,
        rate_zf_ci=zf_ci,
        gap=zf_mean - fb_mean,
        dropped=dropped,
        trials=len(records),
    )


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run the full SNR grid for one (M, N) cell.

    Results are deterministic in (config, seed): the thread count only
    changes wall-clock time.  Dropped trials (ill-conditioned direction
    stacks) are excluded from the averages and counted per grid point, with a
    warning if they exceed one percent.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    warnings: list = []
    points = []
    for snr_db in config.snr_db_grid:
        power = 10.0 ** (snr_db / 10.0)
        bits = config.bits_rule.resolve(config.m, config.n, snr_db)
        records = _point_records(config, power, bits, threads)
        points.append(_aggregate(config, snr_db, bits, records, warnings))
    return ExperimentResult(config=config, points=points, warnings=warnings)
