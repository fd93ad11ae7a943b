"""Block-error-rate sweeps and GAN fidelity measurement.

Sweeps draw trials in fixed-size shards, each with its own named RNG
substream keyed by (seed, system label, point index, shard index). Shards
are merged in index order and the early-stop rule is applied shard by
shard, so the result is byte-identical no matter how many workers ran the
shards.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import baseline, channel, gan, transceiver
from .config import ConfigError, TrainConfig
from .rng import substream

SHARD_TRIALS = 20_000

BASELINE_SYSTEMS = (
    "hamming74-mld-awgn",
    "qam16-rayleigh-perfect-csi",
    "qam16-rayleigh-ls",
)


@dataclass(frozen=True)
class SweepSpec:
    """Which Eb/N0 points to sweep and when to stop each one.

    A point stops once it has both min_trials trials and target_errors
    errors, or when it hits max_trials, whichever comes first.
    """

    ebn0_db: tuple[float, ...]
    min_trials: int = 2000
    max_trials: int = 10_000_000
    target_errors: int = 200

    def __post_init__(self) -> None:
        object.__setattr__(self, "ebn0_db", tuple(float(v) for v in self.ebn0_db))
        if len(self.ebn0_db) == 0:
            raise ConfigError("ebn0_db: must list at least one point")
        if not all(math.isfinite(v) for v in self.ebn0_db):
            raise ConfigError("ebn0_db: values must be finite")
        if self.min_trials < 1:
            raise ConfigError("min_trials: must be >= 1")
        if self.max_trials < self.min_trials:
            raise ConfigError("max_trials: must be >= min_trials")
        if self.target_errors < 1:
            raise ConfigError("target_errors: must be >= 1")


@dataclass(frozen=True)
class BlerPoint:
    ebn0_db: float
    trials: int
    errors: int
    bler: float
    ci95_halfwidth: float

    @classmethod
    def from_counts(cls, ebn0_db: float, trials: int, errors: int) -> "BlerPoint":
        if trials < 1 or errors < 0 or errors > trials:
            raise ValueError(f"bad counts: {errors} errors in {trials} trials")
        p = errors / trials
        ci = 1.96 * math.sqrt(p * (1.0 - p) / trials)
        return cls(float(ebn0_db), int(trials), int(errors), p, ci)


def _run_point(trial_fn, ebn0_db, spec, seed, label, point_index, workers):
    """Run shards for one Eb/N0 point until the stop rule fires.

    trial_fn(n_trials, rng) -> error count. Shard j always covers the same
    trial budget and substream regardless of worker count; a stop decision
    mid-wave discards the later shards of that wave, so parallel runs
    reproduce the sequential result exactly.
    """
    shard_cap = math.ceil(spec.max_trials / SHARD_TRIALS)
    trials = errors = 0
    next_shard = 0
    wave = max(1, int(workers))

    def shard_size(j: int) -> int:
        return min(SHARD_TRIALS, spec.max_trials - j * SHARD_TRIALS)

    def run_shard(j: int) -> int:
        rng = substream(seed, "eval", label, point_index, j)
        return trial_fn(shard_size(j), rng)

    while next_shard < shard_cap:
        batch = list(range(next_shard, min(next_shard + wave, shard_cap)))
        if wave == 1 or len(batch) == 1:
            results = [run_shard(j) for j in batch]
        else:
            with ThreadPoolExecutor(max_workers=wave) as pool:
                results = list(pool.map(run_shard, batch))
        stop = False
        for j, errs in zip(batch, results):
            trials += shard_size(j)
            errors += int(errs)
            if trials >= spec.min_trials and errors >= spec.target_errors:
                stop = True
                break
        if stop:
            break
        next_shard += len(batch)
    return BlerPoint.from_counts(ebn0_db, trials, errors)


def bler_sweep_learned(
    tx: transceiver.Transmitter,
    rx: transceiver.Receiver,
    cfg: TrainConfig,
    spec: SweepSpec,
    seed: int | None = None,
    workers: int = 1,
) -> list[BlerPoint]:
    """Monte-Carlo BLER of a trained transmitter/receiver pair on the real
    channel the config names."""
    if tx.n != cfg.n or tx.m_count != cfg.M:
        raise ConfigError("transmitter dimensions do not match the config")
    expected_pilot = cfg.n_pilot if cfg.is_fading else 0
    if rx.n != cfg.n or rx.m_count != cfg.M or rx.n_pilot != expected_pilot:
        raise ConfigError("receiver dimensions do not match the config")
    if seed is None:
        seed = cfg.seed
    label = f"learned-{cfg.channel}"
    points = []
    for i, ebn0 in enumerate(spec.ebn0_db):
        std = channel.noise_std_from_snr(channel.SnrSpec(ebn0, cfg.k, cfg.n))

        def trial_fn(n_trials: int, rng: np.random.Generator) -> int:
            messages = rng.integers(0, cfg.M, size=n_trials)
            x = tx.encode_messages(messages)
            if cfg.is_fading:
                h = channel.rayleigh_sample(rng, n_trials)
                realization = channel.ChannelRealization(h=h, noise_std=std)
                y = channel.fading_apply(x, realization, rng)
                y_p = channel.pilot_receive(realization, cfg.n_pilot, rng)
                probs = rx.decode(y, y_p)
            else:
                y = channel.awgn_apply(x, std, rng)
                probs = rx.decode(y)
            decided = transceiver.hard_decision(probs)
            return int(np.sum(decided != messages))

        points.append(_run_point(trial_fn, ebn0, spec, seed, label, i, workers))
    return points


def bler_sweep_baseline(
    system: str,
    spec: SweepSpec,
    seed: int = 0,
    workers: int = 1,
    n_pilot: int = 1,
) -> list[BlerPoint]:
    """Monte-Carlo BLER of one of the classical reference systems."""
    if system not in BASELINE_SYSTEMS:
        raise ConfigError(
            f"unknown baseline {system!r}; choose from {', '.join(BASELINE_SYSTEMS)}"
        )
    if n_pilot < 1:
        raise ConfigError("n_pilot: must be >= 1")
    points = []
    for i, ebn0 in enumerate(spec.ebn0_db):
        trial_fn = _baseline_trial_fn(system, ebn0, n_pilot)
        points.append(_run_point(trial_fn, ebn0, spec, seed, system, i, workers))
    return points


def _baseline_trial_fn(system: str, ebn0_db: float, n_pilot: int):
    if system == "hamming74-mld-awgn":
        # 4 bits over 7 BPSK uses; the quadrature noise never enters the
        # decision metric, so only the in-phase component is drawn
        std = channel.noise_std_from_snr(channel.SnrSpec(ebn0_db, k=4, n=7))
        bpsk = baseline.bpsk_modulate(baseline.hamming74_codebook())

        def trial_fn(n_trials: int, rng: np.random.Generator) -> int:
            messages = rng.integers(0, 16, size=n_trials)
            y = bpsk[messages] + rng.normal(0.0, std, size=(n_trials, 7))
            decided = baseline.hamming74_mld_decode(y)
            return int(np.sum(decided != messages))

        return trial_fn

    # uncoded 16-QAM, one complex use carrying 4 bits
    std = channel.noise_std_from_snr(channel.SnrSpec(ebn0_db, k=4, n=1))
    perfect = system == "qam16-rayleigh-perfect-csi"

    def trial_fn(n_trials: int, rng: np.random.Generator) -> int:
        messages = rng.integers(0, 16, size=n_trials)
        x = baseline.qam16_modulate(messages)
        h = channel.rayleigh_sample(rng, n_trials)
        noise = std * (
            rng.standard_normal(n_trials) + 1j * rng.standard_normal(n_trials)
        )
        y = h * x + noise
        if perfect:
            h_est = h
        else:
            pilot_noise = std * (
                rng.standard_normal((n_trials, n_pilot))
                + 1j * rng.standard_normal((n_trials, n_pilot))
            )
            h_est = baseline.ls_estimate(h[:, None] + pilot_noise)
        errors = 0
        usable = h_est != 0
        if not np.all(usable):
            # an exactly-zero estimate cannot be equalized; count the block
            errors += int(np.sum(~usable))
        decided = baseline.qam16_demod_coherent(y[usable], h_est[usable])
        errors += int(np.sum(decided != messages[usable]))
        return errors

    return trial_fn


def bler_to_csv(points: list[BlerPoint], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["ebn0_db", "trials", "errors", "bler", "ci95_halfwidth"])
        for p in points:
            writer.writerow(
                [repr(p.ebn0_db), p.trials, p.errors, repr(p.bler),
                 repr(p.ci95_halfwidth)]
            )


@dataclass
class ConditionReport:
    """Real-vs-generated comparison for one conditioning value."""

    label: str
    target_mean: np.ndarray  # analytic conditional mean (x, or h*x when fading)
    real_mean: np.ndarray
    fake_mean: np.ndarray
    real_var: np.ndarray  # per real dimension
    fake_var: np.ndarray
    energy_distance: float
    n_samples: int


def _mean_pairwise_distance(a: np.ndarray, b: np.ndarray, chunk: int = 256) -> float:
    total = 0.0
    for start in range(0, a.shape[0], chunk):
        part = a[start : start + chunk]
        d = np.sqrt(((part[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
        total += float(d.sum())
    return total / (a.shape[0] * b.shape[0])


def energy_distance(a: np.ndarray, b: np.ndarray, subsample: int = 1024) -> float:
    """Two-sample energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'|.

    V-statistic over the first `subsample` rows of each set; zero iff the
    distributions match (asymptotically), and always >= 0 in expectation.
    """
    a = np.asarray(a, dtype=np.float64)[:subsample]
    b = np.asarray(b, dtype=np.float64)[:subsample]
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"sample sets must be 2-D with equal width, "
                         f"got {a.shape} and {b.shape}")
    return (
        2.0 * _mean_pairwise_distance(a, b)
        - _mean_pairwise_distance(a, a)
        - _mean_pairwise_distance(b, b)
    )


def gan_fidelity(
    g: gan.Generator | None,
    x: np.ndarray,
    noise_std: float,
    n_samples: int,
    seed: int,
    h: np.ndarray | None = None,
    n_pilot: int = 1,
    energy_subsample: int = 1024,
) -> list[ConditionReport]:
    """Compare generator output against the real channel, per condition.

    x is (C, 2n): one transmitted block per condition. With h given
    (length C, complex), the channel is block fading at those fixed
    coefficients and the generator is conditioned on the noiseless pilot
    observation of h; otherwise the channel is AWGN and the conditioning
    is x alone. g=None runs the calibration mode: a second independent
    set of real samples stands in for the generator, which shows the
    sampling floor of the statistics.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] % 2 != 0:
        raise ValueError(f"conditions must be (C, 2n), got {x.shape}")
    n = x.shape[1] // 2
    reports = []
    for c in range(x.shape[0]):
        rng = substream(seed, "fidelity", c)
        xc = np.tile(x[c], (n_samples, 1))
        if h is None:
            target = x[c].copy()
            real = channel.awgn_apply(xc, noise_std, rng)
            real2 = channel.awgn_apply(xc, noise_std, rng)
            m = xc
            label = f"x={x[c].round(4).tolist()}"
        else:
            hc = complex(np.asarray(h, dtype=np.complex128).reshape(-1)[c])
            target = channel.complex_to_iq(
                hc * channel.iq_to_complex(x[c][None, :])
            )[0]
            realization = channel.ChannelRealization(h=hc, noise_std=noise_std)
            real = channel.fading_apply(xc, realization, rng)
            real2 = channel.fading_apply(xc, realization, rng)
            # conditioning pilot: the noiseless observation of h itself
            pilot = np.tile(
                channel.complex_to_iq(np.full((1, n_pilot), hc)), (n_samples, 1)
            )
            m = np.concatenate([xc, pilot], axis=1)
            label = f"h={hc:.4g}, x={x[c].round(4).tolist()}"
        if g is None:
            fake = real2
        else:
            z = gan.sample_z(rng, n_samples, g.z_dim)
            fake = gan.generate(g, z, m)
        reports.append(
            ConditionReport(
                label=label,
                target_mean=target,
                real_mean=real.mean(axis=0),
                fake_mean=fake.mean(axis=0),
                real_var=real.var(axis=0),
                fake_var=fake.var(axis=0),
                energy_distance=energy_distance(real, fake, energy_subsample),
                n_samples=n_samples,
            )
        )
    return reports


def constellation_dump(tx: transceiver.Transmitter, path: str) -> None:
    """All M learned blocks as CSV: message, use index, re, im."""
    x = tx.encode_messages(np.arange(tx.m_count))
    symbols = channel.iq_to_complex(x)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["message", "use_index", "re", "im"])
        for msg in range(tx.m_count):
            for use in range(tx.n):
                writer.writerow(
                    [msg, use, repr(float(symbols[msg, use].real)),
                     repr(float(symbols[msg, use].imag))]
                )


def gan_scatter_dump(
    g: gan.Generator,
    x: np.ndarray,
    noise_std: float,
    path: str,
    n_samples: int = 500,
    seed: int = 0,
    h: np.ndarray | None = None,
    n_pilot: int = 1,
) -> None:
    """Real and generated samples per condition as CSV, for scatter plots.

    Rows carry source='condition' (the conditioning block itself, one row
    per use), then 'real' and 'fake' sample rows.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[1] // 2
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["condition", "source", "sample", "use_index", "re", "im"])

        def emit(cond: int, source: str, rows: np.ndarray) -> None:
            symbols = channel.iq_to_complex(rows)
            for s in range(symbols.shape[0]):
                for use in range(n):
                    writer.writerow(
                        [cond, source, s, use,
                         repr(float(symbols[s, use].real)),
                         repr(float(symbols[s, use].imag))]
                    )

        for c in range(x.shape[0]):
            rng = substream(seed, "scatter", c)
            xc = np.tile(x[c], (n_samples, 1))
            if h is None:
                real = channel.awgn_apply(xc, noise_std, rng)
                m = xc
            else:
                hc = complex(np.asarray(h, dtype=np.complex128).reshape(-1)[c])
                realization = channel.ChannelRealization(h=hc, noise_std=noise_std)
                real = channel.fading_apply(xc, realization, rng)
                pilot = np.tile(
                    channel.complex_to_iq(np.full((1, n_pilot), hc)), (n_samples, 1)
                )
                m = np.concatenate([xc, pilot], axis=1)
            fake = gan.generate(g, gan.sample_z(rng, n_samples, g.z_dim), m)
            emit(c, "condition", x[c][None, :])
            emit(c, "real", real)
            emit(c, "fake", fake)
