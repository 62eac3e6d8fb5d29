"""SC-FDE uplink block simulation and semi-analytic link evaluation.

Capacity evaluation is semi-analytic: given an instantaneous intra-group
effective channel, the soft symbol estimate decomposes into a scaled true
symbol plus uncorrelated residual, whose moments are closed-form in the
per-bin combiners and the reduced interference-plus-noise covariance.  Monte
Carlo enters only across channel realizations.  The symbol-level simulator
exists as an independent cross-validation path (unit-energy QPSK).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, CovarianceSet, Scenario, sample_channels
from .digital import CombinerBank, EffectiveChannel, effective_channel, lmmse_combiners, zf_combiners
from .statistics import ReducedStatistics, group_statistics, reduce

__all__ = [
    "BlockConfig",
    "BlockResult",
    "CapacityEstimate",
    "UserLinkReport",
    "bussgang_report",
    "ergodic_capacity",
    "simulate_block",
]


@dataclass(frozen=True)
class BlockConfig:
    """Block length, cyclic prefix and Monte Carlo bookkeeping.

    The cyclic prefix is absorbed analytically through circular indexing, so
    ``cp_len`` only has to satisfy the length contract (defaults to the
    scenario delay spread at use sites when None).
    """

    n: int = 64
    cp_len: int | None = None
    constellation: str = "qpsk"
    trials: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.constellation != "qpsk":
            raise ValueError("only unit-energy QPSK is supported for symbol-level runs")
        if self.cp_len is not None and self.cp_len < 0:
            raise ValueError("cyclic prefix length must be non-negative")


@dataclass(frozen=True)
class UserLinkReport:
    """Bussgang decomposition of one user's soft output."""

    a: complex
    b_power: float
    sinr: float
    capacity: float


@dataclass(frozen=True)
class BlockResult:
    """Transmitted symbols and soft estimates of one simulated block."""

    symbols: dict[int, np.ndarray]
    estimates: dict[int, np.ndarray]


@dataclass(frozen=True)
class CapacityEstimate:
    """Per-user ergodic capacity estimate with Monte Carlo standard error."""

    mean: np.ndarray
    stderr: np.ndarray
    samples: np.ndarray


def _qpsk(rng: np.random.Generator, shape) -> np.ndarray:
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, shape)))


def simulate_block(scn: Scenario, real: ChannelRealization, beamformers: dict[int, np.ndarray],
                   combiners: dict[int, CombinerBank], cfg: BlockConfig, seed) -> BlockResult:
    """Run one SC-FDE block through the full receive chain.

    All groups transmit i.i.d. QPSK at per-user energy E_s/K; the circular
    channel applies each active tap to the cyclically delayed symbol stream.
    Groups listed in ``beamformers``/``combiners`` get demodulated: analog
    projection, normalized DFT, per-bin combining, inverse DFT.
    """
    n = cfg.n
    if n < scn.n_taps:
        raise ValueError(f"block length {n} shorter than delay spread {scn.n_taps}")
    if (cfg.cp_len if cfg.cp_len is not None else scn.n_taps) < scn.n_taps:
        raise ValueError("cyclic prefix must cover the delay spread")
    rng = np.random.default_rng(seed)

    symbols: dict[int, np.ndarray] = {}
    y = np.zeros((scn.n_antennas, n), dtype=complex)
    for g, spec in enumerate(scn.groups):
        x = _qpsk(rng, (spec.n_users, n)) * math.sqrt(spec.symbol_energy / spec.n_users)
        symbols[g] = x
        for delay, h in real.taps[g].items():
            y += h @ np.roll(x, delay, axis=1)
    noise = (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)) / np.sqrt(2.0)
    y += math.sqrt(scn.noise_power) * noise

    estimates: dict[int, np.ndarray] = {}
    for g, s in beamformers.items():
        bank = combiners[g]
        if bank.n_bins != n:
            raise ValueError(f"combiner bank of group {g} built for N={bank.n_bins}, not {n}")
        y_red = np.asarray(s, dtype=complex).conj().T @ y
        y_freq = np.fft.fft(y_red, axis=1) / np.sqrt(n)
        x_freq = np.einsum("ndk,dn->kn", bank.w.conj(), y_freq)
        estimates[g] = np.fft.ifft(x_freq, axis=1) * np.sqrt(n)
    return BlockResult(symbols, estimates)


def bussgang_report(eff: EffectiveChannel, combiners: CombinerBank, rd: ReducedStatistics,
                    symbol_energy: float, n_users: int, user: int) -> UserLinkReport:
    """Closed-form per-user amplitude, residual power, SINR and capacity.

    a       = (1/N) sum_k w_k^H Lambda_k e_user,
    E|x^|^2 = (1/N) sum_k w_k^H ((E/K) Lambda_k Lambda_k^H + R_eta_rd) w_k,
    b       = E|x^|^2 - (E/K) |a|^2,  SINR = (E/K) |a|^2 / b.
    Deterministic given its inputs; tiny negative b (round-off) clips to 0.
    """
    if eff.n_bins != combiners.n_bins:
        raise ValueError("effective channel and combiners disagree on block length")
    e = symbol_energy / n_users
    w = combiners.w[:, :, user]
    rows = np.einsum("nd,ndk->nk", w.conj(), eff.freq)
    a = complex(rows[:, user].mean())
    sig = e * (np.abs(rows) ** 2).sum(axis=1)
    noise = np.einsum("nd,de,ne->n", w.conj(), rd.r_eta, w).real
    est_power = float((sig + noise).mean())
    b_power = est_power - e * abs(a) ** 2
    if b_power < -1e-12 * max(est_power, 1.0):
        raise ValueError(f"inconsistent moments: residual power {b_power:.3e} < 0")
    b_power = max(b_power, 0.0)
    if b_power == 0.0:
        sinr = 0.0 if a == 0 else math.inf
    else:
        sinr = e * abs(a) ** 2 / b_power
    return UserLinkReport(a, b_power, sinr, math.log2(1.0 + sinr))


def group_reports(eff: EffectiveChannel, combiners: CombinerBank, rd: ReducedStatistics,
                  symbol_energy: float, n_users: int) -> list[UserLinkReport]:
    """Bussgang reports for every user of the group."""
    return [bussgang_report(eff, combiners, rd, symbol_energy, n_users, m)
            for m in range(n_users)]


def ergodic_capacity(scn: Scenario, cov: CovarianceSet, s_eff: np.ndarray, group: int,
                     combiner: str = "zf", n: int = 64, trials: int = 200,
                     seed=0) -> CapacityEstimate:
    """Mean per-user capacity over channel realizations, analog stage fixed.

    Only the evaluated group's channels need sampling; interference enters
    through its statistical reduced covariance.  Trials use disjoint derived
    seeds, so results are reproducible and order-independent.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if combiner not in ("zf", "lmmse"):
        raise ValueError(f"unknown combiner {combiner!r}")
    spec = scn.groups[group]
    stats = group_statistics(cov, scn, group)
    rd = reduce(stats, s_eff)
    samples = np.zeros((trials, spec.n_users))
    for t in range(trials):
        real = sample_channels(cov, [seed, t], groups=[group])
        eff = effective_channel(s_eff, real, group, n)
        if combiner == "zf":
            bank = zf_combiners(eff)
        else:
            bank = lmmse_combiners(eff, rd, spec.symbol_energy, spec.n_users)
        reports = group_reports(eff, bank, rd, spec.symbol_energy, spec.n_users)
        samples[t] = [r.capacity for r in reports]
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros_like(mean)
    return CapacityEstimate(mean, stderr, samples)
