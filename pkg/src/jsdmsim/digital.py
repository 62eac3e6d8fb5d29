"""Frequency-domain effective channels and per-bin digital combiners.

The analog stage (including any compensation matrix) collapses the array to
D_g streams; what remains per frequency bin is a small D_g x K_g channel that
either a zero-forcing or an LMMSE combiner inverts.  The LMMSE variant uses
the statistical reduced-dimension interference-plus-noise covariance, never
the instantaneous interferer channels, which are unknown at the receiver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .statistics import ReducedStatistics

__all__ = [
    "CombinerBank",
    "EffectiveChannel",
    "SingularBinError",
    "effective_channel",
    "lmmse_combiners",
    "zf_combiners",
]


class SingularBinError(ValueError):
    """A per-bin channel lost the column rank zero-forcing needs."""


@dataclass(frozen=True)
class EffectiveChannel:
    """Reduced-dimension taps and their N-point DFT across bins.

    ``taps[l]`` is D x K for l = 0..L-1 (zeros on inactive delays);
    ``freq[k]`` is its DFT sum_l taps[l] e^{-j 2 pi k l / N}.
    """

    taps: np.ndarray
    freq: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.freq.shape[0]


@dataclass(frozen=True)
class CombinerBank:
    """Per-bin combiners ``w[k]`` (D x K); applied as w[k]^H to bin k."""

    w: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.w.shape[0]


def effective_channel(s: np.ndarray, real: ChannelRealization, g_src: int,
                      n: int) -> EffectiveChannel:
    """Project group ``g_src``'s channel taps through beamformer ``s``.

    ``s`` is the overall analog stage including compensation.  ``n`` is the
    SC-FDE block length and must cover the delay spread.
    """
    scn = real.scenario
    if n < scn.n_taps:
        raise ValueError(f"block length {n} shorter than delay spread {scn.n_taps}")
    s = np.asarray(s, dtype=complex)
    d = s.shape[1]
    k_users = scn.groups[g_src].n_users
    taps = np.zeros((scn.n_taps, d, k_users), dtype=complex)
    for delay, h in real.taps[g_src].items():
        taps[delay] = s.conj().T @ h
    freq = np.fft.fft(taps, n=n, axis=0)
    return EffectiveChannel(taps, freq)


def zf_combiners(eff: EffectiveChannel) -> CombinerBank:
    """Zero-forcing bank W_k = Lambda_k (Lambda_k^H Lambda_k)^{-1}.

    Guarantees W_k^H Lambda_k = I on every bin; a rank-deficient bin raises
    SingularBinError naming the bin instead of silently regularizing.
    """
    n, d, k = eff.freq.shape
    if d < k:
        raise SingularBinError(f"zero-forcing needs D >= K, got D={d}, K={k}")
    w = np.empty_like(eff.freq)
    for bin_idx in range(n):
        lam = eff.freq[bin_idx]
        gram = lam.conj().T @ lam
        try:
            w[bin_idx] = lam @ np.linalg.inv(gram)
        except np.linalg.LinAlgError as exc:
            raise SingularBinError(f"effective channel at bin {bin_idx} is rank deficient") from exc
        if not np.all(np.isfinite(w[bin_idx])):
            raise SingularBinError(f"effective channel at bin {bin_idx} is rank deficient")
    return CombinerBank(w)


def lmmse_combiners(eff: EffectiveChannel, rd: ReducedStatistics, symbol_energy: float,
                    n_users: int) -> CombinerBank:
    """LMMSE bank W_k = (E Lambda_k Lambda_k^H + R_eta_rd)^{-1} E Lambda_k.

    E = symbol_energy / n_users is the per-user symbol energy; the reduced
    interference-plus-noise covariance keeps the inverse well posed even on
    rank-deficient bins, so there is no failure mode here.
    """
    e = symbol_energy / n_users
    n = eff.n_bins
    w = np.empty_like(eff.freq)
    for bin_idx in range(n):
        lam = eff.freq[bin_idx]
        cov = e * (lam @ lam.conj().T) + rd.r_eta
        w[bin_idx] = np.linalg.solve(cov, e * lam)
    return CombinerBank(w)
