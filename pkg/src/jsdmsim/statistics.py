"""Group-level signal/interference covariance algebra in full and reduced dimension.

The full-dimension pair (R_s, R_eta) drives the eigenbeamformer design; the
reduced pair (after a candidate beamformer S) drives the LMMSE combiners, the
channel estimators and the expected-SINR score used to rank dynamic-subarray
candidates.  Delay sums always run over all active MPCs including tap 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import CovarianceSet, Scenario

__all__ = [
    "GroupStatistics",
    "ReducedStatistics",
    "expected_sinr",
    "group_statistics",
    "reduce",
]


@dataclass(frozen=True)
class GroupStatistics:
    """Intended-group signal covariance and interference-plus-noise covariance."""

    r_s: np.ndarray
    r_eta: np.ndarray


@dataclass(frozen=True)
class ReducedStatistics:
    """The same pair congruence-transformed by a beamformer: S^H R S."""

    r_s: np.ndarray
    r_eta: np.ndarray


def _group_sum(cov: CovarianceSet, g: int) -> np.ndarray:
    """Sum of all CCMs of group g over users and active delays."""
    spec = cov.scenario.groups[g]
    m = cov.scenario.n_antennas
    total = np.zeros((m, m), dtype=complex)
    for k in range(spec.n_users):
        for delay in spec.delays:
            total += cov.ccms[g][k][delay]
    return total


def group_statistics(cov: CovarianceSet, scn: Scenario, g: int) -> GroupStatistics:
    """Signal and interference-plus-noise covariances of group g.

    r_s   = (E_s / K_g)  * sum over g's users and delays of the CCMs,
    r_eta = sum over other groups g' of (E_s' / K_g') * their CCM sum
            + N_0 * I.
    """
    if not 0 <= g < scn.n_groups:
        raise ValueError(f"unknown group index {g}")
    m = scn.n_antennas
    r_s = (scn.groups[g].symbol_energy / scn.groups[g].n_users) * _group_sum(cov, g)
    r_eta = scn.noise_power * np.eye(m, dtype=complex)
    for other in range(scn.n_groups):
        if other == g:
            continue
        spec = scn.groups[other]
        r_eta = r_eta + (spec.symbol_energy / spec.n_users) * _group_sum(cov, other)
    return GroupStatistics(0.5 * (r_s + r_s.conj().T), 0.5 * (r_eta + r_eta.conj().T))


def _check_rank(s: np.ndarray) -> None:
    if np.linalg.matrix_rank(s) < s.shape[1]:
        raise ValueError("beamformer must have full column rank")


def reduce(stats: GroupStatistics, s: np.ndarray) -> ReducedStatistics:
    """Congruence-transform the statistics by a full-column-rank beamformer."""
    s = np.asarray(s, dtype=complex)
    _check_rank(s)
    return ReducedStatistics(s.conj().T @ stats.r_s @ s, s.conj().T @ stats.r_eta @ s)


def expected_sinr(stats: GroupStatistics, s: np.ndarray) -> float:
    """Trace-ratio SINR of the group after beamformer ``s``.

    tr(S^H R_s S) / tr(S^H R_eta S); scale-invariant in S, strictly positive
    denominator whenever the noise power is.
    """
    s = np.asarray(s, dtype=complex)
    _check_rank(s)
    num = np.trace(s.conj().T @ stats.r_s @ s).real
    den = np.trace(s.conj().T @ stats.r_eta @ s).real
    return num / den
