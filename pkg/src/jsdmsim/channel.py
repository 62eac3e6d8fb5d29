"""Scenario geometry, one-ring covariance construction and channel sampling.

Angles are degrees at every interface and converted to radians exactly once,
inside :func:`steering`.  A scenario describes a uniform linear array serving
user groups, each group having a handful of active multipath components (MPCs)
with narrow angular spread.  Mobile groups get their mean angles shifted by
the scenario's ``phi`` before covariances are built.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import psd_sqrt

__all__ = [
    "ChannelRealization",
    "CovarianceSet",
    "GroupSpec",
    "Scenario",
    "build_covariances",
    "ccm_one_ring",
    "sample_channels",
    "steering",
]

DEFAULT_N_QUAD = 200


def steering(theta_deg: float, m: int) -> np.ndarray:
    """Unit-norm steering vector of an M-antenna half-wavelength ULA.

    Entry k is exp(j * k * pi * sin(theta)) / sqrt(M) for k = 0..M-1.
    """
    if m < 1:
        raise ValueError("antenna count must be >= 1")
    k = np.arange(m)
    return np.exp(1j * np.pi * np.sin(np.deg2rad(theta_deg)) * k) / np.sqrt(m)


def _steering_many(thetas_deg: np.ndarray, m: int) -> np.ndarray:
    """Stack of steering vectors, shape (M, len(thetas))."""
    k = np.arange(m)[:, None]
    s = np.sin(np.deg2rad(np.asarray(thetas_deg, dtype=float)))[None, :]
    return np.exp(1j * np.pi * k * s) / np.sqrt(m)


def ccm_one_ring(mu: float, delta: float, power: float, m: int,
                 n_quad: int = DEFAULT_N_QUAD) -> np.ndarray:
    """One-ring covariance for a cluster at mean angle ``mu`` (degrees).

    Midpoint-rule quadrature of the uniform angular power profile over
    [mu - delta/2, mu + delta/2]; the result is rescaled so its trace equals
    ``power`` exactly, so quadrature error never perturbs total power.
    """
    if delta <= 0:
        raise ValueError("angular spread must be positive")
    if n_quad < 8:
        raise ValueError("n_quad must be >= 8")
    if power <= 0:
        raise ValueError("power must be positive")
    offsets = (np.arange(n_quad) + 0.5) / n_quad - 0.5
    u = _steering_many(mu + delta * offsets, m)
    r = (u @ u.conj().T) / n_quad
    r = 0.5 * (r + r.conj().T)
    return r * (power / np.trace(r).real)


@dataclass(frozen=True)
class GroupSpec:
    """One user group: RF-chain budget, energies and angle-delay profile.

    ``mean_aoa[k, i]`` is the mean angle of arrival (degrees) of user k's
    MPC at ``delays[i]``.  ``spread`` broadcasts to the same shape; ``gain``
    broadcasts per user.  Mobile groups have every mean angle offset by the
    scenario shifting angle.
    """

    n_users: int
    n_chains: int
    symbol_energy: float
    delays: tuple[int, ...]
    mean_aoa: np.ndarray
    spread: np.ndarray
    gain: np.ndarray
    mobile: bool = False

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError("group must have at least one user")
        if self.n_chains < 1:
            raise ValueError("group must have at least one RF chain")
        if self.symbol_energy <= 0:
            raise ValueError("symbol energy must be positive")
        if len(self.delays) != len(set(self.delays)) or not self.delays:
            raise ValueError("active delays must be non-empty and distinct")
        shape = (self.n_users, len(self.delays))
        aoa = np.broadcast_to(np.asarray(self.mean_aoa, dtype=float), shape).copy()
        spread = np.broadcast_to(np.asarray(self.spread, dtype=float), shape).copy()
        gain = np.broadcast_to(np.asarray(self.gain, dtype=float), (self.n_users,)).copy()
        if np.any(spread <= 0):
            raise ValueError("angular spreads must be positive")
        if np.any(gain <= 0):
            raise ValueError("channel gains must be positive")
        object.__setattr__(self, "mean_aoa", aoa)
        object.__setattr__(self, "spread", spread)
        object.__setattr__(self, "gain", gain)


@dataclass(frozen=True)
class Scenario:
    """Array size, noise level and the per-group angle-delay profiles."""

    n_antennas: int
    n_taps: int
    noise_power: float
    groups: tuple[GroupSpec, ...]
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.n_antennas < 1:
            raise ValueError("antenna count must be >= 1")
        if self.noise_power < 0:
            raise ValueError("noise power must be non-negative")
        if not self.groups:
            raise ValueError("scenario needs at least one group")
        for g, spec in enumerate(self.groups):
            if spec.n_chains > self.n_antennas:
                raise ValueError(f"group {g}: more RF chains than antennas")
            if max(spec.delays) >= self.n_taps or min(spec.delays) < 0:
                raise ValueError(f"group {g}: active delay outside 0..{self.n_taps - 1}")

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def with_phi(self, phi: float) -> "Scenario":
        return replace(self, phi=phi)

    def effective_aoa(self, g: int) -> np.ndarray:
        """Mean AoAs of group g with the mobile shift applied."""
        spec = self.groups[g]
        return spec.mean_aoa + (self.phi if spec.mobile else 0.0)


@dataclass
class CovarianceSet:
    """Per-user per-delay channel covariance matrices of a scenario.

    ``ccms[g][k]`` maps an active delay index to an M x M Hermitian PSD
    matrix; inactive delays are implicitly zero (see :meth:`ccm`).  Square
    roots used for sampling are cached lazily.
    """

    scenario: Scenario
    ccms: list[list[dict[int, np.ndarray]]]
    _sqrts: list[list[dict[int, np.ndarray]]] = field(default_factory=list, repr=False)

    def ccm(self, g: int, user: int, delay: int) -> np.ndarray:
        m = self.scenario.n_antennas
        return self.ccms[g][user].get(delay, np.zeros((m, m), dtype=complex))

    def sqrt_factor(self, g: int, user: int, delay: int) -> np.ndarray:
        if not self._sqrts:
            self._sqrts = [[{} for _ in grp] for grp in self.ccms]
        cache = self._sqrts[g][user]
        if delay not in cache:
            cache[delay] = psd_sqrt(self.ccms[g][user][delay])
        return cache[delay]


def build_covariances(scn: Scenario, n_quad: int = DEFAULT_N_QUAD) -> CovarianceSet:
    """One-ring CCMs for every user and active MPC of the scenario.

    Each user's total gain is split equally across its active MPCs, so the
    per-delay traces sum back to the user's gain.  Mobile-group mean angles
    are offset by the scenario's shifting angle before construction.
    """
    m = scn.n_antennas
    ccms: list[list[dict[int, np.ndarray]]] = []
    for g, spec in enumerate(scn.groups):
        aoa = scn.effective_aoa(g)
        per_mpc = spec.gain / len(spec.delays)
        group: list[dict[int, np.ndarray]] = []
        for k in range(spec.n_users):
            user = {
                delay: ccm_one_ring(aoa[k, i], spec.spread[k, i], per_mpc[k], m, n_quad)
                for i, delay in enumerate(spec.delays)
            }
            group.append(user)
        ccms.append(group)
    return CovarianceSet(scn, ccms)


@dataclass
class ChannelRealization:
    """Instantaneous channel taps: ``taps[g][l]`` is M x K_g, zero off-support."""

    scenario: Scenario
    taps: list[dict[int, np.ndarray]]

    def tap(self, g: int, delay: int) -> np.ndarray:
        scn = self.scenario
        shape = (scn.n_antennas, scn.groups[g].n_users)
        return self.taps[g].get(delay, np.zeros(shape, dtype=complex))


def sample_channels(cov: CovarianceSet, seed,
                    groups: list[int] | None = None) -> ChannelRealization:
    """Draw one correlated Rayleigh realization, independent across users/delays.

    Deterministic for a given seed.  ``groups`` restricts sampling to the
    listed group indices (others come back as zero taps), which the
    semi-analytic capacity path uses to skip interferer channels.
    """
    rng = np.random.default_rng(seed)
    scn = cov.scenario
    m = scn.n_antennas
    wanted = range(scn.n_groups) if groups is None else groups
    taps: list[dict[int, np.ndarray]] = [{} for _ in range(scn.n_groups)]
    for g in wanted:
        spec = scn.groups[g]
        for delay in spec.delays:
            h = np.zeros((m, spec.n_users), dtype=complex)
            for k in range(spec.n_users):
                z = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2.0)
                h[:, k] = cov.sqrt_factor(g, k, delay) @ z
            taps[g][delay] = h
    return ChannelRealization(scn, taps)
