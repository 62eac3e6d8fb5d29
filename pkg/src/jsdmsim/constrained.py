"""Constant-modulus approximations of the unconstrained eigenbeamformer.

Fully connected designs (DFT column selection, phase extraction, phase
extraction refined by alternating minimization with a unitary compensation
matrix) and partially connected ones (fixed ordered/interlaced subarrays, and
a dynamic design that searches the antenna-to-chain connection itself).

All alternating loops minimize a Frobenius distance to the unconstrained
beamformer; each half-step is the exact minimizer of its block, so the
recorded residual sequences are non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geb import UnconstrainedBeamformer
from .linalg import svd
from .statistics import GroupStatistics, expected_sinr
from .channel import Scenario

__all__ = [
    "AmTrace",
    "CandidateExhaustionError",
    "ConstrainedBeamformer",
    "MaskError",
    "dft_beamformer",
    "dynamic_connection",
    "dynamic_subarray",
    "fixed_subarray",
    "interlaced_mask",
    "ordered_mask",
    "pe_am",
    "phase_extraction",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500
DEFAULT_RESTARTS = 20


class MaskError(ValueError):
    """A connection matrix violates the one-chain-per-antenna constraints."""


class CandidateExhaustionError(RuntimeError):
    """Every dynamic-connection restart left some RF chain unconnected."""


@dataclass(frozen=True)
class AmTrace:
    """Residual history of an alternating-minimization run.

    Residuals are non-increasing (each half-step is an exact block minimizer).
    ``raw_score``/``refined_score`` are only set by the dynamic subarray
    search: the expected SINR of the winning raw candidate and of the refined
    beamformer (the search does not guarantee an ordering between them).
    """

    residuals: np.ndarray
    iterations: int
    converged: bool
    raw_score: float | None = None
    refined_score: float | None = None

    def __post_init__(self):
        if np.any(np.diff(self.residuals) > 1e-12):
            raise ValueError("alternating-minimization residuals must be non-increasing")


@dataclass(frozen=True)
class ConstrainedBeamformer:
    """Phase-shifter beamformer, its connection mask and compensation matrix.

    Nonzero entries of ``s_c`` have modulus 1/sqrt(M) exactly where
    ``connection`` is 1.  ``s_cm`` is the digital-baseband compensation
    factor; the stage applied to data is ``effective()`` = s_c @ s_cm.
    """

    s_c: np.ndarray
    s_cm: np.ndarray
    connection: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.connection)
        m, d = self.s_c.shape
        if mask.shape != (m, d):
            raise MaskError(f"mask shape {mask.shape} does not match beamformer {(m, d)}")
        if not np.all((mask == 0) | (mask == 1)):
            raise MaskError("connection mask must be binary")
        row_sums = mask.sum(axis=1)
        if not (np.all(row_sums == d) or np.all(row_sums == 1)):
            raise MaskError("rows must connect to exactly one chain (or all, if fully connected)")
        if np.any(mask.sum(axis=0) < 1):
            raise MaskError("every RF chain must connect to at least one antenna")
        mags = np.abs(self.s_c)
        if np.any(mags[mask == 0] != 0):
            raise ValueError("beamformer has energy outside the connection mask")
        if not np.allclose(mags[mask == 1], 1.0 / np.sqrt(m), rtol=1e-9, atol=0):
            raise ValueError("masked entries must have modulus 1/sqrt(M)")

    def effective(self) -> np.ndarray:
        return self.s_c @ self.s_cm


def _geb_matrix(s_geb) -> np.ndarray:
    if isinstance(s_geb, UnconstrainedBeamformer):
        return s_geb.s
    return np.asarray(s_geb, dtype=complex)


def _unit_phases(a: np.ndarray, m: int) -> np.ndarray:
    # Phase of a zero entry is taken as 0 by convention (np.angle(0) == 0).
    return np.exp(1j * np.angle(a)) / np.sqrt(m)


def _converged(residuals: list[float], tol: float, scale: float) -> bool:
    r = residuals[-1]
    if r <= 1e-14 * scale:
        return True
    if len(residuals) < 2:
        return False
    prev = residuals[-2]
    return abs(prev - r) <= tol * max(prev, 1e-300)


# ---------------------------------------------------------------------------
# Fully connected designs


def dft_beamformer(scn: Scenario, g: int, n_chains: int | None = None) -> ConstrainedBeamformer:
    """Select DFT codebook columns pointing at the group's MPC clusters.

    Column k of the codebook is the unit-modulus vector with spatial frequency
    2*pi*k/M across the array.  Each active cluster claims the column whose
    frequency is nearest (mod 2*pi) to pi*sin(mean AoA averaged over the
    group's users); leftover chains take adjacent columns, round-robin across
    clusters, alternating +1/-1 offsets and skipping duplicates.  Not
    interference-aware by construction.
    """
    m = scn.n_antennas
    spec = scn.groups[g]
    d = spec.n_chains if n_chains is None else n_chains
    if d > m:
        raise ValueError(f"cannot select {d} columns from an {m}-point codebook")

    cluster_aoa = scn.effective_aoa(g).mean(axis=0)
    targets = np.pi * np.sin(np.deg2rad(cluster_aoa))
    freqs = 2.0 * np.pi * np.arange(m) / m

    def wrap(x):
        return np.abs((x + np.pi) % (2.0 * np.pi) - np.pi)

    base = [int(np.argmin(wrap(freqs - t))) for t in targets]
    dists = [wrap(freqs[k] - t) for k, t in zip(base, targets)]

    selected: list[int] = []
    if d < len(base):
        for _, k in sorted(zip(dists, base)):
            if k not in selected:
                selected.append(k)
            if len(selected) == d:
                break
    else:
        for k in base:
            if k not in selected:
                selected.append(k)

    # Adjacent fill: offsets 1, -1, 2, -2, ... around each cluster in turn.
    steps = [0] * len(base)
    while len(selected) < d:
        for c, k0 in enumerate(base):
            while True:
                steps[c] += 1
                delta = (steps[c] + 1) // 2 * (1 if steps[c] % 2 else -1)
                k = (k0 + delta) % m
                if k not in selected:
                    selected.append(k)
                    break
            if len(selected) == d:
                break

    cols = np.array(selected)
    s_c = np.exp(2j * np.pi * np.outer(np.arange(m), cols) / m) / np.sqrt(m)
    return ConstrainedBeamformer(s_c, np.eye(d, dtype=complex), np.ones((m, d), dtype=int))


def phase_extraction(s_geb) -> ConstrainedBeamformer:
    """Keep only the phases of the unconstrained beamformer (scaled 1/sqrt(M)).

    Entrywise global optimum of the unit-modulus Frobenius approximation; the
    compensation matrix stays identity.
    """
    s = _geb_matrix(s_geb)
    m, d = s.shape
    return ConstrainedBeamformer(
        _unit_phases(s, m), np.eye(d, dtype=complex), np.ones((m, d), dtype=int)
    )


def pe_am(s_geb, tol: float = DEFAULT_TOL,
          max_iter: int = DEFAULT_MAX_ITER) -> tuple[ConstrainedBeamformer, AmTrace]:
    """Phase extraction refined by alternating minimization.

    Alternates the unitary-Procrustes compensation update S_cm = V U^H (from
    the SVD of S_geb^H S_c) with phase extraction of the rotated beamformer
    S_geb S_cm^H, starting from plain phase extraction.  Stops when the
    residual ||S_geb S_cm^H - S_c||_F stalls in relative terms (or hits an
    exact fit).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = _geb_matrix(s_geb)
    m, d = s.shape
    scale = max(np.linalg.norm(s), 1e-300)
    s_c = _unit_phases(s, m)
    s_cm = np.eye(d, dtype=complex)
    residuals: list[float] = []
    converged = False
    for _ in range(max_iter):
        u, _, v = svd(s.conj().T @ s_c)
        s_cm = v @ u.conj().T
        s_c = _unit_phases(s @ s_cm.conj().T, m)
        residuals.append(float(np.linalg.norm(s @ s_cm.conj().T - s_c)))
        if _converged(residuals, tol, scale):
            converged = True
            break
    trace = AmTrace(np.array(residuals), len(residuals), converged)
    mask = np.ones((m, d), dtype=int)
    return ConstrainedBeamformer(s_c, s_cm, mask), trace


# ---------------------------------------------------------------------------
# Partially connected designs


def ordered_mask(m: int, d: int) -> np.ndarray:
    """Adjacent subarrays: antennas [0..M/D) on chain 0, the next block on 1, ..."""
    if m % d:
        raise ValueError(f"chain count {d} must divide antenna count {m}")
    return np.kron(np.eye(d, dtype=int), np.ones((m // d, 1), dtype=int))


def interlaced_mask(m: int, d: int) -> np.ndarray:
    """Interlaced subarrays: antenna i on chain i mod D."""
    if m % d:
        raise ValueError(f"chain count {d} must divide antenna count {m}")
    return np.kron(np.ones((m // d, 1), dtype=int), np.eye(d, dtype=int))


def _check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if not np.all((mask == 0) | (mask == 1)):
        raise MaskError("connection mask must be binary")
    if np.any(mask.sum(axis=1) != 1):
        raise MaskError("each antenna must connect to exactly one RF chain")
    empty = np.flatnonzero(mask.sum(axis=0) < 1)
    if empty.size:
        raise MaskError(f"RF chain(s) {empty.tolist()} have no antennas")
    return mask.astype(int)


def fixed_subarray(s_geb, connection, init_phases: np.ndarray | None = None,
                   tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                   seed=0) -> tuple[ConstrainedBeamformer, AmTrace]:
    """Best constant-modulus beamformer on a prescribed connection mask.

    Alternates the least-squares compensation matrix with the decoupled
    per-antenna phase update; the per-row phase of antenna i aligns to the
    inner product of its unconstrained row with its chain's compensation row.
    Initial phases are random (from ``seed``) unless given.
    """
    s = _geb_matrix(s_geb)
    m, d = s.shape
    mask = _check_mask(connection)
    if mask.shape != (m, d):
        raise MaskError(f"mask shape {mask.shape} does not match beamformer {(m, d)}")
    chain_of = np.argmax(mask, axis=1)
    rows = np.arange(m)

    if init_phases is None:
        init_phases = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, m)
    phases = np.asarray(init_phases, dtype=float)
    if phases.shape != (m,):
        raise ValueError("init_phases must be a length-M vector")

    def build(beta):
        s_c = np.zeros((m, d), dtype=complex)
        s_c[rows, chain_of] = np.exp(1j * beta) / np.sqrt(m)
        return s_c

    scale = max(np.linalg.norm(s), 1e-300)
    s_c = build(phases)
    s_cm = np.eye(d, dtype=complex)
    residuals: list[float] = []
    converged = False
    for _ in range(max_iter):
        gram = s_c.conj().T @ s_c
        s_cm = np.linalg.solve(gram, s_c.conj().T @ s)
        inner = (s @ s_cm.conj().T)[rows, chain_of]
        s_c = build(np.angle(inner))
        residuals.append(float(np.linalg.norm(s - s_c @ s_cm)))
        if _converged(residuals, tol, scale):
            converged = True
            break
    trace = AmTrace(np.array(residuals), len(residuals), converged)
    return ConstrainedBeamformer(s_c, s_cm, mask), trace


def dynamic_connection(s_geb, seed, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER) -> tuple[np.ndarray, AmTrace]:
    """Search a connection pattern jointly with unit-modulus entries.

    Alternates the unitary rotation A = U V^H (Procrustes fit of S_geb A to
    the current candidate) with a per-antenna assignment: each row keeps only
    its largest-magnitude entry of S_geb A, replaced by its unit-modulus
    phase (ties go to the lowest chain index).  Entries are unit modulus, not
    1/sqrt(M); the candidate may leave a chain unconnected, which the caller
    must screen out.
    """
    s = _geb_matrix(s_geb)
    m, d = s.shape
    rng = np.random.default_rng(seed)
    rows = np.arange(m)

    s_t = np.zeros((m, d), dtype=complex)
    s_t[rows, rng.integers(0, d, m)] = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, m))

    scale = max(np.linalg.norm(s), 1e-300)
    residuals: list[float] = []
    converged = False
    for _ in range(max_iter):
        u, _, v = svd(s.conj().T @ s_t)
        rot = u @ v.conj().T
        p = s @ rot
        best = np.argmax(np.abs(p), axis=1)
        s_t = np.zeros((m, d), dtype=complex)
        s_t[rows, best] = np.exp(1j * np.angle(p[rows, best]))
        residuals.append(float(np.linalg.norm(p - s_t)))
        if _converged(residuals, tol, scale):
            converged = True
            break
    return s_t, AmTrace(np.array(residuals), len(residuals), converged)


def dynamic_subarray(s_geb, stats: GroupStatistics, n_restarts: int = DEFAULT_RESTARTS,
                     seed=0, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> tuple[ConstrainedBeamformer, AmTrace]:
    """Full dynamic subarray design: restart, score, refine.

    Runs the connection search ``n_restarts`` times (seeds ``seed + t``),
    scores candidates that connect every chain by their expected SINR (others
    score 0), then refines the best candidate's mask and phases with the
    fixed-subarray loop.  Raises if no restart produced a usable connection.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")
    s = _geb_matrix(s_geb)

    candidates: list[np.ndarray] = []
    scores = np.zeros(n_restarts)
    valid = np.zeros(n_restarts, dtype=bool)
    for t in range(n_restarts):
        cand, _ = dynamic_connection(s, seed + t + 1, tol=tol, max_iter=max_iter)
        candidates.append(cand)
        if np.all(np.abs(cand).sum(axis=0) >= 0.5):
            valid[t] = True
            scores[t] = expected_sinr(stats, cand)
    if not valid.any():
        raise CandidateExhaustionError(
            f"no connection candidate used every RF chain after {n_restarts} restarts;"
            " increase n_restarts"
        )
    best = int(np.argmax(scores))
    if not valid[best]:  # all valid scores were 0; fall back to the first valid one
        best = int(np.argmax(valid))
    best_score = scores[best]
    best_cand = candidates[best]

    mask = (np.abs(best_cand) > 0.5).astype(int)
    rows = np.arange(s.shape[0])
    init_phases = np.angle(best_cand[rows, np.argmax(mask, axis=1)])
    cb, trace = fixed_subarray(s, mask, init_phases=init_phases, tol=tol, max_iter=max_iter)
    trace = replace(trace, raw_score=float(best_score),
                    refined_score=float(expected_sinr(stats, cb.effective())))
    return cb, trace
