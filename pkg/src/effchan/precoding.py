"""Zero-forcing beamforming, per-user SINR, and sum-rate evaluation.

Power convention: total transmit power P is split equally, P/M per user, and
the receiver noise is unit variance, so P is also the transmit SNR.  Rates
are in bits per channel use (log base 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import IllConditionedError, invert_square

# Post-inversion residual cross-gain above this means the inverse was not
# trustworthy; treat like an ill-conditioned stack.
_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class BeamformerSet:
    """Unit-norm beamforming vectors, one per user (column i serves user i)."""

    vectors: np.ndarray

    def __post_init__(self):
        v = self.vectors
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"expected a square vector stack, got shape {v.shape}")
        if not np.allclose(np.linalg.norm(v, axis=0), 1.0, atol=1e-9):
            raise ValueError("beamformers must be unit norm")

    @property
    def users(self) -> int:
        return self.vectors.shape[1]


def zfbf_vectors(directions: np.ndarray) -> BeamformerSet:
    """Zero-forcing beamformers for M unit-norm user directions.

    directions is (M, M) with column i the reported direction of user i.  The
    returned beamformer v_j is orthogonal to every other user's direction:
    <d_i, v_j> = 0 for i != j.  Raises IllConditionedError when the direction
    stack is too close to singular (the caller drops the trial).
    """
    d = np.asarray(directions, dtype=np.complex128)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"expected M x M direction stack, got shape {d.shape}")
    rows = d.conj().T  # row i = d_i^H
    inverse = invert_square(rows)
    norms = np.linalg.norm(inverse, axis=0)
    vectors = inverse / norms
    cross = np.abs(rows @ vectors)
    np.fill_diagonal(cross, 0.0)
    worst = float(cross.max())
    if worst > _ORTHO_TOL:
        raise IllConditionedError(
            f"zero-forcing residual {worst:.3e} exceeds {_ORTHO_TOL:.0e}", worst / _ORTHO_TOL)
    return BeamformerSet(vectors=vectors)


def sinr(h_eff: np.ndarray, beams: BeamformerSet, user: int, power: float) -> float:
    """SINR of one user under equal power allocation P/M and unit noise.

    h_eff is that user's true effective channel; interference comes from the
    other users' beams evaluated on the same channel.
    """
    h_eff = np.asarray(h_eff, dtype=np.complex128)
    m = beams.users
    if not 0 <= user < m:
        raise ValueError(f"user index {user} out of range for {m} users")
    if power < 0:
        raise ValueError(f"power must be nonnegative, got {power}")
    gains = np.abs(beams.vectors.conj().T @ h_eff) ** 2  # entry j = |<v_j, h_eff>|^2
    scale = power / m
    signal = scale * gains[user]
    interference = scale * (float(gains.sum()) - float(gains[user]))
    return float(signal / (1.0 + interference))


def sum_rate(sinrs: np.ndarray) -> float:
    """Instantaneous sum rate sum_i log2(1 + SINR_i) in bits per channel use."""
    s = np.asarray(sinrs, dtype=float)
    if np.any(s < 0):
        raise ValueError("SINR values must be nonnegative")
    return float(np.sum(np.log2(1.0 + s)))


def perfect_csit_rate(channels: np.ndarray, power: float) -> float:
    """Zero-forcing sum rate with perfect channel knowledge at the transmitter.

    channels is (M, M) with column i the true channel vector of user i (one
    receive antenna each).  Beams are zero-forced on the true directions, so
    interference vanishes and the rate is sum_i log2(1 + P/M |<h_i, v_i>|^2).
    """
    h = np.asarray(channels, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected M x M channel stack, got shape {h.shape}")
    if power < 0:
        raise ValueError(f"power must be nonnegative, got {power}")
    norms = np.linalg.norm(h, axis=0)
    if np.any(norms <= 0):
        raise ValueError("zero channel column")
    beams = zfbf_vectors(h / norms)
    m = h.shape[1]
    scale = power / m
    gains = np.abs(np.einsum("ij,ij->j", h.conj(), beams.vectors)) ** 2
    return float(np.sum(np.log2(1.0 + scale * gains)))
