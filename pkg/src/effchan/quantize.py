"""Codebook generation and channel-direction quantization.

Three quantizers share one result type:

* ``quantize_single``: classic single-vector quantization of one channel
  vector against a random codebook (squared-cosine metric).
* ``quantize_effective``: quantization of the channel *subspace*.  The
  codebook vector closest to the column span is chosen, its projection onto
  the span is the reported direction, and a receive combining vector is
  computed so that the resulting scalar effective channel points exactly
  along the chosen codebook vector's in-span shadow.
* ``quantize_antenna_selection``: per-receive-antenna single-vector
  quantization followed by selection of the best antenna.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    RngStream,
    complex_normal,
    gram_schmidt,
    normal_solve,
)

# Refuse codebooks that would not fit in memory; 2^24 vectors is already
# ~2 GiB at M = 8.
MAX_CODEBOOK_BITS = 24


@dataclass(frozen=True)
class Codebook:
    """Random vector quantization codebook: 2**bits unit-norm rows of length dim."""

    vectors: np.ndarray
    bits: int

    def __post_init__(self):
        v = self.vectors
        if v.ndim != 2 or v.shape[0] != 2 ** self.bits:
            raise ValueError(f"codebook shape {v.shape} does not match bits={self.bits}")
        norms = np.linalg.norm(v, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("codebook rows must be unit norm")

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class QuantizationResult:
    """Outcome of quantizing one user's channel.

    Attributes
    ----------
    index : int
        Selected codebook entry (lowest index on ties).
    q_hat : np.ndarray
        The selected unit-norm codebook vector (length M).
    cos_sq : float
        Squared cosine of the angle between q_hat and the channel direction
        or subspace; in [0, 1].
    sin_sq : float
        1 - cos_sq, the quantization error.
    s_proj : np.ndarray
        Unit vector in the channel span closest to q_hat (equals the channel
        direction itself for single-vector quantization).
    gamma : np.ndarray
        Unit-norm receive combining weights (length N).
    h_eff : np.ndarray
        Effective channel seen after combining, H @ gamma (length M).
    eff_norm_sq : float
        Squared norm of h_eff.
    """

    index: int
    q_hat: np.ndarray
    cos_sq: float
    sin_sq: float
    s_proj: np.ndarray
    gamma: np.ndarray
    h_eff: np.ndarray
    eff_norm_sq: float


def generate_codebook(stream: RngStream, bits: int, dim: int) -> Codebook:
    """Draw a fresh random codebook of 2**bits isotropic unit vectors in C^dim."""
    if not 1 <= bits <= MAX_CODEBOOK_BITS:
        raise ValueError(f"bits must be in [1, {MAX_CODEBOOK_BITS}], got {bits}")
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    raw = complex_normal(stream.generator(), (2 ** bits, dim))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    return Codebook(vectors=raw / norms, bits=bits)


def quantize_single(h: np.ndarray, codebook: Codebook) -> QuantizationResult:
    """Quantize one channel vector to the codebook entry of largest |<w, h>|^2."""
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 1 or h.shape[0] != codebook.dim:
        raise ValueError(f"channel shape {h.shape} does not match codebook dim {codebook.dim}")
    norm_sq = float(np.real(np.vdot(h, h)))
    if norm_sq <= 0.0:
        raise ValueError("cannot quantize a zero channel vector")
    dots = codebook.vectors.conj() @ h  # entry j = <w_j, h>
    metric = np.abs(dots) ** 2
    index = int(np.argmax(metric))  # argmax takes the lowest index on ties
    cos_sq = float(np.clip(metric[index] / norm_sq, 0.0, 1.0))
    q_hat = codebook.vectors[index]
    # in-span shadow of q_hat; for a single vector the span is the h line
    coeff = np.vdot(h, q_hat) / norm_sq
    shadow = h * coeff
    shadow_norm = np.linalg.norm(shadow)
    if shadow_norm > 0.0:
        s_proj = shadow / shadow_norm
    else:
        s_proj = h / np.sqrt(norm_sq)  # q_hat orthogonal to h: direction is arbitrary
    return QuantizationResult(
        index=index,
        q_hat=q_hat,
        cos_sq=cos_sq,
        sin_sq=1.0 - cos_sq,
        s_proj=s_proj,
        gamma=np.ones(1, dtype=np.complex128),
        h_eff=h,
        eff_norm_sq=norm_sq,
    )


def quantize_effective(h_matrix: np.ndarray, codebook: Codebook) -> QuantizationResult:
    """Quantize the column span of an M x N channel and derive the combiner.

    Steps: (1) pick the codebook vector maximizing its squared projection onto
    span(H); (2) normalize that projection to get the in-span direction
    s_proj; (3) solve the normal equations H v = s_proj for the combining
    coefficients, so the effective channel H gamma is a positive multiple of
    s_proj with squared norm 1 / ||v||^2.
    """
    h_matrix = np.asarray(h_matrix, dtype=np.complex128)
    if h_matrix.ndim != 2:
        raise ValueError(f"expected an M x N channel matrix, got shape {h_matrix.shape}")
    m, n = h_matrix.shape
    if m != codebook.dim:
        raise ValueError(f"channel rows {m} do not match codebook dim {codebook.dim}")
    q = gram_schmidt(h_matrix)  # raises DegenerateChannelError on rank loss

    # squared projection of each codebook row onto the span
    overlap = codebook.vectors.conj() @ q  # (2^B, N), entry (j, k) = <w_j, q_k>
    metric = np.einsum("jk,jk->j", overlap, overlap.conj()).real
    index = int(np.argmax(metric))
    cos_sq = float(np.clip(metric[index], 0.0, 1.0))
    q_hat = codebook.vectors[index]

    coeffs = q.conj().T @ q_hat  # span coordinates of the projection
    shadow = q @ coeffs
    shadow_norm = np.linalg.norm(shadow)
    if shadow_norm <= 0.0:
        raise ValueError("codebook vector orthogonal to the channel span; cannot orient")
    s_proj = shadow / shadow_norm

    v = normal_solve(h_matrix, s_proj)
    v_norm = np.linalg.norm(v)
    gamma = v / v_norm
    h_eff = h_matrix @ gamma
    eff_norm_sq = float(1.0 / v_norm**2)
    # the combiner must reproduce the norm identity; cheap cross-check in debug runs
    assert abs(eff_norm_sq - float(np.real(np.vdot(h_eff, h_eff)))) <= 1e-8 * max(1.0, eff_norm_sq)
    return QuantizationResult(
        index=index,
        q_hat=q_hat,
        cos_sq=cos_sq,
        sin_sq=1.0 - cos_sq,
        s_proj=s_proj,
        gamma=gamma,
        h_eff=h_eff,
        eff_norm_sq=eff_norm_sq,
    )


def quantize_antenna_selection(h_matrix: np.ndarray,
                               codebooks: list[Codebook]) -> QuantizationResult:
    """Quantize each receive antenna's vector channel and keep the best one.

    Column k of the channel is quantized against codebooks[k]; the antenna
    with the largest squared cosine wins (lowest antenna index on ties).  The
    combiner is the corresponding standard basis vector, so the effective
    channel is the winning column itself.
    """
    h_matrix = np.asarray(h_matrix, dtype=np.complex128)
    if h_matrix.ndim != 2:
        raise ValueError(f"expected an M x N channel matrix, got shape {h_matrix.shape}")
    m, n = h_matrix.shape
    if len(codebooks) != n:
        raise ValueError(f"need one codebook per receive antenna ({n}), got {len(codebooks)}")
    best_k = -1
    best: QuantizationResult | None = None
    for k in range(n):
        cand = quantize_single(h_matrix[:, k], codebooks[k])
        if best is None or cand.cos_sq > best.cos_sq:
            best, best_k = cand, k
    gamma = np.zeros(n, dtype=np.complex128)
    gamma[best_k] = 1.0
    return QuantizationResult(
        index=best.index,
        q_hat=best.q_hat,
        cos_sq=best.cos_sq,
        sin_sq=best.sin_sq,
        s_proj=best.s_proj,
        gamma=gamma,
        h_eff=h_matrix[:, best_k],
        eff_norm_sq=best.eff_norm_sq,
    )


def quantization_error_of(h_matrix: np.ndarray, w: np.ndarray) -> float:
    """Squared sine of the angle between vector w and the column span of H."""
    w = np.asarray(w, dtype=np.complex128)
    if w.ndim != 1:
        raise ValueError(f"expected a vector, got shape {w.shape}")
    norm_sq = float(np.real(np.vdot(w, w)))
    if norm_sq <= 0.0:
        raise ValueError("zero vector has no direction")
    q = gram_schmidt(h_matrix)
    if q.shape[0] != w.shape[0]:
        raise ValueError(f"dimension mismatch: span in C^{q.shape[0]}, w in C^{w.shape[0]}")
    proj_sq = float(np.sum(np.abs(q.conj().T @ w) ** 2))
    return float(np.clip(1.0 - proj_sq / norm_sq, 0.0, 1.0))
